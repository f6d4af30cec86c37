#pragma once

#include <cstdint>
#include <vector>

#include "eled/tensor.hpp"

namespace eled {

struct EventRecord {
  double t;     // seconds
  uint16_t x;   // column, 0 <= x < W
  uint16_t y;   // row, 0 <= y < H
  int8_t p;     // +1 or -1
};

// Asynchronous event stream, sorted by t ascending (ties allowed).
struct EventStream {
  std::vector<EventRecord> events;
  int64_t width = 0;
  int64_t height = 0;

  bool sorted() const;
};

struct TimeWindow {
  double t_start;
  double t_end;
};

struct VoxelGrid {
  Tensor bins;  // (B, H, W), signed accumulation
  TimeWindow window;
  int64_t bin_count;
};

/*
 * Bilinear temporal voting of event polarities into B bins. Each in-window
 * event at normalized coordinate t* = (B-1)(t - t_start)/(t_end - t_start)
 * deposits p * (1 - |t* - b|) into every bin b with |t* - b| < 1; the
 * deposited weights of one event always sum to 1. With normalize set, the
 * grid is divided by its max absolute value (no-op on an all-zero grid).
 */
VoxelGrid events_to_voxel_grid(const EventStream& stream, const TimeWindow& window,
                               int64_t bins, int64_t height, int64_t width,
                               bool normalize = true);

/*
 * Surrogate sensor: per pixel, a reference log-intensity tracks the linearly
 * interpolated log signal; every threshold crossing of magnitude c emits one
 * event at the interpolated crossing time and moves the reference by +-c.
 * frames are linear intensity in [0, +inf); eps is added before the log.
 * Output is sorted by t (ties broken by pixel order, deterministic).
 */
EventStream simulate_events(const std::vector<Tensor>& frames_linear,
                            const std::vector<double>& timestamps,
                            double contrast_threshold, double eps = 1e-3);

}  // namespace eled

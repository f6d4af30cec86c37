#include "eled/events.hpp"

#include <algorithm>
#include <cmath>

#include "eled/common.hpp"

namespace eled {

bool EventStream::sorted() const {
  for (size_t i = 1; i < events.size(); ++i) {
    if (events[i].t < events[i - 1].t) return false;
  }
  return true;
}

VoxelGrid events_to_voxel_grid(const EventStream& stream, const TimeWindow& window,
                               int64_t bins, int64_t height, int64_t width,
                               bool normalize) {
  ELED_CHECK(bins >= 1, "voxel grid: bin count must be >= 1, got ", bins);
  ELED_CHECK(window.t_end > window.t_start, "voxel grid: degenerate window [",
             window.t_start, ", ", window.t_end, "]");
  ELED_CHECK(height >= 1 && width >= 1, "voxel grid: bad sensor size ", height, "x", width);

  VoxelGrid grid;
  grid.bins = Tensor::zeros({bins, height, width});
  grid.window = window;
  grid.bin_count = bins;

  const double span = window.t_end - window.t_start;
  const double tscale = static_cast<double>(bins - 1) / span;
  double* data = grid.bins.data();
  const int64_t hw = height * width;

  for (const EventRecord& e : stream.events) {
    if (e.x >= width || e.y >= height) {
      throw InvalidArgument(format_msg("event at (", e.x, ",", e.y,
                                       ") outside sensor bounds ", width, "x", height));
    }
    if (e.t < window.t_start || e.t > window.t_end) continue;
    const double tstar = (bins == 1) ? 0.0 : (e.t - window.t_start) * tscale;
    const int64_t b0 = static_cast<int64_t>(std::floor(tstar));
    const double frac = tstar - static_cast<double>(b0);
    const double pol = static_cast<double>(e.p);
    const int64_t pix = static_cast<int64_t>(e.y) * width + e.x;
    if (b0 >= 0 && b0 < bins) data[b0 * hw + pix] += pol * (1.0 - frac);
    if (frac > 0.0 && b0 + 1 < bins) data[(b0 + 1) * hw + pix] += pol * frac;
  }

  if (normalize) {
    const double m = grid.bins.abs_max();
    if (m > 0.0) {
      for (int64_t i = 0; i < grid.bins.numel(); ++i) data[i] /= m;
    }
  }
  return grid;
}

EventStream simulate_events(const std::vector<Tensor>& frames_linear,
                            const std::vector<double>& timestamps,
                            double contrast_threshold, double eps) {
  ELED_CHECK(contrast_threshold > 0.0, "simulate_events: contrast threshold must be positive");
  ELED_CHECK(eps > 0.0, "simulate_events: eps must be positive");
  ELED_CHECK(frames_linear.size() >= 2, "simulate_events: need at least 2 frames, got ",
             frames_linear.size());
  ELED_CHECK(frames_linear.size() == timestamps.size(),
             "simulate_events: ", frames_linear.size(), " frames vs ",
             timestamps.size(), " timestamps");

  const int64_t h = frames_linear[0].dim(0), w = frames_linear[0].dim(1);
  for (const auto& f : frames_linear) {
    ELED_CHECK_SHAPE(f.ndim() == 2 && f.dim(0) == h && f.dim(1) == w,
                     "simulate_events: inconsistent frame shape");
    for (int64_t i = 0; i < f.numel(); ++i) {
      ELED_CHECK(f.data()[i] >= 0.0, "simulate_events: negative intensity ", f.data()[i]);
    }
  }
  for (size_t i = 1; i < timestamps.size(); ++i) {
    ELED_CHECK(timestamps[i] > timestamps[i - 1], "simulate_events: timestamps must increase");
  }

  const double c = contrast_threshold;
  // slack absorbs rounding when a log change lands exactly on a threshold
  const double slack = 1e-12;
  const int64_t hw = h * w;

  std::vector<double> log_prev(static_cast<size_t>(hw));
  std::vector<double> ref(static_cast<size_t>(hw));
  for (int64_t i = 0; i < hw; ++i) {
    log_prev[static_cast<size_t>(i)] = std::log(frames_linear[0].data()[i] + eps);
    ref[static_cast<size_t>(i)] = log_prev[static_cast<size_t>(i)];
  }

  EventStream out;
  out.width = w;
  out.height = h;

  for (size_t fi = 1; fi < frames_linear.size(); ++fi) {
    const double t0 = timestamps[fi - 1];
    const double t1 = timestamps[fi];
    const double* frame = frames_linear[fi].data();
    for (int64_t i = 0; i < hw; ++i) {
      const size_t ui = static_cast<size_t>(i);
      const double l0 = log_prev[ui];
      const double l1 = std::log(frame[i] + eps);
      const double delta = l1 - l0;
      if (delta != 0.0) {
        const double sign = delta > 0.0 ? 1.0 : -1.0;
        // successive crossings of ref +- c, linear in time within the interval
        while (sign * (l1 - ref[ui]) + slack >= c) {
          ref[ui] += sign * c;
          const double frac = std::min(1.0, std::max(0.0, (ref[ui] - l0) / delta));
          EventRecord e;
          e.t = t0 + frac * (t1 - t0);
          e.x = static_cast<uint16_t>(i % w);
          e.y = static_cast<uint16_t>(i / w);
          e.p = sign > 0.0 ? int8_t{1} : int8_t{-1};
          out.events.push_back(e);
        }
      }
      log_prev[ui] = l1;
    }
  }

  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
  return out;
}

}  // namespace eled

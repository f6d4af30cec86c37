#pragma once

#include <string>
#include <vector>

#include "eled/rng.hpp"
#include "eled/tensor.hpp"

namespace eled::synth {

/*
 * Procedural scene: background gradient plus textured sprites on linear or
 * sinusoidal trajectories. Everything downstream of the seed is
 * deterministic.
 */
struct Sprite {
  enum class Shape { Rect, Disk };
  Shape shape = Shape::Rect;
  double x0 = 0.0, y0 = 0.0;   // top-left at t = 0
  double vx = 0.0, vy = 0.0;   // px/s
  double amp_x = 0.0, amp_y = 0.0, freq = 0.0;  // sinusoidal component
  Tensor texture;              // (3, th, tw) in [0,1]
};

struct SceneSpec {
  int64_t height = 64;
  int64_t width = 64;
  double fps = 120.0;
  int64_t n_frames = 45;
  int64_t blur_window = 5;  // 2M+1, used to validate the sequence length
  uint64_t seed = 1;
  double bg_low = 0.2, bg_high = 0.7;
  bool bg_horizontal = false;
  std::vector<Sprite> sprites;
};

// Scene with randomized sprites/trajectories, fully determined by the seed.
SceneSpec random_scene(int64_t height, int64_t width, double fps, int64_t n_frames,
                       int64_t blur_window, uint64_t seed);

struct RenderedSequence {
  std::vector<Tensor> frames;      // (3,H,W), linear intensity in [0,1]
  std::vector<double> timestamps;  // seconds, frame i at i/fps
};

RenderedSequence render_sequence(const SceneSpec& spec);

// Arithmetic mean of an odd-length window of linear frames.
Tensor synthesize_blur(const std::vector<Tensor>& window_frames);

struct Degradation {
  double alpha = 0.1;        // illumination scale, 0 < alpha <= 1
  double shot_scale = 1e-4;  // shot noise variance per unit signal
  double read_sigma = 2e-3;  // additive readout noise
  double gamma = 2.2;        // display gamma applied after degradation
};

// y = clip(alpha*x + shot(alpha*x) + read, 0, inf)^(1/gamma), clipped to [0,1]
Tensor apply_low_light(const Tensor& frame_linear, const Degradation& deg, Rng& rng);

struct DatasetConfig {
  int64_t scenes = 2;
  int64_t test_scenes = 0;         // last N scenes get split "test"
  int64_t triplets_per_scene = 4;  // windows per scene = triplets + 2
  int64_t height = 64;
  int64_t width = 64;
  double fps = 120.0;
  int64_t blur_window = 5;  // 2M+1
  double contrast_threshold = 0.15;
  double event_eps = 1e-3;
  double alpha_min = 0.06;
  double alpha_max = 0.15;
  double shot_scale = 1e-4;
  double read_sigma = 2e-3;
  double gamma = 2.2;
  uint64_t seed = 1;
  // Optional ingestion path: sharp frames read from this directory (sorted
  // PNGs, one scene) instead of procedural rendering.
  std::string frames_dir;
};

/*
 * Writes <root>/<scene>/{blur,sharp,events}/XXXXXX.* plus <root>/manifest.json.
 * Blurry frames are low-light degraded; events are simulated from the
 * low-light linear video so they witness the same attenuated scene.
 * Returns the manifest content hash.
 */
uint64_t build_dataset(const DatasetConfig& cfg, const std::string& out_dir);

}  // namespace eled::synth

#pragma once

#include <array>
#include <string>
#include <vector>

#include "eled/rng.hpp"
#include "eled/tensor.hpp"

namespace eled::data {

struct WindowFiles {
  std::string blur, sharp, events;
  double t_start = 0.0, t_end = 0.0;
};

struct SceneEntry {
  std::string name;
  std::string split;  // "train" or "test"
  int64_t height = 0, width = 0;
  int64_t blur_window = 0;
  int64_t triplet_count = 0;
  double fps = 0.0, alpha = 0.0, gamma = 0.0;
  std::vector<WindowFiles> windows;
};

struct TripletRef {
  int64_t scene = 0;
  int64_t index = 0;          // triplet index within the scene
  int64_t center_window = 0;  // window index of the center timestamp
};

// One training/eval unit: three blurry frames, three voxel grids, one sharp
// target at the center timestamp.
struct Triplet {
  std::array<Tensor, 3> blur;    // (3,H,W) each
  std::array<Tensor, 3> voxels;  // (B,H,W) each
  Tensor sharp;                  // (3,H,W)
};

class Dataset {
public:
  static Dataset load(const std::string& root);

  const std::string& root() const { return root_; }
  const std::vector<SceneEntry>& scenes() const { return scenes_; }
  const std::string& content_hash() const { return content_hash_; }

  // split: "train", "test" or "all"
  std::vector<TripletRef> triplets(const std::string& split) const;

  Triplet load_triplet(const TripletRef& ref, int64_t voxel_bins,
                       bool normalize_voxels = true) const;

private:
  std::string root_;
  std::string content_hash_;
  std::vector<SceneEntry> scenes_;
};

// Aligned random crop across all tensors of the triplet; size must divide by 4.
Triplet crop_triplet(const Triplet& t, int64_t size, Rng& rng);

}  // namespace eled::data

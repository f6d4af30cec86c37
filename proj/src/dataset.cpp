#include "eled/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "eled/common.hpp"
#include "eled/event_io.hpp"
#include "eled/events.hpp"
#include "eled/image_io.hpp"

namespace fs = std::filesystem;

namespace eled::data {

Dataset Dataset::load(const std::string& root) {
  const fs::path manifest_path = fs::path(root) / "manifest.json";
  std::ifstream f(manifest_path);
  if (!f) throw IoError("cannot open dataset manifest: " + manifest_path.string());
  nlohmann::json m;
  try {
    f >> m;
  } catch (const std::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  ds.root_ = root;
  ds.content_hash_ = m.value("content_hash", "");
  for (const auto& sj : m.at("scenes")) {
    SceneEntry s;
    s.name = sj.at("name").get<std::string>();
    s.split = sj.value("split", "train");
    s.height = sj.at("height").get<int64_t>();
    s.width = sj.at("width").get<int64_t>();
    s.blur_window = sj.at("blur_window").get<int64_t>();
    s.fps = sj.at("fps").get<double>();
    s.alpha = sj.value("alpha", 0.0);
    s.gamma = sj.value("gamma", 2.2);
    s.triplet_count = static_cast<int64_t>(sj.at("triplets").size());
    for (const auto& wj : sj.at("windows")) {
      WindowFiles w;
      w.blur = wj.at("blur").get<std::string>();
      w.sharp = wj.at("sharp").get<std::string>();
      w.events = wj.at("events").get<std::string>();
      w.t_start = wj.at("t_start").get<double>();
      w.t_end = wj.at("t_end").get<double>();
      s.windows.push_back(std::move(w));
    }
    ds.scenes_.push_back(std::move(s));
  }
  return ds;
}

std::vector<TripletRef> Dataset::triplets(const std::string& split) const {
  std::vector<TripletRef> out;
  for (size_t si = 0; si < scenes_.size(); ++si) {
    const SceneEntry& s = scenes_[si];
    if (split != "all" && s.split != split) continue;
    for (int64_t ti = 0; ti < s.triplet_count; ++ti) {
      out.push_back({static_cast<int64_t>(si), ti, ti + 1});
    }
  }
  return out;
}

Triplet Dataset::load_triplet(const TripletRef& ref, int64_t voxel_bins,
                              bool normalize_voxels) const {
  ELED_CHECK(ref.scene >= 0 && ref.scene < static_cast<int64_t>(scenes_.size()),
             "triplet ref: bad scene index ", ref.scene);
  const SceneEntry& s = scenes_[static_cast<size_t>(ref.scene)];
  ELED_CHECK(ref.center_window >= 1 &&
             ref.center_window + 1 < static_cast<int64_t>(s.windows.size()),
             "triplet ref: center window ", ref.center_window, " out of range for scene ", s.name);
  Triplet t;
  for (int k = 0; k < 3; ++k) {
    const WindowFiles& w = s.windows[static_cast<size_t>(ref.center_window - 1 + k)];
    t.blur[static_cast<size_t>(k)] = read_png((fs::path(root_) / w.blur).string());
    EventStream ev = read_events((fs::path(root_) / w.events).string(), s.height, s.width);
    VoxelGrid grid = events_to_voxel_grid(ev, {w.t_start, w.t_end}, voxel_bins, s.height,
                                          s.width, normalize_voxels);
    t.voxels[static_cast<size_t>(k)] = grid.bins;
  }
  const WindowFiles& center = s.windows[static_cast<size_t>(ref.center_window)];
  t.sharp = read_png((fs::path(root_) / center.sharp).string());
  return t;
}

Triplet crop_triplet(const Triplet& t, int64_t size, Rng& rng) {
  ELED_CHECK(size % 4 == 0, "crop size must be divisible by 4, got ", size);
  const int64_t h = t.sharp.dim(1), w = t.sharp.dim(2);
  ELED_CHECK(size <= h && size <= w, "crop size ", size, " exceeds frame ", h, "x", w);
  const int64_t oy = (h == size) ? 0 : rng.uniform_int(0, h - size);
  const int64_t ox = (w == size) ? 0 : rng.uniform_int(0, w - size);

  auto crop = [&](const Tensor& src) {
    const int64_t c = src.dim(0);
    Tensor dst({c, size, size});
    for (int64_t ci = 0; ci < c; ++ci) {
      for (int64_t y = 0; y < size; ++y) {
        const double* row = src.data() + (ci * h + oy + y) * w + ox;
        std::copy(row, row + size, dst.data() + (ci * size + y) * size);
      }
    }
    return dst;
  };

  Triplet out;
  for (int k = 0; k < 3; ++k) {
    out.blur[static_cast<size_t>(k)] = crop(t.blur[static_cast<size_t>(k)]);
    out.voxels[static_cast<size_t>(k)] = crop(t.voxels[static_cast<size_t>(k)]);
  }
  out.sharp = crop(t.sharp);
  return out;
}

}  // namespace eled::data

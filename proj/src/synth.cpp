#include "eled/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>

#include "eled/common.hpp"
#include "eled/event_io.hpp"
#include "eled/events.hpp"
#include "eled/image_io.hpp"

namespace fs = std::filesystem;

namespace eled::synth {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t tag) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor make_texture(Rng& rng, int64_t th, int64_t tw) {
  Tensor tex({3, th, tw});
  const int kind = static_cast<int>(rng.uniform_int(0, 2));
  const double c0[3] = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
  const double c1[3] = {rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9)};
  const int64_t cell = std::max<int64_t>(2, rng.uniform_int(3, 8));
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < th; ++y) {
      for (int64_t x = 0; x < tw; ++x) {
        double v;
        switch (kind) {
          case 0:  // checkerboard
            v = (((y / cell) + (x / cell)) % 2 == 0) ? c0[c] : c1[c];
            break;
          case 1:  // diagonal gradient
            v = c0[c] + (c1[c] - c0[c]) *
                            (static_cast<double>(y + x) / static_cast<double>(th + tw - 2));
            break;
          default:  // smooth blob noise
            v = 0.5 * (c0[c] + c1[c]) +
                0.3 * std::sin(2.0 * M_PI * (static_cast<double>(y) / th + 0.7 * x / tw));
            break;
        }
        tex.data()[(c * th + y) * tw + x] = std::min(1.0, std::max(0.0, v));
      }
    }
  }
  return tex;
}

}  // namespace

SceneSpec random_scene(int64_t height, int64_t width, double fps, int64_t n_frames,
                       int64_t blur_window, uint64_t seed) {
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.fps = fps;
  spec.n_frames = n_frames;
  spec.blur_window = blur_window;
  spec.seed = seed;
  Rng rng(mix_seed(seed, 0x5ce11e));
  spec.bg_low = rng.uniform(0.15, 0.35);
  spec.bg_high = rng.uniform(0.55, 0.85);
  spec.bg_horizontal = rng.uniform() < 0.5;
  const int n_sprites = static_cast<int>(rng.uniform_int(2, 4));
  const double duration = static_cast<double>(n_frames) / fps;
  for (int i = 0; i < n_sprites; ++i) {
    Sprite s;
    s.shape = rng.uniform() < 0.5 ? Sprite::Shape::Rect : Sprite::Shape::Disk;
    const int64_t th = rng.uniform_int(height / 5, height / 2);
    const int64_t tw = rng.uniform_int(width / 5, width / 2);
    s.texture = make_texture(rng, th, tw);
    // keep the sprite at least partially on-canvas over the whole clip
    s.x0 = rng.uniform(0.0, static_cast<double>(width - tw));
    s.y0 = rng.uniform(0.0, static_cast<double>(height - th));
    const double max_v = 0.6 * static_cast<double>(std::min(height, width)) / duration;
    s.vx = rng.uniform(-max_v, max_v);
    s.vy = rng.uniform(-max_v, max_v);
    if (rng.uniform() < 0.4) {
      s.amp_x = rng.uniform(0.0, 4.0);
      s.amp_y = rng.uniform(0.0, 4.0);
      s.freq = rng.uniform(0.5, 2.5);
    }
    const double xf = s.x0 + s.vx * duration;
    const double yf = s.y0 + s.vy * duration;
    if (xf < -0.5 * tw || xf > width - 0.5 * tw) s.vx = -s.vx;
    if (yf < -0.5 * th || yf > height - 0.5 * th) s.vy = -s.vy;
    spec.sprites.push_back(std::move(s));
  }
  return spec;
}

RenderedSequence render_sequence(const SceneSpec& spec) {
  ELED_CHECK(spec.height >= 32 && spec.width >= 32, "render_sequence: degenerate canvas ",
             spec.height, "x", spec.width, " (minimum 32)");
  ELED_CHECK(spec.n_frames >= 3 * spec.blur_window,
             "render_sequence: need at least ", 3 * spec.blur_window,
             " frames for three blur windows, got ", spec.n_frames);
  ELED_CHECK(spec.fps > 0.0, "render_sequence: fps must be positive");

  const int64_t h = spec.height, w = spec.width;
  Tensor background({3, h, w});
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        const double u = spec.bg_horizontal ? static_cast<double>(x) / (w - 1)
                                            : static_cast<double>(y) / (h - 1);
        background.data()[(c * h + y) * w + x] = spec.bg_low + (spec.bg_high - spec.bg_low) * u;
      }
    }
  }

  RenderedSequence seq;
  seq.frames.reserve(static_cast<size_t>(spec.n_frames));
  for (int64_t fi = 0; fi < spec.n_frames; ++fi) {
    const double t = static_cast<double>(fi) / spec.fps;
    seq.timestamps.push_back(t);
    Tensor frame = background.clone();
    for (const Sprite& s : spec.sprites) {
      const int64_t th = s.texture.dim(1), tw = s.texture.dim(2);
      const double px = s.x0 + s.vx * t + s.amp_x * std::sin(2.0 * M_PI * s.freq * t);
      const double py = s.y0 + s.vy * t + s.amp_y * std::sin(2.0 * M_PI * s.freq * t);
      const int64_t x_lo = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(px)));
      const int64_t y_lo = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(py)));
      const int64_t x_hi = std::min<int64_t>(w - 1, static_cast<int64_t>(std::floor(px + tw - 1)));
      const int64_t y_hi = std::min<int64_t>(h - 1, static_cast<int64_t>(std::floor(py + th - 1)));
      const double cx = 0.5 * (tw - 1), cy = 0.5 * (th - 1);
      const double rad2 = 0.25 * static_cast<double>(std::min(th, tw) * std::min(th, tw));
      for (int64_t y = y_lo; y <= y_hi; ++y) {
        for (int64_t x = x_lo; x <= x_hi; ++x) {
          const double u = static_cast<double>(x) - px;
          const double v = static_cast<double>(y) - py;
          if (s.shape == Sprite::Shape::Disk) {
            const double du = u - cx, dv = v - cy;
            if (du * du + dv * dv > rad2) continue;
          }
          // bilinear texture sample; exact blit when the position is integer
          const int64_t u0 = static_cast<int64_t>(std::floor(u));
          const int64_t v0 = static_cast<int64_t>(std::floor(v));
          const double fu = u - u0, fv = v - v0;
          for (int64_t c = 0; c < 3; ++c) {
            const double* tx = s.texture.data() + c * th * tw;
            auto texel = [&](int64_t ty, int64_t txx) {
              ty = std::clamp<int64_t>(ty, 0, th - 1);
              txx = std::clamp<int64_t>(txx, 0, tw - 1);
              return tx[ty * tw + txx];
            };
            const double val = (1 - fv) * ((1 - fu) * texel(v0, u0) + fu * texel(v0, u0 + 1)) +
                               fv * ((1 - fu) * texel(v0 + 1, u0) + fu * texel(v0 + 1, u0 + 1));
            frame.data()[(c * h + y) * w + x] = std::min(1.0, std::max(0.0, val));
          }
        }
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

Tensor synthesize_blur(const std::vector<Tensor>& window_frames) {
  ELED_CHECK(!window_frames.empty() && window_frames.size() % 2 == 1,
             "synthesize_blur: window length must be odd, got ", window_frames.size());
  Tensor out = window_frames[0].clone();
  for (size_t i = 1; i < window_frames.size(); ++i) {
    ELED_CHECK_SHAPE(window_frames[i].same_shape(out), "synthesize_blur: frame shape mismatch");
    for (int64_t j = 0; j < out.numel(); ++j) out.data()[j] += window_frames[i].data()[j];
  }
  const double inv = 1.0 / static_cast<double>(window_frames.size());
  for (int64_t j = 0; j < out.numel(); ++j) out.data()[j] *= inv;
  return out;
}

Tensor apply_low_light(const Tensor& frame_linear, const Degradation& deg, Rng& rng) {
  ELED_CHECK(deg.alpha > 0.0 && deg.alpha <= 1.0, "apply_low_light: alpha must be in (0,1], got ",
             deg.alpha);
  ELED_CHECK(deg.gamma > 0.0, "apply_low_light: gamma must be positive");
  Tensor out(frame_linear.shape());
  const double inv_gamma = 1.0 / deg.gamma;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double x = frame_linear.data()[i] * deg.alpha;
    double y = x;
    if (deg.shot_scale > 0.0) y += rng.normal(0.0, std::sqrt(std::max(0.0, x) * deg.shot_scale));
    if (deg.read_sigma > 0.0) y += rng.normal(0.0, deg.read_sigma);
    y = std::max(0.0, y);
    y = std::pow(y, inv_gamma);
    out.data()[i] = std::min(1.0, y);
  }
  return out;
}

namespace {

std::string index_name(int64_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld%s", static_cast<long long>(i), ext);
  return buf;
}

Tensor luminance(const Tensor& rgb) {
  const int64_t h = rgb.dim(1), w = rgb.dim(2);
  Tensor lum({h, w});
  const int64_t hw = h * w;
  for (int64_t i = 0; i < hw; ++i) {
    lum.data()[i] = (rgb.data()[i] + rgb.data()[hw + i] + rgb.data()[2 * hw + i]) / 3.0;
  }
  return lum;
}

std::vector<Tensor> load_frames_dir(const std::string& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".png") names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());
  ELED_CHECK(!names.empty(), "no PNG frames found in ", dir);
  std::vector<Tensor> frames;
  frames.reserve(names.size());
  for (const auto& n : names) frames.push_back(read_png(n));
  return frames;
}

struct SceneArtifacts {
  nlohmann::json scene_json;
  std::vector<std::string> files;  // relative paths, for the content hash
};

SceneArtifacts build_scene(const DatasetConfig& cfg, int64_t scene_idx,
                           const std::string& out_dir, const std::string& scene_name,
                           const std::string& split) {
  const int64_t win = cfg.blur_window;
  const int64_t windows = cfg.triplets_per_scene + 2;
  const int64_t n_frames = windows * win;
  const uint64_t scene_seed = mix_seed(cfg.seed, static_cast<uint64_t>(scene_idx));

  RenderedSequence seq;
  if (!cfg.frames_dir.empty()) {
    seq.frames = load_frames_dir(cfg.frames_dir);
    ELED_CHECK(static_cast<int64_t>(seq.frames.size()) >= n_frames,
               "frames dir ", cfg.frames_dir, " holds ", seq.frames.size(),
               " frames but ", n_frames, " are required");
    seq.frames.resize(static_cast<size_t>(n_frames));
    for (int64_t i = 0; i < n_frames; ++i)
      seq.timestamps.push_back(static_cast<double>(i) / cfg.fps);
  } else {
    SceneSpec spec = random_scene(cfg.height, cfg.width, cfg.fps, n_frames, win, scene_seed);
    seq = render_sequence(spec);
  }
  const int64_t h = seq.frames[0].dim(1), w = seq.frames[0].dim(2);

  Rng noise_rng(mix_seed(scene_seed, 0xb1a7));
  Rng event_noise_rng(mix_seed(scene_seed, 0xe7e7));
  Rng alpha_rng(mix_seed(scene_seed, 0xa1fa));

  Degradation deg;
  deg.alpha = alpha_rng.uniform(cfg.alpha_min, cfg.alpha_max);
  deg.shot_scale = cfg.shot_scale;
  deg.read_sigma = cfg.read_sigma;
  deg.gamma = cfg.gamma;

  const fs::path scene_dir = fs::path(out_dir) / scene_name;
  fs::create_directories(scene_dir / "blur");
  fs::create_directories(scene_dir / "sharp");
  fs::create_directories(scene_dir / "events");

  // event camera shares the attenuated path: low-light linear luminance
  // with its own noise realization
  std::vector<Tensor> event_video;
  event_video.reserve(seq.frames.size());
  for (const Tensor& f : seq.frames) {
    Tensor lum = luminance(f);
    for (int64_t i = 0; i < lum.numel(); ++i) {
      double v = lum.data()[i] * deg.alpha;
      if (deg.shot_scale > 0.0)
        v += event_noise_rng.normal(0.0, std::sqrt(std::max(0.0, v) * deg.shot_scale));
      if (deg.read_sigma > 0.0) v += event_noise_rng.normal(0.0, deg.read_sigma);
      lum.data()[i] = std::max(0.0, v);
    }
    event_video.push_back(std::move(lum));
  }
  EventStream all_events =
      simulate_events(event_video, seq.timestamps, cfg.contrast_threshold, cfg.event_eps);

  SceneArtifacts art;
  const double inv_gamma_exposure = 1.0 / cfg.gamma;
  std::vector<nlohmann::json> window_json;
  for (int64_t wi = 0; wi < windows; ++wi) {
    const int64_t f0 = wi * win;
    std::vector<Tensor> window_frames(seq.frames.begin() + f0, seq.frames.begin() + f0 + win);
    Tensor blur_lin = synthesize_blur(window_frames);
    Tensor blur_ll = apply_low_light(blur_lin, deg, noise_rng);

    // normal-light sharp target at the window center, display-encoded
    Tensor sharp = seq.frames[static_cast<size_t>(f0 + win / 2)].clone();
    for (int64_t i = 0; i < sharp.numel(); ++i)
      sharp.data()[i] = std::pow(std::min(1.0, std::max(0.0, sharp.data()[i])), inv_gamma_exposure);

    const double t_start = seq.timestamps[static_cast<size_t>(f0)];
    const double t_end = t_start + static_cast<double>(win) / cfg.fps;
    EventStream slice;
    slice.width = w;
    slice.height = h;
    const bool last = (wi == windows - 1);
    for (const EventRecord& e : all_events.events) {
      if (e.t >= t_start && (e.t < t_end || (last && e.t <= t_end))) slice.events.push_back(e);
    }

    const std::string blur_rel = scene_name + "/blur/" + index_name(wi, ".png");
    const std::string sharp_rel = scene_name + "/sharp/" + index_name(wi, ".png");
    const std::string evt_rel = scene_name + "/events/" + index_name(wi, ".evt");
    write_png((fs::path(out_dir) / blur_rel).string(), blur_ll);
    write_png((fs::path(out_dir) / sharp_rel).string(), sharp);
    write_events_binary((fs::path(out_dir) / evt_rel).string(), slice);
    art.files.insert(art.files.end(), {blur_rel, sharp_rel, evt_rel});

    window_json.push_back({{"index", wi},
                           {"blur", blur_rel},
                           {"sharp", sharp_rel},
                           {"events", evt_rel},
                           {"t_start", t_start},
                           {"t_end", t_end},
                           {"event_count", slice.events.size()}});
  }

  std::vector<nlohmann::json> triplets;
  for (int64_t ti = 0; ti < cfg.triplets_per_scene; ++ti) {
    const int64_t center = ti + 1;
    triplets.push_back({{"index", ti}, {"center_window", center}});
  }

  art.scene_json = {{"name", scene_name},
                    {"split", split},
                    {"height", h},
                    {"width", w},
                    {"fps", cfg.fps},
                    {"blur_window", win},
                    {"exposure_seconds", static_cast<double>(win) / cfg.fps},
                    {"alpha", deg.alpha},
                    {"gamma", deg.gamma},
                    {"shot_scale", deg.shot_scale},
                    {"read_sigma", deg.read_sigma},
                    {"contrast_threshold", cfg.contrast_threshold},
                    {"seed", scene_seed},
                    {"windows", window_json},
                    {"triplets", triplets}};
  return art;
}

}  // namespace

uint64_t build_dataset(const DatasetConfig& cfg, const std::string& out_dir) {
  ELED_CHECK(cfg.scenes >= 1, "build_dataset: need at least one scene");
  ELED_CHECK(cfg.triplets_per_scene >= 1, "build_dataset: need at least one triplet per scene");
  ELED_CHECK(cfg.blur_window >= 1 && cfg.blur_window % 2 == 1,
             "build_dataset: blur window must be odd, got ", cfg.blur_window);
  ELED_CHECK(cfg.test_scenes >= 0 && cfg.test_scenes <= cfg.scenes,
             "build_dataset: test scene count out of range");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create dataset directory: " + out_dir + " (" + ec.message() + ")");
  }

  std::vector<SceneArtifacts> artifacts(static_cast<size_t>(cfg.scenes));
  std::vector<std::string> errors(static_cast<size_t>(cfg.scenes));
#pragma omp parallel for schedule(dynamic)
  for (int64_t si = 0; si < cfg.scenes; ++si) {
    try {
      char name[32];
      std::snprintf(name, sizeof(name), "scene_%03lld", static_cast<long long>(si));
      const std::string split = (si >= cfg.scenes - cfg.test_scenes) ? "test" : "train";
      artifacts[static_cast<size_t>(si)] = build_scene(cfg, si, out_dir, name, split);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(si)] = e.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw IoError("dataset build failed: " + err);
  }

  nlohmann::json manifest;
  manifest["manifest_version"] = 1;
  manifest["config"] = {{"scenes", cfg.scenes},
                        {"test_scenes", cfg.test_scenes},
                        {"triplets_per_scene", cfg.triplets_per_scene},
                        {"height", cfg.height},
                        {"width", cfg.width},
                        {"fps", cfg.fps},
                        {"blur_window", cfg.blur_window},
                        {"contrast_threshold", cfg.contrast_threshold},
                        {"event_eps", cfg.event_eps},
                        {"alpha_min", cfg.alpha_min},
                        {"alpha_max", cfg.alpha_max},
                        {"shot_scale", cfg.shot_scale},
                        {"read_sigma", cfg.read_sigma},
                        {"gamma", cfg.gamma},
                        {"seed", cfg.seed},
                        {"frames_dir", cfg.frames_dir}};
  uint64_t content = fnv1a64(manifest["config"].dump());
  std::vector<nlohmann::json> scenes;
  for (auto& art : artifacts) {
    for (const auto& rel : art.files) {
      const uint64_t fh = file_hash((fs::path(out_dir) / rel).string());
      content = fnv1a64(rel, content);
      content = fnv1a64(&fh, sizeof(fh), content);
    }
    scenes.push_back(std::move(art.scene_json));
  }
  manifest["scenes"] = scenes;
  manifest["content_hash"] = to_hex(content);

  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  if (!mf) throw IoError("cannot write manifest in " + out_dir);
  mf << manifest.dump(2) << "\n";
  return content;
}

}  // namespace eled::synth

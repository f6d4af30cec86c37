#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "eled/dataset.hpp"
#include "eled/events.hpp"
#include "eled/image_io.hpp"
#include "eled/metrics.hpp"
#include "eled/synth.hpp"

namespace fs = std::filesystem;
using namespace eled;
using namespace eled::synth;

namespace {

SceneSpec static_scene() {
  SceneSpec spec;
  spec.height = 40;
  spec.width = 40;
  spec.fps = 100.0;
  spec.n_frames = 15;
  spec.blur_window = 5;
  spec.seed = 3;
  Sprite s;
  s.shape = Sprite::Shape::Rect;
  s.x0 = 10;
  s.y0 = 12;
  Rng rng(1);
  s.texture = Tensor::rand({3, 8, 8}, rng, 0.1, 0.9);
  spec.sprites.push_back(std::move(s));
  return spec;
}

}  // namespace

TEST_CASE("render: static scene produces identical frames") {
  RenderedSequence seq = render_sequence(static_scene());
  REQUIRE(seq.frames.size() == 15);
  for (size_t i = 1; i < seq.frames.size(); ++i) {
    for (int64_t j = 0; j < seq.frames[0].numel(); ++j) {
      CHECK(seq.frames[i].data()[j] == seq.frames[0].data()[j]);
    }
  }
}

TEST_CASE("render: same seed twice is bit-identical") {
  SceneSpec a = random_scene(48, 48, 120.0, 18, 5, 77);
  SceneSpec b = random_scene(48, 48, 120.0, 18, 5, 77);
  RenderedSequence ra = render_sequence(a);
  RenderedSequence rb = render_sequence(b);
  for (size_t i = 0; i < ra.frames.size(); ++i) {
    for (int64_t j = 0; j < ra.frames[i].numel(); ++j) {
      CHECK(ra.frames[i].data()[j] == rb.frames[i].data()[j]);
    }
  }
}

TEST_CASE("render: sprite at 1 px/frame equals frame 0 shifted by k px over its support") {
  SceneSpec spec = static_scene();
  spec.sprites[0].vx = spec.fps;  // exactly one pixel per frame
  RenderedSequence seq = render_sequence(spec);
  const int64_t h = spec.height, w = spec.width;
  const int64_t tx = 10, ty = 12, tw = 8, th = 8;
  for (int64_t k : {1, 2, 3}) {
    // pixel-shift oracle over the sprite support at frame k
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t y = ty; y < ty + th; ++y) {
        for (int64_t x = tx + k; x < tx + tw + k; ++x) {
          const double got = seq.frames[static_cast<size_t>(k)].data()[(c * h + y) * w + x];
          const double ref = seq.frames[0].data()[(c * h + y) * w + x - k];
          CHECK(got == ref);
        }
      }
    }
  }
}

TEST_CASE("render: degenerate canvas and short sequences rejected") {
  SceneSpec spec = static_scene();
  spec.height = 16;
  CHECK_THROWS_AS(render_sequence(spec), InvalidArgument);
  SceneSpec short_spec = static_scene();
  short_spec.n_frames = 10;  // < 3 * blur_window
  CHECK_THROWS_AS(render_sequence(short_spec), InvalidArgument);
}

TEST_CASE("blur synthesis: mean in linear intensity") {
  Tensor a = Tensor::full({3, 4, 4}, 0.0);
  Tensor b = Tensor::full({3, 4, 4}, 0.3);
  Tensor c = Tensor::full({3, 4, 4}, 0.6);
  Tensor blur = synthesize_blur({a, b, c});
  for (int64_t i = 0; i < blur.numel(); ++i)
    CHECK(blur.data()[i] == doctest::Approx(0.3).epsilon(1e-12));

  Tensor one = synthesize_blur({b});
  CHECK(one.data()[0] == doctest::Approx(0.3).epsilon(1e-12));

  Tensor same = synthesize_blur({b, b, b, b, b});
  CHECK(same.data()[5] == doctest::Approx(0.3).epsilon(1e-12));

  CHECK_THROWS_AS(synthesize_blur({a, b}), InvalidArgument);
}

TEST_CASE("low light: alpha=1 zero noise gamma=1 is the identity") {
  Rng rng(1);
  Tensor x = Tensor::rand({3, 5, 5}, rng, 0.0, 1.0);
  Degradation d{1.0, 0.0, 0.0, 1.0};
  Tensor y = apply_low_light(x, d, rng);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("low light: 1/8 attenuation matches the radiant-exposure ratio") {
  Rng rng(1);
  Tensor x = Tensor::full({3, 4, 4}, 0.8);
  Degradation d{0.125, 0.0, 0.0, 1.0};
  Tensor y = apply_low_light(x, d, rng);
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("low light: alpha out of range rejected") {
  Rng rng(1);
  Tensor x = Tensor::full({3, 4, 4}, 0.5);
  Degradation d;
  d.alpha = 0.0;
  CHECK_THROWS_AS(apply_low_light(x, d, rng), InvalidArgument);
}

TEST_CASE("low light: fixed seed reproduces the same noisy output (frozen hash)") {
  Rng rng(2024);
  Tensor x = Tensor::full({3, 8, 8}, 0.5);
  Degradation d{0.1, 1e-3, 5e-3, 2.2};
  Tensor y = apply_low_light(x, d, rng);
  uint64_t h = fnv1a64(y.data(), static_cast<size_t>(y.numel()) * sizeof(double));
  // golden value generated once from this implementation and frozen
  CHECK(to_hex(h) == "2565c046ea505544");
}

TEST_CASE("dataset build: counts, manifest determinism, degradation ordering") {
  const fs::path root = fs::temp_directory_path() / "eled_ds_test";
  fs::remove_all(root);
  DatasetConfig cfg;
  cfg.scenes = 2;
  cfg.test_scenes = 1;
  cfg.triplets_per_scene = 5;
  cfg.height = 48;
  cfg.width = 48;
  cfg.seed = 9;
  const uint64_t hash1 = build_dataset(cfg, root.string());

  data::Dataset ds = data::Dataset::load(root.string());
  CHECK(ds.scenes().size() == 2);
  CHECK(ds.triplets("all").size() == 10);
  CHECK(ds.triplets("train").size() == 5);
  CHECK(ds.triplets("test").size() == 5);
  for (const auto& scene : ds.scenes()) {
    for (const auto& w : scene.windows) {
      CHECK(fs::exists(root / w.blur));
      CHECK(fs::exists(root / w.sharp));
      CHECK(fs::exists(root / w.events));
    }
    // blur exposure recorded as window/fps
    CHECK(scene.windows[1].t_end - scene.windows[1].t_start ==
          doctest::Approx(cfg.blur_window / cfg.fps).epsilon(1e-12));
  }

  // rebuilding with the same config gives an identical content hash
  const fs::path root2 = fs::temp_directory_path() / "eled_ds_test2";
  fs::remove_all(root2);
  const uint64_t hash2 = build_dataset(cfg, root2.string());
  CHECK(hash1 == hash2);

  // degradation actually degrades: blurry low-light input scores worse than
  // the sharp target against itself
  data::Triplet t = ds.load_triplet(ds.triplets("train")[0], 4);
  CHECK(metrics::psnr(t.blur[1], t.sharp) < metrics::psnr(t.sharp, t.sharp));
  // low-light mean intensity sits below the sharp mean
  CHECK(t.blur[1].sum() < t.sharp.sum());

  fs::remove_all(root);
  fs::remove_all(root2);
}

TEST_CASE("dataset build: 9-frame window at 240 fps records 37.5 ms exposure") {
  const fs::path root = fs::temp_directory_path() / "eled_ds_test3";
  fs::remove_all(root);
  DatasetConfig cfg;
  cfg.scenes = 1;
  cfg.triplets_per_scene = 1;
  cfg.height = 48;
  cfg.width = 48;
  cfg.blur_window = 9;
  cfg.fps = 240.0;
  build_dataset(cfg, root.string());
  std::ifstream mf(root / "manifest.json");
  std::string text((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
  CHECK(text.find("0.0375") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("dataset build: static scene yields no events under zero noise") {
  // a scene whose sprites do not move, zero noise: the event path sees a
  // constant video
  const fs::path root = fs::temp_directory_path() / "eled_ds_static";
  fs::remove_all(root);
  DatasetConfig cfg;
  cfg.scenes = 1;
  cfg.triplets_per_scene = 1;
  cfg.height = 48;
  cfg.width = 48;
  cfg.shot_scale = 0.0;
  cfg.read_sigma = 0.0;
  cfg.seed = 4;

  // render a static sequence into PNGs and use the ingestion path
  const fs::path frames_dir = fs::temp_directory_path() / "eled_static_frames";
  fs::remove_all(frames_dir);
  fs::create_directories(frames_dir);
  SceneSpec spec = static_scene();
  spec.height = 48;
  spec.width = 48;
  RenderedSequence seq = render_sequence(spec);
  for (size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu.png", i);
    write_png((frames_dir / name).string(), seq.frames[i]);
  }
  cfg.frames_dir = frames_dir.string();
  build_dataset(cfg, root.string());

  data::Dataset ds = data::Dataset::load(root.string());
  data::Triplet t = ds.load_triplet(ds.triplets("all")[0], 4, false);
  for (int k = 0; k < 3; ++k) CHECK(t.voxels[static_cast<size_t>(k)].abs_max() == 0.0);
  fs::remove_all(root);
  fs::remove_all(frames_dir);
}

TEST_CASE("png io round trip at 8-bit precision") {
  Rng rng(6);
  Tensor img = Tensor::rand({3, 16, 20}, rng);
  const fs::path path = fs::temp_directory_path() / "eled_png_test.png";
  write_png(path.string(), img);
  Tensor back = read_png(path.string());
  REQUIRE(back.same_shape(img));
  for (int64_t i = 0; i < img.numel(); ++i) {
    CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.5 / 255.0 + 1e-9);
  }
  fs::remove(path.string());
}

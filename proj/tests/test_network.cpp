#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "eled/checkpoint.hpp"
#include "eled/network.hpp"
#include "oracles.hpp"

using namespace eled;
using namespace eled::ag;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg = ModelConfig::small_config();
  cfg.base_channels = 8;
  cfg.offset_groups = 4;
  cfg.encoder_depths = {1, 1, 1};
  cfg.n_cab = 1;
  cfg.cnn_blocks_per_scale = 1;
  cfg.decoder_blocks_per_scale = 1;
  cfg.voxel_bins = 4;
  return cfg;
}

std::array<Var, 3> random_frames(int64_t c, int64_t h, int64_t w, Rng& rng, bool rg = false) {
  std::array<Var, 3> out;
  for (int k = 0; k < 3; ++k)
    out[static_cast<size_t>(k)] = leaf(Tensor::rand({c, h, w}, rng), rg);
  return out;
}

}  // namespace

TEST_CASE("network: multi-scale output shapes at 128x128 with 16-bin voxels") {
  ModelConfig cfg = ModelConfig::small_config();
  cfg.encoder_depths = {1, 1, 1};
  cfg.n_cab = 1;
  cfg.cnn_blocks_per_scale = 1;
  cfg.decoder_blocks_per_scale = 1;
  Network net(cfg);
  Rng rng(1);
  auto blurs = random_frames(3, 128, 128, rng);
  auto voxels = random_frames(16, 128, 128, rng);
  MultiScaleOutput out = net.forward(blurs, voxels);
  CHECK(out.frames[0]->value.shape() == std::vector<int64_t>{3, 128, 128});
  CHECK(out.frames[1]->value.shape() == std::vector<int64_t>{3, 64, 64});
  CHECK(out.frames[2]->value.shape() == std::vector<int64_t>{3, 32, 32});
  for (int s = 0; s < 3; ++s) {
    const Tensor& f = out.frames[static_cast<size_t>(s)]->value;
    for (int64_t i = 0; i < f.numel(); ++i) {
      CHECK(f.data()[i] >= 0.0);
      CHECK(f.data()[i] <= 1.0);
    }
  }
}

TEST_CASE("network: initialization emits the downsampled blur frame exactly") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  Rng rng(2);
  auto blurs = random_frames(3, 32, 32, rng);
  auto voxels = random_frames(cfg.voxel_bins, 32, 32, rng);
  NetworkProbe probe;
  MultiScaleOutput out = net.forward(blurs, voxels, &probe);

  CHECK(oracle::max_abs_diff(out.frames[0]->value, blurs[1]->value) == 0.0);
  Var down2 = bilinear_resize(blurs[1], 16, 16);
  Var down4 = bilinear_resize(blurs[1], 8, 8);
  CHECK(oracle::max_abs_diff(out.frames[1]->value, down2->value) == 0.0);
  CHECK(oracle::max_abs_diff(out.frames[2]->value, down4->value) == 0.0);
  for (const auto& o : probe.edtfa.offsets) CHECK(o.abs_max() == 0.0);
}

TEST_CASE("network: input validation carries stage context") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  Rng rng(3);
  auto blurs = random_frames(3, 30, 32, rng);  // not divisible by 4
  auto voxels = random_frames(cfg.voxel_bins, 30, 32, rng);
  CHECK_THROWS_WITH_AS(net.forward(blurs, voxels), doctest::Contains("divisible by 4"),
                       ShapeError);

  auto blurs2 = random_frames(3, 32, 32, rng);
  auto bad_voxels = random_frames(cfg.voxel_bins + 1, 32, 32, rng);
  CHECK_THROWS_WITH_AS(net.forward(blurs2, bad_voxels), doctest::Contains("voxel grid"),
                       ShapeError);
}

TEST_CASE("network: parameter counts are monotone in width and variant") {
  ModelConfig small = ModelConfig::small_config();
  ModelConfig full = ModelConfig::full_config();
  Network a(small), b(full);
  CHECK(a.count_params() < b.count_params());

  ModelConfig wider = small;
  wider.base_channels *= 2;
  Network c(wider);
  CHECK(c.count_params() > a.count_params());

  // reported for context against the published 12.8M figure; the open
  // question on MB-vs-millions means equality is not asserted
  MESSAGE("full variant parameters: ", b.count_params(), " (",
          static_cast<double>(b.count_params()) / 1e6, " M, ",
          static_cast<double>(b.count_params()) * 8.0 / 1e6, " MB as float64)");
}

TEST_CASE("network: construction is deterministic for a fixed config") {
  ModelConfig cfg = tiny_config();
  Network a(cfg), b(cfg);
  CHECK(a.count_params() == b.count_params());
  auto pa = a.named_params();
  auto pb = b.named_params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    CHECK(oracle::max_abs_diff(pa[i].second->value, pb[i].second->value) == 0.0);
  }
}

TEST_CASE("network: every parameter receives gradient on a randomized model") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  Rng rng(4);
  // randomize zero-initialized heads so gradients can propagate through them
  for (auto& [name, p] : net.named_params()) {
    (void)name;
    for (int64_t i = 0; i < p->value.numel(); ++i) p->value.data()[i] += rng.normal(0.0, 0.05);
  }
  net.zero_grads();
  auto blurs = random_frames(3, 16, 16, rng);
  auto voxels = random_frames(cfg.voxel_bins, 16, 16, rng);
  MultiScaleOutput out = net.forward(blurs, voxels);
  Var loss = sum_all(mul(out.frames[0], out.frames[0]));
  loss = add(loss, sum_all(mul(out.frames[1], out.frames[1])));
  loss = add(loss, sum_all(mul(out.frames[2], out.frames[2])));
  backward(loss);
  int dead = 0;
  for (auto& [name, p] : net.named_params()) {
    if (p->grad.abs_max() == 0.0) {
      ++dead;
      MESSAGE("dead parameter: ", name);
    }
  }
  CHECK(dead == 0);
}

TEST_CASE("network: tied encoders share parameters") {
  ModelConfig cfg = tiny_config();
  ModelConfig tied = cfg;
  tied.tie_event_blur_encoders = true;
  Network separate(cfg), shared(tied);
  CHECK(shared.count_params() < separate.count_params());
}

TEST_CASE("network: small-config forward+backward at 64x64 stays under 10 s") {
  ModelConfig cfg = ModelConfig::small_config();
  Network net(cfg);
  Rng rng(5);
  auto blurs = random_frames(3, 64, 64, rng);
  auto voxels = random_frames(cfg.voxel_bins, 64, 64, rng);
  const auto t0 = std::chrono::steady_clock::now();
  MultiScaleOutput out = net.forward(blurs, voxels);
  backward(sum_all(mul(out.frames[0], out.frames[0])));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("forward+backward: ", seconds, " s");
  CHECK(seconds < 10.0);
}

TEST_CASE("checkpoint: round trip restores parameters and validates config") {
  namespace fs = std::filesystem;
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  Rng rng(6);
  for (auto& [name, p] : net.named_params()) {
    (void)name;
    for (int64_t i = 0; i < p->value.numel(); ++i) p->value.data()[i] = rng.normal();
  }
  optim::Adam opt(net.named_params());
  const std::string path = (fs::temp_directory_path() / "eled_ckpt_test.ckpt").string();
  save_checkpoint(path, net, &opt, 42);

  Network restored(cfg);
  optim::Adam opt2(restored.named_params());
  const int64_t step = load_checkpoint(path, restored, &opt2);
  CHECK(step == 42);
  auto pa = net.named_params();
  auto pb = restored.named_params();
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(oracle::max_abs_diff(pa[i].second->value, pb[i].second->value) == 0.0);
  }

  ModelConfig other = cfg;
  other.base_channels = 16;
  Network mismatched(other);
  CHECK_THROWS_WITH_AS(load_checkpoint(path, mismatched, nullptr),
                       doctest::Contains("config hash"), InvalidArgument);
  CHECK(peek_checkpoint_config(path).hash() == cfg.hash());
  fs::remove(path);
}

TEST_CASE("model config: json round trip and validation") {
  ModelConfig cfg = ModelConfig::full_config();
  cfg.sigma_fixed = {1.0, 2.0, 3.0};
  ModelConfig back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.hash() == cfg.hash());

  ModelConfig bad = cfg;
  bad.base_channels = 4;
  CHECK_THROWS_AS(Network{bad}, InvalidArgument);
  ModelConfig bad2 = cfg;
  bad2.fusion = "mystery";
  CHECK_THROWS_AS(Network{bad2}, InvalidArgument);
}

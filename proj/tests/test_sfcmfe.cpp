#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "eled/sfcm_fe.hpp"
#include "oracles.hpp"

using namespace eled;
using namespace eled::ag;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg = ModelConfig::small_config();
  cfg.base_channels = 8;
  cfg.offset_groups = 4;
  cfg.n_cab = 2;
  return cfg;
}

}  // namespace

TEST_CASE("sfcm level: shape law at every scale") {
  ModelConfig cfg = tiny_config();
  Rng rng(1);
  SfcmFeStack stack(cfg, rng);
  const int64_t h = 32, w = 32;
  std::array<Var, 3> ga, ge;
  for (int s = 0; s < 3; ++s) {
    ga[static_cast<size_t>(s)] =
        leaf(Tensor::randn({cfg.channels_at(s), h >> s, w >> s}, rng), false);
    ge[static_cast<size_t>(s)] =
        leaf(Tensor::randn({cfg.channels_at(s), h >> s, w >> s}, rng), false);
  }
  auto gx = stack.forward(ga, ge);
  for (int s = 0; s < 3; ++s) {
    CHECK(gx[static_cast<size_t>(s)]->value.dim(0) == cfg.channels_at(s));
    CHECK(gx[static_cast<size_t>(s)]->value.dim(1) == h >> s);
    CHECK(gx[static_cast<size_t>(s)]->value.dim(2) == w >> s);
  }
}

TEST_CASE("sfcm level: missing previous-scale feature rejected below scale 2") {
  ModelConfig cfg = tiny_config();
  Rng rng(2);
  SfcmFeLevel level(1, cfg, rng);
  Var a = leaf(Tensor::randn({2 * cfg.base_channels, 16, 16}, rng), false);
  Var e = leaf(Tensor::randn({2 * cfg.base_channels, 16, 16}, rng), false);
  CHECK_THROWS_AS(level.forward(a, e, nullptr), InvalidArgument);
  CHECK_THROWS_AS(nn::gaussian_lowpass_mask(8, 8, -1.0), InvalidArgument);
}

TEST_CASE("sfcm level: degenerate initialization composes to the analytic form") {
  // sigma -> all-pass, identity spectral conv, near-one-hot dynamic kernels,
  // zeroed attention gates: branch (a) doubles, fuse averages
  ModelConfig cfg = tiny_config();
  cfg.n_cab = 1;
  Rng rng(3);
  SfcmFeLevel level(2, cfg, rng);
  level.sigma_fixed_ = 1e9;
  // kernel predictor: bias forces the center tap, softmax gives ~one-hot
  level.kernel_pred.conv1.w->value.fill(0.0);
  level.kernel_pred.conv1.b->value.fill(0.0);
  level.kernel_pred.conv2.w->value.fill(0.0);
  level.kernel_pred.conv2.b->value.fill(0.0);
  level.kernel_pred.conv2.b->value.data()[4] = 60.0;
  // spatial attention gates at sigmoid(0) = 0.5
  level.fuse.gate_a.w->value.fill(0.0);
  level.fuse.gate_a.b->value.fill(0.0);
  level.fuse.gate_b.w->value.fill(0.0);
  level.fuse.gate_b.b->value.fill(0.0);
  // channel attention: gate hard off so the CAB is the identity
  level.cabs[0]->mlp2.w->value.fill(0.0);
  level.cabs[0]->mlp2.b->value.fill(-1e12);

  const int64_t c4 = cfg.channels_at(2);
  Tensor a = Tensor::randn({c4, 8, 8}, rng);
  Tensor e = Tensor::randn({c4, 8, 8}, rng);
  Var out = level.forward(leaf(a, false), leaf(e, false), nullptr);

  // oracle: merged -> branch convs -> 0.5*(2*Xa + Xb)
  Tensor cat({2 * c4, 8, 8});
  std::copy(e.data(), e.data() + e.numel(), cat.data());
  std::copy(a.data(), a.data() + a.numel(), cat.data() + e.numel());
  Tensor merged = oracle::conv2d_naive(cat, level.merge_conv.w->value,
                                       level.merge_conv.b->value, 1);
  for (int64_t i = 0; i < merged.numel(); ++i)
    merged.data()[i] = merged.data()[i] > 0 ? merged.data()[i] : 0.1 * merged.data()[i];
  Tensor xa = oracle::conv2d_naive(merged, level.branch_a.w->value, level.branch_a.b->value, 1);
  Tensor xb = oracle::conv2d_naive(merged, level.branch_b.w->value, level.branch_b.b->value, 1);
  double max_err = 0.0;
  for (int64_t i = 0; i < xa.numel(); ++i) {
    const double expect = 0.5 * (2.0 * xa.data()[i] + xb.data()[i]);
    max_err = std::max(max_err, std::abs(out->value.data()[i] - expect));
  }
  CHECK(max_err <= 1e-5);
}

TEST_CASE("sfcm: low-pass branch attenuates a checkerboard against a ramp by >= 10x") {
  // energy-ratio probe on the filtered (pre-residual) component
  const int64_t h = 32, w = 32;
  Rng rng(4);
  nn::SpectralFilter filt(1, rng);  // identity conv block
  const double sigma = static_cast<double>(std::min(h, w)) / 8.0;
  nn::SpectralMask mask = nn::gaussian_lowpass_mask(h, w, sigma);

  Tensor ramp({1, h, w}), checker({1, h, w});
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      ramp.data()[y * w + x] = static_cast<double>(x + y) / (h + w);
      checker.data()[y * w + x] = ((x + y) % 2 == 0) ? 0.5 : -0.5;
    }
  }
  auto energy = [](const Tensor& t) {
    double s = 0.0;
    for (int64_t i = 0; i < t.numel(); ++i) s += t.data()[i] * t.data()[i];
    return s;
  };
  Var ramp_out = filt.filtered_component(leaf(ramp, false), mask);
  Var checker_out = filt.filtered_component(leaf(checker, false), mask);
  const double ramp_keep = energy(ramp_out->value) / energy(ramp);
  const double checker_keep = energy(checker_out->value) / energy(checker);
  CHECK(ramp_keep >= 10.0 * checker_keep);
}

TEST_CASE("sfcm: applied mask equals the closed form on the shifted grid") {
  const int64_t h = 12, w = 16;
  const double sigma = 3.5;
  nn::SpectralMask m = nn::gaussian_lowpass_mask(h, w, sigma);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x - w / 2), dy = static_cast<double>(y - h / 2);
      const double expect = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      CHECK(std::abs(m.mask.data()[y * w + x] - expect) <= 1e-12);
    }
  }
}

TEST_CASE("sfcm: decreasing sigma never increases high-frequency energy") {
  // measured outside the level's default radius sigma_s = max(H,W)/4; the
  // pointwise-smaller mask passes less of every band
  const int64_t h = 16, w = 16;
  const double band_radius = static_cast<double>(std::max(h, w)) / 4.0;
  Rng rng(5);
  Tensor x = Tensor::randn({1, h, w}, rng);
  auto out_of_band_energy = [&](double sigma) {
    nn::SpectralFilter filt(1, rng);  // identity block each time
    nn::SpectralMask mask = nn::gaussian_lowpass_mask(h, w, sigma);
    Var filtered = filt.filtered_component(leaf(x, false), mask);
    auto z = oracle::dft2_naive(filtered->value.data(), h, w);
    double e = 0.0;
    for (int64_t u = 0; u < h; ++u) {
      for (int64_t v = 0; v < w; ++v) {
        const int64_t su = (u + h / 2) % h, sv = (v + w / 2) % w;
        const double r = std::hypot(static_cast<double>(su - h / 2),
                                    static_cast<double>(sv - w / 2));
        if (r > band_radius) e += std::norm(z[static_cast<size_t>(u * w + v)]);
      }
    }
    return e;
  };
  double prev = out_of_band_energy(8.0);
  for (double sigma : {6.0, 4.0, 2.0, 1.0}) {
    const double cur = out_of_band_energy(sigma);
    CHECK(cur <= prev + 1e-9);
    prev = cur;
  }
}

TEST_CASE("sfcm pyramid: gradients reach both modality pyramids; repeatable") {
  ModelConfig cfg = tiny_config();
  Rng rng(6);
  SfcmFeStack stack(cfg, rng);
  const int64_t h = 16, w = 16;
  std::array<Var, 3> ga, ge;
  for (int s = 0; s < 3; ++s) {
    ga[static_cast<size_t>(s)] =
        leaf(Tensor::randn({cfg.channels_at(s), h >> s, w >> s}, rng), true);
    ge[static_cast<size_t>(s)] =
        leaf(Tensor::randn({cfg.channels_at(s), h >> s, w >> s}, rng), true);
  }
  auto gx = stack.forward(ga, ge);
  Var loss = sum_all(mul(gx[0], gx[0]));
  backward(loss);
  for (int s = 0; s < 3; ++s) {
    CHECK(ga[static_cast<size_t>(s)]->grad.abs_max() > 0.0);
    CHECK(ge[static_cast<size_t>(s)]->grad.abs_max() > 0.0);
  }

  auto gx2 = stack.forward(ga, ge);
  for (int s = 0; s < 3; ++s) {
    CHECK(oracle::max_abs_diff(gx[static_cast<size_t>(s)]->value,
                               gx2[static_cast<size_t>(s)]->value) == 0.0);
  }

  std::array<Var, 3> incomplete = ga;
  incomplete[1] = Var{};
  CHECK_THROWS_AS(stack.forward(incomplete, ge), InvalidArgument);
}

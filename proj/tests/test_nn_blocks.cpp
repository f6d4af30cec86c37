#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eled/gradcheck.hpp"
#include "eled/nn.hpp"
#include "oracles.hpp"

using namespace eled;
using namespace eled::ag;

TEST_CASE("gaussian mask: center value, sigma radius, all-pass limit") {
  nn::SpectralMask m = nn::gaussian_lowpass_mask(17, 24, 3.0);
  CHECK(m.center_x == 12);
  CHECK(m.center_y == 8);
  CHECK(m.mask.data()[m.center_y * 24 + m.center_x] == 1.0);
  // exactly sigma away along x
  CHECK(std::abs(m.mask.data()[m.center_y * 24 + m.center_x + 3] - std::exp(-0.5)) <= 1e-12);

  nn::SpectralMask wide = nn::gaussian_lowpass_mask(16, 16, 1e9);
  for (int64_t i = 0; i < wide.mask.numel(); ++i) CHECK(wide.mask.data()[i] >= 1.0 - 1e-6);

  CHECK_THROWS_AS(nn::gaussian_lowpass_mask(8, 8, 0.0), InvalidArgument);
}

TEST_CASE("gaussian mask: radially monotone over random radius pairs") {
  nn::SpectralMask m = nn::gaussian_lowpass_mask(33, 41, 5.0);
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const int64_t y1 = rng.uniform_int(0, 32), x1 = rng.uniform_int(0, 40);
    const int64_t y2 = rng.uniform_int(0, 32), x2 = rng.uniform_int(0, 40);
    const double r1 = std::hypot(static_cast<double>(y1 - m.center_y),
                                 static_cast<double>(x1 - m.center_x));
    const double r2 = std::hypot(static_cast<double>(y2 - m.center_y),
                                 static_cast<double>(x2 - m.center_x));
    const double v1 = m.mask.data()[y1 * 41 + x1];
    const double v2 = m.mask.data()[y2 * 41 + x2];
    if (r1 < r2) CHECK(v1 > v2);
    if (r1 == r2) CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
  }
}

TEST_CASE("attention: single channel single head collapses to a scalar softmax") {
  Rng rng(31);
  nn::AttentionBlock blk(1, 1, 1.0, rng);
  Tensor x = Tensor::randn({1, 6, 6}, rng);
  nn::AttnProbe probe;
  blk.forward(leaf(x, false), &probe);
  REQUIRE(probe.attention.size() == 1);
  REQUIRE(probe.attention[0].numel() == 1);
  CHECK(probe.attention[0].data()[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attention: zero input passes through as zero (bias-free convs)") {
  Rng rng(32);
  nn::AttentionBlock blk(4, 2, 2.0, rng);
  Var y = blk.forward(leaf(Tensor::zeros({4, 6, 6}), false));
  CHECK(y->value.abs_max() == 0.0);
}

TEST_CASE("attention: rows of every head's matrix sum to 1") {
  Rng rng(33);
  nn::AttentionBlock blk(4, 2, 2.0, rng);
  Tensor x = Tensor::randn({4, 8, 8}, rng);
  nn::AttnProbe probe;
  blk.forward(leaf(x, false), &probe);
  REQUIRE(probe.attention.size() == 1);
  const Tensor& attn = probe.attention[0];  // (2, 2, 2)
  const int64_t heads = attn.dim(0), d = attn.dim(1);
  for (int64_t hd = 0; hd < heads; ++hd) {
    for (int64_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (int64_t c = 0; c < d; ++c) s += attn.data()[(hd * d + r) * d + c];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention: head count must divide channels") {
  Rng rng(34);
  CHECK_THROWS_AS(nn::AttentionBlock(5, 2, 2.0, rng), InvalidArgument);
}

TEST_CASE("channel attention: -inf gate bias reduces the block to identity") {
  Rng rng(41);
  nn::ChannelAttentionBlock cab(3, rng);
  cab.mlp2.b->value.fill(-1e12);  // sigmoid underflows to exactly 0
  Tensor x = Tensor::randn({3, 7, 7}, rng);
  Var y = cab.forward(leaf(x, false));
  CHECK(oracle::max_abs_diff(y->value, x) == 0.0);
}

TEST_CASE("channel attention: neutral gate scales the conv branch by one half") {
  Rng rng(42);
  nn::ChannelAttentionBlock cab(3, rng);
  // zero the gate MLP so sigmoid(0) = 0.5 regardless of the pooled stats
  cab.mlp1.w->value.fill(0.0);
  cab.mlp1.b->value.fill(0.0);
  cab.mlp2.w->value.fill(0.0);
  cab.mlp2.b->value.fill(0.0);
  Tensor x = Tensor::randn({3, 7, 7}, rng);
  Var y = cab.forward(leaf(x, false));

  Tensor u = oracle::conv2d_naive(x, cab.conv1.w->value, cab.conv1.b->value, 1);
  for (int64_t i = 0; i < u.numel(); ++i) u.data()[i] = std::max(0.0, u.data()[i]);
  Tensor u2 = oracle::conv2d_naive(u, cab.conv2.w->value, cab.conv2.b->value, 1);
  double max_err = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i)
    max_err = std::max(max_err,
                       std::abs(y->value.data()[i] - (x.data()[i] + 0.5 * u2.data()[i])));
  CHECK(max_err <= 1e-12);
}

TEST_CASE("spatial fuse: zero-initialized gates average the branches") {
  Rng rng(51);
  nn::SpatialAttentionFuse fuse(3, rng);
  fuse.gate_a.w->value.fill(0.0);
  fuse.gate_a.b->value.fill(0.0);
  fuse.gate_b.w->value.fill(0.0);
  fuse.gate_b.b->value.fill(0.0);
  Tensor a = Tensor::randn({3, 6, 6}, rng);
  Tensor b = Tensor::randn({3, 6, 6}, rng);
  Var y = fuse.forward(leaf(a, false), leaf(b, false));
  for (int64_t i = 0; i < a.numel(); ++i)
    CHECK(y->value.data()[i] == doctest::Approx(0.5 * (a.data()[i] + b.data()[i])).epsilon(1e-12));
}

TEST_CASE("spatial fuse: zero first branch leaves only the gated second branch") {
  Rng rng(52);
  nn::SpatialAttentionFuse fuse(2, rng);
  Tensor b = Tensor::randn({2, 6, 6}, rng);
  Var y = fuse.forward(leaf(Tensor::zeros({2, 6, 6}), false), leaf(b, false));
  // gate on a zero branch scales zeros: contribution is exactly zero
  Var yb = fuse.forward(leaf(Tensor::zeros({2, 6, 6}), false), leaf(Tensor::zeros({2, 6, 6}), false));
  CHECK(yb->value.abs_max() == 0.0);
  // |out| <= |b| elementwise since the gate lies in (0,1)
  for (int64_t i = 0; i < b.numel(); ++i)
    CHECK(std::abs(y->value.data()[i]) <= std::abs(b.data()[i]) + 1e-12);
}

TEST_CASE("spatial fuse: output bounded by |a| + |b| elementwise") {
  Rng rng(53);
  nn::SpatialAttentionFuse fuse(3, rng);
  Tensor a = Tensor::randn({3, 8, 8}, rng);
  Tensor b = Tensor::randn({3, 8, 8}, rng);
  Var y = fuse.forward(leaf(a, false), leaf(b, false));
  for (int64_t i = 0; i < a.numel(); ++i)
    CHECK(std::abs(y->value.data()[i]) <=
          std::abs(a.data()[i]) + std::abs(b.data()[i]) + 1e-12);
  CHECK_THROWS_AS(fuse.forward(leaf(a, false), leaf(Tensor::zeros({3, 4, 4}), false)),
                  ShapeError);
}

TEST_CASE("dynamic filter predictor emits per-pixel normalized kernels") {
  Rng rng(61);
  nn::DynamicFilterPredictor pred(4, 3, rng);
  // non-trivial weights
  for (auto& [name, p] : pred.named_params()) {
    (void)name;
    for (int64_t i = 0; i < p->value.numel(); ++i) p->value.data()[i] = rng.normal(0.0, 0.5);
  }
  Tensor x = Tensor::randn({4, 6, 6}, rng);
  Var k = pred.forward(leaf(x, false));
  REQUIRE(k->value.dim(0) == 9);
  for (int64_t p = 0; p < 36; ++p) {
    double s = 0.0;
    for (int64_t t = 0; t < 9; ++t) s += k->value.data()[t * 36 + p];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("channel attention gradient matches finite differences") {
  Rng rng(71);
  nn::ChannelAttentionBlock cab(2, rng, 2);
  auto result = gradcheck_module("cab", cab, Tensor::randn({2, 6, 6}, rng),
                                 [&](const Var& x) { return cab.forward(x); }, 1e-4, 99);
  CHECK(result.pass);
  CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("deconv4 gradient matches finite differences") {
  Rng rng(72);
  nn::ConvT2d up(2, 3, rng);
  auto result = gradcheck_module("deconv4", up, Tensor::randn({2, 6, 6}, rng),
                                 [&](const Var& x) { return up.forward(x); }, 1e-4, 98);
  CHECK(result.pass);
}

#include "eled/gradcheck.hpp"

#include <cmath>

namespace eled {

using namespace eled::ag;

namespace {

double projected_loss(const Var& out, const Tensor& w) {
  double s = 0.0;
  for (int64_t i = 0; i < out->value.numel(); ++i) s += out->value.data()[i] * w.data()[i];
  return s;
}

void randomize_params(nn::Module& m, Rng& rng, double stddev) {
  for (auto& [name, p] : m.named_params()) {
    (void)name;
    for (int64_t i = 0; i < p->value.numel(); ++i) p->value.data()[i] = rng.normal(0.0, stddev);
  }
}

}  // namespace

GradCheckResult gradcheck_module(const std::string& name, nn::Module& module, Tensor input,
                                 const std::function<Var(const Var&)>& forward,
                                 double tol, uint64_t seed, double eps) {
  Rng rng(seed);
  module.zero_grads();
  Var x = leaf(input, true);
  Var out = forward(x);
  Tensor w = Tensor::randn(out->value.shape(), rng);
  backward(out, &w);

  double max_rel = 0.0;
  auto fd_vs = [&](Tensor& storage, const Tensor& analytic) {
    for (int64_t i = 0; i < storage.numel(); ++i) {
      const double orig = storage.data()[i];
      storage.data()[i] = orig + eps;
      Var op = forward(leaf(input, false));
      const double lp = projected_loss(op, w);
      storage.data()[i] = orig - eps;
      Var om = forward(leaf(input, false));
      const double lm = projected_loss(om, w);
      storage.data()[i] = orig;
      const double fd = (lp - lm) / (2.0 * eps);
      const double an = analytic.defined() ? analytic.data()[i] : 0.0;
      // floor implies an absolute tolerance of tol*1e-4 for near-zero
      // gradients, well above the central-difference roundoff budget
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
      max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
  };

  fd_vs(input, x->grad);
  for (auto& [pname, p] : module.named_params()) {
    (void)pname;
    fd_vs(p->value, p->grad);
  }

  GradCheckResult r;
  r.name = name;
  r.max_rel_err = max_rel;
  r.pass = max_rel < tol;
  return r;
}

namespace {

// thin wrappers so each primitive exposes a Module + forward closure

struct DeformWrap : nn::Module {
  nn::Parameter *off, *msk_raw, *w, *b;
  int groups;
  DeformWrap(int64_t c, int64_t h, int64_t wd, int g, Rng& rng) : groups(g) {
    off = add_param("off", Tensor::randn({2 * g * 9, h, wd}, rng, 0.4));
    // bilinear sampling is kinked on the integer lattice; keep every
    // perturbed position on one smooth piece so central differences hold
    for (int64_t i = 0; i < off->value.numel(); ++i) {
      double& v = off->value.data()[i];
      const double frac = v - std::floor(v);
      const double margin = 5e-3;
      if (frac < margin) v += margin;
      if (frac > 1.0 - margin) v -= margin;
    }
    msk_raw = add_param("msk_raw", Tensor::randn({g * 9, h, wd}, rng, 0.5));
    w = add_param("w", Tensor::randn({c, c, 3, 3}, rng, 0.4));
    b = add_param("b", Tensor::randn({c}, rng, 0.1));
  }
  Var forward(const Var& x) const {
    // sigmoid keeps the modulation in (0,1) as the module boundary demands
    return deform_conv2d(x, off->v(), sigmoid(msk_raw->v()), w->v(), b->v(), groups);
  }
};

struct DynFilterWrap : nn::Module {
  nn::Parameter* klog;
  DynFilterWrap(int64_t h, int64_t w, Rng& rng) {
    klog = add_param("klog", Tensor::randn({9, h, w}, rng, 0.7));
  }
  Var forward(const Var& x) const { return dynamic_filter(x, softmax_dim0(klog->v())); }
};

struct Deconv4Wrap : nn::Module {
  nn::ConvT2d conv;
  Deconv4Wrap(int64_t c, Rng& rng) : conv(c, c, rng) { add_child("conv", &conv); }
  Var forward(const Var& x) const { return conv.forward(x); }
};

struct SpectralWrap : nn::Module {
  nn::SpectralFilter filt;
  nn::SpectralMask mask;
  SpectralWrap(int64_t c, int64_t h, int64_t w, double sigma, Rng& rng)
      : filt(c, rng), mask(nn::gaussian_lowpass_mask(h, w, sigma)) {
    add_child("filt", &filt);
  }
  Var forward(const Var& x) const { return filt.forward(x, mask); }
};

struct FuseWrap : nn::Module {
  nn::SpatialAttentionFuse fuse;
  Tensor other;
  FuseWrap(int64_t c, int64_t h, int64_t w, Rng& rng)
      : fuse(c, rng), other(Tensor::randn({c, h, w}, rng)) {
    add_child("fuse", &fuse);
  }
  Var forward(const Var& x) const { return fuse.forward(x, leaf(other, false)); }
};

struct AttnWrap : nn::Module {
  nn::AttentionBlock block;
  AttnWrap(int64_t c, int heads, Rng& rng) : block(c, heads, 2.0, rng) {
    add_child("block", &block);
  }
  Var forward(const Var& x) const { return block.forward(x); }
};

struct CabWrap : nn::Module {
  nn::ChannelAttentionBlock cab;
  CabWrap(int64_t c, Rng& rng) : cab(c, rng, 2) { add_child("cab", &cab); }
  Var forward(const Var& x) const { return cab.forward(x); }
};

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(int trials, double tol, uint64_t seed) {
  std::vector<GradCheckResult> results;
  Rng master(seed);
  const int64_t h = 6, w = 6;

  for (int trial = 0; trial < trials; ++trial) {
    const uint64_t s = master.next_u64();
    Rng rng(s);

    {
      AttnWrap m(4, 2, rng);
      randomize_params(m, rng, 0.4);
      results.push_back(gradcheck_module(format_msg("transposed_attention/", trial), m,
                                         Tensor::randn({4, h, w}, rng),
                                         [&](const Var& x) { return m.forward(x); }, tol, s));
    }
    {
      DeformWrap m(2, h, w, 1, rng);
      results.push_back(gradcheck_module(format_msg("deformable_conv/", trial), m,
                                         Tensor::randn({2, h, w}, rng),
                                         [&](const Var& x) { return m.forward(x); }, tol, s));
    }
    {
      DynFilterWrap m(h, w, rng);
      results.push_back(gradcheck_module(format_msg("dynamic_filter/", trial), m,
                                         Tensor::randn({2, h, w}, rng),
                                         [&](const Var& x) { return m.forward(x); }, tol, s));
    }
    {
      SpectralWrap m(2, h, w, 1.5 + trial, rng);
      randomize_params(m, rng, 0.4);
      results.push_back(gradcheck_module(format_msg("spectral_filter/", trial), m,
                                         Tensor::randn({2, h, w}, rng),
                                         [&](const Var& x) { return m.forward(x); }, tol, s));
    }
    {
      CabWrap m(2, rng);
      randomize_params(m, rng, 0.4);
      results.push_back(gradcheck_module(format_msg("channel_attention/", trial), m,
                                         Tensor::randn({2, h, w}, rng),
                                         [&](const Var& x) { return m.forward(x); }, tol, s));
    }
    {
      FuseWrap m(2, h, w, rng);
      randomize_params(m, rng, 0.4);
      results.push_back(gradcheck_module(format_msg("spatial_fuse/", trial), m,
                                         Tensor::randn({2, h, w}, rng),
                                         [&](const Var& x) { return m.forward(x); }, tol, s));
    }
    {
      Deconv4Wrap m(2, rng);
      randomize_params(m, rng, 0.4);
      results.push_back(gradcheck_module(format_msg("deconv4/", trial), m,
                                         Tensor::randn({2, h, w}, rng),
                                         [&](const Var& x) { return m.forward(x); }, tol, s));
    }
  }
  return results;
}

}  // namespace eled

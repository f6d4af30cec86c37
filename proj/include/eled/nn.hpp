#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "eled/ops.hpp"
#include "eled/rng.hpp"

namespace eled::nn {

using ag::Var;

/*
 * A learnable tensor. The autograd leaf is created once and shares storage
 * with value/grad, so in-place optimizer updates are visible to subsequent
 * forward passes and backward accumulates straight into grad.
 */
struct Parameter {
  Tensor value;
  Tensor grad;
  bool trainable = true;
  Var var;

  explicit Parameter(Tensor init, bool trainable_ = true)
      : value(std::move(init)), grad(Tensor::zeros(value.shape())), trainable(trainable_) {
    var = ag::leaf(value, trainable);
    var->grad = grad;
  }

  const Var& v() const { return var; }
  void zero_grad() { grad.fill(0.0); }
};

using NamedParams = std::vector<std::pair<std::string, Parameter*>>;

class Module {
public:
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  Module() = default;

  // Hierarchical (name, parameter) listing; order is registration order and
  // therefore stable across constructions with the same config.
  void collect_params(const std::string& prefix, NamedParams& out) const;
  NamedParams named_params() const;
  int64_t param_count() const;
  void zero_grads();

protected:
  Parameter* add_param(const std::string& name, Tensor init, bool trainable = true);
  void add_child(const std::string& name, Module* child);

private:
  std::vector<std::pair<std::string, std::unique_ptr<Parameter>>> params_;
  std::vector<std::pair<std::string, Module*>> children_;
};

// ---- weight initializers ----
Tensor he_conv_init(int64_t cout, int64_t cin_per_group, int k, Rng& rng);
Tensor zeros_init(std::vector<int64_t> shape);

enum class Init { He, Zero };

// ---- layers ----

class Conv2d : public Module {
public:
  Conv2d(int64_t cin, int64_t cout, int k, int stride, int pad, Rng& rng,
         bool bias = true, int groups = 1, Init init = Init::He);
  Var forward(const Var& x) const;

  Parameter* w;
  Parameter* b;  // nullptr when bias is off
  int stride_, pad_, groups_;
};

// Transposed convolution; the default (k=4, stride=2, pad=1) exactly doubles
// the spatial dimensions.
class ConvT2d : public Module {
public:
  ConvT2d(int64_t cin, int64_t cout, Rng& rng, int k = 4, int stride = 2, int pad = 1,
          bool bias = true);
  Var forward(const Var& x) const;

  Parameter* w;
  Parameter* b;
  int stride_, pad_;
};

class ResidualBlock : public Module {
public:
  ResidualBlock(int64_t channels, Rng& rng);
  Var forward(const Var& x) const;

  Conv2d conv1, conv2;
};

// ---- transposed (channel) attention transformer block ----

struct AttnProbe {
  std::vector<Tensor> attention;  // (heads, d, d) per recorded call
};

/*
 * Attention over the channel dimension: per head a d x d matrix, softmax over
 * keys, learned per-head temperature. Channel layer norms keep magnitudes
 * stable through the stack; all convolutions are bias-free so a zero input
 * produces a zero output. Followed by a gated feed-forward; both sub-blocks
 * are residual.
 */
class AttentionBlock : public Module {
public:
  AttentionBlock(int64_t channels, int heads, double ffn_expansion, Rng& rng);
  Var forward(const Var& x, AttnProbe* probe = nullptr) const;

  int64_t channels_;
  int heads_;
  int64_t ffn_hidden_;
  Conv2d qkv_point, qkv_depth, proj;
  Conv2d ffn_in, ffn_depth, ffn_out;
  Parameter* temperature;  // (heads)
  Parameter* ln_attn;      // (C) norm gains
  Parameter* ln_ffn;       // (C)
};

/*
 * Residual conv block gated by pooled channel statistics:
 * x + (conv-relu-conv branch) * sigmoid(mlp(gap(branch))).
 */
class ChannelAttentionBlock : public Module {
public:
  ChannelAttentionBlock(int64_t channels, Rng& rng, int64_t reduction = 4);
  Var forward(const Var& x) const;

  Conv2d conv1, conv2, mlp1, mlp2;
};

// out = a * sigmoid(ConvA(a)) + b * sigmoid(ConvB(b)); two independent
// single-map spatial gates.
class SpatialAttentionFuse : public Module {
public:
  SpatialAttentionFuse(int64_t channels, Rng& rng);
  Var forward(const Var& a, const Var& b) const;

  Conv2d gate_a, gate_b;
};

// ---- spectral filtering ----

struct SpectralMask {
  Tensor mask;  // (H, W), values in (0, 1], DC-centered convention
  double sigma;
  int64_t center_x, center_y;
};

// mask(x, y) = exp(-((x-xc)^2 + (y-yc)^2) / (2 sigma^2)), center at
// (floor(W/2), floor(H/2)) on the shifted spectrum.
SpectralMask gaussian_lowpass_mask(int64_t h, int64_t w, double sigma);

/*
 * DFT -> center DC -> multiply by mask -> pointwise conv block over stacked
 * real/imag channels -> inverse DFT (real part) -> residual add. The conv
 * block is 2C -> 4C -> 2C with a rectifier in between; identity
 * initialization routes the signal through as [I;-I], [I,-I] so the whole
 * filter starts as x + masked(x).
 */
class SpectralFilter : public Module {
public:
  SpectralFilter(int64_t channels, Rng& rng);
  Var forward(const Var& x, const SpectralMask& mask) const;
  // filtered component only, before the residual add (used by energy probes)
  Var filtered_component(const Var& x, const SpectralMask& mask) const;
  void init_identity();

  int64_t channels_;
  Conv2d conv1, conv2;
};

// Predicts per-pixel softmax-normalized k x k kernels from a feature map.
class DynamicFilterPredictor : public Module {
public:
  DynamicFilterPredictor(int64_t channels, int kernel_size, Rng& rng);
  Var forward(const Var& x) const;  // (k*k, H, W), per-pixel sums are 1

  int kernel_size_;
  Conv2d conv1, conv2;
};

}  // namespace eled::nn

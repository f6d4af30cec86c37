#include "eled/nn.hpp"

#include <cmath>

namespace eled::nn {

using namespace eled::ag;

void Module::collect_params(const std::string& prefix, NamedParams& out) const {
  for (const auto& [name, p] : params_) {
    out.emplace_back(prefix.empty() ? name : prefix + "." + name, p.get());
  }
  for (const auto& [name, child] : children_) {
    child->collect_params(prefix.empty() ? name : prefix + "." + name, out);
  }
}

NamedParams Module::named_params() const {
  NamedParams out;
  collect_params("", out);
  return out;
}

int64_t Module::param_count() const {
  int64_t n = 0;
  for (const auto& [name, p] : named_params()) {
    (void)name;
    if (p->trainable) n += p->value.numel();
  }
  return n;
}

void Module::zero_grads() {
  for (auto& [name, p] : named_params()) {
    (void)name;
    p->zero_grad();
  }
}

Parameter* Module::add_param(const std::string& name, Tensor init, bool trainable) {
  params_.emplace_back(name, std::make_unique<Parameter>(std::move(init), trainable));
  return params_.back().second.get();
}

void Module::add_child(const std::string& name, Module* child) {
  children_.emplace_back(name, child);
}

Tensor he_conv_init(int64_t cout, int64_t cin_per_group, int k, Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(cin_per_group * k * k));
  return Tensor::randn({cout, cin_per_group, k, k}, rng, std);
}

Tensor zeros_init(std::vector<int64_t> shape) { return Tensor::zeros(std::move(shape)); }

// ---- Conv2d ----

Conv2d::Conv2d(int64_t cin, int64_t cout, int k, int stride, int pad, Rng& rng,
               bool bias, int groups, Init init)
    : stride_(stride), pad_(pad), groups_(groups) {
  Tensor wt = (init == Init::He) ? he_conv_init(cout, cin / groups, k, rng)
                                 : Tensor::zeros({cout, cin / groups, k, k});
  w = add_param("w", std::move(wt));
  b = bias ? add_param("b", Tensor::zeros({cout})) : nullptr;
}

Var Conv2d::forward(const Var& x) const {
  return conv2d(x, w->v(), b ? b->v() : Var{}, stride_, pad_, groups_);
}

// ---- ConvT2d ----

ConvT2d::ConvT2d(int64_t cin, int64_t cout, Rng& rng, int k, int stride, int pad, bool bias)
    : stride_(stride), pad_(pad) {
  const double std = std::sqrt(2.0 / static_cast<double>(cin * k * k));
  w = add_param("w", Tensor::randn({cin, cout, k, k}, rng, std));
  b = bias ? add_param("b", Tensor::zeros({cout})) : nullptr;
}

Var ConvT2d::forward(const Var& x) const {
  return conv_transpose2d(x, w->v(), b ? b->v() : Var{}, stride_, pad_);
}

// ---- ResidualBlock ----

ResidualBlock::ResidualBlock(int64_t channels, Rng& rng)
    : conv1(channels, channels, 3, 1, 1, rng), conv2(channels, channels, 3, 1, 1, rng) {
  add_child("conv1", &conv1);
  add_child("conv2", &conv2);
}

Var ResidualBlock::forward(const Var& x) const {
  return add(x, conv2.forward(relu(conv1.forward(x))));
}

// ---- AttentionBlock ----

AttentionBlock::AttentionBlock(int64_t channels, int heads, double ffn_expansion, Rng& rng)
    : channels_(channels),
      heads_(heads),
      ffn_hidden_(std::max<int64_t>(1, static_cast<int64_t>(std::llround(
          static_cast<double>(channels) * ffn_expansion)))),
      qkv_point(channels, 3 * channels, 1, 1, 0, rng, /*bias=*/false),
      qkv_depth(3 * channels, 3 * channels, 3, 1, 1, rng, /*bias=*/false,
                static_cast<int>(3 * channels)),
      proj(channels, channels, 1, 1, 0, rng, /*bias=*/false),
      ffn_in(channels, 2 * ffn_hidden_, 1, 1, 0, rng, /*bias=*/false),
      ffn_depth(2 * ffn_hidden_, 2 * ffn_hidden_, 3, 1, 1, rng, /*bias=*/false,
                static_cast<int>(2 * ffn_hidden_)),
      ffn_out(ffn_hidden_, channels, 1, 1, 0, rng, /*bias=*/false) {
  ELED_CHECK(heads >= 1 && channels % heads == 0,
             "attention: channel count ", channels, " not divisible by head count ", heads);
  temperature = add_param("temperature", Tensor::full({heads}, 1.0));
  ln_attn = add_param("ln_attn", Tensor::full({channels}, 1.0));
  ln_ffn = add_param("ln_ffn", Tensor::full({channels}, 1.0));
  add_child("qkv_point", &qkv_point);
  add_child("qkv_depth", &qkv_depth);
  add_child("proj", &proj);
  add_child("ffn_in", &ffn_in);
  add_child("ffn_depth", &ffn_depth);
  add_child("ffn_out", &ffn_out);
}

Var AttentionBlock::forward(const Var& x, AttnProbe* probe) const {
  const int64_t c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  ELED_CHECK_SHAPE(c == channels_, "attention: expected ", channels_, " channels, got ", c);
  const int64_t d = c / heads_;
  const int64_t hw = h * w;

  Var xn = layer_norm_ch(x, ln_attn->v());
  Var qkv = qkv_depth.forward(qkv_point.forward(xn));
  Var q = reshape(slice_ch(qkv, 0, c), {heads_, d, hw});
  Var k = reshape(slice_ch(qkv, c, 2 * c), {heads_, d, hw});
  Var v = reshape(slice_ch(qkv, 2 * c, 3 * c), {heads_, d, hw});

  q = l2_normalize_lastdim(q);
  k = l2_normalize_lastdim(k);
  Var logits = mul_per_group(matmul(q, transpose_last2(k)), temperature->v());
  Var attn = softmax_lastdim(logits);
  if (probe) probe->attention.push_back(attn->value);
  Var out = reshape(matmul(attn, v), {c, h, w});
  Var y = add(x, proj.forward(out));

  Var f = ffn_depth.forward(ffn_in.forward(layer_norm_ch(y, ln_ffn->v())));
  Var fa = slice_ch(f, 0, ffn_hidden_);
  Var fb = slice_ch(f, ffn_hidden_, 2 * ffn_hidden_);
  Var gated = mul(gelu(fa), fb);
  return add(y, ffn_out.forward(gated));
}

// ---- ChannelAttentionBlock ----

ChannelAttentionBlock::ChannelAttentionBlock(int64_t channels, Rng& rng, int64_t reduction)
    : conv1(channels, channels, 3, 1, 1, rng),
      conv2(channels, channels, 3, 1, 1, rng),
      mlp1(channels, std::max<int64_t>(1, channels / reduction), 1, 1, 0, rng),
      mlp2(std::max<int64_t>(1, channels / reduction), channels, 1, 1, 0, rng) {
  add_child("conv1", &conv1);
  add_child("conv2", &conv2);
  add_child("mlp1", &mlp1);
  add_child("mlp2", &mlp2);
}

Var ChannelAttentionBlock::forward(const Var& x) const {
  const int64_t h = x->value.dim(1), w = x->value.dim(2);
  Var u = conv2.forward(relu(conv1.forward(x)));
  Var s = sigmoid(mlp2.forward(relu(mlp1.forward(mean_spatial(u)))));
  return add(x, mul(u, broadcast_spatial(s, h, w)));
}

// ---- SpatialAttentionFuse ----

SpatialAttentionFuse::SpatialAttentionFuse(int64_t channels, Rng& rng)
    : gate_a(channels, 1, 3, 1, 1, rng), gate_b(channels, 1, 3, 1, 1, rng) {
  add_child("gate_a", &gate_a);
  add_child("gate_b", &gate_b);
}

Var SpatialAttentionFuse::forward(const Var& a, const Var& b) const {
  ELED_CHECK_SHAPE(a->value.same_shape(b->value), "spatial fuse: shape mismatch ",
                   shape_str(a->value), " vs ", shape_str(b->value));
  Var ga = sigmoid(gate_a.forward(a));
  Var gb = sigmoid(gate_b.forward(b));
  return add(mul_gate(a, ga), mul_gate(b, gb));
}

// ---- spectral filtering ----

SpectralMask gaussian_lowpass_mask(int64_t h, int64_t w, double sigma) {
  ELED_CHECK(sigma > 0.0, "gaussian_lowpass_mask: sigma must be positive, got ", sigma);
  SpectralMask m;
  m.sigma = sigma;
  m.center_x = w / 2;
  m.center_y = h / 2;
  m.mask = Tensor({h, w});
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const double dy = static_cast<double>(y - m.center_y);
      const double dx = static_cast<double>(x - m.center_x);
      m.mask.data()[y * w + x] = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return m;
}

SpectralFilter::SpectralFilter(int64_t channels, Rng& rng)
    : channels_(channels),
      conv1(2 * channels, 4 * channels, 1, 1, 0, rng),
      conv2(4 * channels, 2 * channels, 1, 1, 0, rng) {
  add_child("conv1", &conv1);
  add_child("conv2", &conv2);
  init_identity();
}

void SpectralFilter::init_identity() {
  // relu(x) - relu(-x) == x: route [I; -I] then recombine with [I, -I]
  const int64_t c2 = 2 * channels_;
  conv1.w->value.fill(0.0);
  conv2.w->value.fill(0.0);
  for (int64_t i = 0; i < c2; ++i) {
    conv1.w->value.data()[(i * c2 + i)] = 1.0;
    conv1.w->value.data()[((c2 + i) * c2 + i)] = -1.0;
    conv2.w->value.data()[(i * 2 * c2 + i)] = 1.0;
    conv2.w->value.data()[(i * 2 * c2 + c2 + i)] = -1.0;
  }
  conv1.b->value.fill(0.0);
  conv2.b->value.fill(0.0);
}

Var SpectralFilter::filtered_component(const Var& x, const SpectralMask& mask) const {
  const int64_t h = x->value.dim(1), w = x->value.dim(2);
  ELED_CHECK_SHAPE(mask.mask.dim(0) == h && mask.mask.dim(1) == w,
                   "spectral filter: mask ", shape_str(mask.mask), " vs input ",
                   shape_str(x->value));
  auto [re, im] = dft2(x);
  re = roll2(re, h / 2, w / 2);
  im = roll2(im, h / 2, w / 2);
  re = mul_mask(re, mask.mask);
  im = mul_mask(im, mask.mask);
  Var z = conv2.forward(relu(conv1.forward(concat_ch({re, im}))));
  Var re2 = roll2(slice_ch(z, 0, channels_), h - h / 2, w - w / 2);
  Var im2 = roll2(slice_ch(z, channels_, 2 * channels_), h - h / 2, w - w / 2);
  return idft2_real(re2, im2);
}

Var SpectralFilter::forward(const Var& x, const SpectralMask& mask) const {
  return add(filtered_component(x, mask), x);
}

// ---- DynamicFilterPredictor ----

DynamicFilterPredictor::DynamicFilterPredictor(int64_t channels, int kernel_size, Rng& rng)
    : kernel_size_(kernel_size),
      conv1(channels, channels, 3, 1, 1, rng),
      conv2(channels, static_cast<int64_t>(kernel_size) * kernel_size, 3, 1, 1, rng,
            /*bias=*/true, /*groups=*/1, Init::Zero) {
  ELED_CHECK(kernel_size % 2 == 1, "dynamic filter size must be odd, got ", kernel_size);
  add_child("conv1", &conv1);
  add_child("conv2", &conv2);
}

Var DynamicFilterPredictor::forward(const Var& x) const {
  return softmax_dim0(conv2.forward(leaky_relu(conv1.forward(x))));
}

}  // namespace eled::nn

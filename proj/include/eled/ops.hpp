#pragma once

#include <utility>

#include "eled/autograd.hpp"

namespace eled::ag {

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_const(const Var& a, double c);
Var neg(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope = 0.1);
Var sigmoid(const Var& a);
Var gelu(const Var& a);
Var square(const Var& a);
// sqrt(a + shift), shift > 0 keeps the gradient finite at a = 0
Var sqrt_shift(const Var& a, double shift);
Var clamp01(const Var& a);

// ---- reductions / broadcasts ----
Var sum_all(const Var& a);                      // -> shape {1}
Var mean_all(const Var& a);                     // -> shape {1}
Var mean_spatial(const Var& a);                 // (C,H,W) -> (C,1,1)
Var broadcast_spatial(const Var& a, int64_t h, int64_t w);  // (C,1,1) -> (C,H,W)
Var mul_scalar_var(const Var& a, const Var& s); // s has shape {1}
Var mul_per_group(const Var& a, const Var& s);  // a: (G,M,N), s: (G) — per-slice scale
Var mul_gate(const Var& x, const Var& gate);    // x: (C,H,W), gate: (1,H,W) broadcast

// ---- structure ----
Var reshape(const Var& a, std::vector<int64_t> shape);
Var concat_ch(const std::vector<Var>& xs);      // along dim 0 of (C,H,W)
Var slice_ch(const Var& a, int64_t from, int64_t to);
Var transpose_last2(const Var& a);              // (G,M,N) -> (G,N,M)
// circular roll of the two trailing spatial dims; used for DC centering
Var roll2(const Var& a, int64_t dy, int64_t dx);

// ---- softmax / normalization ----
Var softmax_lastdim(const Var& a);              // (G,M,N), softmax over N
Var softmax_dim0(const Var& a);                 // (K,H,W), softmax over K per pixel
Var l2_normalize_lastdim(const Var& a, double eps = 1e-12);
// Per-pixel normalization over channels with learned per-channel gain; no
// shift term, so zero inputs stay zero.
Var layer_norm_ch(const Var& x, const Var& gamma, double eps = 1e-6);

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);         // (G,M,K) x (G,K,N) -> (G,M,N)

// ---- convolutions ----
// x: (Cin,H,W), w: (Cout, Cin/groups, k, k), b: (Cout) or empty Var
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad, int groups = 1);
// x: (Cin,H,W), w: (Cin, Cout, k, k) -> ((H-1)*stride - 2*pad + k)
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

// Deformable convolution, stride 1, same padding (pad = k/2), k odd.
// offsets: (2*G*k*k, H, W) ordered (group, tap, {dy,dx}); masks: (G*k*k, H, W)
// in [0,1]; w: (Cout, Cin, k, k). Out-of-bounds bilinear samples read as 0.
Var deform_conv2d(const Var& x, const Var& offsets, const Var& masks,
                  const Var& w, const Var& b, int groups);

// Per-pixel dynamic filtering: kernels (k*k, H, W), softmax-normalized per
// pixel (validated), shared across channels, zero padding.
Var dynamic_filter(const Var& x, const Var& kernels);

// ---- spectral ----
// Per-channel 2-D DFT of a real tensor -> (re, im), both (C,H,W).
std::pair<Var, Var> dft2(const Var& x);
// Real part of the per-channel inverse DFT of (re, im).
Var idft2_real(const Var& re, const Var& im);
// Multiply every channel by a fixed (H,W) mask (no gradient into the mask).
Var mul_mask(const Var& x, const Tensor& mask);

// ---- resampling ----
// Bilinear resize, half-pixel centers, zero extension outside the input.
Var bilinear_resize(const Var& x, int64_t out_h, int64_t out_w);

}  // namespace eled::ag

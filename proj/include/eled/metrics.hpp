#pragma once

#include "eled/tensor.hpp"

namespace eled::metrics {

// PSNR in dB against peak 1.0; capped at 100 dB when MSE < 1e-10. Inputs
// must share shapes and lie in [0,1].
double psnr(const Tensor& a, const Tensor& b);

// Mean SSIM over channels: 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, valid-region averaging.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace eled::metrics

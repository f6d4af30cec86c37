#pragma once

#include <array>

#include "eled/network.hpp"

namespace eled {

// Sum over scales of lambda_s * Charbonnier(S_s, downsample(target, s)) with
// Charbonnier(a, b) = mean(sqrt((a-b)^2 + eps^2)); target at full resolution.
ag::Var multiscale_loss(const MultiScaleOutput& outputs, const Tensor& target,
                        const std::array<double, 3>& lambda, double eps = 1e-3);

}  // namespace eled

#pragma once

#include "eled/autograd.hpp"

namespace eled::ag {

// Elementwise accumulate g into the parent's grad buffer (no-op when the
// parent does not require gradients).
void acc_grad(const Var& p, const Tensor& g);

}  // namespace eled::ag

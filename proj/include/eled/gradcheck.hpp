#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eled/nn.hpp"

namespace eled {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

/*
 * Central-difference validation of a module's analytic gradients: the loss
 * is a fixed random projection of the forward output; every element of the
 * input and of every parameter is perturbed by +-eps. Relative error uses
 * max(|fd|, |analytic|, floor) as the denominator. The step size and the
 * denominator floor balance difference-quotient roundoff against the
 * rectifier kinks of the checked modules.
 */
GradCheckResult gradcheck_module(const std::string& name, nn::Module& module,
                                 Tensor input,
                                 const std::function<ag::Var(const ag::Var&)>& forward,
                                 double tol = 1e-4, uint64_t seed = 1, double eps = 1e-5);

// The full learned-primitive suite: transposed attention, deformable conv,
// dynamic filter, spectral filter, channel attention, spatial-attention
// fuse, 4x4 deconvolution. `trials` random small inputs per primitive.
std::vector<GradCheckResult> run_gradient_suite(int trials = 5, double tol = 1e-4,
                                                uint64_t seed = 123);

}  // namespace eled

#include "eled/loss.hpp"

namespace eled {

using namespace eled::ag;

Var multiscale_loss(const MultiScaleOutput& outputs, const Tensor& target,
                    const std::array<double, 3>& lambda, double eps) {
  ELED_CHECK(lambda[0] > 0.0 && lambda[1] > 0.0 && lambda[2] > 0.0,
             "multiscale_loss: loss weights must be positive");
  const Var& s0 = outputs.frames[0];
  ELED_CHECK_SHAPE(target.same_shape(s0->value), "multiscale_loss: target ",
                   shape_str(target), " vs full-scale output ", shape_str(s0->value));
  Var tgt = leaf(target, false);
  Var total;
  for (int s = 0; s < 3; ++s) {
    const size_t si = static_cast<size_t>(s);
    const Var& out = outputs.frames[si];
    Var t_s = (s == 0) ? tgt : bilinear_resize(tgt, out->value.dim(1), out->value.dim(2));
    Var charb = mean_all(sqrt_shift(square(sub(out, t_s)), eps * eps));
    Var term = scale(charb, lambda[si]);
    total = total ? add(total, term) : term;
  }
  return total;
}

}  // namespace eled

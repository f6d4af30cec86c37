#pragma once

#include <vector>

#include "eled/nn.hpp"

namespace eled::optim {

// Adam with bias correction; the parameter list order fixes the state layout.
class Adam {
public:
  explicit Adam(nn::NamedParams params, double lr = 2e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();

  // Scales all gradients so their global L2 norm is at most max_norm;
  // returns the pre-clip norm.
  double clip_global_norm(double max_norm);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  int64_t t() const { return t_; }

  const nn::NamedParams& params() const { return params_; }
  std::vector<Tensor>& moment1() { return m_; }
  std::vector<Tensor>& moment2() { return v_; }
  void set_t(int64_t t) { t_ = t; }

private:
  nn::NamedParams params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace eled::optim

#include "eled/optim.hpp"

#include <cmath>

namespace eled::optim {

Adam::Adam(nn::NamedParams params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto& [name, p] : params_) {
    (void)name;
    m_.push_back(Tensor::zeros(p->value.shape()));
    v_.push_back(Tensor::zeros(p->value.shape()));
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) {
    (void)name;
    p->zero_grad();
  }
}

double Adam::clip_global_norm(double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params_) {
    (void)name;
    if (!p->trainable) continue;
    const double* g = p->grad.data();
    for (int64_t i = 0; i < p->grad.numel(); ++i) sq += g[i] * g[i];
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, p] : params_) {
      (void)name;
      if (!p->trainable) continue;
      double* g = p->grad.data();
      for (int64_t i = 0; i < p->grad.numel(); ++i) g[i] *= scale;
    }
  }
  return norm;
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    nn::Parameter* p = params_[i].second;
    if (!p->trainable) continue;
    double* w = p->value.data();
    const double* g = p->grad.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    const int64_t n = p->value.numel();
    for (int64_t j = 0; j < n; ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace eled::optim

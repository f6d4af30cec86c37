#include "eled/metrics.hpp"

#include <cmath>
#include <vector>

#include "eled/common.hpp"

namespace eled::metrics {

namespace {

void check_pair(const Tensor& a, const Tensor& b, const char* what) {
  ELED_CHECK_SHAPE(a.same_shape(b), what, ": shape mismatch ", shape_str(a), " vs ",
                   shape_str(b));
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double va = a.data()[i], vb = b.data()[i];
    ELED_CHECK(va >= -1e-9 && va <= 1.0 + 1e-9 && vb >= -1e-9 && vb <= 1.0 + 1e-9,
               what, ": values must lie in [0,1]");
  }
}

constexpr int kWin = 11;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWin * kWin);
  const double sigma = 1.5;
  double sum = 0.0;
  for (int y = 0; y < kWin; ++y) {
    for (int x = 0; x < kWin; ++x) {
      const double dy = y - kWin / 2, dx = x - kWin / 2;
      w[static_cast<size_t>(y * kWin + x)] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      sum += w[static_cast<size_t>(y * kWin + x)];
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  check_pair(a, b, "psnr");
  double mse = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  if (mse < 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  check_pair(a, b, "ssim");
  ELED_CHECK_SHAPE(a.ndim() == 3, "ssim expects (C,H,W)");
  const int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  ELED_CHECK(h >= kWin && w >= kWin, "ssim: image ", h, "x", w, " smaller than the ",
             kWin, "x", kWin, " window");
  static const std::vector<double> win = gaussian_window();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  double total = 0.0;
  int64_t count = 0;
  for (int64_t ch = 0; ch < c; ++ch) {
    const double* pa = a.data() + ch * h * w;
    const double* pb = b.data() + ch * h * w;
    for (int64_t y = 0; y + kWin <= h; ++y) {
      for (int64_t x = 0; x + kWin <= w; ++x) {
        double mu1 = 0, mu2 = 0, s11 = 0, s22 = 0, s12 = 0;
        for (int wy = 0; wy < kWin; ++wy) {
          for (int wx = 0; wx < kWin; ++wx) {
            const double g = win[static_cast<size_t>(wy * kWin + wx)];
            const double va = pa[(y + wy) * w + x + wx];
            const double vb = pb[(y + wy) * w + x + wx];
            mu1 += g * va;
            mu2 += g * vb;
            s11 += g * va * va;
            s22 += g * vb * vb;
            s12 += g * va * vb;
          }
        }
        const double var1 = s11 - mu1 * mu1;
        const double var2 = s22 - mu2 * mu2;
        const double cov = s12 - mu1 * mu2;
        const double num = (2 * mu1 * mu2 + c1) * (2 * cov + c2);
        const double den = (mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2);
        total += num / den;
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace eled::metrics

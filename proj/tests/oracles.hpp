// Independent reference implementations used to validate the library.
// Everything here is deliberately naive and kept separate from the code
// paths under test.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "eled/tensor.hpp"

namespace oracle {

using eled::Tensor;

// Direct O(N^2) 2-D DFT of one (H,W) plane.
inline std::vector<std::complex<double>> dft2_naive(const double* x, int64_t h, int64_t w) {
  std::vector<std::complex<double>> out(static_cast<size_t>(h * w));
  for (int64_t u = 0; u < h; ++u) {
    for (int64_t v = 0; v < w; ++v) {
      std::complex<double> acc(0.0, 0.0);
      for (int64_t y = 0; y < h; ++y) {
        for (int64_t xx = 0; xx < w; ++xx) {
          const double ang = -2.0 * M_PI * (static_cast<double>(u * y) / h +
                                            static_cast<double>(v * xx) / w);
          acc += x[y * w + xx] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      }
      out[static_cast<size_t>(u * w + v)] = acc;
    }
  }
  return out;
}

inline std::vector<double> idft2_real_naive(const std::vector<std::complex<double>>& z,
                                            int64_t h, int64_t w) {
  std::vector<double> out(static_cast<size_t>(h * w));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t xx = 0; xx < w; ++xx) {
      std::complex<double> acc(0.0, 0.0);
      for (int64_t u = 0; u < h; ++u) {
        for (int64_t v = 0; v < w; ++v) {
          const double ang = 2.0 * M_PI * (static_cast<double>(u * y) / h +
                                           static_cast<double>(v * xx) / w);
          acc += z[static_cast<size_t>(u * w + v)] *
                 std::complex<double>(std::cos(ang), std::sin(ang));
        }
      }
      out[static_cast<size_t>(y * w + xx)] = acc.real() / static_cast<double>(h * w);
    }
  }
  return out;
}

// Plain dense convolution, stride 1, zero padding.
inline Tensor conv2d_naive(const Tensor& x, const Tensor& w, const Tensor& b, int pad) {
  const int64_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int64_t cout = w.dim(0);
  const int k = static_cast<int>(w.dim(2));
  Tensor y({cout, h, wd});
  for (int64_t o = 0; o < cout; ++o) {
    for (int64_t yy = 0; yy < h; ++yy) {
      for (int64_t xx = 0; xx < wd; ++xx) {
        double s = b.numel() > 0 ? b.data()[o] : 0.0;
        for (int64_t c = 0; c < cin; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int64_t iy = yy - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int64_t ix = xx - pad + kx;
              if (ix < 0 || ix >= wd) continue;
              s += w.data()[((o * cin + c) * k + ky) * k + kx] * x.data()[(c * h + iy) * wd + ix];
            }
          }
        }
        y.data()[(o * h + yy) * wd + xx] = s;
      }
    }
  }
  return y;
}

// 3x3 box filter with zero padding, per channel.
inline Tensor box3_naive(const Tensor& x) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, h, w});
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int64_t yy = 0; yy < h; ++yy) {
      for (int64_t xx = 0; xx < w; ++xx) {
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int64_t iy = yy + dy, ix = xx + dx;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            s += x.data()[(ci * h + iy) * w + ix];
          }
        }
        y.data()[(ci * h + yy) * w + xx] = s / 9.0;
      }
    }
  }
  return y;
}

// Bilinear x2 upsample with half-pixel centers and zero extension, matching
// the geometry of a stride-2 pad-1 4x4 transposed convolution.
inline Tensor bilinear_up2_naive(const Tensor& x) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, 2 * h, 2 * w});
  auto at = [&](int64_t ci, int64_t iy, int64_t ix) {
    if (iy < 0 || iy >= h || ix < 0 || ix >= w) return 0.0;
    return x.data()[(ci * h + iy) * w + ix];
  };
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int64_t oy = 0; oy < 2 * h; ++oy) {
      const double py = (oy + 0.5) / 2.0 - 0.5;
      const int64_t y0 = static_cast<int64_t>(std::floor(py));
      const double fy = py - y0;
      for (int64_t ox = 0; ox < 2 * w; ++ox) {
        const double px = (ox + 0.5) / 2.0 - 0.5;
        const int64_t x0 = static_cast<int64_t>(std::floor(px));
        const double fx = px - x0;
        y.data()[(ci * 2 * h + oy) * 2 * w + ox] =
            (1 - fy) * ((1 - fx) * at(ci, y0, x0) + fx * at(ci, y0, x0 + 1)) +
            fy * ((1 - fx) * at(ci, y0 + 1, x0) + fx * at(ci, y0 + 1, x0 + 1));
      }
    }
  }
  return y;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace oracle

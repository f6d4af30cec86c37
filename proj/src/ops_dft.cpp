#include <Eigen/Core>
#include <complex>
#include <map>
#include <mutex>

#include "eled/ops.hpp"
#include "ops_internal.hpp"

namespace eled::ag {

namespace {

using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// W_N(j,k) = exp(-2*pi*i*j*k/N); symmetric, W W* = N I
const CMat& dft_matrix(int64_t n) {
  static std::map<int64_t, CMat> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  CMat m(n, n);
  for (int64_t j = 0; j < n; ++j) {
    for (int64_t k = 0; k < n; ++k) {
      const double ang = -2.0 * M_PI * static_cast<double>(j * k) / static_cast<double>(n);
      m(j, k) = std::complex<double>(std::cos(ang), std::sin(ang));
    }
  }
  auto [pos, inserted] = cache.emplace(n, std::move(m));
  (void)inserted;
  return pos->second;
}

CMat to_complex(const double* re, const double* im, int64_t h, int64_t w) {
  CMat m(h, w);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      m(y, x) = std::complex<double>(re ? re[y * w + x] : 0.0, im ? im[y * w + x] : 0.0);
  return m;
}

void split_complex(const CMat& m, double* re, double* im) {
  const int64_t h = m.rows(), w = m.cols();
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      if (re) re[y * w + x] = m(y, x).real();
      if (im) im[y * w + x] = m(y, x).imag();
    }
}

}  // namespace

std::pair<Var, Var> dft2(const Var& x) {
  ELED_CHECK_SHAPE(x->value.ndim() == 3, "dft2 expects (C,H,W)");
  const int64_t c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  const CMat& wh = dft_matrix(h);
  const CMat& ww = dft_matrix(w);

  Tensor re = Tensor::uninit({c, h, w}), im = Tensor::uninit({c, h, w});
  for (int64_t ci = 0; ci < c; ++ci) {
    CMat xm = to_complex(x->value.data() + ci * h * w, nullptr, h, w);
    CMat y = wh * xm * ww;
    split_complex(y, re.data() + ci * h * w, im.data() + ci * h * w);
  }

  // One shared node carries both outputs so backward runs once with both
  // gradient halves available.
  Tensor packed = Tensor::uninit({2, c, h, w});
  std::copy(re.data(), re.data() + c * h * w, packed.data());
  std::copy(im.data(), im.data() + c * h * w, packed.data() + c * h * w);
  Var node = make_node(std::move(packed), {x}, [c, h, w](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const CMat& wh = dft_matrix(h);
    const CMat& ww = dft_matrix(w);
    const CMat whc = wh.conjugate();
    const CMat wwc = ww.conjugate();
    Tensor dx = Tensor::uninit({c, h, w});
    const int64_t plane = h * w;
    for (int64_t ci = 0; ci < c; ++ci) {
      CMat g = to_complex(n.grad.data() + ci * plane,
                          n.grad.data() + (c + ci) * plane, h, w);
      CMat t = whc * g * wwc;  // Re(W* G W*) is the input gradient
      for (int64_t y = 0; y < h; ++y)
        for (int64_t xx = 0; xx < w; ++xx)
          dx.data()[ci * plane + y * w + xx] = t(y, xx).real();
    }
    acc_grad(n.parents[0], dx);
  });

  Var re_var = slice_ch(reshape(node, {2 * c, h, w}), 0, c);
  Var im_var = slice_ch(reshape(node, {2 * c, h, w}), c, 2 * c);
  return {re_var, im_var};
}

Var idft2_real(const Var& re, const Var& im) {
  ELED_CHECK_SHAPE(re->value.same_shape(im->value), "idft2_real: re/im shape mismatch");
  const int64_t c = re->value.dim(0), h = re->value.dim(1), w = re->value.dim(2);
  const CMat& wh = dft_matrix(h);
  const CMat& ww = dft_matrix(w);
  const CMat whc = wh.conjugate();
  const CMat wwc = ww.conjugate();
  const double norm = 1.0 / static_cast<double>(h * w);

  Tensor out = Tensor::uninit({c, h, w});
  const int64_t plane = h * w;
  for (int64_t ci = 0; ci < c; ++ci) {
    CMat z = to_complex(re->value.data() + ci * plane, im->value.data() + ci * plane, h, w);
    CMat t = whc * z * wwc;
    for (int64_t y = 0; y < h; ++y)
      for (int64_t xx = 0; xx < w; ++xx)
        out.data()[ci * plane + y * w + xx] = norm * t(y, xx).real();
  }

  return make_node(std::move(out), {re, im}, [c, h, w, norm](Node& n) {
    const CMat& wh = dft_matrix(h);
    const CMat& ww = dft_matrix(w);
    const CMat whc = wh.conjugate();
    const CMat wwc = ww.conjugate();
    const int64_t plane = h * w;
    const bool need_re = n.parents[0]->requires_grad;
    const bool need_im = n.parents[1]->requires_grad;
    if (!(need_re || need_im)) return;
    Tensor dre = Tensor::uninit({c, h, w}), dim = Tensor::uninit({c, h, w});
    for (int64_t ci = 0; ci < c; ++ci) {
      CMat g = to_complex(n.grad.data() + ci * plane, nullptr, h, w);
      // x = norm * Re(W* Z W*); both factor matrices are symmetric, so the
      // adjoint reuses them: dZ_re = Re(T), dZ_im = -Im(T), T = norm * W* g W*
      CMat t = whc * g * wwc;
      for (int64_t y = 0; y < h; ++y)
        for (int64_t xx = 0; xx < w; ++xx) {
          dre.data()[ci * plane + y * w + xx] = norm * t(y, xx).real();
          dim.data()[ci * plane + y * w + xx] = -norm * t(y, xx).imag();
        }
    }
    if (need_re) acc_grad(n.parents[0], dre);
    if (need_im) acc_grad(n.parents[1], dim);
  });
}

Var mul_mask(const Var& x, const Tensor& mask) {
  ELED_CHECK_SHAPE(x->value.ndim() == 3 && mask.ndim() == 2 &&
                   x->value.dim(1) == mask.dim(0) && x->value.dim(2) == mask.dim(1),
                   "mul_mask: mask ", shape_str(mask), " vs input ", shape_str(x->value));
  const int64_t c = x->value.dim(0), hw = mask.numel();
  Tensor out = Tensor::uninit(x->value.shape());
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* src = x->value.data() + ci * hw;
    double* dst = out.data() + ci * hw;
    for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] * mask.data()[i];
  }
  Tensor vm = mask;
  return make_node(std::move(out), {x}, [vm, c, hw](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor dx = Tensor::uninit(n.grad.shape());
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* g = n.grad.data() + ci * hw;
      double* d = dx.data() + ci * hw;
      for (int64_t i = 0; i < hw; ++i) d[i] = g[i] * vm.data()[i];
    }
    acc_grad(n.parents[0], dx);
  });
}

}  // namespace eled::ag

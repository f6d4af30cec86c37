#include <Eigen/Core>

#include "eled/ops.hpp"
#include "ops_internal.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace eled::ag {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

/*
 * Gather/scatter between a dense (C,H,W) tensor and its column form
 * (C*k*k, Qh*Qw), where Q indexes the strided side of the convolution:
 *   dense(c, qy*stride - pad + ky, qx*stride - pad + kx)  <->  col[(c,ky,kx)][q]
 * Out-of-range taps read as zero on gather and are dropped on scatter.
 */
struct ColGeom {
  int64_t c, h, w;    // dense side
  int64_t qh, qw;     // strided side
  int k, stride, pad;
};

void im2col(const double* dense, const ColGeom& g, double* col) {
  const int64_t q_count = g.qh * g.qw;
  const int64_t kk = static_cast<int64_t>(g.k) * g.k;
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < g.c; ++c) {
    const double* src = dense + c * g.h * g.w;
    for (int64_t t = 0; t < kk; ++t) {
      const int ky = static_cast<int>(t) / g.k;
      const int kx = static_cast<int>(t) % g.k;
      double* dst = col + (c * kk + t) * q_count;
      for (int64_t qy = 0; qy < g.qh; ++qy) {
        const int64_t y = qy * g.stride - g.pad + ky;
        if (y < 0 || y >= g.h) {
          std::fill(dst + qy * g.qw, dst + (qy + 1) * g.qw, 0.0);
          continue;
        }
        for (int64_t qx = 0; qx < g.qw; ++qx) {
          const int64_t x = qx * g.stride - g.pad + kx;
          dst[qy * g.qw + qx] = (x >= 0 && x < g.w) ? src[y * g.w + x] : 0.0;
        }
      }
    }
  }
}

void col2im(const double* col, const ColGeom& g, double* dense) {
  const int64_t q_count = g.qh * g.qw;
  const int64_t kk = static_cast<int64_t>(g.k) * g.k;
  // parallel over dense channels: each channel's writes are disjoint
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < g.c; ++c) {
    double* dst = dense + c * g.h * g.w;
    for (int64_t t = 0; t < kk; ++t) {
      const int ky = static_cast<int>(t) / g.k;
      const int kx = static_cast<int>(t) % g.k;
      const double* src = col + (c * kk + t) * q_count;
      for (int64_t qy = 0; qy < g.qh; ++qy) {
        const int64_t y = qy * g.stride - g.pad + ky;
        if (y < 0 || y >= g.h) continue;
        for (int64_t qx = 0; qx < g.qw; ++qx) {
          const int64_t x = qx * g.stride - g.pad + kx;
          if (x >= 0 && x < g.w) dst[y * g.w + x] += src[qy * g.qw + qx];
        }
      }
    }
  }
}

void add_bias(double* out, const double* b, int64_t c, int64_t hw) {
  for (int64_t ci = 0; ci < c; ++ci) {
    const double bv = b[ci];
    double* p = out + ci * hw;
    for (int64_t i = 0; i < hw; ++i) p[i] += bv;
  }
}

Tensor bias_grad(const Tensor& gy) {
  const int64_t c = gy.dim(0), hw = gy.dim(1) * gy.dim(2);
  Tensor db({c});
  for (int64_t ci = 0; ci < c; ++ci) {
    double s = 0.0;
    const double* p = gy.data() + ci * hw;
    for (int64_t i = 0; i < hw; ++i) s += p[i];
    db.data()[ci] = s;
  }
  return db;
}

void depthwise_backward(const Tensor& x, const Tensor& w, const Tensor& gy,
                        Tensor* dx, Tensor* dw, int stride, int pad) {
  const int64_t c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int k = static_cast<int>(w.dim(2));
  const int64_t ho = gy.dim(1), wo = gy.dim(2);
#pragma omp parallel for schedule(static)
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* src = x.data() + ci * h * wd;
    const double* ker = w.data() + ci * k * k;
    const double* g = gy.data() + ci * ho * wo;
    double* dsrc = dx ? dx->data() + ci * h * wd : nullptr;
    double* dker = dw ? dw->data() + ci * k * k : nullptr;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox) {
        const double gv = g[oy * wo + ox];
        if (gv == 0.0) continue;
        for (int ky = 0; ky < k; ++ky) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int64_t ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= wd) continue;
            if (dsrc) dsrc[iy * wd + ix] += ker[ky * k + kx] * gv;
            if (dker) dker[ky * k + kx] += src[iy * wd + ix] * gv;
          }
        }
      }
    }
  }
}

// Depthwise path: one k x k kernel per channel, stride 1 assumed by callers.
void depthwise_forward(const Tensor& x, const Tensor& w, Tensor& y, int stride, int pad) {
  const int64_t c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int k = static_cast<int>(w.dim(2));
  const int64_t ho = y.dim(1), wo = y.dim(2);
#pragma omp parallel for schedule(static)
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* src = x.data() + ci * h * wd;
    const double* ker = w.data() + ci * k * k;
    double* dst = y.data() + ci * ho * wo;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox) {
        double s = 0.0;
        for (int ky = 0; ky < k; ++ky) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int64_t ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= wd) continue;
            s += ker[ky * k + kx] * src[iy * wd + ix];
          }
        }
        dst[oy * wo + ox] = s;
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad, int groups) {
  ELED_CHECK_SHAPE(x->value.ndim() == 3 && w->value.ndim() == 4, "conv2d: bad ranks");
  const int64_t cin = x->value.dim(0), h = x->value.dim(1), wd = x->value.dim(2);
  const int64_t cout = w->value.dim(0), cpg = w->value.dim(1);
  const int k = static_cast<int>(w->value.dim(2));
  ELED_CHECK_SHAPE(w->value.dim(2) == w->value.dim(3), "conv2d: square kernels only");
  ELED_CHECK(groups >= 1 && cin % groups == 0 && cout % groups == 0,
             "conv2d: groups ", groups, " must divide channels ", cin, "/", cout);
  ELED_CHECK_SHAPE(cpg == cin / groups, "conv2d: weight shape ", shape_str(w->value),
                   " inconsistent with input ", shape_str(x->value), " and groups ", groups);
  const bool has_bias = b && b->value.defined() && b->value.numel() > 0;
  if (has_bias) ELED_CHECK_SHAPE(b->value.numel() == cout, "conv2d: bias size");

  const int64_t ho = (h + 2 * pad - k) / stride + 1;
  const int64_t wo = (wd + 2 * pad - k) / stride + 1;
  ELED_CHECK_SHAPE(ho >= 1 && wo >= 1, "conv2d: output would be empty");

  Tensor y = Tensor::uninit({cout, ho, wo});
  const int64_t q = ho * wo;
  const bool depthwise = (groups == cin && cout == cin && cpg == 1);
  const bool pointwise = (k == 1 && stride == 1 && pad == 0 && groups == 1);

  if (depthwise) {
    depthwise_forward(x->value, w->value, y, stride, pad);
  } else if (pointwise) {
    // the column matrix of a 1x1 conv is the input itself
    CMapMat wm(w->value.data(), cout, cin);
    CMapMat xm(x->value.data(), cin, q);
    MapMat ym(y.data(), cout, q);
    ym.noalias() = wm * xm;
  } else {
    const int64_t cin_g = cin / groups, cout_g = cout / groups;
    Tensor col = Tensor::uninit({cin_g * k * k, q});
    for (int g = 0; g < groups; ++g) {
      ColGeom geom{cin_g, h, wd, ho, wo, k, stride, pad};
      im2col(x->value.data() + g * cin_g * h * wd, geom, col.data());
      CMapMat wm(w->value.data() + g * cout_g * cin_g * k * k, cout_g, cin_g * k * k);
      CMapMat cm(col.data(), cin_g * k * k, q);
      MapMat ym(y.data() + g * cout_g * q, cout_g, q);
      ym.noalias() = wm * cm;
    }
  }
  if (has_bias) add_bias(y.data(), b->value.data(), cout, q);

  Tensor vx = x->value, vw = w->value;
  std::vector<Var> parents = {x, w};
  if (has_bias) parents.push_back(b);
  return make_node(std::move(y), std::move(parents),
                   [vx, vw, stride, pad, groups, has_bias](Node& node) {
    const int64_t cin = vx.dim(0), h = vx.dim(1), wd = vx.dim(2);
    const int64_t cout = vw.dim(0);
    const int k = static_cast<int>(vw.dim(2));
    const int64_t ho = node.grad.dim(1), wo = node.grad.dim(2);
    const int64_t q = ho * wo;
    const int64_t cin_g = cin / groups, cout_g = cout / groups;
    const Var& px = node.parents[0];
    const Var& pw = node.parents[1];

    Tensor dx, dw;
    if (px->requires_grad) dx = Tensor::zeros(vx.shape());
    if (pw->requires_grad) dw = Tensor::zeros(vw.shape());

    const bool depthwise = (groups == cin && cout == cin && vw.dim(1) == 1);
    if (depthwise) {
      depthwise_backward(vx, vw, node.grad, px->requires_grad ? &dx : nullptr,
                         pw->requires_grad ? &dw : nullptr, stride, pad);
      if (px->requires_grad) acc_grad(px, dx);
      if (pw->requires_grad) acc_grad(pw, dw);
      if (has_bias) acc_grad(node.parents[2], bias_grad(node.grad));
      return;
    }
    if (k == 1 && stride == 1 && pad == 0 && groups == 1) {
      CMapMat gym(node.grad.data(), cout, q);
      if (px->requires_grad) {
        CMapMat wm(vw.data(), cout, cin);
        MapMat dxm(dx.data(), cin, q);
        dxm.noalias() = wm.transpose() * gym;
        acc_grad(px, dx);
      }
      if (pw->requires_grad) {
        CMapMat xm(vx.data(), cin, q);
        MapMat dwm(dw.data(), cout, cin);
        dwm.noalias() = gym * xm.transpose();
        acc_grad(pw, dw);
      }
      if (has_bias) acc_grad(node.parents[2], bias_grad(node.grad));
      return;
    }

    Tensor col = Tensor::uninit({cin_g * k * k, q});
    Tensor dcol = Tensor::uninit({cin_g * k * k, q});
    for (int g = 0; g < groups; ++g) {
      ColGeom geom{cin_g, h, wd, ho, wo, k, stride, pad};
      CMapMat wm(vw.data() + g * cout_g * cin_g * k * k, cout_g, cin_g * k * k);
      CMapMat gym(node.grad.data() + g * cout_g * q, cout_g, q);
      if (pw->requires_grad) {
        im2col(vx.data() + g * cin_g * h * wd, geom, col.data());
        CMapMat cm(col.data(), cin_g * k * k, q);
        MapMat dwm(dw.data() + g * cout_g * cin_g * k * k, cout_g, cin_g * k * k);
        dwm.noalias() = gym * cm.transpose();
      }
      if (px->requires_grad) {
        MapMat dcm(dcol.data(), cin_g * k * k, q);
        dcm.noalias() = wm.transpose() * gym;
        col2im(dcol.data(), geom, dx.data() + g * cin_g * h * wd);
      }
    }
    if (px->requires_grad) acc_grad(px, dx);
    if (pw->requires_grad) acc_grad(pw, dw);
    if (has_bias) acc_grad(node.parents[2], bias_grad(node.grad));
  });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  ELED_CHECK_SHAPE(x->value.ndim() == 3 && w->value.ndim() == 4, "conv_transpose2d: bad ranks");
  const int64_t cin = x->value.dim(0), h = x->value.dim(1), wd = x->value.dim(2);
  ELED_CHECK_SHAPE(w->value.dim(0) == cin, "conv_transpose2d: weight (Cin,Cout,k,k) expected, got ",
                   shape_str(w->value), " for input ", shape_str(x->value));
  const int64_t cout = w->value.dim(1);
  const int k = static_cast<int>(w->value.dim(2));
  const bool has_bias = b && b->value.defined() && b->value.numel() > 0;
  if (has_bias) ELED_CHECK_SHAPE(b->value.numel() == cout, "conv_transpose2d: bias size");

  const int64_t ho = (h - 1) * stride - 2 * pad + k;
  const int64_t wo = (wd - 1) * stride - 2 * pad + k;
  ELED_CHECK_SHAPE(ho >= 1 && wo >= 1, "conv_transpose2d: output would be empty");

  // y = col2im(W^T x), with x on the strided side of the geometry
  const int64_t q = h * wd;
  Tensor col = Tensor::uninit({cout * k * k, q});
  {
    CMapMat wm(w->value.data(), cin, cout * k * k);
    CMapMat xm(x->value.data(), cin, q);
    MapMat cm(col.data(), cout * k * k, q);
    cm.noalias() = wm.transpose() * xm;
  }
  Tensor y({cout, ho, wo});
  ColGeom geom{cout, ho, wo, h, wd, k, stride, pad};
  col2im(col.data(), geom, y.data());
  if (has_bias) add_bias(y.data(), b->value.data(), cout, ho * wo);

  Tensor vx = x->value, vw = w->value;
  std::vector<Var> parents = {x, w};
  if (has_bias) parents.push_back(b);
  return make_node(std::move(y), std::move(parents),
                   [vx, vw, stride, pad, has_bias](Node& node) {
    const int64_t cin = vx.dim(0), h = vx.dim(1), wd = vx.dim(2);
    const int64_t cout = vw.dim(1);
    const int k = static_cast<int>(vw.dim(2));
    const int64_t ho = node.grad.dim(1), wo = node.grad.dim(2);
    const int64_t q = h * wd;
    const Var& px = node.parents[0];
    const Var& pw = node.parents[1];

    ColGeom geom{cout, ho, wo, h, wd, k, stride, pad};
    Tensor col_dy = Tensor::uninit({cout * k * k, q});
    im2col(node.grad.data(), geom, col_dy.data());
    CMapMat cdy(col_dy.data(), cout * k * k, q);

    if (px->requires_grad) {
      Tensor dx = Tensor::uninit({cin, h, wd});
      CMapMat wm(vw.data(), cin, cout * k * k);
      MapMat dxm(dx.data(), cin, q);
      dxm.noalias() = wm * cdy;
      acc_grad(px, dx);
    }
    if (pw->requires_grad) {
      Tensor dw = Tensor::uninit(vw.shape());
      CMapMat xm(vx.data(), cin, q);
      MapMat dwm(dw.data(), cin, cout * k * k);
      dwm.noalias() = xm * cdy.transpose();
      acc_grad(pw, dw);
    }
    if (has_bias) acc_grad(node.parents[2], bias_grad(node.grad));
  });
}

}  // namespace eled::ag

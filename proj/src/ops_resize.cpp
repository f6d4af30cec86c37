#include <Eigen/Core>
#include <cmath>

#include "eled/ops.hpp"
#include "ops_internal.hpp"

namespace eled::ag {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

struct Axis {
  std::vector<int64_t> i0;
  std::vector<double> w1;  // weight of i0+1
};

// half-pixel-center mapping, zero extension outside [0, n)
Axis make_axis(int64_t n_in, int64_t n_out) {
  Axis a;
  a.i0.resize(static_cast<size_t>(n_out));
  a.w1.resize(static_cast<size_t>(n_out));
  const double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
  for (int64_t o = 0; o < n_out; ++o) {
    const double pos = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const double f = std::floor(pos);
    a.i0[static_cast<size_t>(o)] = static_cast<int64_t>(f);
    a.w1[static_cast<size_t>(o)] = pos - f;
  }
  return a;
}

}  // namespace

Var bilinear_resize(const Var& x, int64_t out_h, int64_t out_w) {
  ELED_CHECK_SHAPE(x->value.ndim() == 3, "bilinear_resize expects (C,H,W)");
  ELED_CHECK(out_h >= 1 && out_w >= 1, "bilinear_resize: bad target size");
  const int64_t c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  const Axis ay = make_axis(h, out_h);
  const Axis ax = make_axis(w, out_w);

  Tensor y = Tensor::uninit({c, out_h, out_w});
#pragma omp parallel for schedule(static)
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* src = x->value.data() + ci * h * w;
    double* dst = y.data() + ci * out_h * out_w;
    for (int64_t oy = 0; oy < out_h; ++oy) {
      const int64_t y0 = ay.i0[static_cast<size_t>(oy)];
      const double wy = ay.w1[static_cast<size_t>(oy)];
      for (int64_t ox = 0; ox < out_w; ++ox) {
        const int64_t x0 = ax.i0[static_cast<size_t>(ox)];
        const double wx = ax.w1[static_cast<size_t>(ox)];
        double s = 0.0;
        const bool y0v = y0 >= 0 && y0 < h, y1v = y0 + 1 >= 0 && y0 + 1 < h;
        const bool x0v = x0 >= 0 && x0 < w, x1v = x0 + 1 >= 0 && x0 + 1 < w;
        if (y0v && x0v) s += (1 - wy) * (1 - wx) * src[y0 * w + x0];
        if (y0v && x1v) s += (1 - wy) * wx * src[y0 * w + x0 + 1];
        if (y1v && x0v) s += wy * (1 - wx) * src[(y0 + 1) * w + x0];
        if (y1v && x1v) s += wy * wx * src[(y0 + 1) * w + x0 + 1];
        dst[oy * out_w + ox] = s;
      }
    }
  }

  return make_node(std::move(y), {x}, [c, h, w, out_h, out_w](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const Axis ay = make_axis(h, out_h);
    const Axis ax = make_axis(w, out_w);
    Tensor dx = Tensor::zeros({c, h, w});
#pragma omp parallel for schedule(static)
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* g = n.grad.data() + ci * out_h * out_w;
      double* d = dx.data() + ci * h * w;
      for (int64_t oy = 0; oy < out_h; ++oy) {
        const int64_t y0 = ay.i0[static_cast<size_t>(oy)];
        const double wy = ay.w1[static_cast<size_t>(oy)];
        for (int64_t ox = 0; ox < out_w; ++ox) {
          const int64_t x0 = ax.i0[static_cast<size_t>(ox)];
          const double wx = ax.w1[static_cast<size_t>(ox)];
          const double gv = g[oy * out_w + ox];
          const bool y0v = y0 >= 0 && y0 < h, y1v = y0 + 1 >= 0 && y0 + 1 < h;
          const bool x0v = x0 >= 0 && x0 < w, x1v = x0 + 1 >= 0 && x0 + 1 < w;
          if (y0v && x0v) d[y0 * w + x0] += (1 - wy) * (1 - wx) * gv;
          if (y0v && x1v) d[y0 * w + x0 + 1] += (1 - wy) * wx * gv;
          if (y1v && x0v) d[(y0 + 1) * w + x0] += wy * (1 - wx) * gv;
          if (y1v && x1v) d[(y0 + 1) * w + x0 + 1] += wy * wx * gv;
        }
      }
    }
    acc_grad(n.parents[0], dx);
  });
}

Var matmul(const Var& a, const Var& b) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3 && b->value.ndim() == 3 &&
                   a->value.dim(0) == b->value.dim(0) && a->value.dim(2) == b->value.dim(1),
                   "matmul: ", shape_str(a->value), " x ", shape_str(b->value));
  const int64_t g = a->value.dim(0), m = a->value.dim(1), k = a->value.dim(2), n = b->value.dim(2);
  Tensor out = Tensor::uninit({g, m, n});
  for (int64_t gi = 0; gi < g; ++gi) {
    CMapMat am(a->value.data() + gi * m * k, m, k);
    CMapMat bm(b->value.data() + gi * k * n, k, n);
    MapMat om(out.data() + gi * m * n, m, n);
    om.noalias() = am * bm;
  }
  Tensor va = a->value, vb = b->value;
  return make_node(std::move(out), {a, b}, [va, vb, g, m, k, n](Node& node) {
    if (node.parents[0]->requires_grad) {
      Tensor da = Tensor::uninit({g, m, k});
      for (int64_t gi = 0; gi < g; ++gi) {
        CMapMat gm(node.grad.data() + gi * m * n, m, n);
        CMapMat bm(vb.data() + gi * k * n, k, n);
        MapMat dm(da.data() + gi * m * k, m, k);
        dm.noalias() = gm * bm.transpose();
      }
      acc_grad(node.parents[0], da);
    }
    if (node.parents[1]->requires_grad) {
      Tensor db = Tensor::uninit({g, k, n});
      for (int64_t gi = 0; gi < g; ++gi) {
        CMapMat am(va.data() + gi * m * k, m, k);
        CMapMat gm(node.grad.data() + gi * m * n, m, n);
        MapMat dm(db.data() + gi * k * n, k, n);
        dm.noalias() = am.transpose() * gm;
      }
      acc_grad(node.parents[1], db);
    }
  });
}

}  // namespace eled::ag

#include <Eigen/Core>
#include <cmath>

#include "eled/ops.hpp"
#include "ops_internal.hpp"

namespace eled::ag {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

struct BilinearTaps {
  int64_t y0, x0, y1, x1;
  double w00, w01, w10, w11;  // (y0,x0), (y0,x1), (y1,x0), (y1,x1)
  bool v00, v01, v10, v11;
};

BilinearTaps bilinear_taps(double py, double px, int64_t h, int64_t w) {
  BilinearTaps t;
  const double fy = std::floor(py), fx = std::floor(px);
  t.y0 = static_cast<int64_t>(fy);
  t.x0 = static_cast<int64_t>(fx);
  t.y1 = t.y0 + 1;
  t.x1 = t.x0 + 1;
  const double wy = py - fy, wx = px - fx;
  t.w00 = (1.0 - wy) * (1.0 - wx);
  t.w01 = (1.0 - wy) * wx;
  t.w10 = wy * (1.0 - wx);
  t.w11 = wy * wx;
  t.v00 = t.y0 >= 0 && t.y0 < h && t.x0 >= 0 && t.x0 < w;
  t.v01 = t.y0 >= 0 && t.y0 < h && t.x1 >= 0 && t.x1 < w;
  t.v10 = t.y1 >= 0 && t.y1 < h && t.x0 >= 0 && t.x0 < w;
  t.v11 = t.y1 >= 0 && t.y1 < h && t.x1 >= 0 && t.x1 < w;
  return t;
}

double bilinear_sample(const double* plane, const BilinearTaps& t, int64_t w) {
  double s = 0.0;
  if (t.v00) s += t.w00 * plane[t.y0 * w + t.x0];
  if (t.v01) s += t.w01 * plane[t.y0 * w + t.x1];
  if (t.v10) s += t.w10 * plane[t.y1 * w + t.x0];
  if (t.v11) s += t.w11 * plane[t.y1 * w + t.x1];
  return s;
}

// d(sample)/d(py), d(sample)/d(px) with missing corners read as 0
void bilinear_pos_grad(const double* plane, const BilinearTaps& t, int64_t w,
                       double py, double px, double* dpy, double* dpx) {
  const double fy = std::floor(py), fx = std::floor(px);
  const double wy = py - fy, wx = px - fx;
  const double p00 = t.v00 ? plane[t.y0 * w + t.x0] : 0.0;
  const double p01 = t.v01 ? plane[t.y0 * w + t.x1] : 0.0;
  const double p10 = t.v10 ? plane[t.y1 * w + t.x0] : 0.0;
  const double p11 = t.v11 ? plane[t.y1 * w + t.x1] : 0.0;
  *dpy = (1.0 - wx) * (p10 - p00) + wx * (p11 - p01);
  *dpx = (1.0 - wy) * (p01 - p00) + wy * (p11 - p10);
}

// Deformed, mask-modulated column matrix: D[(c,tap)][q] = m(g(c),tap,q) * sample
void build_deformed_col(const Tensor& x, const Tensor& off, const Tensor& msk,
                        int k, int groups, Tensor& col) {
  const int64_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int64_t hw = h * w;
  const int64_t kk = static_cast<int64_t>(k) * k;
  const int64_t cpg = cin / groups;
  const int pad = k / 2;
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < cin; ++c) {
    const int64_t g = c / cpg;
    const double* plane = x.data() + c * hw;
    for (int64_t t = 0; t < kk; ++t) {
      const int ky = static_cast<int>(t) / k, kx = static_cast<int>(t) % k;
      const double* oy = off.data() + ((g * kk + t) * 2 + 0) * hw;
      const double* ox = off.data() + ((g * kk + t) * 2 + 1) * hw;
      const double* mm = msk.data() + (g * kk + t) * hw;
      double* dst = col.data() + (c * kk + t) * hw;
      for (int64_t p = 0; p < hw; ++p) {
        const int64_t py0 = p / w, px0 = p % w;
        const double py = static_cast<double>(py0 - pad + ky) + oy[p];
        const double px = static_cast<double>(px0 - pad + kx) + ox[p];
        const BilinearTaps bt = bilinear_taps(py, px, h, w);
        dst[p] = mm[p] * bilinear_sample(plane, bt, w);
      }
    }
  }
}

}  // namespace

Var deform_conv2d(const Var& x, const Var& offsets, const Var& masks,
                  const Var& w, const Var& b, int groups) {
  const int64_t cin = x->value.dim(0), h = x->value.dim(1), wd = x->value.dim(2);
  const int64_t cout = w->value.dim(0);
  const int k = static_cast<int>(w->value.dim(2));
  ELED_CHECK(k % 2 == 1, "deform_conv2d: kernel size must be odd, got ", k);
  ELED_CHECK(groups >= 1 && cin % groups == 0,
             "deform_conv2d: offset groups ", groups, " must divide input channels ", cin);
  const int64_t kk = static_cast<int64_t>(k) * k;
  ELED_CHECK_SHAPE(w->value.dim(1) == cin, "deform_conv2d: dense weights expected (Cout,Cin,k,k)");
  ELED_CHECK_SHAPE(offsets->value.dim(0) == 2 * groups * kk &&
                   offsets->value.dim(1) == h && offsets->value.dim(2) == wd,
                   "deform_conv2d: offsets shape ", shape_str(offsets->value));
  ELED_CHECK_SHAPE(masks->value.dim(0) == groups * kk &&
                   masks->value.dim(1) == h && masks->value.dim(2) == wd,
                   "deform_conv2d: masks shape ", shape_str(masks->value));
  for (int64_t i = 0; i < masks->value.numel(); ++i) {
    const double m = masks->value.data()[i];
    ELED_CHECK(m >= 0.0 && m <= 1.0, "deform_conv2d: modulation mask value ", m,
               " outside [0,1]");
  }
  const bool has_bias = b && b->value.defined() && b->value.numel() > 0;

  const int64_t hw = h * wd;
  Tensor col = Tensor::uninit({cin * kk, hw});
  build_deformed_col(x->value, offsets->value, masks->value, k, groups, col);
  Tensor y = Tensor::uninit({cout, h, wd});
  {
    CMapMat wm(w->value.data(), cout, cin * kk);
    CMapMat cm(col.data(), cin * kk, hw);
    MapMat ym(y.data(), cout, hw);
    ym.noalias() = wm * cm;
  }
  if (has_bias) {
    for (int64_t o = 0; o < cout; ++o) {
      const double bv = b->value.data()[o];
      double* p = y.data() + o * hw;
      for (int64_t i = 0; i < hw; ++i) p[i] += bv;
    }
  }

  Tensor vx = x->value, voff = offsets->value, vmsk = masks->value, vw = w->value;
  std::vector<Var> parents = {x, offsets, masks, w};
  if (has_bias) parents.push_back(b);
  return make_node(std::move(y), std::move(parents),
                   [vx, voff, vmsk, vw, k, groups, has_bias](Node& node) {
    const int64_t cin = vx.dim(0), h = vx.dim(1), wd = vx.dim(2);
    const int64_t cout = vw.dim(0);
    const int64_t kk = static_cast<int64_t>(k) * k;
    const int64_t hw = h * wd;
    const int64_t cpg = cin / groups;
    const int pad = k / 2;

    const Var& px = node.parents[0];
    const Var& poff = node.parents[1];
    const Var& pmsk = node.parents[2];
    const Var& pw = node.parents[3];

    // dcol = W^T * gy ;  dW = gy * col^T (col rebuilt)
    Tensor dcol = Tensor::uninit({cin * kk, hw});
    {
      CMapMat wm(vw.data(), cout, cin * kk);
      CMapMat gym(node.grad.data(), cout, hw);
      MapMat dcm(dcol.data(), cin * kk, hw);
      dcm.noalias() = wm.transpose() * gym;
    }
    if (pw->requires_grad || has_bias) {
      Tensor col = Tensor::uninit({cin * kk, hw});
      build_deformed_col(vx, voff, vmsk, k, groups, col);
      if (pw->requires_grad) {
        Tensor dw = Tensor::uninit(vw.shape());
        CMapMat gym(node.grad.data(), cout, hw);
        CMapMat cm(col.data(), cin * kk, hw);
        MapMat dwm(dw.data(), cout, cin * kk);
        dwm.noalias() = gym * cm.transpose();
        acc_grad(pw, dw);
      }
      if (has_bias && node.parents[4]->requires_grad) {
        Tensor db({cout});
        for (int64_t o = 0; o < cout; ++o) {
          double s = 0.0;
          const double* p = node.grad.data() + o * hw;
          for (int64_t i = 0; i < hw; ++i) s += p[i];
          db.data()[o] = s;
        }
        acc_grad(node.parents[4], db);
      }
    }

    const bool need_x = px->requires_grad;
    const bool need_off = poff->requires_grad;
    const bool need_msk = pmsk->requires_grad;
    if (!(need_x || need_off || need_msk)) return;

    Tensor dx = Tensor::zeros(vx.shape());
    Tensor doff = Tensor::zeros(voff.shape());
    Tensor dmsk = Tensor::zeros(vmsk.shape());

    // channels within one offset group share offset planes, so the parallel
    // split is over groups (disjoint writes)
#pragma omp parallel for schedule(static)
    for (int64_t g = 0; g < groups; ++g) {
    for (int64_t c = g * cpg; c < (g + 1) * cpg; ++c) {
      const double* plane = vx.data() + c * hw;
      double* dplane = dx.data() + c * hw;
      for (int64_t t = 0; t < kk; ++t) {
        const int ky = static_cast<int>(t) / k, kx = static_cast<int>(t) % k;
        const double* oy = voff.data() + ((g * kk + t) * 2 + 0) * hw;
        const double* ox = voff.data() + ((g * kk + t) * 2 + 1) * hw;
        const double* mm = vmsk.data() + (g * kk + t) * hw;
        double* d_oy = doff.data() + ((g * kk + t) * 2 + 0) * hw;
        double* d_ox = doff.data() + ((g * kk + t) * 2 + 1) * hw;
        double* d_mm = dmsk.data() + (g * kk + t) * hw;
        const double* gcol = dcol.data() + (c * kk + t) * hw;
        for (int64_t p = 0; p < hw; ++p) {
          const double gd = gcol[p];
          if (gd == 0.0) continue;
          const int64_t py0 = p / wd, px0 = p % wd;
          const double py = static_cast<double>(py0 - pad + ky) + oy[p];
          const double pxx = static_cast<double>(px0 - pad + kx) + ox[p];
          const BilinearTaps bt = bilinear_taps(py, pxx, h, wd);
          if (need_msk) d_mm[p] += gd * bilinear_sample(plane, bt, wd);
          const double gm = gd * mm[p];
          if (need_x) {
            if (bt.v00) dplane[bt.y0 * wd + bt.x0] += gm * bt.w00;
            if (bt.v01) dplane[bt.y0 * wd + bt.x1] += gm * bt.w01;
            if (bt.v10) dplane[bt.y1 * wd + bt.x0] += gm * bt.w10;
            if (bt.v11) dplane[bt.y1 * wd + bt.x1] += gm * bt.w11;
          }
          if (need_off) {
            double dpy, dpx;
            bilinear_pos_grad(plane, bt, wd, py, pxx, &dpy, &dpx);
            d_oy[p] += gm * dpy;
            d_ox[p] += gm * dpx;
          }
        }
      }
    }
    }
    if (need_x) acc_grad(px, dx);
    if (need_off) acc_grad(poff, doff);
    if (need_msk) acc_grad(pmsk, dmsk);
  });
}

Var dynamic_filter(const Var& x, const Var& kernels) {
  const int64_t c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  const int64_t kk = kernels->value.dim(0);
  const int k = static_cast<int>(std::llround(std::sqrt(static_cast<double>(kk))));
  ELED_CHECK(static_cast<int64_t>(k) * k == kk && k % 2 == 1,
             "dynamic_filter: kernel channel count ", kk, " is not an odd square");
  ELED_CHECK_SHAPE(kernels->value.dim(1) == h && kernels->value.dim(2) == w,
                   "dynamic_filter: kernel spatial dims mismatch");
  const int64_t hw = h * w;
  for (int64_t p = 0; p < hw; ++p) {
    double s = 0.0;
    for (int64_t t = 0; t < kk; ++t) s += kernels->value.data()[t * hw + p];
    ELED_CHECK(std::abs(s - 1.0) <= 1e-5,
               "dynamic_filter: per-pixel kernel sum ", s, " deviates from 1");
  }
  const int pad = k / 2;

  Tensor y = Tensor::uninit({c, h, w});
  const double* kv = kernels->value.data();
#pragma omp parallel for schedule(static)
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* src = x->value.data() + ci * hw;
    double* dst = y.data() + ci * hw;
    for (int64_t yy = 0; yy < h; ++yy) {
      for (int64_t xx = 0; xx < w; ++xx) {
        double s = 0.0;
        for (int ky = 0; ky < k; ++ky) {
          const int64_t iy = yy - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int64_t ix = xx - pad + kx;
            if (ix < 0 || ix >= w) continue;
            s += kv[(ky * k + kx) * hw + yy * w + xx] * src[iy * w + ix];
          }
        }
        dst[yy * w + xx] = s;
      }
    }
  }

  Tensor vx = x->value, vk = kernels->value;
  return make_node(std::move(y), {x, kernels}, [vx, vk, k](Node& node) {
    const int64_t c = vx.dim(0), h = vx.dim(1), w = vx.dim(2);
    const int64_t hw = h * w;
    const int pad = k / 2;
    const Var& px = node.parents[0];
    const Var& pk = node.parents[1];

    if (px->requires_grad) {
      Tensor dx = Tensor::zeros(vx.shape());
#pragma omp parallel for schedule(static)
      for (int64_t ci = 0; ci < c; ++ci) {
        const double* g = node.grad.data() + ci * hw;
        double* d = dx.data() + ci * hw;
        for (int64_t yy = 0; yy < h; ++yy) {
          for (int64_t xx = 0; xx < w; ++xx) {
            const double gv = g[yy * w + xx];
            if (gv == 0.0) continue;
            for (int ky = 0; ky < k; ++ky) {
              const int64_t iy = yy - pad + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int64_t ix = xx - pad + kx;
                if (ix < 0 || ix >= w) continue;
                d[iy * w + ix] += vk.data()[(ky * k + kx) * hw + yy * w + xx] * gv;
              }
            }
          }
        }
      }
      acc_grad(px, dx);
    }
    if (pk->requires_grad) {
      Tensor dk = Tensor::zeros(vk.shape());
#pragma omp parallel for schedule(static)
      for (int64_t t = 0; t < static_cast<int64_t>(k) * k; ++t) {
        const int ky = static_cast<int>(t) / k, kx = static_cast<int>(t) % k;
        double* d = dk.data() + t * hw;
        for (int64_t yy = 0; yy < h; ++yy) {
          const int64_t iy = yy - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int64_t xx = 0; xx < w; ++xx) {
            const int64_t ix = xx - pad + kx;
            if (ix < 0 || ix >= w) continue;
            double s = 0.0;
            for (int64_t ci = 0; ci < c; ++ci)
              s += vx.data()[ci * hw + iy * w + ix] * node.grad.data()[ci * hw + yy * w + xx];
            d[yy * w + xx] = s;
          }
        }
      }
      acc_grad(pk, dk);
    }
  });
}

}  // namespace eled::ag

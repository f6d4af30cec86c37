#include <cmath>

#include "eled/ops.hpp"
#include "ops_internal.hpp"

namespace eled::ag {

void acc_grad(const Var& p, const Tensor& g) {
  if (!p->requires_grad) return;
  Tensor& dst = p->ensure_grad();
  ELED_CHECK_SHAPE(dst.numel() == g.numel(), "grad accumulation size mismatch");
  double* d = dst.data();
  const double* s = g.data();
  const int64_t n = g.numel();
  for (int64_t i = 0; i < n; ++i) d[i] += s[i];
}

namespace {

Var binary_ew(const Var& a, const Var& b, double (*fwd)(double, double),
              void (*bwd)(double, double, double, double&, double&), const char* name) {
  ELED_CHECK_SHAPE(a->value.same_shape(b->value), name, ": shape mismatch ",
                   shape_str(a->value), " vs ", shape_str(b->value));
  Tensor out = Tensor::uninit(a->shape());
  const int64_t n = out.numel();
  const double* pa = a->value.data();
  const double* pb = b->value.data();
  double* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i], pb[i]);
  Tensor va = a->value, vb = b->value;
  return make_node(std::move(out), {a, b}, [va, vb, bwd](Node& node) {
    const int64_t m = node.grad.numel();
    Tensor ga = Tensor::uninit(va.shape()), gb = Tensor::uninit(vb.shape());
    const double* g = node.grad.data();
    const double* xa = va.data();
    const double* xb = vb.data();
    double* da = ga.data();
    double* db = gb.data();
    for (int64_t i = 0; i < m; ++i) bwd(xa[i], xb[i], g[i], da[i], db[i]);
    acc_grad(node.parents[0], ga);
    acc_grad(node.parents[1], gb);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_ew(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = g;
      },
      "add");
}

Var sub(const Var& a, const Var& b) {
  return binary_ew(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = -g;
      },
      "sub");
}

Var mul(const Var& a, const Var& b) {
  return binary_ew(
      a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& da, double& db) {
        da = g * y;
        db = g * x;
      },
      "mul");
}

namespace {

Var unary_ew(const Var& a, double (*fwd)(double), double (*dfdx)(double, double)) {
  Tensor out = Tensor::uninit(a->shape());
  const int64_t n = out.numel();
  const double* pa = a->value.data();
  double* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i]);
  Tensor va = a->value, vo = out;
  return make_node(std::move(out), {a}, [va, vo, dfdx](Node& node) {
    Tensor ga = Tensor::uninit(va.shape());
    const double* g = node.grad.data();
    const double* x = va.data();
    const double* y = vo.data();
    double* d = ga.data();
    const int64_t m = va.numel();
    for (int64_t i = 0; i < m; ++i) d[i] = g[i] * dfdx(x[i], y[i]);
    acc_grad(node.parents[0], ga);
  });
}

}  // namespace

Var scale(const Var& a, double s) {
  Tensor out = Tensor::uninit(a->shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a->value.data()[i] * s;
  return make_node(std::move(out), {a}, [s](Node& node) {
    Tensor ga = Tensor::uninit(node.grad.shape());
    const int64_t m = ga.numel();
    for (int64_t i = 0; i < m; ++i) ga.data()[i] = node.grad.data()[i] * s;
    acc_grad(node.parents[0], ga);
  });
}

Var add_const(const Var& a, double c) {
  Tensor out = Tensor::uninit(a->shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a->value.data()[i] + c;
  return make_node(std::move(out), {a},
                   [](Node& node) { acc_grad(node.parents[0], node.grad); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var relu(const Var& a) {
  return unary_ew(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  Tensor out = Tensor::uninit(a->shape());
  const int64_t n = out.numel();
  const double* pa = a->value.data();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = pa[i] > 0.0 ? pa[i] : slope * pa[i];
  Tensor va = a->value;
  return make_node(std::move(out), {a}, [va, slope](Node& node) {
    Tensor ga = Tensor::uninit(va.shape());
    const int64_t m = va.numel();
    for (int64_t i = 0; i < m; ++i)
      ga.data()[i] = node.grad.data()[i] * (va.data()[i] > 0.0 ? 1.0 : slope);
    acc_grad(node.parents[0], ga);
  });
}

Var sigmoid(const Var& a) {
  return unary_ew(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var gelu(const Var& a) {
  return unary_ew(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        return cdf + x * pdf;
      });
}

Var square(const Var& a) {
  return unary_ew(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt_shift(const Var& a, double shift) {
  ELED_CHECK(shift > 0.0, "sqrt_shift: shift must be positive");
  Tensor out = Tensor::uninit(a->shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = std::sqrt(a->value.data()[i] + shift);
  Tensor vo = out;
  return make_node(std::move(out), {a}, [vo](Node& node) {
    Tensor ga = Tensor::uninit(vo.shape());
    const int64_t m = vo.numel();
    for (int64_t i = 0; i < m; ++i)
      ga.data()[i] = node.grad.data()[i] * 0.5 / vo.data()[i];
    acc_grad(node.parents[0], ga);
  });
}

Var clamp01(const Var& a) {
  Tensor out = Tensor::uninit(a->shape());
  const int64_t n = out.numel();
  const double* pa = a->value.data();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = std::min(1.0, std::max(0.0, pa[i]));
  // straight-through gradient: a hard-zero outside [0,1] freezes training as
  // soon as the residual overshoots the clamp
  return make_node(std::move(out), {a},
                   [](Node& node) { acc_grad(node.parents[0], node.grad); });
}

Var sum_all(const Var& a) {
  Tensor out({1});
  out.data()[0] = a->value.sum();
  Tensor va = a->value;
  return make_node(std::move(out), {a}, [va](Node& node) {
    Tensor ga = Tensor::full(va.shape(), node.grad.data()[0]);
    acc_grad(node.parents[0], ga);
  });
}

Var mean_all(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a->value.numel());
  return scale(sum_all(a), inv);
}

Var mean_spatial(const Var& a) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "mean_spatial expects (C,H,W)");
  const int64_t c = a->value.dim(0), h = a->value.dim(1), w = a->value.dim(2);
  const int64_t hw = h * w;
  Tensor out({c, 1, 1});
  for (int64_t ci = 0; ci < c; ++ci) {
    double s = 0.0;
    const double* p = a->value.data() + ci * hw;
    for (int64_t i = 0; i < hw; ++i) s += p[i];
    out.data()[ci] = s / static_cast<double>(hw);
  }
  return make_node(std::move(out), {a}, [c, h, w, hw](Node& node) {
    Tensor ga({c, h, w});
    for (int64_t ci = 0; ci < c; ++ci) {
      const double g = node.grad.data()[ci] / static_cast<double>(hw);
      double* p = ga.data() + ci * hw;
      for (int64_t i = 0; i < hw; ++i) p[i] = g;
    }
    acc_grad(node.parents[0], ga);
  });
}

Var broadcast_spatial(const Var& a, int64_t h, int64_t w) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3 && a->value.dim(1) == 1 && a->value.dim(2) == 1,
                   "broadcast_spatial expects (C,1,1)");
  const int64_t c = a->value.dim(0);
  Tensor out({c, h, w});
  for (int64_t ci = 0; ci < c; ++ci) {
    const double v = a->value.data()[ci];
    double* p = out.data() + ci * h * w;
    for (int64_t i = 0; i < h * w; ++i) p[i] = v;
  }
  return make_node(std::move(out), {a}, [c, h, w](Node& node) {
    Tensor ga({c, 1, 1});
    for (int64_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      const double* p = node.grad.data() + ci * h * w;
      for (int64_t i = 0; i < h * w; ++i) s += p[i];
      ga.data()[ci] = s;
    }
    acc_grad(node.parents[0], ga);
  });
}

Var mul_scalar_var(const Var& a, const Var& s) {
  ELED_CHECK_SHAPE(s->value.numel() == 1, "mul_scalar_var: scalar var expected");
  const double sv = s->value.data()[0];
  Tensor out(a->shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a->value.data()[i] * sv;
  Tensor va = a->value;
  return make_node(std::move(out), {a, s}, [va, sv](Node& node) {
    const int64_t m = va.numel();
    if (node.parents[0]->requires_grad) {
      Tensor ga(va.shape());
      for (int64_t i = 0; i < m; ++i) ga.data()[i] = node.grad.data()[i] * sv;
      acc_grad(node.parents[0], ga);
    }
    if (node.parents[1]->requires_grad) {
      double s_acc = 0.0;
      for (int64_t i = 0; i < m; ++i) s_acc += node.grad.data()[i] * va.data()[i];
      Tensor gs({1});
      gs.data()[0] = s_acc;
      acc_grad(node.parents[1], gs);
    }
  });
}

Var mul_per_group(const Var& a, const Var& s) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "mul_per_group expects (G,M,N)");
  const int64_t g = a->value.dim(0), mn = a->value.dim(1) * a->value.dim(2);
  ELED_CHECK_SHAPE(s->value.numel() == g, "mul_per_group: scale count ", s->value.numel(),
                   " vs groups ", g);
  Tensor out = Tensor::uninit(a->shape());
  for (int64_t gi = 0; gi < g; ++gi) {
    const double sv = s->value.data()[gi];
    const double* src = a->value.data() + gi * mn;
    double* dst = out.data() + gi * mn;
    for (int64_t i = 0; i < mn; ++i) dst[i] = src[i] * sv;
  }
  Tensor va = a->value, vs = s->value;
  return make_node(std::move(out), {a, s}, [va, vs, g, mn](Node& node) {
    if (node.parents[0]->requires_grad) {
      Tensor ga = Tensor::uninit(va.shape());
      for (int64_t gi = 0; gi < g; ++gi) {
        const double sv = vs.data()[gi];
        const double* gr = node.grad.data() + gi * mn;
        double* d = ga.data() + gi * mn;
        for (int64_t i = 0; i < mn; ++i) d[i] = gr[i] * sv;
      }
      acc_grad(node.parents[0], ga);
    }
    if (node.parents[1]->requires_grad) {
      Tensor gs(vs.shape());
      for (int64_t gi = 0; gi < g; ++gi) {
        double acc = 0.0;
        const double* gr = node.grad.data() + gi * mn;
        const double* xa = va.data() + gi * mn;
        for (int64_t i = 0; i < mn; ++i) acc += gr[i] * xa[i];
        gs.data()[gi] = acc;
      }
      acc_grad(node.parents[1], gs);
    }
  });
}

Var mul_gate(const Var& x, const Var& gate) {
  ELED_CHECK_SHAPE(x->value.ndim() == 3 && gate->value.ndim() == 3 && gate->value.dim(0) == 1 &&
                   gate->value.dim(1) == x->value.dim(1) && gate->value.dim(2) == x->value.dim(2),
                   "mul_gate: gate ", shape_str(gate->value), " vs input ", shape_str(x->value));
  const int64_t c = x->value.dim(0), hw = x->value.dim(1) * x->value.dim(2);
  Tensor out = Tensor::uninit(x->shape());
  const double* gp = gate->value.data();
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* src = x->value.data() + ci * hw;
    double* dst = out.data() + ci * hw;
    for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] * gp[i];
  }
  Tensor vx = x->value, vg = gate->value;
  return make_node(std::move(out), {x, gate}, [vx, vg, c, hw](Node& node) {
    if (node.parents[0]->requires_grad) {
      Tensor dx = Tensor::uninit(vx.shape());
      for (int64_t ci = 0; ci < c; ++ci) {
        const double* gr = node.grad.data() + ci * hw;
        double* d = dx.data() + ci * hw;
        for (int64_t i = 0; i < hw; ++i) d[i] = gr[i] * vg.data()[i];
      }
      acc_grad(node.parents[0], dx);
    }
    if (node.parents[1]->requires_grad) {
      Tensor dg = Tensor::uninit({1, vx.dim(1), vx.dim(2)});
      for (int64_t i = 0; i < hw; ++i) {
        double s = 0.0;
        for (int64_t ci = 0; ci < c; ++ci)
          s += node.grad.data()[ci * hw + i] * vx.data()[ci * hw + i];
        dg.data()[i] = s;
      }
      acc_grad(node.parents[1], dg);
    }
  });
}

Var reshape(const Var& a, std::vector<int64_t> shape) {
  Tensor out = a->value.reshaped(shape);
  std::vector<int64_t> orig = a->value.shape();
  return make_node(std::move(out), {a}, [orig](Node& node) {
    acc_grad(node.parents[0], node.grad.reshaped(orig));
  });
}

Var concat_ch(const std::vector<Var>& xs) {
  ELED_CHECK(!xs.empty(), "concat_ch: empty input list");
  const int64_t h = xs[0]->value.dim(1), w = xs[0]->value.dim(2);
  int64_t ctot = 0;
  for (const auto& x : xs) {
    ELED_CHECK_SHAPE(x->value.ndim() == 3 && x->value.dim(1) == h && x->value.dim(2) == w,
                     "concat_ch: spatial dims mismatch");
    ctot += x->value.dim(0);
  }
  Tensor out = Tensor::uninit({ctot, h, w});
  int64_t off = 0;
  for (const auto& x : xs) {
    const int64_t n = x->value.numel();
    std::copy(x->value.data(), x->value.data() + n, out.data() + off);
    off += n;
  }
  std::vector<int64_t> sizes;
  for (const auto& x : xs) sizes.push_back(x->value.numel());
  std::vector<Var> parents(xs.begin(), xs.end());
  return make_node(std::move(out), std::move(parents), [sizes](Node& node) {
    int64_t pos = 0;
    for (size_t i = 0; i < sizes.size(); ++i) {
      const Var& p = node.parents[i];
      if (p->requires_grad) {
        Tensor g = Tensor::uninit(p->value.shape());
        std::copy(node.grad.data() + pos, node.grad.data() + pos + sizes[i], g.data());
        acc_grad(p, g);
      }
      pos += sizes[i];
    }
  });
}

Var slice_ch(const Var& a, int64_t from, int64_t to) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "slice_ch expects (C,H,W)");
  const int64_t c = a->value.dim(0), h = a->value.dim(1), w = a->value.dim(2);
  ELED_CHECK(0 <= from && from < to && to <= c, "slice_ch: bad range [", from, ",", to, ") of ", c);
  Tensor out = Tensor::uninit({to - from, h, w});
  const int64_t hw = h * w;
  std::copy(a->value.data() + from * hw, a->value.data() + to * hw, out.data());
  return make_node(std::move(out), {a}, [c, h, w, from, to, hw](Node& node) {
    Tensor ga({c, h, w});
    std::copy(node.grad.data(), node.grad.data() + (to - from) * hw, ga.data() + from * hw);
    acc_grad(node.parents[0], ga);
  });
}

Var transpose_last2(const Var& a) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "transpose_last2 expects (G,M,N)");
  const int64_t g = a->value.dim(0), m = a->value.dim(1), n = a->value.dim(2);
  Tensor out = Tensor::uninit({g, n, m});
  for (int64_t gi = 0; gi < g; ++gi) {
    const double* src = a->value.data() + gi * m * n;
    double* dst = out.data() + gi * m * n;
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  }
  return make_node(std::move(out), {a}, [g, m, n](Node& node) {
    Tensor ga = Tensor::uninit({g, m, n});
    for (int64_t gi = 0; gi < g; ++gi) {
      const double* src = node.grad.data() + gi * m * n;
      double* dst = ga.data() + gi * m * n;
      for (int64_t j = 0; j < n; ++j)
        for (int64_t i = 0; i < m; ++i) dst[i * n + j] = src[j * m + i];
    }
    acc_grad(node.parents[0], ga);
  });
}

namespace {
Tensor roll2_tensor(const Tensor& x, int64_t dy, int64_t dx) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out = Tensor::uninit({c, h, w});
  const int64_t ry = ((dy % h) + h) % h;
  const int64_t rx = ((dx % w) + w) % w;
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* src = x.data() + ci * h * w;
    double* dst = out.data() + ci * h * w;
    for (int64_t y = 0; y < h; ++y) {
      const int64_t sy = (y - ry + h) % h;
      for (int64_t xx = 0; xx < w; ++xx) {
        dst[y * w + xx] = src[sy * w + ((xx - rx + w) % w)];
      }
    }
  }
  return out;
}
}  // namespace

Var roll2(const Var& a, int64_t dy, int64_t dx) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "roll2 expects (C,H,W)");
  Tensor out = roll2_tensor(a->value, dy, dx);
  return make_node(std::move(out), {a}, [dy, dx](Node& node) {
    acc_grad(node.parents[0], roll2_tensor(node.grad, -dy, -dx));
  });
}

namespace {
// softmax over contiguous rows of length n, m rows
void softmax_rows(const double* in, double* out, int64_t m, int64_t n) {
  for (int64_t r = 0; r < m; ++r) {
    const double* x = in + r * n;
    double* y = out + r * n;
    double mx = x[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      y[i] = std::exp(x[i] - mx);
      s += y[i];
    }
    const double inv = 1.0 / s;
    for (int64_t i = 0; i < n; ++i) y[i] *= inv;
  }
}

void softmax_rows_backward(const double* y, const double* g, double* dx, int64_t m, int64_t n) {
  for (int64_t r = 0; r < m; ++r) {
    const double* yr = y + r * n;
    const double* gr = g + r * n;
    double* dr = dx + r * n;
    double dot = 0.0;
    for (int64_t i = 0; i < n; ++i) dot += yr[i] * gr[i];
    for (int64_t i = 0; i < n; ++i) dr[i] = yr[i] * (gr[i] - dot);
  }
}
}  // namespace

Var softmax_lastdim(const Var& a) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "softmax_lastdim expects (G,M,N)");
  const int64_t g = a->value.dim(0), m = a->value.dim(1), n = a->value.dim(2);
  Tensor out = Tensor::uninit(a->value.shape());
  softmax_rows(a->value.data(), out.data(), g * m, n);
  Tensor vo = out;
  return make_node(std::move(out), {a}, [vo, g, m, n](Node& node) {
    Tensor ga = Tensor::uninit(vo.shape());
    softmax_rows_backward(vo.data(), node.grad.data(), ga.data(), g * m, n);
    acc_grad(node.parents[0], ga);
  });
}

Var softmax_dim0(const Var& a) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "softmax_dim0 expects (K,H,W)");
  const int64_t k = a->value.dim(0), h = a->value.dim(1), w = a->value.dim(2);
  const int64_t hw = h * w;
  Tensor out = Tensor::uninit(a->value.shape());
  const double* x = a->value.data();
  double* y = out.data();
  for (int64_t p = 0; p < hw; ++p) {
    double mx = x[p];
    for (int64_t j = 1; j < k; ++j) mx = std::max(mx, x[j * hw + p]);
    double s = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      const double e = std::exp(x[j * hw + p] - mx);
      y[j * hw + p] = e;
      s += e;
    }
    const double inv = 1.0 / s;
    for (int64_t j = 0; j < k; ++j) y[j * hw + p] *= inv;
  }
  Tensor vo = out;
  return make_node(std::move(out), {a}, [vo, k, hw](Node& node) {
    Tensor ga = Tensor::uninit(vo.shape());
    const double* yv = vo.data();
    const double* g = node.grad.data();
    double* d = ga.data();
    for (int64_t p = 0; p < hw; ++p) {
      double dot = 0.0;
      for (int64_t j = 0; j < k; ++j) dot += yv[j * hw + p] * g[j * hw + p];
      for (int64_t j = 0; j < k; ++j)
        d[j * hw + p] = yv[j * hw + p] * (g[j * hw + p] - dot);
    }
    acc_grad(node.parents[0], ga);
  });
}

Var layer_norm_ch(const Var& x, const Var& gamma, double eps) {
  ELED_CHECK_SHAPE(x->value.ndim() == 3, "layer_norm_ch expects (C,H,W)");
  const int64_t c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  ELED_CHECK_SHAPE(gamma->value.numel() == c, "layer_norm_ch: gain size ",
                   gamma->value.numel(), " vs ", c, " channels");
  const int64_t hw = h * w;
  Tensor out = Tensor::uninit(x->shape());
  Tensor centered = Tensor::uninit(x->shape());
  Tensor rstd = Tensor::uninit({hw});
  const double* xd = x->value.data();
  const double* gd = gamma->value.data();
  for (int64_t p = 0; p < hw; ++p) {
    double mu = 0.0;
    for (int64_t ci = 0; ci < c; ++ci) mu += xd[ci * hw + p];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (int64_t ci = 0; ci < c; ++ci) {
      const double hc = xd[ci * hw + p] - mu;
      centered.data()[ci * hw + p] = hc;
      var += hc * hc;
    }
    var /= static_cast<double>(c);
    const double r = 1.0 / std::sqrt(var + eps);
    rstd.data()[p] = r;
    for (int64_t ci = 0; ci < c; ++ci)
      out.data()[ci * hw + p] = gd[ci] * centered.data()[ci * hw + p] * r;
  }
  Tensor vg = gamma->value;
  return make_node(std::move(out), {x, gamma}, [centered, rstd, vg, c, hw](Node& node) {
    const double* g = node.grad.data();
    if (node.parents[0]->requires_grad) {
      Tensor dx = Tensor::uninit({c, node.grad.dim(1), node.grad.dim(2)});
      for (int64_t p = 0; p < hw; ++p) {
        const double r = rstd.data()[p];
        double mean_a = 0.0, mean_ah = 0.0;
        for (int64_t ci = 0; ci < c; ++ci) {
          const double a = vg.data()[ci] * g[ci * hw + p];
          mean_a += a;
          mean_ah += a * centered.data()[ci * hw + p] * r;
        }
        mean_a /= static_cast<double>(c);
        mean_ah /= static_cast<double>(c);
        for (int64_t ci = 0; ci < c; ++ci) {
          const double a = vg.data()[ci] * g[ci * hw + p];
          const double hhat = centered.data()[ci * hw + p] * r;
          dx.data()[ci * hw + p] = r * (a - mean_a - hhat * mean_ah);
        }
      }
      acc_grad(node.parents[0], dx);
    }
    if (node.parents[1]->requires_grad) {
      Tensor dg({c});
      for (int64_t ci = 0; ci < c; ++ci) {
        double s = 0.0;
        for (int64_t p = 0; p < hw; ++p)
          s += g[ci * hw + p] * centered.data()[ci * hw + p] * rstd.data()[p];
        dg.data()[ci] = s;
      }
      acc_grad(node.parents[1], dg);
    }
  });
}

Var l2_normalize_lastdim(const Var& a, double eps) {
  ELED_CHECK_SHAPE(a->value.ndim() == 3, "l2_normalize_lastdim expects (G,M,N)");
  const int64_t rows = a->value.dim(0) * a->value.dim(1);
  const int64_t n = a->value.dim(2);
  Tensor out = Tensor::uninit(a->value.shape());
  Tensor norms = Tensor::uninit({rows});
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = a->value.data() + r * n;
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i] * x[i];
    const double nv = std::sqrt(s + eps);
    norms.data()[r] = nv;
    double* y = out.data() + r * n;
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] / nv;
  }
  Tensor vo = out;
  return make_node(std::move(out), {a}, [vo, norms, rows, n](Node& node) {
    Tensor ga = Tensor::uninit(vo.shape());
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = vo.data() + r * n;
      const double* g = node.grad.data() + r * n;
      double* d = ga.data() + r * n;
      double dot = 0.0;
      for (int64_t i = 0; i < n; ++i) dot += y[i] * g[i];
      const double inv = 1.0 / norms.data()[r];
      for (int64_t i = 0; i < n; ++i) d[i] = (g[i] - y[i] * dot) * inv;
    }
    acc_grad(node.parents[0], ga);
  });
}

}  // namespace eled::ag

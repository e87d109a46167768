// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mmadapt/error.hpp"

namespace mma {

namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  require(axis < shape.size(), ErrorKind::dimension,
          "axis " + std::to_string(axis) + " out of range for " + shape_str(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Tape& same_tape(Var a, Var b) {
  require(a.valid() && b.valid() && &a.tape() == &b.tape(), ErrorKind::contract,
          "operands live on different tapes");
  return a.tape();
}

// Index mapping for numpy-style broadcasting of two operands.
struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const std::size_t n = shape_numel(out);
    if (same) {
      for (std::size_t o = 0; o < n; ++o) fn(o, o, o);
      return;
    }
    const std::size_t rank = out.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t o = 0; o < n; ++o) {
      fn(o, ia, ib);
      for (std::size_t ax = rank; ax-- > 0;) {
        ++idx[ax];
        ia += stride_a[ax];
        ib += stride_b[ax];
        if (idx[ax] < out[ax]) break;
        ia -= stride_a[ax] * out[ax];
        ib -= stride_b[ax] * out[ax];
        idx[ax] = 0;
      }
    }
  }
};

std::vector<std::size_t> aligned_strides(const Shape& s, const Shape& out) {
  const std::size_t rank = out.size();
  std::vector<std::size_t> strides(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t src = s.size() - 1 - i;
    const std::size_t dst = rank - 1 - i;
    strides[dst] = s[src] == 1 ? 0 : stride;
    stride *= s[src];
  }
  return strides;
}

Broadcast make_broadcast(const Shape& a, const Shape& b) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  bc.out.assign(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = i < a.size() ? a[a.size() - 1 - i] : 1;
    const std::size_t eb = i < b.size() ? b[b.size() - 1 - i] : 1;
    require(ea == eb || ea == 1 || eb == 1, ErrorKind::dimension,
            "cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    bc.out[rank - 1 - i] = std::max(ea, eb);
  }
  bc.stride_a = aligned_strides(a, bc.out);
  bc.stride_b = aligned_strides(b, bc.out);
  return bc;
}

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast bc = make_broadcast(av.shape(), bv.shape());
  Tensor out(bc.out);
  bc.for_each([&](std::size_t o, std::size_t ia, std::size_t ib) { out[o] = av[ia] + bv[ib]; });
  return tape.record(std::move(out), {a, b}, [a, b, bc](const Tensor& g) {
    Tape& t = a.tape();
    if (Tensor* ga = t.grad_sink(a))
      bc.for_each([&](std::size_t o, std::size_t ia, std::size_t) { (*ga)[ia] += g[o]; });
    if (Tensor* gb = t.grad_sink(b))
      bc.for_each([&](std::size_t o, std::size_t, std::size_t ib) { (*gb)[ib] += g[o]; });
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast bc = make_broadcast(av.shape(), bv.shape());
  Tensor out(bc.out);
  bc.for_each([&](std::size_t o, std::size_t ia, std::size_t ib) { out[o] = av[ia] - bv[ib]; });
  return tape.record(std::move(out), {a, b}, [a, b, bc](const Tensor& g) {
    Tape& t = a.tape();
    if (Tensor* ga = t.grad_sink(a))
      bc.for_each([&](std::size_t o, std::size_t ia, std::size_t) { (*ga)[ia] += g[o]; });
    if (Tensor* gb = t.grad_sink(b))
      bc.for_each([&](std::size_t o, std::size_t, std::size_t ib) { (*gb)[ib] -= g[o]; });
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast bc = make_broadcast(av.shape(), bv.shape());
  Tensor out(bc.out);
  bc.for_each([&](std::size_t o, std::size_t ia, std::size_t ib) { out[o] = av[ia] * bv[ib]; });
  return tape.record(std::move(out), {a, b}, [a, b, bc](const Tensor& g) {
    Tape& t = a.tape();
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (Tensor* ga = t.grad_sink(a))
      bc.for_each(
          [&](std::size_t o, std::size_t ia, std::size_t ib) { (*ga)[ia] += g[o] * bv[ib]; });
    if (Tensor* gb = t.grad_sink(b))
      bc.for_each(
          [&](std::size_t o, std::size_t ia, std::size_t ib) { (*gb)[ib] += g[o] * av[ia]; });
  });
}

Var scale(Var x, double factor) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] * factor;
  return x.tape().record(std::move(out), {x}, [x, factor](const Tensor& g) {
    if (Tensor* gx = x.tape().grad_sink(x))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i] * factor;
  });
}

Var gelu(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] * normal_cdf(xv[i]);
  return x.tape().record(std::move(out), {x}, [x](const Tensor& g) {
    Tensor* gx = x.tape().grad_sink(x);
    if (!gx) return;
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double v = xv[i];
      (*gx)[i] += g[i] * (normal_cdf(v) + v * normal_pdf(v));
    }
  });
}

Var tanh(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = std::tanh(xv[i]);
  Tensor y = out;
  y.round_to_precision();
  return x.tape().record(std::move(out), {x}, [x, y = std::move(y)](const Tensor& g) {
    if (Tensor* gx = x.tape().grad_sink(x))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [x](const Tensor& g) {
    if (Tensor* gx = x.tape().grad_sink(x))
      for (auto& v : gx->data()) v += g[0];
  });
}

Var mean(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_at(xv.shape(), axis);
  require(s.len > 0, ErrorKind::contract, "mean over an empty axis");
  Shape out_shape = xv.shape();
  out_shape[axis] = 1;
  Tensor out(out_shape);
  const double inv = 1.0 / static_cast<double>(s.len);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      double acc = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) acc += xv[(o * s.len + l) * s.inner + i];
      out[o * s.inner + i] = acc * inv;
    }
  return x.tape().record(std::move(out), {x}, [x, s, inv](const Tensor& g) {
    Tensor* gx = x.tape().grad_sink(x);
    if (!gx) return;
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t l = 0; l < s.len; ++l)
        for (std::size_t i = 0; i < s.inner; ++i)
          (*gx)[(o * s.len + l) * s.inner + i] += g[o * s.inner + i] * inv;
  });
}

Var affine(Var x, Var w, Var b) {
  Tape& tape = same_tape(x, w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require(wv.rank() == 2 && xv.rank() >= 1 && xv.shape().back() == wv.dim(0),
          ErrorKind::dimension,
          "affine: input " + shape_str(xv.shape()) + " vs weight " + shape_str(wv.shape()));
  const std::size_t k_dim = wv.dim(0);
  const std::size_t n_dim = wv.dim(1);
  const std::size_t rows = xv.numel() / std::max<std::size_t>(k_dim, 1);
  const bool has_bias = b.valid();
  if (has_bias) {
    same_tape(x, b);
    require(b.value().numel() == n_dim, ErrorKind::dimension,
            "affine: bias " + shape_str(b.value().shape()) + " vs weight " +
                shape_str(wv.shape()));
  }

  Shape out_shape = xv.shape();
  out_shape.back() = n_dim;
  Tensor out(out_shape);
  const double* xp = xv.ptr();
  const double* wp = wv.ptr();
  double* yp = out.ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    double* yrow = yp + r * n_dim;
    if (has_bias) std::copy_n(b.value().ptr(), n_dim, yrow);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double xk = xp[r * k_dim + k];
      const double* wrow = wp + k * n_dim;
      for (std::size_t n = 0; n < n_dim; ++n) yrow[n] += xk * wrow[n];
    }
  }

  auto backward = [x, w, b, has_bias, rows, k_dim, n_dim](const Tensor& g) {
    Tape& t = x.tape();
    const double* gp = g.ptr();
    if (Tensor* gx = t.grad_sink(x)) {
      const double* wp = w.value().ptr();
      double* gxp = gx->ptr();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* grow = gp + r * n_dim;
        for (std::size_t k = 0; k < k_dim; ++k) {
          const double* wrow = wp + k * n_dim;
          double acc = 0.0;
          for (std::size_t n = 0; n < n_dim; ++n) acc += grow[n] * wrow[n];
          gxp[r * k_dim + k] += acc;
        }
      }
    }
    if (Tensor* gw = t.grad_sink(w)) {
      const double* xp = x.value().ptr();
      double* gwp = gw->ptr();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* grow = gp + r * n_dim;
        for (std::size_t k = 0; k < k_dim; ++k) {
          const double xk = xp[r * k_dim + k];
          double* gwrow = gwp + k * n_dim;
          for (std::size_t n = 0; n < n_dim; ++n) gwrow[n] += xk * grow[n];
        }
      }
    }
    if (has_bias) {
      if (Tensor* gb = t.grad_sink(b)) {
        double* gbp = gb->ptr();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t n = 0; n < n_dim; ++n) gbp[n] += gp[r * n_dim + n];
      }
    }
  };
  if (has_bias) return tape.record(std::move(out), {x, w, b}, std::move(backward));
  return tape.record(std::move(out), {x, w}, std::move(backward));
}

Var matmul(Var x, Var w) { return affine(x, w, Var()); }

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& tape = same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = x.value();
  require(xv.rank() >= 1, ErrorKind::dimension, "layer_norm: scalar input");
  const std::size_t d = xv.shape().back();
  require(d > 0, ErrorKind::dimension, "layer_norm: last extent is zero");
  require(gamma.value().numel() == d && beta.value().numel() == d, ErrorKind::dimension,
          "layer_norm: input " + shape_str(xv.shape()) + " vs gamma " +
              shape_str(gamma.value().shape()));
  const std::size_t rows = xv.numel() / d;
  const double* gp = gamma.value().ptr();
  const double* bp = beta.value().ptr();

  Tensor out(xv.shape());
  Tensor xhat(xv.shape());
  std::vector<double> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.ptr() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * rstd[r];
      xhat[r * d + j] = h;
      out[r * d + j] = gp[j] * h + bp[j];
    }
  }
  return tape.record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), rstd = std::move(rstd), rows, d](const Tensor& g) {
        Tape& t = x.tape();
        if (Tensor* gg = t.grad_sink(gamma))
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) (*gg)[j] += g[r * d + j] * xhat[r * d + j];
        if (Tensor* gb = t.grad_sink(beta))
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) (*gb)[j] += g[r * d + j];
        Tensor* gx = t.grad_sink(x);
        if (!gx) return;
        const double* gp = gamma.value().ptr();
        std::vector<double> gh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_gh = 0.0, mean_ghx = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            gh[j] = g[r * d + j] * gp[j];
            mean_gh += gh[j];
            mean_ghx += gh[j] * xhat[r * d + j];
          }
          mean_gh /= static_cast<double>(d);
          mean_ghx /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j)
            (*gx)[r * d + j] += rstd[r] * (gh[j] - mean_gh - xhat[r * d + j] * mean_ghx);
        }
      });
}

Var softmax(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_at(xv.shape(), axis);
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.len; ++l) mx = std::max(mx, xv[base + l * s.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) {
        const double e = std::exp(xv[base + l * s.inner] - mx);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.len; ++l) out[base + l * s.inner] /= total;
    }
  Tensor y = out;
  return x.tape().record(std::move(out), {x}, [x, s, y = std::move(y)](const Tensor& g) {
    Tensor* gx = x.tape().grad_sink(x);
    if (!gx) return;
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.len * s.inner + i;
        double dot = 0.0;
        for (std::size_t l = 0; l < s.len; ++l)
          dot += g[base + l * s.inner] * y[base + l * s.inner];
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t at = base + l * s.inner;
          (*gx)[at] += y[at] * (g[at] - dot);
        }
      }
  });
}

Var attention(Var q, Var k, Var v, std::size_t heads) {
  Tape& tape = same_tape(q, k);
  same_tape(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  require(qv.rank() == 3 && kv.rank() == 3 && vv.rank() == 3, ErrorKind::dimension,
          "attention expects rank-3 [G, n, D] operands");
  const std::size_t groups = qv.dim(0), nq = qv.dim(1), width = qv.dim(2);
  const std::size_t nk = kv.dim(1);
  require(kv.dim(0) == groups && vv.dim(0) == groups && kv.dim(2) == width &&
              vv.shape() == kv.shape(),
          ErrorKind::dimension,
          "attention: q " + shape_str(qv.shape()) + ", k " + shape_str(kv.shape()) + ", v " +
              shape_str(vv.shape()));
  require(heads > 0 && width % heads == 0, ErrorKind::config,
          "attention width " + std::to_string(width) + " not divisible by " +
              std::to_string(heads) + " heads");
  require(nk > 0, ErrorKind::contract, "attention over an empty key set");
  const std::size_t hd = width / heads;
  const double scl = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor out({groups, nq, width});
  Tensor probs({groups, heads, nq, nk});
  std::vector<double> scores(nk);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const double* qg = qv.ptr() + gi * nq * width;
    const double* kg = kv.ptr() + gi * nk * width;
    const double* vg = vv.ptr() + gi * nk * width;
    double* og = out.ptr() + gi * nq * width;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * hd;
      for (std::size_t i = 0; i < nq; ++i) {
        const double* qi = qg + i * width + c0;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < nk; ++j) {
          const double* kj = kg + j * width + c0;
          double acc = 0.0;
          for (std::size_t c = 0; c < hd; ++c) acc += qi[c] * kj[c];
          scores[j] = acc * scl;
          mx = std::max(mx, scores[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < nk; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          total += scores[j];
        }
        double* p = probs.ptr() + ((gi * heads + h) * nq + i) * nk;
        double* oi = og + i * width + c0;
        for (std::size_t j = 0; j < nk; ++j) {
          p[j] = scores[j] / total;
          const double* vj = vg + j * width + c0;
          for (std::size_t c = 0; c < hd; ++c) oi[c] += p[j] * vj[c];
        }
      }
    }
  }

  return tape.record(
      std::move(out), {q, k, v},
      [q, k, v, heads, groups, nq, nk, width, hd, scl, probs = std::move(probs)](const Tensor& g) {
        Tape& t = q.tape();
        Tensor* gq = t.grad_sink(q);
        Tensor* gk = t.grad_sink(k);
        Tensor* gv = t.grad_sink(v);
        const Tensor& qv = q.value();
        const Tensor& kv = k.value();
        const Tensor& vv = v.value();
        std::vector<double> dp(nk);
        for (std::size_t gi = 0; gi < groups; ++gi) {
          const std::size_t qoff = gi * nq * width;
          const std::size_t koff = gi * nk * width;
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t c0 = h * hd;
            for (std::size_t i = 0; i < nq; ++i) {
              const double* p = probs.ptr() + ((gi * heads + h) * nq + i) * nk;
              const double* go = g.ptr() + qoff + i * width + c0;
              double dot = 0.0;
              for (std::size_t j = 0; j < nk; ++j) {
                const double* vj = vv.ptr() + koff + j * width + c0;
                double acc = 0.0;
                for (std::size_t c = 0; c < hd; ++c) acc += go[c] * vj[c];
                dp[j] = acc;
                dot += p[j] * acc;
                if (gv) {
                  double* gvj = gv->ptr() + koff + j * width + c0;
                  for (std::size_t c = 0; c < hd; ++c) gvj[c] += p[j] * go[c];
                }
              }
              if (!gq && !gk) continue;
              const double* qi = qv.ptr() + qoff + i * width + c0;
              for (std::size_t j = 0; j < nk; ++j) {
                const double ds = p[j] * (dp[j] - dot) * scl;
                if (gq) {
                  const double* kj = kv.ptr() + koff + j * width + c0;
                  double* gqi = gq->ptr() + qoff + i * width + c0;
                  for (std::size_t c = 0; c < hd; ++c) gqi[c] += ds * kj[c];
                }
                if (gk) {
                  double* gkj = gk->ptr() + koff + j * width + c0;
                  for (std::size_t c = 0; c < hd; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](const Tensor& g) {
    if (Tensor* gx = x.tape().grad_sink(x))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i];
  });
}

Var concat(Var a, Var b, std::size_t axis) {
  Tape& tape = same_tape(a, b);
  const Shape& sa = a.value().shape();
  const Shape& sb = b.value().shape();
  bool compatible = sa.size() == sb.size() && axis < sa.size();
  for (std::size_t i = 0; compatible && i < sa.size(); ++i)
    if (i != axis && sa[i] != sb[i]) compatible = false;
  require(compatible, ErrorKind::dimension,
          "concat along axis " + std::to_string(axis) + ": " + shape_str(sa) + " vs " +
              shape_str(sb));
  const AxisSplit pa = split_at(sa, axis);
  const AxisSplit pb = split_at(sb, axis);
  Shape out_shape = sa;
  out_shape[axis] = pa.len + pb.len;
  Tensor out(out_shape);
  const std::size_t ca = pa.len * pa.inner, cb = pb.len * pb.inner;
  for (std::size_t o = 0; o < pa.outer; ++o) {
    std::copy_n(a.value().ptr() + o * ca, ca, out.ptr() + o * (ca + cb));
    std::copy_n(b.value().ptr() + o * cb, cb, out.ptr() + o * (ca + cb) + ca);
  }
  return tape.record(std::move(out), {a, b}, [a, b, pa, ca, cb](const Tensor& g) {
    Tape& t = a.tape();
    Tensor* ga = t.grad_sink(a);
    Tensor* gb = t.grad_sink(b);
    for (std::size_t o = 0; o < pa.outer; ++o) {
      const double* src = g.ptr() + o * (ca + cb);
      if (ga)
        for (std::size_t i = 0; i < ca; ++i) (*ga)[o * ca + i] += src[i];
      if (gb)
        for (std::size_t i = 0; i < cb; ++i) (*gb)[o * cb + i] += src[ca + i];
    }
  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& sx = x.value().shape();
  const AxisSplit s = split_at(sx, axis);
  require(begin <= end && end <= s.len, ErrorKind::dimension,
          "slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") of axis " +
              std::to_string(axis) + " in " + shape_str(sx));
  Shape out_shape = sx;
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t chunk = (end - begin) * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(x.value().ptr() + (o * s.len + begin) * s.inner, chunk, out.ptr() + o * chunk);
  return x.tape().record(std::move(out), {x}, [x, s, begin, chunk](const Tensor& g) {
    Tensor* gx = x.tape().grad_sink(x);
    if (!gx) return;
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = gx->ptr() + (o * s.len + begin) * s.inner;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += g[o * chunk + i];
    }
  });
}

Var broadcast_to(Var x, Shape shape) {
  const Tensor& xv = x.value();
  Broadcast bc = make_broadcast(shape, xv.shape());
  require(bc.out == shape, ErrorKind::dimension,
          "cannot broadcast " + shape_str(xv.shape()) + " to " + shape_str(shape));
  Tensor out(shape);
  bc.for_each([&](std::size_t o, std::size_t, std::size_t ix) { out[o] = xv[ix]; });
  return x.tape().record(std::move(out), {x}, [x, bc](const Tensor& g) {
    if (Tensor* gx = x.tape().grad_sink(x))
      bc.for_each([&](std::size_t o, std::size_t, std::size_t ix) { (*gx)[ix] += g[o]; });
  });
}

Var add_slice(Var x, std::size_t axis, std::size_t offset, Var y) {
  Tape& tape = same_tape(x, y);
  const Shape& sx = x.value().shape();
  const Shape& sy = y.value().shape();
  const AxisSplit px = split_at(sx, axis);
  bool compatible = sx.size() == sy.size();
  for (std::size_t i = 0; compatible && i < sx.size(); ++i)
    if (i != axis && sx[i] != sy[i]) compatible = false;
  require(compatible && offset + sy[axis] <= px.len, ErrorKind::dimension,
          "add_slice: " + shape_str(sy) + " at offset " + std::to_string(offset) + " of axis " +
              std::to_string(axis) + " in " + shape_str(sx));
  const std::size_t chunk = sy[axis] * px.inner;
  Tensor out = x.value();
  for (std::size_t o = 0; o < px.outer; ++o) {
    double* dst = out.ptr() + (o * px.len + offset) * px.inner;
    const double* src = y.value().ptr() + o * chunk;
    for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
  }
  return tape.record(std::move(out), {x, y}, [x, y, px, offset, chunk](const Tensor& g) {
    Tape& t = x.tape();
    if (Tensor* gx = t.grad_sink(x))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i];
    if (Tensor* gy = t.grad_sink(y))
      for (std::size_t o = 0; o < px.outer; ++o) {
        const double* src = g.ptr() + (o * px.len + offset) * px.inner;
        for (std::size_t i = 0; i < chunk; ++i) (*gy)[o * chunk + i] += src[i];
      }
  });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  require(z.rank() == 2 && z.dim(0) == labels.size() && z.dim(0) > 0, ErrorKind::dimension,
          "cross_entropy: logits " + shape_str(z.shape()) + " vs " +
              std::to_string(labels.size()) + " labels");
  const std::size_t batch = z.dim(0), classes = z.dim(1);
  Tensor probs(z.shape());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    require(label >= 0 && static_cast<std::size_t>(label) < classes, ErrorKind::contract,
            "label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    const double* row = z.ptr() + b * classes;
    const double mx = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[b * classes + c] = std::exp(row[c] - mx);
      total += probs[b * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[b * classes + c] /= total;
    loss += (std::log(total) + mx) - row[label];
  }
  loss /= static_cast<double>(batch);
  std::vector<int> targets(labels.begin(), labels.end());
  return logits.tape().record(
      Tensor::scalar(loss), {logits},
      [logits, batch, classes, probs = std::move(probs), targets = std::move(targets)](
          const Tensor& g) {
        Tensor* gz = logits.tape().grad_sink(logits);
        if (!gz) return;
        const double w = g[0] / static_cast<double>(batch);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t c = 0; c < classes; ++c) {
            const double target = static_cast<int>(c) == targets[b] ? 1.0 : 0.0;
            (*gz)[b * classes + c] += w * (probs[b * classes + c] - target);
          }
      });
}

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

// Plain-loop reference evaluations used as test oracles. They read weights
// straight from Parameter storage and share no code with the library ops.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mmadapt/parameter.hpp"

namespace mma::oracle {

using Vec = std::vector<double>;
using Rows = std::vector<Vec>;

inline Rows rows_of(const Tensor& t, std::size_t begin_row, std::size_t count, std::size_t width) {
  Rows out(count, Vec(width));
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < width; ++c) out[r][c] = t[(begin_row + r) * width + c];
  return out;
}

inline Vec linear(const Vec& x, const Parameter& w, const Parameter* b) {
  const std::size_t in = w.shape[0], out = w.shape[1];
  Vec y(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b ? b->value[o] : 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += x[i] * w.value[i * out + o];
    y[o] = acc;
  }
  return y;
}

inline Vec layer_norm(const Vec& x, const Parameter& gamma, const Parameter& beta,
                      double eps = 1e-6) {
  double mu = 0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = (x[i] - mu) / std::sqrt(var + eps) * gamma.value[i] + beta.value[i];
  return y;
}

inline double gelu(double x) { return 0.5 * x * std::erfc(-x / std::sqrt(2.0)); }

inline Vec gelu(Vec x) {
  for (double& v : x) v = gelu(v);
  return x;
}

inline Vec mean_rows(const Rows& rows) {
  Vec m(rows.front().size(), 0.0);
  for (const Vec& r : rows)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += r[i];
  for (double& v : m) v /= static_cast<double>(rows.size());
  return m;
}

inline Vec plus(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec axpy(Vec y, double a, const Vec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
  return y;
}

/// Multi-head attention of `queries` over `keys` with the projections of
/// `prefix` (query/key/value/out weights and biases) from `store`.
inline Rows attention(const ParamStore& store, const std::string& prefix, const Rows& queries,
                      const Rows& keys, std::size_t heads) {
  auto p = [&](const std::string& n) -> const Parameter& { return *store.find(prefix + n); };
  Rows q, k, v;
  for (const Vec& x : queries) q.push_back(linear(x, p(".query.weight"), &p(".query.bias")));
  for (const Vec& x : keys) {
    k.push_back(linear(x, p(".key.weight"), &p(".key.bias")));
    v.push_back(linear(x, p(".value.weight"), &p(".value.bias")));
  }
  const std::size_t inner = q.front().size(), hd = inner / heads;
  Rows out;
  for (const Vec& qi : q) {
    Vec o(inner, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      Vec s(k.size());
      double mx = -1e300;
      for (std::size_t j = 0; j < k.size(); ++j) {
        double acc = 0;
        for (std::size_t c = h * hd; c < (h + 1) * hd; ++c) acc += qi[c] * k[j][c];
        s[j] = acc / std::sqrt(static_cast<double>(hd));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (double& e : s) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j < k.size(); ++j)
        for (std::size_t c = h * hd; c < (h + 1) * hd; ++c) o[c] += s[j] / z * v[j][c];
    }
    out.push_back(linear(o, p(".out.weight"), &p(".out.bias")));
  }
  return out;
}

/// Pre-norm transformer block with GELU MLP.
inline Rows transformer_block(const ParamStore& store, const std::string& prefix, const Rows& x,
                              std::size_t heads) {
  auto p = [&](const std::string& n) -> const Parameter& { return *store.find(prefix + n); };
  Rows normed;
  for (const Vec& r : x) normed.push_back(layer_norm(r, p(".norm1.gamma"), p(".norm1.beta")));
  Rows att = attention(store, prefix + ".attn", normed, normed, heads);
  Rows out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec h = plus(x[i], att[i]);
    Vec m = linear(gelu(linear(layer_norm(h, p(".norm2.gamma"), p(".norm2.beta")),
                               p(".mlp.fc1.weight"), &p(".mlp.fc1.bias"))),
                   p(".mlp.fc2.weight"), &p(".mlp.fc2.bias"));
    out.push_back(plus(h, m));
  }
  return out;
}

/// One clip through a Fusion Bottleneck block, written out step by step:
///   V^ = LN(V W_cv + b), A^ = LN(A W_ca + b)
///   L_v = mean(V^ over all frames' tokens), L_a = mean(A^)
///   U_v = GELU((V^ + L_a) W_ev + b), U_a = GELU((A^ + L_v) W_ea + b)
///   V~ = V + tanh(alpha) U_v, A~ = A + tanh(alpha) U_a
/// `vision` holds t*n_v rows (frame-major), `audio` n_a rows.
struct BottleneckResult {
  Rows vision, audio;
  Vec pooled_vision, pooled_audio;
};

inline BottleneckResult fusion_bottleneck(const ParamStore& store, const std::string& prefix,
                                          const Rows& vision, const Rows& audio) {
  auto p = [&](const std::string& n) -> const Parameter& { return *store.find(prefix + n); };
  Rows v_hat, a_hat;
  for (const Vec& x : vision)
    v_hat.push_back(layer_norm(linear(x, p(".vision.compress.weight"), &p(".vision.compress.bias")),
                               p(".vision.norm.gamma"), p(".vision.norm.beta")));
  for (const Vec& x : audio)
    a_hat.push_back(layer_norm(linear(x, p(".audio.compress.weight"), &p(".audio.compress.bias")),
                               p(".audio.norm.gamma"), p(".audio.norm.beta")));
  BottleneckResult r;
  r.pooled_vision = mean_rows(v_hat);
  r.pooled_audio = mean_rows(a_hat);
  const double gate = std::tanh(p(".alpha").value[0]);
  for (std::size_t i = 0; i < vision.size(); ++i) {
    Vec u = gelu(linear(plus(v_hat[i], r.pooled_audio), p(".vision.expand.weight"),
                        &p(".vision.expand.bias")));
    r.vision.push_back(axpy(vision[i], gate, u));
  }
  for (std::size_t i = 0; i < audio.size(); ++i) {
    Vec u = gelu(linear(plus(a_hat[i], r.pooled_vision), p(".audio.expand.weight"),
                        &p(".audio.expand.bias")));
    r.audio.push_back(axpy(audio[i], gate, u));
  }
  return r;
}

}  // namespace mma::oracle

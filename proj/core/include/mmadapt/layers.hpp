// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "mmadapt/ops.hpp"
#include "mmadapt/parameter.hpp"

namespace mma {

/// Gaussian weight init; with `fan_in_scaled` the deviation is
/// `stddev / sqrt(fan_in)`.
struct WeightInit {
  double stddev = 0.02;
  bool fan_in_scaled = false;

  double for_fan_in(std::size_t fan_in) const;
};

struct Linear {
  Parameter* weight = nullptr;  // [in, out]
  Parameter* bias = nullptr;    // [out], may be null

  static Linear create(ParamStore& store, const std::string& prefix, std::size_t in,
                       std::size_t out, bool trainable, WeightInit init, bool with_bias = true);

  std::size_t in_dim() const { return weight->shape[0]; }
  std::size_t out_dim() const { return weight->shape[1]; }
  Var operator()(Var x) const;
};

struct LayerNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  static LayerNorm create(ParamStore& store, const std::string& prefix, std::size_t dim,
                          bool trainable);
  Var operator()(Var x) const;
};

/// Projected multi-head attention. `inner` may differ from the token width,
/// in which case q/k/v map d -> inner and the output maps inner -> d.
struct MultiHeadAttention {
  Linear query, key, value, out;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParamStore& store, const std::string& prefix,
                                   std::size_t dim, std::size_t inner, std::size_t heads,
                                   bool trainable, WeightInit init);

  /// queries [G, n_q, d], keys_values [G, n_k, d] -> [G, n_q, d]
  Var operator()(Var queries, Var keys_values) const;
};

/// Pre-norm transformer block: x + MHSA(LN(x)), then + MLP(LN(.)) with GELU.
struct TransformerBlock {
  LayerNorm norm1;
  MultiHeadAttention attn;
  LayerNorm norm2;
  Linear fc1, fc2;

  static TransformerBlock create(ParamStore& store, const std::string& prefix, std::size_t dim,
                                 std::size_t heads, std::size_t mlp_hidden, bool trainable,
                                 WeightInit init);

  Var operator()(Var x) const;
};

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "mmadapt/autodiff.hpp"

namespace mma {

inline constexpr double kLayerNormEps = 1e-6;

// Elementwise with numpy-style broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);

Var gelu(Var x);
Var tanh(Var x);

/// Sum of all elements, shape [1].
Var sum(Var x);
/// Mean along `axis`; the axis is kept with extent 1.
Var mean(Var x, std::size_t axis);

/// y = xW (+ b) over the last axis of x. W is [d_in, d_out], b is [d_out].
Var affine(Var x, Var w, Var b);
Var matmul(Var x, Var w);

/// Per-row normalization over the last axis, then gamma * x + beta.
Var layer_norm(Var x, Var gamma, Var beta, double eps = kLayerNormEps);

Var softmax(Var x, std::size_t axis);

/// Scaled dot-product attention on already-projected tokens.
/// q is [G, n_q, D], k and v are [G, n_k, D]; D splits into `heads` heads
/// scaled by 1/sqrt(D/heads). Returns [G, n_q, D] with heads concatenated.
Var attention(Var q, Var k, Var v, std::size_t heads);

Var reshape(Var x, Shape shape);
Var concat(Var a, Var b, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var broadcast_to(Var x, Shape shape);
/// x with y added into positions [offset, offset + y.dim(axis)) along axis.
Var add_slice(Var x, std::size_t axis, std::size_t offset, Var y);

/// Mean softmax cross-entropy over rows of [B, K] logits.
Var cross_entropy(Var logits, std::span<const int> labels);

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "mmadapt/layers.hpp"

namespace mma {

/// Builds the per-frame sequence [B, t, d] from the frame CLS tokens of
/// `frame_tokens` [B*t, n, d], adding the audio CLS of `audio_tokens`
/// [B, n_a, d] to every frame. Either input may be invalid (unimodal runs),
/// but not both; an audio-only sequence repeats the audio CLS t times.
Var assemble_temporal(Var frame_tokens, Var audio_tokens, std::size_t frames);

/// Temporal self-attention over the t frame CLS tokens of one clip, with
/// down/up projections when the attention width differs from the input
/// width. Returns the enrichment only; callers add it back residually.
class ItaBlock {
 public:
  ItaBlock(ParamStore& store, const std::string& prefix, std::size_t in_dim, std::size_t ita_dim,
           std::size_t heads);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t ita_dim() const { return ita_dim_; }
  const MultiHeadAttention& attention() const { return attn_; }

  /// cls [B, t, in_dim] -> enrichment [B, t, in_dim].
  Var operator()(Var cls) const;

 private:
  std::size_t in_dim_;
  std::size_t ita_dim_;
  LayerNorm norm_;
  Linear down_, up_;  // only when ita_dim != in_dim
  MultiHeadAttention attn_;
};

struct TemporalHeadConfig {
  std::size_t in_dim = 32;
  std::size_t dim = 32;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 2;
  std::size_t frames = 4;
  std::size_t classes = 7;
  bool use_mtt = true;
  double init_std = 0.02;
};

/// Joint adaptation module (linear d -> d_t) followed either by the
/// multimodal temporal transformer or by a mean over frames.
class TemporalHead {
 public:
  TemporalHead(ParamStore& store, const std::string& prefix, TemporalHeadConfig config);

  const TemporalHeadConfig& config() const { return config_; }

  /// [B, t, d] -> [B, t, d_t]
  Var jam(Var seq) const;
  /// [B, t, d_t] -> logits [B, K] read from the prepended classification token.
  Var mtt(Var seq) const;
  /// [B, t, d_t] -> logits [B, K] from the mean over frames.
  Var average(Var seq) const;
  /// [B, t, d] -> logits [B, K]
  Var operator()(Var seq) const;

  Parameter& temporal_embedding() const { return *temporal_emb_; }
  Parameter& cls_token() const { return *cls_; }

 private:
  TemporalHeadConfig config_;
  Linear jam_;
  Parameter* temporal_emb_ = nullptr;
  Parameter* cls_ = nullptr;
  TransformerBlock block_;
  LayerNorm norm_;
  Linear classifier_;
};

}  // namespace mma

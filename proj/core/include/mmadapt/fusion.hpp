// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "mmadapt/layers.hpp"
#include "mmadapt/model_config.hpp"
#include "mmadapt/temporal.hpp"

namespace mma {

struct FusionConfig {
  FusionVariant variant = FusionVariant::bottleneck;
  std::size_t latent_dim = 6;
  std::size_t heads = 2;
  bool pool_include_cls = true;
  bool pool_include_prompts = true;
  /// Adaptor width inside the bottleneck; 0 disables it.
  std::size_t ita_dim = 0;
  std::size_t ita_heads = 1;
};

/// Row layout of the token sequences entering a fusion block.
/// Vision is [B*t, n_v, d] (frames of one clip consecutive), audio [B, n_a, d].
/// Each sequence is data tokens (CLS first) followed by `prompts` rows.
struct TokenLayout {
  std::size_t frames = 1;
  std::size_t vision_data = 0;
  std::size_t audio_data = 0;
  std::size_t prompts = 0;
};

struct FusionOutput {
  Var vision;
  Var audio;
};

/// Compression half of the bottleneck: LN(x W_c + b_c) per branch.
struct BottleneckWeights {
  Linear compress_vision, compress_audio;
  LayerNorm norm_vision, norm_audio;
  Linear expand_vision, expand_audio;
};

/// Mean over the rows selected by the pooling switches, per clip.
/// `latent` is [G, n, d_b] with `group` consecutive sequences per clip;
/// returns [G / group, 1, d_b].
Var pool_latent(Var latent, std::size_t group, std::size_t data_rows, std::size_t prompt_rows,
                bool include_cls, bool include_prompts);

/// One bidirectional exchange through a shared low-rank latent. `gate` is the
/// tanh of the learnable gate scalar. The optional temporal adaptor enriches
/// the frame CLS rows: inside the latent when its input width is d_b, on the
/// fused vision output when its input width is d.
FusionOutput fusion_bottleneck(Var vision, Var audio, Var gate, const BottleneckWeights& w,
                               const TokenLayout& layout, const FusionConfig& config,
                               const ItaBlock* ita);
/// Adds the opposite branch's mean token to every token.
FusionOutput fusion_add(Var vision, Var audio, Var gate, const TokenLayout& layout);
/// Cross-attention in both directions (audio -> vision and vision -> audio).
FusionOutput fusion_mult(Var vision, Var audio, Var gate, const MultiHeadAttention& to_vision,
                         const MultiHeadAttention& to_audio, const TokenLayout& layout);
/// A transformer block over the concatenated clip tokens; its pooled output
/// is added to both branches.
FusionOutput fusion_mult_concat(Var vision, Var audio, Var gate, const TransformerBlock& block,
                                const TokenLayout& layout);

/// Fusion applied after one encoder layer, residual through tanh(alpha),
/// with alpha initialised to zero so the untrained block is an identity.
class FusionBlock {
 public:
  FusionBlock(ParamStore& store, const std::string& prefix, std::size_t dim, FusionConfig config);

  const FusionConfig& config() const { return config_; }
  Parameter& alpha() const { return *alpha_; }
  const ItaBlock* ita() const { return ita_ ? &*ita_ : nullptr; }
  const BottleneckWeights& bottleneck() const { return bottleneck_; }

  FusionOutput operator()(Var vision, Var audio, const TokenLayout& layout) const;

 private:
  FusionConfig config_;
  std::size_t dim_;
  Parameter* alpha_ = nullptr;
  BottleneckWeights bottleneck_;
  MultiHeadAttention to_vision_, to_audio_;
  TransformerBlock concat_block_;
  std::optional<ItaBlock> ita_;
};

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/fusion.hpp"

#include "mmadapt/error.hpp"

namespace mma {
namespace {

constexpr std::size_t kConcatMlpRatio = 2;

void check_layout(Var vision, Var audio, const TokenLayout& layout) {
  require(vision.value().rank() == 3 && audio.value().rank() == 3, ErrorKind::dimension,
          "fusion expects rank-3 token tensors");
  require(layout.frames > 0 && vision.dim(0) == audio.dim(0) * layout.frames, ErrorKind::dimension,
          "vision batch " + std::to_string(vision.dim(0)) + " is not " +
              std::to_string(layout.frames) + " frames x audio batch " +
              std::to_string(audio.dim(0)));
  require(vision.dim(1) == layout.vision_data + layout.prompts &&
              audio.dim(1) == layout.audio_data + layout.prompts,
          ErrorKind::dimension,
          "token counts " + shape_str(vision.shape()) + " / " + shape_str(audio.shape()) +
              " disagree with the layout");
  require(vision.dim(2) == audio.dim(2), ErrorKind::dimension, "branch widths differ");
}

// [B*t, n, d] -> [B, t*n, d]
Var per_clip(Var x, std::size_t frames) {
  return reshape(x, {x.dim(0) / frames, frames * x.dim(1), x.dim(2)});
}

Var per_frame(Var x, std::size_t frames, std::size_t n) {
  return reshape(x, {x.dim(0) * frames, n, x.dim(2)});
}

Var gated(Var x, Var update, Var gate) { return add(x, mul(update, gate)); }

}  // namespace

Var pool_latent(Var latent, std::size_t group, std::size_t data_rows, std::size_t prompt_rows,
                bool include_cls, bool include_prompts) {
  const std::size_t begin = include_cls ? 0 : 1;
  const std::size_t end = include_prompts ? data_rows + prompt_rows : data_rows;
  require(end > begin, ErrorKind::config, "pooling selects no tokens");
  Var rows = slice(latent, 1, begin, end);
  return mean(per_clip(rows, group), 1);
}

FusionOutput fusion_bottleneck(Var vision, Var audio, Var gate, const BottleneckWeights& w,
                               const TokenLayout& layout, const FusionConfig& config,
                               const ItaBlock* ita) {
  check_layout(vision, audio, layout);
  const std::size_t t = layout.frames, nv = vision.dim(1);
  Var v_hat = w.norm_vision(w.compress_vision(vision));
  Var a_hat = w.norm_audio(w.compress_audio(audio));

  Var l_v = pool_latent(v_hat, t, layout.vision_data, layout.prompts, config.pool_include_cls,
                        config.pool_include_prompts);
  Var l_a = pool_latent(a_hat, 1, layout.audio_data, layout.prompts, config.pool_include_cls,
                        config.pool_include_prompts);

  const std::size_t b = audio.dim(0), db = v_hat.dim(2), d = vision.dim(2);
  if (ita && ita->in_dim() == db) {
    Var cls = reshape(slice(v_hat, 1, 0, 1), {b, t, db});
    v_hat = add_slice(v_hat, 1, 0, reshape((*ita)(cls), {b * t, 1, db}));
  }

  Var u_v = gelu(w.expand_vision(add(per_clip(v_hat, t), l_a)));
  Var u_a = gelu(w.expand_audio(add(a_hat, l_v)));
  Var v_out = gated(vision, per_frame(u_v, t, nv), gate);
  if (ita && ita->in_dim() == d) {
    Var cls = reshape(slice(v_out, 1, 0, 1), {b, t, d});
    v_out = add_slice(v_out, 1, 0, reshape((*ita)(cls), {b * t, 1, d}));
  }
  return {v_out, gated(audio, u_a, gate)};
}

FusionOutput fusion_add(Var vision, Var audio, Var gate, const TokenLayout& layout) {
  check_layout(vision, audio, layout);
  const std::size_t t = layout.frames, nv = vision.dim(1);
  Var m_v = mean(per_clip(vision, t), 1);
  Var m_a = mean(audio, 1);
  Var v = gated(per_clip(vision, t), m_a, gate);
  return {per_frame(v, t, nv), gated(audio, m_v, gate)};
}

FusionOutput fusion_mult(Var vision, Var audio, Var gate, const MultiHeadAttention& to_vision,
                         const MultiHeadAttention& to_audio, const TokenLayout& layout) {
  check_layout(vision, audio, layout);
  const std::size_t t = layout.frames, nv = vision.dim(1);
  Var v = per_clip(vision, t);
  Var from_audio = to_vision(v, audio);
  Var from_vision = to_audio(audio, v);
  return {per_frame(gated(v, from_audio, gate), t, nv), gated(audio, from_vision, gate)};
}

FusionOutput fusion_mult_concat(Var vision, Var audio, Var gate, const TransformerBlock& block,
                                const TokenLayout& layout) {
  check_layout(vision, audio, layout);
  const std::size_t t = layout.frames, nv = vision.dim(1);
  Var v = per_clip(vision, t);
  Var pooled = mean(block(concat(v, audio, 1)), 1);
  return {per_frame(gated(v, pooled, gate), t, nv), gated(audio, pooled, gate)};
}

FusionBlock::FusionBlock(ParamStore& store, const std::string& prefix, std::size_t dim,
                         FusionConfig config)
    : config_(config), dim_(dim) {
  require(config_.variant != FusionVariant::none, ErrorKind::config,
          "fusion block needs a variant");
  const WeightInit init{};
  alpha_ = &store.add(prefix + ".alpha", {1}, true, Init::zeros());
  switch (config_.variant) {
    case FusionVariant::bottleneck: {
      const std::size_t db = config_.latent_dim;
      require(db > 0, ErrorKind::config, "latent_dim must be positive");
      auto& w = bottleneck_;
      w.compress_vision = Linear::create(store, prefix + ".vision.compress", dim, db, true, init);
      w.compress_audio = Linear::create(store, prefix + ".audio.compress", dim, db, true, init);
      w.norm_vision = LayerNorm::create(store, prefix + ".vision.norm", db, true);
      w.norm_audio = LayerNorm::create(store, prefix + ".audio.norm", db, true);
      w.expand_vision = Linear::create(store, prefix + ".vision.expand", db, dim, true, init);
      w.expand_audio = Linear::create(store, prefix + ".audio.expand", db, dim, true, init);
      // At the latent width the adaptor works on the compressed CLS rows and
      // needs no projections; otherwise it projects from the branch width.
      if (config_.ita_dim > 0)
        ita_.emplace(store, prefix + ".ita", config_.ita_dim == db ? db : dim, config_.ita_dim,
                     config_.ita_heads);
      break;
    }
    case FusionVariant::mult:
      to_vision_ = MultiHeadAttention::create(store, prefix + ".to_vision", dim, config_.latent_dim,
                                              config_.heads, true, init);
      to_audio_ = MultiHeadAttention::create(store, prefix + ".to_audio", dim, config_.latent_dim,
                                             config_.heads, true, init);
      break;
    case FusionVariant::mult_concat:
      concat_block_ = TransformerBlock::create(store, prefix + ".block", dim, config_.heads,
                                               dim * kConcatMlpRatio, true, init);
      break;
    case FusionVariant::add:
    case FusionVariant::none:
      break;
  }
  require(config_.ita_dim == 0 || config_.variant == FusionVariant::bottleneck, ErrorKind::config,
          "the temporal adaptor lives in the bottleneck latent");
}

FusionOutput FusionBlock::operator()(Var vision, Var audio, const TokenLayout& layout) const {
  Var gate = tanh(vision.tape().param(*alpha_));
  switch (config_.variant) {
    case FusionVariant::bottleneck:
      return fusion_bottleneck(vision, audio, gate, bottleneck_, layout, config_, ita());
    case FusionVariant::add:
      return fusion_add(vision, audio, gate, layout);
    case FusionVariant::mult:
      return fusion_mult(vision, audio, gate, to_vision_, to_audio_, layout);
    case FusionVariant::mult_concat:
      return fusion_mult_concat(vision, audio, gate, concat_block_, layout);
    case FusionVariant::none:
      break;
  }
  return {vision, audio};
}

}  // namespace mma

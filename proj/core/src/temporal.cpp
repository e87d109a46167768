// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/temporal.hpp"

#include "mmadapt/error.hpp"

namespace mma {

Var assemble_temporal(Var frame_tokens, Var audio_tokens, std::size_t frames) {
  require(frame_tokens.valid() || audio_tokens.valid(), ErrorKind::contract,
          "temporal assembly needs at least one modality");
  require(frames > 0, ErrorKind::config, "frame count must be positive");
  if (!frame_tokens.valid()) {
    const std::size_t b = audio_tokens.dim(0), d = audio_tokens.dim(2);
    return broadcast_to(slice(audio_tokens, 1, 0, 1), {b, frames, d});
  }
  require(frame_tokens.value().rank() == 3 && frame_tokens.dim(0) % frames == 0,
          ErrorKind::dimension,
          "frame tokens " + shape_str(frame_tokens.shape()) + " do not split into " +
              std::to_string(frames) + " frames");
  const std::size_t b = frame_tokens.dim(0) / frames, d = frame_tokens.dim(2);
  Var seq = reshape(slice(frame_tokens, 1, 0, 1), {b, frames, d});
  if (!audio_tokens.valid()) return seq;
  require(audio_tokens.dim(0) == b && audio_tokens.dim(2) == d, ErrorKind::dimension,
          "audio tokens " + shape_str(audio_tokens.shape()) + " do not match " +
              std::to_string(b) + " clips of width " + std::to_string(d));
  return add(seq, slice(audio_tokens, 1, 0, 1));
}

ItaBlock::ItaBlock(ParamStore& store, const std::string& prefix, std::size_t in_dim,
                   std::size_t ita_dim, std::size_t heads)
    : in_dim_(in_dim), ita_dim_(ita_dim) {
  require(in_dim > 0 && ita_dim > 0, ErrorKind::config, "adaptor widths must be positive");
  require(heads > 0 && ita_dim % heads == 0, ErrorKind::config,
          "adaptor width " + std::to_string(ita_dim) + " not divisible by " +
              std::to_string(heads) + " heads");
  const WeightInit init{};
  norm_ = LayerNorm::create(store, prefix + ".norm", in_dim, true);
  if (ita_dim != in_dim) {
    down_ = Linear::create(store, prefix + ".down", in_dim, ita_dim, true, init);
    up_ = Linear::create(store, prefix + ".up", ita_dim, in_dim, true, init);
  }
  attn_ = MultiHeadAttention::create(store, prefix + ".attn", ita_dim, ita_dim, heads, true, init);
}

Var ItaBlock::operator()(Var cls) const {
  require(cls.value().rank() == 3 && cls.dim(2) == in_dim_, ErrorKind::dimension,
          "adaptor expects [B, t, " + std::to_string(in_dim_) + "], got " +
              shape_str(cls.shape()));
  Var x = norm_(cls);
  if (down_.weight) x = down_(x);
  Var y = attn_(x, x);
  return up_.weight ? up_(y) : y;
}

TemporalHead::TemporalHead(ParamStore& store, const std::string& prefix, TemporalHeadConfig config)
    : config_(config) {
  require(config_.in_dim > 0 && config_.dim > 0 && config_.frames > 0 && config_.classes > 0,
          ErrorKind::config, "temporal head sizes must be positive");
  const WeightInit init{config_.init_std, false};
  const std::size_t dt = config_.dim;
  jam_ = Linear::create(store, prefix + ".jam", config_.in_dim, dt, true, init);
  if (config_.use_mtt) {
    temporal_emb_ = &store.add(prefix + ".mtt.temporal_embed", {config_.frames, dt}, true,
                               Init::zeros());
    cls_ = &store.add(prefix + ".mtt.cls_token", {1, 1, dt}, true, Init::normal(config_.init_std));
    block_ = TransformerBlock::create(store, prefix + ".mtt.block", dt, config_.heads,
                                      dt * config_.mlp_ratio, true, init);
    norm_ = LayerNorm::create(store, prefix + ".mtt.norm", dt, true);
  }
  classifier_ = Linear::create(store, prefix + ".classifier", dt, config_.classes, true, init);
}

Var TemporalHead::jam(Var seq) const {
  require(seq.value().rank() == 3 && seq.dim(2) == config_.in_dim, ErrorKind::dimension,
          "joint adaptation expects [B, t, " + std::to_string(config_.in_dim) + "], got " +
              shape_str(seq.shape()));
  return jam_(seq);
}

Var TemporalHead::mtt(Var seq) const {
  require(config_.use_mtt, ErrorKind::contract, "temporal transformer disabled");
  require(seq.value().rank() == 3 && seq.dim(2) == config_.dim, ErrorKind::dimension,
          "temporal transformer expects [B, t, " + std::to_string(config_.dim) + "], got " +
              shape_str(seq.shape()));
  require(seq.dim(1) == config_.frames, ErrorKind::config,
          "temporal transformer built for " + std::to_string(config_.frames) + " frames, got " +
              std::to_string(seq.dim(1)));
  Tape& tape = seq.tape();
  const std::size_t b = seq.dim(0);
  Var x = add(seq, tape.param(*temporal_emb_));
  x = concat(broadcast_to(tape.param(*cls_), {b, 1, config_.dim}), x, 1);
  x = norm_(block_(x));
  return classifier_(reshape(slice(x, 1, 0, 1), {b, config_.dim}));
}

Var TemporalHead::average(Var seq) const {
  const std::size_t b = seq.dim(0);
  return classifier_(reshape(mean(seq, 1), {b, config_.dim}));
}

Var TemporalHead::operator()(Var seq) const {
  Var z = jam(seq);
  return config_.use_mtt ? mtt(z) : average(z);
}

}  // namespace mma

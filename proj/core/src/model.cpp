// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/model.hpp"

#include "mmadapt/error.hpp"

namespace mma {

std::size_t ParamBreakdown::get(const std::string& group) const {
  auto it = groups.find(group);
  return it == groups.end() ? 0 : it->second;
}

std::string param_group(const std::string& name) {
  auto has = [&](const char* s) { return name.find(s) != std::string::npos; };
  auto starts = [&](const char* s) { return name.rfind(s, 0) == 0; };
  if (has(".ita.")) return "ita";
  if (starts("fusion.")) return "fusion";
  if (has(".prompts.")) return "prompts";
  if (has(".pos_embed")) return "positional";
  if (starts("head.jam")) return "jam";
  if (starts("head.mtt")) return "mtt";
  if (starts("head.classifier")) return "classifier";
  return {};
}

namespace {

EncoderConfig encoder_config(const ModelConfig& c, EncoderModality m) {
  EncoderConfig e;
  e.modality = m;
  e.depth = c.depth;
  e.dim = c.dim;
  e.heads = c.heads;
  e.mlp_ratio = c.mlp_ratio;
  e.patch_size = c.patch_size;
  e.init_gain = c.encoder_init_gain;
  if (m == EncoderModality::vision) {
    e.grid_rows = c.vision_grid_rows();
    e.grid_cols = c.vision_grid_cols();
    e.in_channels = c.channels;
  } else {
    e.grid_rows = c.audio_grid_rows();
    e.grid_cols = c.audio_grid_cols();
    e.in_channels = 1;
  }
  return e;
}

}  // namespace

Tensor video_patches(const Tensor& video, std::size_t patch_size) {
  require(video.rank() == 5, ErrorKind::dimension,
          "video must be [B, t, C, H, W], got " + shape_str(video.shape()));
  const Shape& s = video.shape();
  return patchify(video.reshaped({s[0] * s[1], s[2], s[3], s[4]}), patch_size);
}

Tensor audio_patches(const Tensor& audio, std::size_t patch_size) {
  require(audio.rank() == 3, ErrorKind::dimension,
          "spectrogram must be [B, F, T], got " + shape_str(audio.shape()));
  const Shape& s = audio.shape();
  return patchify(audio.reshaped({s[0], 1, s[1], s[2]}), patch_size);
}

Model::Model(ModelConfig config, std::uint64_t seed, bool materialize)
    : config_(std::move(config)), store_(seed, materialize) {
  config_.validate();
  const ModelConfig& c = config_;
  PromptConfig pc{c.num_prompts, c.prompt_layers, c.prompt_init_std};
  if (c.has_vision()) {
    vision_.emplace(store_, "vision", encoder_config(c, EncoderModality::vision));
    vision_prompts_.emplace(store_, "vision.prompts", c.dim, pc, c.depth);
  }
  if (c.has_audio()) {
    audio_.emplace(store_, "audio", encoder_config(c, EncoderModality::audio));
    audio_prompts_.emplace(store_, "audio.prompts", c.dim, pc, c.depth);
  }
  if (vision_ && audio_) check_encoder_pair(vision_->config(), audio_->config());
  if (c.fusion_active()) {
    FusionConfig fc{c.fusion,      c.latent_dim,           c.fusion_heads, c.pool_include_cls,
                    c.pool_include_prompts, c.ita_dim, c.ita_heads};
    for (std::size_t layer : c.fusion_layers)
      fusion_.emplace(layer, std::make_unique<FusionBlock>(
                                 store_, "fusion." + std::to_string(layer), c.dim, fc));
  }
  TemporalHeadConfig hc{c.dim,    c.temporal_dim, c.temporal_heads, c.temporal_mlp_ratio,
                        c.frames, c.num_classes,  c.use_mtt,        c.head_init_std};
  head_ = std::make_unique<TemporalHead>(store_, "head", hc);
}

const FusionBlock* Model::fusion_at(std::size_t layer) const {
  auto it = fusion_.find(layer);
  return it == fusion_.end() ? nullptr : it->second.get();
}

void Model::check_batch(const Batch& batch) const {
  const ModelConfig& c = config_;
  const std::size_t b = batch.size();
  require(b > 0, ErrorKind::dimension, "empty batch");
  if (c.has_vision()) {
    const Shape want{b, c.frames, c.channels, c.image_height, c.image_width};
    require(batch.video.shape() == want, ErrorKind::dimension,
            "video batch " + shape_str(batch.video.shape()) + ", expected " + shape_str(want));
  }
  if (c.has_audio()) {
    const Shape want{b, c.spec_bins, c.spec_frames};
    require(batch.audio.shape() == want, ErrorKind::dimension,
            "audio batch " + shape_str(batch.audio.shape()) + ", expected " + shape_str(want));
  }
}

Var Model::forward(Tape& tape, const Batch& batch) const {
  check_batch(batch);
  const ModelConfig& c = config_;
  Var v, a;
  std::optional<PromptBank::Pass> vp, ap;
  if (vision_) {
    vp.emplace(vision_prompts_->begin_pass());
    v = vp->append(vision_->embed(tape, video_patches(batch.video, c.patch_size)));
  }
  if (audio_) {
    ap.emplace(audio_prompts_->begin_pass());
    a = ap->append(audio_->embed(tape, audio_patches(batch.audio, c.patch_size)));
  }
  for (std::size_t l = 1; l <= c.depth; ++l) {
    if (vision_) v = vp->after_layer(l, vision_->block(l, v));
    if (audio_) a = ap->after_layer(l, audio_->block(l, a));
    if (const FusionBlock* f = fusion_at(l)) {
      TokenLayout layout{c.frames, vision_->tokens(), audio_->tokens(), c.num_prompts};
      FusionOutput out = (*f)(v, a, layout);
      v = out.vision;
      a = out.audio;
    }
  }
  if (vision_) v = strip_prompts(vision_->final_norm(v), vp->rows());
  if (audio_) a = strip_prompts(audio_->final_norm(a), ap->rows());
  return (*head_)(assemble_temporal(v, a, c.frames));
}

ParamBreakdown Model::trainable_breakdown() const {
  ParamBreakdown out;
  for (const Parameter& p : store_.all()) {
    if (!p.trainable) continue;
    std::string g = param_group(p.name);
    require(!g.empty(), ErrorKind::contract, "trainable parameter '" + p.name + "' has no group");
    out.groups[g] += p.numel();
    out.total += p.numel();
  }
  return out;
}

ParamBreakdown count_trainable_params(const ModelConfig& config) {
  return Model(config, 0, false).trainable_breakdown();
}

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmadapt/encoder.hpp"
#include "mmadapt/fusion.hpp"
#include "mmadapt/model_config.hpp"
#include "mmadapt/prompts.hpp"
#include "mmadapt/temporal.hpp"

namespace mma {

/// One mini-batch. `video` is [B, t, C, H, W], `audio` is [B, F, T].
struct Batch {
  Tensor video;
  Tensor audio;
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
};

/// Trainable parameter counts by group.
struct ParamBreakdown {
  std::map<std::string, std::size_t> groups;
  std::size_t total = 0;

  std::size_t get(const std::string& group) const;
};

/// Group a trainable parameter belongs to, from its name; empty when the
/// name is outside every adapted module.
std::string param_group(const std::string& name);

/// Frozen audio and vision encoders with prompts, fusion and the temporal head.
class Model {
 public:
  /// With `materialize` false only names and shapes are recorded.
  Model(ModelConfig config, std::uint64_t seed, bool materialize = true);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  /// Logits [B, K].
  Var forward(Tape& tape, const Batch& batch) const;

  const Encoder* vision_encoder() const { return vision_ ? &*vision_ : nullptr; }
  const Encoder* audio_encoder() const { return audio_ ? &*audio_ : nullptr; }
  const PromptBank* vision_prompts() const { return vision_prompts_ ? &*vision_prompts_ : nullptr; }
  const PromptBank* audio_prompts() const { return audio_prompts_ ? &*audio_prompts_ : nullptr; }
  /// Fusion block after `layer` (1-based), if any.
  const FusionBlock* fusion_at(std::size_t layer) const;
  const TemporalHead& head() const { return *head_; }

  ParamBreakdown trainable_breakdown() const;

 private:
  void check_batch(const Batch& batch) const;

  ModelConfig config_;
  ParamStore store_;
  std::optional<Encoder> vision_, audio_;
  std::optional<PromptBank> vision_prompts_, audio_prompts_;
  std::map<std::size_t, std::unique_ptr<FusionBlock>> fusion_;
  std::unique_ptr<TemporalHead> head_;
};

/// Parameter accounting for a configuration without allocating weights.
ParamBreakdown count_trainable_params(const ModelConfig& config);

/// Moves a batch of frames [B, t, C, H, W] to per-frame patches [B*t, N, P].
Tensor video_patches(const Tensor& video, std::size_t patch_size);
/// [B, F, T] -> [B, N, ps*ps]
Tensor audio_patches(const Tensor& audio, std::size_t patch_size);

}  // namespace mma

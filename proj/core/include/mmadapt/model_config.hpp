// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mma {

enum class FusionVariant { none, add, mult, mult_concat, bottleneck };
enum class ModalityMode { multimodal, audio_only, vision_only };

std::string_view to_string(FusionVariant v);
std::string_view to_string(ModalityMode m);
std::optional<FusionVariant> parse_fusion_variant(std::string_view s);
std::optional<ModalityMode> parse_modality(std::string_view s);

/// Every architectural hyperparameter of the adapted model.
struct ModelConfig {
  // Frozen unimodal encoders (shared geometry: both are ViT-style, same depth).
  std::size_t dim = 32;
  std::size_t depth = 4;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  std::size_t patch_size = 16;
  std::size_t image_height = 32;
  std::size_t image_width = 32;
  std::size_t channels = 1;
  std::size_t spec_bins = 32;    // F
  std::size_t spec_frames = 64;  // T
  /// Frozen weights are N(0, gain^2 / fan_in).
  double encoder_init_gain = 1.0;

  // Learnable prompts, per modality.
  std::size_t num_prompts = 6;
  std::vector<std::size_t> prompt_layers = {1, 3};
  double prompt_init_std = 0.02;

  // Cross-modal fusion.
  FusionVariant fusion = FusionVariant::bottleneck;
  std::vector<std::size_t> fusion_layers = {1, 2, 3, 4};
  std::size_t latent_dim = 6;
  std::size_t fusion_heads = 2;
  bool pool_include_cls = true;
  bool pool_include_prompts = true;

  // Temporal head.
  std::size_t frames = 4;
  std::size_t temporal_dim = 32;
  std::size_t temporal_heads = 4;
  std::size_t temporal_mlp_ratio = 2;
  bool use_mtt = true;
  /// Intermediate temporal adaptor width; 0 disables it.
  std::size_t ita_dim = 0;
  std::size_t ita_heads = 1;

  std::size_t num_classes = 7;
  ModalityMode modality = ModalityMode::multimodal;
  double head_init_std = 0.1;

  /// Throws a config error naming the offending field.
  void validate() const;

  std::size_t vision_grid_rows() const { return image_height / patch_size; }
  std::size_t vision_grid_cols() const { return image_width / patch_size; }
  std::size_t audio_grid_rows() const { return spec_bins / patch_size; }
  std::size_t audio_grid_cols() const { return spec_frames / patch_size; }
  std::size_t vision_patches() const { return vision_grid_rows() * vision_grid_cols(); }
  std::size_t audio_patches() const { return audio_grid_rows() * audio_grid_cols(); }
  bool has_vision() const { return modality != ModalityMode::audio_only; }
  bool has_audio() const { return modality != ModalityMode::vision_only; }
  bool fusion_active() const {
    return modality == ModalityMode::multimodal && fusion != FusionVariant::none;
  }

  /// Desk-scale defaults: trains in well under a minute on one core.
  static ModelConfig toy();
  /// ViT-base encoders at 224 px with the published adaptation settings;
  /// intended for parameter accounting.
  static ModelConfig paper_scale();

  bool operator==(const ModelConfig&) const = default;
};

/// Evenly spaced progressive-prompt hook layers: 1 + floor(k * depth / count).
/// Empty when count is 0; nullopt when count exceeds depth.
std::optional<std::vector<std::size_t>> spaced_hook_layers(std::size_t count, std::size_t depth);

}  // namespace mma

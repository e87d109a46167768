// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/model_config.hpp"

#include <numeric>

#include "mmadapt/error.hpp"

namespace mma {

std::string_view to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::none: return "none";
    case FusionVariant::add: return "add";
    case FusionVariant::mult: return "mult";
    case FusionVariant::mult_concat: return "mult_concat";
    case FusionVariant::bottleneck: return "bottleneck";
  }
  return "none";
}

std::string_view to_string(ModalityMode m) {
  switch (m) {
    case ModalityMode::multimodal: return "multimodal";
    case ModalityMode::audio_only: return "audio_only";
    case ModalityMode::vision_only: return "vision_only";
  }
  return "multimodal";
}

std::optional<FusionVariant> parse_fusion_variant(std::string_view s) {
  for (auto v : {FusionVariant::none, FusionVariant::add, FusionVariant::mult,
                 FusionVariant::mult_concat, FusionVariant::bottleneck})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

std::optional<ModalityMode> parse_modality(std::string_view s) {
  for (auto m : {ModalityMode::multimodal, ModalityMode::audio_only, ModalityMode::vision_only})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

namespace {

void check_layers(const std::vector<std::size_t>& layers, std::size_t depth,
                  const std::string& field) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    require(layers[i] >= 1 && layers[i] <= depth, ErrorKind::config,
            field + ": layer " + std::to_string(layers[i]) + " outside [1, " +
                std::to_string(depth) + "]");
    require(i == 0 || layers[i] > layers[i - 1], ErrorKind::config,
            field + ": layers must be strictly increasing");
  }
}

void positive(std::size_t v, const std::string& field) {
  require(v > 0, ErrorKind::config, field + " must be positive");
}

}  // namespace

void ModelConfig::validate() const {
  positive(dim, "dim");
  positive(depth, "depth");
  positive(heads, "heads");
  positive(mlp_ratio, "mlp_ratio");
  positive(patch_size, "patch_size");
  positive(channels, "channels");
  positive(frames, "frames");
  positive(temporal_dim, "temporal_dim");
  positive(temporal_heads, "temporal_heads");
  positive(temporal_mlp_ratio, "temporal_mlp_ratio");
  positive(num_classes, "num_classes");
  require(dim % heads == 0, ErrorKind::config, "dim must be divisible by heads");
  require(temporal_dim % temporal_heads == 0, ErrorKind::config,
          "temporal_dim must be divisible by temporal_heads");
  require(image_height > 0 && image_width > 0 && image_height % patch_size == 0 &&
              image_width % patch_size == 0,
          ErrorKind::config,
          "image " + std::to_string(image_height) + "x" + std::to_string(image_width) +
              " not divisible by patch_size " + std::to_string(patch_size));
  require(spec_bins > 0 && spec_frames > 0 && spec_bins % patch_size == 0 &&
              spec_frames % patch_size == 0,
          ErrorKind::config,
          "spectrogram " + std::to_string(spec_bins) + "x" + std::to_string(spec_frames) +
              " not divisible by patch_size " + std::to_string(patch_size));
  require(encoder_init_gain > 0.0, ErrorKind::config, "encoder_init_gain must be positive");

  check_layers(prompt_layers, depth, "prompt_layers");
  if (!prompt_layers.empty())
    require(num_prompts % prompt_layers.size() == 0, ErrorKind::config,
            "num_prompts " + std::to_string(num_prompts) + " is not a multiple of the " +
                std::to_string(prompt_layers.size()) + " prompt layers");
  require(prompt_layers.empty() || num_prompts > 0, ErrorKind::config,
          "prompt_layers given but num_prompts is 0");

  check_layers(fusion_layers, depth, "fusion_layers");
  if (fusion == FusionVariant::bottleneck || fusion == FusionVariant::mult) {
    positive(latent_dim, "latent_dim");
    require(latent_dim < dim, ErrorKind::config, "latent_dim must be smaller than dim");
  }
  if (fusion == FusionVariant::mult || fusion == FusionVariant::mult_concat) {
    positive(fusion_heads, "fusion_heads");
    const std::size_t width = fusion == FusionVariant::mult ? latent_dim : dim;
    require(width % fusion_heads == 0, ErrorKind::config,
            "fusion attention width not divisible by fusion_heads");
  }
  if (ita_dim > 0) {
    require(fusion == FusionVariant::bottleneck && modality == ModalityMode::multimodal,
            ErrorKind::config, "ita_dim requires multimodal bottleneck fusion");
    positive(ita_heads, "ita_heads");
    require(ita_dim % ita_heads == 0, ErrorKind::config, "ita_dim not divisible by ita_heads");
  }
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::paper_scale() {
  ModelConfig c;
  c.dim = 768;
  c.depth = 12;
  c.heads = 12;
  c.mlp_ratio = 4;
  c.patch_size = 16;
  c.image_height = 224;
  c.image_width = 224;
  c.channels = 3;
  c.spec_bins = 128;
  c.spec_frames = 512;
  c.num_prompts = 6;
  c.prompt_layers = {1, 7};
  c.fusion = FusionVariant::bottleneck;
  c.fusion_layers.resize(12);
  std::iota(c.fusion_layers.begin(), c.fusion_layers.end(), std::size_t{1});
  c.latent_dim = 128;
  c.fusion_heads = 2;
  c.frames = 16;
  c.temporal_dim = 512;
  c.temporal_heads = 8;
  c.temporal_mlp_ratio = 2;
  c.ita_heads = 2;
  c.num_classes = 7;
  c.head_init_std = 0.02;
  return c;
}

std::optional<std::vector<std::size_t>> spaced_hook_layers(std::size_t count, std::size_t depth) {
  if (count > depth) return std::nullopt;
  std::vector<std::size_t> layers;
  for (std::size_t k = 0; k < count; ++k) layers.push_back(1 + k * depth / count);
  return layers;
}

}  // namespace mma

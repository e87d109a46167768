// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mmadapt/layers.hpp"

namespace mma {

enum class EncoderModality { vision, audio };

struct EncoderConfig {
  EncoderModality modality = EncoderModality::vision;
  std::size_t depth = 4;
  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  std::size_t patch_size = 16;
  std::size_t grid_rows = 2;
  std::size_t grid_cols = 2;
  std::size_t in_channels = 1;
  double init_gain = 1.0;

  std::size_t num_patches() const { return grid_rows * grid_cols; }
  std::size_t patch_dim() const { return in_channels * patch_size * patch_size; }
  void validate() const;
};

/// The adapter hooks at the same depths on both branches, so the encoders
/// must agree on depth and width.
void check_encoder_pair(const EncoderConfig& vision, const EncoderConfig& audio);

/// [G, C, H, W] -> [G, N, C*ps*ps]. Patches are taken row-major over the grid;
/// within a patch the layout is (channel, row, col).
Tensor patchify(const Tensor& images, std::size_t patch_size);
/// Inverse of patchify.
Tensor unpatchify(const Tensor& patches, std::size_t channels, std::size_t height,
                  std::size_t width, std::size_t patch_size);

/// Grid index (row, col) of flat patch index `p`.
struct GridIndex {
  std::size_t row;
  std::size_t col;
};
GridIndex patch_grid_index(std::size_t p, std::size_t grid_cols);

/// Bilinear resampling of a [1 + g1*g2, d] positional table to a new grid.
/// The CLS row is copied; corner cells map onto corner cells.
Tensor interpolate_pos_embed(const Tensor& pos, std::size_t rows, std::size_t cols,
                             std::size_t new_rows, std::size_t new_cols);

/// Frozen ViT-style encoder. Only the positional table is trainable.
class Encoder {
 public:
  Encoder(ParamStore& store, const std::string& prefix, EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  std::size_t tokens() const { return 1 + config_.num_patches(); }

  /// patches [G, N, patch_dim] -> tokens [G, 1 + N, d] (CLS first).
  Var embed(Tape& tape, const Tensor& patches) const;
  /// Runs encoder layer `layer` (1-based).
  Var block(std::size_t layer, Var tokens) const;
  Var final_norm(Var tokens) const;

  Parameter& pos_embed() const { return *pos_; }
  Parameter& cls_token() const { return *cls_; }
  const Linear& patch_projection() const { return patch_proj_; }

 private:
  EncoderConfig config_;
  Linear patch_proj_;
  Parameter* cls_ = nullptr;
  Parameter* pos_ = nullptr;
  std::vector<TransformerBlock> blocks_;
  LayerNorm norm_;
};

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "mmadapt/error.hpp"

namespace mma {

void EncoderConfig::validate() const {
  require(depth > 0 && dim > 0 && heads > 0 && patch_size > 0 && in_channels > 0,
          ErrorKind::config, "encoder sizes must be positive");
  require(dim % heads == 0, ErrorKind::config, "encoder dim not divisible by heads");
  require(grid_rows > 0 && grid_cols > 0, ErrorKind::config, "encoder grid is empty");
}

void check_encoder_pair(const EncoderConfig& vision, const EncoderConfig& audio) {
  require(vision.depth == audio.depth, ErrorKind::config,
          "encoder depth mismatch: vision " + std::to_string(vision.depth) + ", audio " +
              std::to_string(audio.depth));
  require(vision.dim == audio.dim, ErrorKind::config,
          "encoder width mismatch: vision " + std::to_string(vision.dim) + ", audio " +
              std::to_string(audio.dim));
}

Tensor patchify(const Tensor& images, std::size_t ps) {
  require(images.rank() == 4, ErrorKind::dimension,
          "patchify expects [G, C, H, W], got " + shape_str(images.shape()));
  const std::size_t g = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  require(ps > 0 && h % ps == 0 && w % ps == 0, ErrorKind::config,
          std::to_string(h) + "x" + std::to_string(w) + " is not divisible by patch size " +
              std::to_string(ps));
  const std::size_t gr = h / ps, gc = w / ps, pd = c * ps * ps;
  Tensor out({g, gr * gc, pd});
  const double* src = images.ptr();
  double* dst = out.ptr();
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t r = 0; r < gr; ++r)
      for (std::size_t q = 0; q < gc; ++q) {
        double* patch = dst + ((i * gr + r) * gc + q) * pd;
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t y = 0; y < ps; ++y) {
            const double* row = src + ((i * c + ch) * h + r * ps + y) * w + q * ps;
            std::copy(row, row + ps, patch + (ch * ps + y) * ps);
          }
      }
  return out;
}

Tensor unpatchify(const Tensor& patches, std::size_t c, std::size_t h, std::size_t w,
                  std::size_t ps) {
  require(patches.rank() == 3, ErrorKind::dimension, "unpatchify expects [G, N, P]");
  require(ps > 0 && h % ps == 0 && w % ps == 0, ErrorKind::config,
          "image size not divisible by patch size");
  const std::size_t g = patches.dim(0), gr = h / ps, gc = w / ps, pd = c * ps * ps;
  require(patches.dim(1) == gr * gc && patches.dim(2) == pd, ErrorKind::dimension,
          "patch tensor " + shape_str(patches.shape()) + " does not match image geometry");
  Tensor out({g, c, h, w});
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t r = 0; r < gr; ++r)
      for (std::size_t q = 0; q < gc; ++q) {
        const double* patch = patches.ptr() + ((i * gr + r) * gc + q) * pd;
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t y = 0; y < ps; ++y) {
            double* row = out.ptr() + ((i * c + ch) * h + r * ps + y) * w + q * ps;
            std::copy(patch + (ch * ps + y) * ps, patch + (ch * ps + y + 1) * ps, row);
          }
      }
  return out;
}

GridIndex patch_grid_index(std::size_t p, std::size_t grid_cols) {
  return {p / grid_cols, p % grid_cols};
}

namespace {

// Source coordinate of target cell i when resampling n -> m cells.
double source_coord(std::size_t i, std::size_t n, std::size_t m) {
  if (m == 1) return 0.5 * static_cast<double>(n - 1);
  return static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(m - 1);
}

}  // namespace

Tensor interpolate_pos_embed(const Tensor& pos, std::size_t rows, std::size_t cols,
                             std::size_t new_rows, std::size_t new_cols) {
  require(pos.rank() == 2 && pos.dim(0) == 1 + rows * cols, ErrorKind::dimension,
          "positional table " + shape_str(pos.shape()) + " does not match grid " +
              std::to_string(rows) + "x" + std::to_string(cols));
  require(new_rows > 0 && new_cols > 0, ErrorKind::config, "empty target grid");
  const std::size_t d = pos.dim(1);
  Tensor out({1 + new_rows * new_cols, d});
  std::copy(pos.ptr(), pos.ptr() + d, out.ptr());
  for (std::size_t r = 0; r < new_rows; ++r) {
    const double y = source_coord(r, rows, new_rows);
    const std::size_t y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t y1 = std::min(y0 + 1, rows - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < new_cols; ++c) {
      const double x = source_coord(c, cols, new_cols);
      const std::size_t x0 = static_cast<std::size_t>(std::floor(x));
      const std::size_t x1 = std::min(x0 + 1, cols - 1);
      const double fx = x - static_cast<double>(x0);
      const double* p00 = pos.ptr() + (1 + y0 * cols + x0) * d;
      const double* p01 = pos.ptr() + (1 + y0 * cols + x1) * d;
      const double* p10 = pos.ptr() + (1 + y1 * cols + x0) * d;
      const double* p11 = pos.ptr() + (1 + y1 * cols + x1) * d;
      double* o = out.ptr() + (1 + r * new_cols + c) * d;
      for (std::size_t k = 0; k < d; ++k)
        o[k] = (1 - fy) * ((1 - fx) * p00[k] + fx * p01[k]) + fy * ((1 - fx) * p10[k] + fx * p11[k]);
    }
  }
  out.round_to_precision();
  return out;
}

Encoder::Encoder(ParamStore& store, const std::string& prefix, EncoderConfig config)
    : config_(config) {
  config_.validate();
  const WeightInit frozen{config_.init_gain, true};
  const std::size_t d = config_.dim;
  patch_proj_ = Linear::create(store, prefix + ".patch_embed", config_.patch_dim(), d, false, frozen);
  cls_ = &store.add(prefix + ".cls_token", {1, 1, d}, false, Init::normal(0.02));
  pos_ = &store.add(prefix + ".pos_embed", {tokens(), d}, true, Init::normal(0.02));
  blocks_.reserve(config_.depth);
  for (std::size_t l = 1; l <= config_.depth; ++l)
    blocks_.push_back(TransformerBlock::create(store, prefix + ".blocks." + std::to_string(l), d,
                                               config_.heads, d * config_.mlp_ratio, false, frozen));
  norm_ = LayerNorm::create(store, prefix + ".norm", d, false);
}

Var Encoder::embed(Tape& tape, const Tensor& patches) const {
  require(patches.rank() == 3 && patches.dim(1) == config_.num_patches() &&
              patches.dim(2) == config_.patch_dim(),
          ErrorKind::dimension,
          "encoder expects patches [G, " + std::to_string(config_.num_patches()) + ", " +
              std::to_string(config_.patch_dim()) + "], got " + shape_str(patches.shape()));
  const std::size_t g = patches.dim(0);
  Var x = patch_proj_(tape.constant(patches));
  Var cls = broadcast_to(tape.param(*cls_), {g, 1, config_.dim});
  return add(concat(cls, x, 1), tape.param(*pos_));
}

Var Encoder::block(std::size_t layer, Var tokens) const {
  require(layer >= 1 && layer <= blocks_.size(), ErrorKind::contract,
          "encoder layer " + std::to_string(layer) + " out of range");
  return blocks_[layer - 1](tokens);
}

Var Encoder::final_norm(Var tokens) const { return norm_(tokens); }

}  // namespace mma

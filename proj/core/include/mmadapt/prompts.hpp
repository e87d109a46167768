// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mmadapt/layers.hpp"

namespace mma {

struct PromptConfig {
  /// Total prompt rows M appended to every token sequence.
  std::size_t count = 0;
  /// 1-based encoder layers after which the progressive update runs. With c
  /// hooks each update rewrites M / c rows.
  std::vector<std::size_t> hook_layers;
  double init_std = 0.02;

  std::size_t slice_size() const { return hook_layers.empty() ? 0 : count / hook_layers.size(); }
  void validate(std::size_t depth) const;
};

/// Learnable prompts for one modality: a base bank P^0 [M, d] appended
/// after embedding, plus one progressive bank P^k [M/c, d] per hook.
class PromptBank {
 public:
  PromptBank(ParamStore& store, const std::string& prefix, std::size_t dim, PromptConfig config,
             std::size_t depth);

  const PromptConfig& config() const { return config_; }
  std::size_t size() const { return config_.count; }
  /// Hook index k (0-based) for an encoder layer, if that layer is a hook.
  std::optional<std::size_t> hook_index(std::size_t layer) const;

  Parameter& base() const { return *base_; }
  Parameter& progressive(std::size_t k) const { return *progressive_.at(k); }

  /// tokens [G, n, d] -> [G, n + M, d]; identity when M is 0.
  Var append(Var tokens) const;
  /// Adds P^k into rows [n + k*M/c, n + (k+1)*M/c) of the prompt suffix.
  Var update(Var tokens, std::size_t k) const;

  /// Per-forward bookkeeping: appends once and fires each hook at most once.
  class Pass {
   public:
    explicit Pass(const PromptBank& bank) : bank_(&bank), fired_(bank.config_.hook_layers.size()) {}
    Var append(Var tokens);
    /// Runs the progressive update when `layer` is a hook; no-op otherwise.
    Var after_layer(std::size_t layer, Var tokens);
    /// Prompt rows currently carried by the sequence.
    std::size_t rows() const { return appended_ ? bank_->size() : 0; }
    std::size_t rows_updated() const { return rows_updated_; }

   private:
    const PromptBank* bank_;
    std::vector<bool> fired_;
    bool appended_ = false;
    std::size_t rows_updated_ = 0;
  };

  Pass begin_pass() const { return Pass(*this); }

 private:
  PromptConfig config_;
  std::size_t dim_;
  Parameter* base_ = nullptr;
  std::vector<Parameter*> progressive_;
};

/// Drops the trailing `count` prompt rows along the token axis.
Var strip_prompts(Var tokens, std::size_t count);

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/prompts.hpp"

#include <algorithm>

#include "mmadapt/error.hpp"

namespace mma {

void PromptConfig::validate(std::size_t depth) const {
  for (std::size_t i = 0; i < hook_layers.size(); ++i) {
    require(hook_layers[i] >= 1 && hook_layers[i] <= depth, ErrorKind::config,
            "prompt hook layer " + std::to_string(hook_layers[i]) + " outside [1, " +
                std::to_string(depth) + "]");
    require(i == 0 || hook_layers[i] > hook_layers[i - 1], ErrorKind::config,
            "prompt hook layers must be strictly increasing");
  }
  if (!hook_layers.empty()) {
    require(count > 0, ErrorKind::config, "prompt hooks need at least one prompt");
    require(count % hook_layers.size() == 0, ErrorKind::config,
            "prompt count " + std::to_string(count) + " is not a multiple of " +
                std::to_string(hook_layers.size()) + " hooks");
  }
}

PromptBank::PromptBank(ParamStore& store, const std::string& prefix, std::size_t dim,
                       PromptConfig config, std::size_t depth)
    : config_(std::move(config)), dim_(dim) {
  config_.validate(depth);
  if (config_.count == 0) return;
  const Init init = Init::normal(config_.init_std);
  base_ = &store.add(prefix + ".base", {config_.count, dim}, true, init);
  for (std::size_t k = 0; k < config_.hook_layers.size(); ++k)
    progressive_.push_back(&store.add(prefix + ".progressive." + std::to_string(k + 1),
                                      {config_.slice_size(), dim}, true, init));
}

std::optional<std::size_t> PromptBank::hook_index(std::size_t layer) const {
  const auto& h = config_.hook_layers;
  auto it = std::find(h.begin(), h.end(), layer);
  if (it == h.end()) return std::nullopt;
  return static_cast<std::size_t>(it - h.begin());
}

Var PromptBank::append(Var tokens) const {
  if (config_.count == 0) return tokens;
  require(tokens.value().rank() == 3 && tokens.dim(2) == dim_, ErrorKind::dimension,
          "prompt append expects [G, n, " + std::to_string(dim_) + "], got " +
              shape_str(tokens.shape()));
  const std::size_t g = tokens.dim(0);
  Var p = broadcast_to(tokens.tape().param(*base_), {g, config_.count, dim_});
  return concat(tokens, p, 1);
}

Var PromptBank::update(Var tokens, std::size_t k) const {
  require(k < progressive_.size(), ErrorKind::contract, "prompt hook index out of range");
  const std::size_t n = tokens.dim(1);
  require(n >= config_.count, ErrorKind::contract, "sequence carries no prompt suffix");
  const std::size_t rows = config_.slice_size();
  const std::size_t offset = n - config_.count + k * rows;
  Var pk = broadcast_to(tokens.tape().param(*progressive_[k]), {tokens.dim(0), rows, dim_});
  return add_slice(tokens, 1, offset, pk);
}

Var PromptBank::Pass::append(Var tokens) {
  require(!appended_, ErrorKind::contract, "prompts already appended in this pass");
  appended_ = true;
  return bank_->append(tokens);
}

Var PromptBank::Pass::after_layer(std::size_t layer, Var tokens) {
  auto k = bank_->hook_index(layer);
  if (!k || bank_->size() == 0) return tokens;
  require(appended_, ErrorKind::contract, "progressive update before prompts were appended");
  require(!fired_[*k], ErrorKind::contract,
          "prompt hook at layer " + std::to_string(layer) + " fired twice");
  fired_[*k] = true;
  rows_updated_ += bank_->config_.slice_size();
  return bank_->update(tokens, *k);
}

Var strip_prompts(Var tokens, std::size_t count) {
  if (count == 0) return tokens;
  require(tokens.dim(1) > count, ErrorKind::contract, "cannot strip more rows than data tokens");
  return slice(tokens, 1, 0, tokens.dim(1) - count);
}

}  // namespace mma

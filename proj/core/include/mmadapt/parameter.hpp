// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mmadapt/tensor.hpp"

namespace mma {

/// A named model weight. `grad` stays empty until a backward pass reaches it.
struct Parameter {
  std::string name;
  Shape shape;
  Tensor value;
  Tensor grad;
  bool trainable = false;

  std::size_t numel() const { return shape_numel(shape); }
  bool materialized() const { return !value.empty(); }
  bool has_grad() const { return !grad.empty(); }
};

struct Init {
  enum class Kind { zeros, constant, normal };
  Kind kind = Kind::zeros;
  double scale = 0.0;

  static Init zeros() { return {Kind::zeros, 0.0}; }
  static Init constant(double v) { return {Kind::constant, v}; }
  static Init normal(double stddev) { return {Kind::normal, stddev}; }
};

/// Owns every parameter of a model. Each parameter draws its initial values
/// from an RNG seeded by (store seed, parameter name), so a weight's value
/// does not depend on which other modules exist or on construction order.
///
/// A non-materializing store records names and shapes only; it is used for
/// parameter accounting at scales that would not fit in memory.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 1, bool materialize = true)
      : seed_(seed), materialize_(materialize) {}

  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Parameter& add(const std::string& name, Shape shape, bool trainable, Init init);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& get(const std::string& name);

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  std::uint64_t seed() const { return seed_; }
  bool materialize() const { return materialize_; }

  void zero_grad();
  std::size_t count(bool trainable) const;

 private:
  std::uint64_t seed_;
  bool materialize_;
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

/// Stable 64-bit FNV-1a hash, used to derive per-name RNG streams.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SHA-256 hex digest of the raw stored values of the selected parameters,
/// taken in name order together with their names and shapes.
std::string parameter_digest(const ParamStore& store, bool trainable);

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "mmadapt/parameter.hpp"
#include "mmadapt/tensor.hpp"

namespace mma {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Computation trace for reverse-mode differentiation. Ops append nodes in
/// execution order, so every node's inputs precede it; backward walks the
/// nodes once in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value, bool requires_grad);
  /// Leaf that views the parameter's value; gradients flow only into
  /// trainable parameters. Repeated calls return the same node.
  Var param(Parameter& p);

  /// Appends an op output. The value is rounded to the active precision.
  /// `fn` is dropped when no input requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  const std::vector<std::uint32_t>& inputs(Var v) const { return node(v).inputs; }

  /// Gradient accumulator for `v`, allocated on first use; nullptr when `v`
  /// does not require a gradient.
  Tensor* grad_sink(Var v);
  const Tensor* grad(Var v) const;

  /// Populates gradients of every node reachable from `loss` and accumulates
  /// them into the grad buffers of trainable parameters.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  /// Number of backward closures executed by the last backward().
  std::size_t backward_visits() const { return visits_; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::vector<std::uint32_t> inputs;
    BackwardFn fn;

    const Tensor& value() const { return view ? *view : owned; }
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  Var push(Node n);

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  std::size_t visits_ = 0;
  bool backward_done_ = false;
};

}  // namespace mma

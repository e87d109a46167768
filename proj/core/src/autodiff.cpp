// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/autodiff.hpp"

#include "mmadapt/error.hpp"

namespace mma {

const Tensor& Var::value() const { return tape_->value(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

const Tape::Node& Tape::node(Var v) const {
  require(v.valid() && &v.tape() == this && v.id() < nodes_.size(), ErrorKind::contract,
          "variable does not belong to this tape");
  return nodes_[v.id()];
}

Tape::Node& Tape::node(Var v) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(v));
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) { return leaf(std::move(value), false); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  require(p.materialized(), ErrorKind::contract, "parameter '" + p.name + "' is not materialized");
  Node n;
  n.view = &p.value;
  n.requires_grad = p.trainable;
  n.param = &p;
  Var v = push(std::move(n));
  param_nodes_.emplace(&p, v.id());
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  Node n;
  value.round_to_precision();
  n.owned = std::move(value);
  n.inputs.reserve(inputs.size());
  for (Var in : inputs) {
    const Node& src = node(in);
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || src.requires_grad;
  }
  if (n.requires_grad) n.fn = std::move(fn);
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).value(); }

Tensor* Tape::grad_sink(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor(n.value().shape());
  return &n.grad;
}

const Tensor* Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::backward(Var loss) {
  const Node& root = node(loss);
  require(root.value().numel() == 1, ErrorKind::contract,
          "backward needs a scalar loss, got " + shape_str(root.value().shape()));
  require(!backward_done_, ErrorKind::contract, "backward already ran on this tape");
  backward_done_ = true;
  visits_ = 0;
  if (!root.requires_grad) return;

  Tensor* seed = grad_sink(loss);
  (*seed)[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.fn || n.grad.empty()) continue;
    // The closure may allocate grads on earlier nodes; deque keeps `n` valid.
    n.fn(n.grad);
    ++visits_;
  }
  for (auto& n : nodes_) {
    if (!n.param || !n.param->trainable || n.grad.empty()) continue;
    Parameter& p = *n.param;
    if (p.grad.empty()) p.grad = Tensor(p.shape);
    for (std::size_t j = 0; j < p.grad.numel(); ++j) p.grad[j] += n.grad[j];
    p.grad.round_to_precision();
  }
}

}  // namespace mma

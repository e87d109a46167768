// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/layers.hpp"

#include "mmadapt/error.hpp"

#include <cmath>

namespace mma {

double WeightInit::for_fan_in(std::size_t fan_in) const {
  return fan_in_scaled ? stddev / std::sqrt(static_cast<double>(fan_in)) : stddev;
}

Linear Linear::create(ParamStore& store, const std::string& prefix, std::size_t in,
                      std::size_t out, bool trainable, WeightInit init, bool with_bias) {
  Linear l;
  l.weight = &store.add(prefix + ".weight", {in, out}, trainable, Init::normal(init.for_fan_in(in)));
  if (with_bias) l.bias = &store.add(prefix + ".bias", {out}, trainable, Init::zeros());
  return l;
}

Var Linear::operator()(Var x) const {
  Tape& t = x.tape();
  return affine(x, t.param(*weight), bias ? t.param(*bias) : Var());
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& prefix, std::size_t dim,
                            bool trainable) {
  LayerNorm n;
  n.gamma = &store.add(prefix + ".gamma", {dim}, trainable, Init::constant(1.0));
  n.beta = &store.add(prefix + ".beta", {dim}, trainable, Init::zeros());
  return n;
}

Var LayerNorm::operator()(Var x) const {
  Tape& t = x.tape();
  return layer_norm(x, t.param(*gamma), t.param(*beta));
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& store, const std::string& prefix,
                                              std::size_t dim, std::size_t inner,
                                              std::size_t heads, bool trainable,
                                              WeightInit init) {
  require(heads > 0 && inner % heads == 0, ErrorKind::config,
          prefix + ": attention width " + std::to_string(inner) + " not divisible by " +
              std::to_string(heads) + " heads");
  MultiHeadAttention m;
  m.query = Linear::create(store, prefix + ".query", dim, inner, trainable, init);
  m.key = Linear::create(store, prefix + ".key", dim, inner, trainable, init);
  m.value = Linear::create(store, prefix + ".value", dim, inner, trainable, init);
  m.out = Linear::create(store, prefix + ".out", inner, dim, trainable, init);
  m.heads = heads;
  return m;
}

Var MultiHeadAttention::operator()(Var queries, Var keys_values) const {
  Var q = query(queries);
  Var k = key(keys_values);
  Var v = value(keys_values);
  return out(attention(q, k, v, heads));
}

TransformerBlock TransformerBlock::create(ParamStore& store, const std::string& prefix,
                                          std::size_t dim, std::size_t heads,
                                          std::size_t mlp_hidden, bool trainable,
                                          WeightInit init) {
  TransformerBlock b;
  b.norm1 = LayerNorm::create(store, prefix + ".norm1", dim, trainable);
  b.attn = MultiHeadAttention::create(store, prefix + ".attn", dim, dim, heads, trainable, init);
  b.norm2 = LayerNorm::create(store, prefix + ".norm2", dim, trainable);
  b.fc1 = Linear::create(store, prefix + ".mlp.fc1", dim, mlp_hidden, trainable, init);
  b.fc2 = Linear::create(store, prefix + ".mlp.fc2", mlp_hidden, dim, trainable, init);
  return b;
}

Var TransformerBlock::operator()(Var x) const {
  Var h = norm1(x);
  Var y = add(x, attn(h, h));
  return add(y, fc2(gelu(fc1(norm2(y)))));
}

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/parameter.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <memory>
#include <random>

#include "mmadapt/error.hpp"

namespace mma {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Parameter& ParamStore::add(const std::string& name, Shape shape, bool trainable, Init init) {
  require(!name.empty(), ErrorKind::config, "parameter name must not be empty");
  require(!index_.contains(name), ErrorKind::config, "duplicate parameter name '" + name + "'");

  Parameter p;
  p.name = name;
  p.shape = shape;
  p.trainable = trainable;
  if (materialize_) {
    p.value = Tensor(shape);
    switch (init.kind) {
      case Init::Kind::zeros:
        break;
      case Init::Kind::constant:
        p.value.fill(init.scale);
        break;
      case Init::Kind::normal: {
        const std::uint64_t h = fnv1a64(name);
        std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                          static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> dist(0.0, init.scale);
        for (auto& v : p.value.data()) v = dist(rng);
        break;
      }
    }
    p.value.round_to_precision();
  }
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParamStore::get(const std::string& name) {
  Parameter* p = find(name);
  require(p != nullptr, ErrorKind::config, "unknown parameter '" + name + "'");
  return *p;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad = Tensor();
}

std::size_t ParamStore::count(bool trainable) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.trainable == trainable) n += p.numel();
  return n;
}

std::string parameter_digest(const ParamStore& store, bool trainable) {
  std::vector<const Parameter*> selected;
  for (const auto& p : store.all())
    if (p.trainable == trainable) selected.push_back(&p);
  std::sort(selected.begin(), selected.end(),
            [](const Parameter* a, const Parameter* b) { return a->name < b->name; });

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1, ErrorKind::io,
          "sha256 init failed");
  for (const Parameter* p : selected) {
    EVP_DigestUpdate(ctx.get(), p->name.data(), p->name.size() + 1);  // includes '\0'
    for (auto e : p->shape) {
      const std::uint64_t extent = e;
      EVP_DigestUpdate(ctx.get(), &extent, sizeof extent);
    }
    if (p->materialized())
      EVP_DigestUpdate(ctx.get(), p->value.ptr(), p->value.numel() * sizeof(double));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);

  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xf]);
  }
  return hex;
}

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "mmadapt/parameter.hpp"
#include "mmadapt/tensor.hpp"

namespace mma::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double stddev = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = round_to_precision(dist(rng));
  return t;
}

inline Parameter& random_param(ParamStore& store, const std::string& name, Shape shape,
                               double stddev = 0.5) {
  return store.add(name, std::move(shape), true, Init::normal(stddev));
}

}  // namespace mma::testing

namespace mma::testing {

/// Overwrites every parameter in the store with Gaussian noise, so that
/// zero-initialised biases and gates do not hide terms from an oracle.
inline void randomize_all(ParamStore& store, std::uint64_t seed, double stddev = 0.4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (Parameter& p : store.all())
    for (double& v : p.value.data()) v = round_to_precision(dist(rng));
}

inline void zero_parameters(ParamStore& store, const std::string& prefix) {
  for (Parameter& p : store.all())
    if (p.name.rfind(prefix, 0) == 0) p.value.fill(0.0);
}

}  // namespace mma::testing

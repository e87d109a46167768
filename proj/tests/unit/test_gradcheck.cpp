// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mmadapt/error.hpp"
#include "mmadapt/gradcheck.hpp"
#include "mmadapt/layers.hpp"
#include "mmadapt/ops.hpp"
#include "test_support.hpp"

namespace mma {
namespace {

using testing::random_param;
using testing::random_tensor;

// Random projection of the output so that every coordinate matters.
Var probe(Var y, std::uint64_t seed) {
  return sum(mul(y, y.tape().constant(random_tensor(y.shape(), seed))));
}

struct Case {
  const char* name;
  std::vector<Shape> shapes;
  std::function<Var(Tape&, std::vector<Var>&)> fn;
};

std::vector<Case> op_cases() {
  return {
      {"affine", {{4, 3}, {3, 2}, {2}}, [](Tape&, auto& p) { return affine(p[0], p[1], p[2]); }},
      {"layer_norm", {{3, 5}, {5}, {5}},
       [](Tape&, auto& p) { return layer_norm(p[0], p[1], p[2]); }},
      {"gelu", {{3, 4}}, [](Tape&, auto& p) { return gelu(p[0]); }},
      {"tanh", {{3, 4}}, [](Tape&, auto& p) { return tanh(p[0]); }},
      {"softmax", {{2, 3, 4}}, [](Tape&, auto& p) { return softmax(p[0], 1); }},
      {"attention", {{2, 3, 8}, {2, 4, 8}, {2, 4, 8}},
       [](Tape&, auto& p) { return attention(p[0], p[1], p[2], 2); }},
      {"broadcast_mul", {{2, 1, 4}, {3, 1}}, [](Tape&, auto& p) { return mul(p[0], p[1]); }},
      {"mean_concat_slice", {{2, 3, 4}, {2, 2, 4}},
       [](Tape&, auto& p) { return mean(slice(concat(p[0], p[1], 1), 1, 1, 5), 1); }},
      {"add_slice", {{2, 5, 3}, {1, 2, 3}},
       [](Tape&, auto& p) {
         return add_slice(p[0], 1, 2, broadcast_to(p[1], {2, 2, 3}));
       }},
      {"cross_entropy", {{3, 4}},
       [](Tape&, auto& p) {
         static const std::vector<int> labels = {2, 0, 3};
         return cross_entropy(p[0], labels);
       }},
  };
}

void run_cases(Precision precision, double threshold) {
  PrecisionScope scope(precision);
  for (const Case& c : op_cases()) {
    ParamStore store(17);
    std::vector<Parameter*> params;
    for (std::size_t i = 0; i < c.shapes.size(); ++i)
      params.push_back(&random_param(store, std::string(c.name) + "." + std::to_string(i),
                                     c.shapes[i], 0.7));
    auto build = [&](Tape& tape) {
      std::vector<Var> vars;
      for (Parameter* p : params) vars.push_back(tape.param(*p));
      return probe(c.fn(tape, vars), 99);
    };
    auto r = finite_diff_check(build, params, default_gradcheck_options(precision));
    EXPECT_TRUE(r.passed(threshold)) << c.name << ": " << r.max_rel_error << " at "
                                     << r.worst_param << "[" << r.worst_index << "]";
  }
}

TEST(GradCheck, EveryOpIn64Bit) { run_cases(Precision::f64, 1e-6); }
TEST(GradCheck, EveryOpIn32Bit) { run_cases(Precision::f32, 1e-3); }

TEST(GradCheck, QuadraticIsExact) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(1);
  Parameter& w = store.add("w", {1}, true, Init::constant(3.0));
  auto r = finite_diff_check([&](Tape& t) { Var v = t.param(w); return mul(v, v); },
                             std::vector<Parameter*>{&w}, {1e-4, 1e-3});
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_NEAR(w.grad[0], 6.0, 1e-12);
}

TEST(GradCheck, TwoLayerMlp64Bit) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(2);
  auto fc1 = Linear::create(store, "fc1", 5, 7, true, WeightInit{0.5, false});
  auto fc2 = Linear::create(store, "fc2", 7, 3, true, WeightInit{0.5, false});
  const Tensor x = random_tensor({4, 5}, 3);
  const std::vector<int> labels = {0, 1, 2, 1};
  std::vector<Parameter*> params = {fc1.weight, fc1.bias, fc2.weight, fc2.bias};
  auto r = finite_diff_check(
      [&](Tape& t) { return cross_entropy(fc2(gelu(fc1(t.constant(x)))), labels); }, params,
      default_gradcheck_options(Precision::f64));
  EXPECT_LT(r.max_rel_error, 1e-6);
  EXPECT_EQ(r.coords_checked, 5u * 7 + 7 + 7 * 3 + 3);
}

TEST(GradCheck, TransformerBlockBothPrecisions) {
  for (auto [precision, threshold] : {std::pair{Precision::f64, 1e-6}, std::pair{Precision::f32, 1e-3}}) {
    PrecisionScope scope(precision);
    ParamStore store(4);
    auto block = TransformerBlock::create(store, "blk", 8, 2, 16, true, WeightInit{0.3, false});
    const Tensor x = random_tensor({1, 4, 8}, 5);
    std::vector<Parameter*> params;
    for (Parameter& p : store.all()) params.push_back(&p);
    auto r = finite_diff_check([&](Tape& t) { return probe(block(t.constant(x)), 6); }, params,
                               default_gradcheck_options(precision));
    EXPECT_TRUE(r.passed(threshold)) << r.max_rel_error << " at " << r.worst_param;
  }
}

TEST(GradCheck, CorruptedGradientIsFlagged) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(5);
  Parameter& w = random_param(store, "w", {3, 3});
  const Tensor x = random_tensor({2, 3}, 6);
  auto f = [&] { return evaluate_loss([&](Tape& t) { return probe(gelu(matmul(t.constant(x), t.param(w))), 7); }); };
  Tape tape;
  tape.backward(probe(gelu(matmul(tape.constant(x), tape.param(w))), 7));
  Tensor corrupted = w.grad;
  for (double& v : corrupted.data()) v *= 1.5;
  std::vector<Parameter*> params = {&w};
  std::vector<Tensor> analytic = {corrupted};
  auto r = compare_with_finite_differences(f, params, analytic, {1e-5, 1e-3});
  EXPECT_GT(r.max_rel_error, 0.1);
  EXPECT_FALSE(r.passed(1e-3));
}

TEST(GradCheck, NonFiniteLossReportsCoordinate) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(1);
  Parameter& w = store.add("w", {3}, true, Init::constant(1.0));
  auto f = [&] {
    return w.value[2] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : w.value[0];
  };
  std::vector<Parameter*> params = {&w};
  std::vector<Tensor> analytic = {Tensor::from({3}, {1, 0, 0})};
  auto r = compare_with_finite_differences(f, params, analytic, {1e-4, 1e-3});
  EXPECT_FALSE(r.finite);
  EXPECT_EQ(r.worst_index, 2u);
  EXPECT_NE(r.failure.find("w"), std::string::npos);
}

TEST(GradCheck, FrozenParameterIsRejected) {
  ParamStore store(1);
  Parameter& w = store.add("w", {2}, false, Init::constant(1.0));
  std::vector<Parameter*> params = {&w};
  EXPECT_THROW(finite_diff_check([&](Tape& t) { return sum(t.param(w)); }, params, {}), Error);
}

}  // namespace
}  // namespace mma

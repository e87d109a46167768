// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmadapt/error.hpp"
#include "mmadapt/gradcheck.hpp"
#include "mmadapt/layers.hpp"
#include "mmadapt/ops.hpp"
#include "test_support.hpp"

namespace mma {
namespace {

using testing::random_tensor;

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no mma::Error thrown";
  return ErrorKind::contract;
}

TEST(Tensor, NumelIsProductOfExtents) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.numel(), 24u);
  EXPECT_EQ(Tensor({0, 5}).numel(), 0u);
  EXPECT_EQ(shape_str({2, 3}), "[2x3]");
}

TEST(Tensor, AtIsBoundsChecked) {
  Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(t.at({1, 0}), 3.0);
  EXPECT_THROW(t.at({2, 0}), Error);
  EXPECT_THROW(Tensor({2}, {1.0}), Error);
}

TEST(Tensor, F32ModeRoundsToBinary32) {
  PrecisionScope scope(Precision::f32);
  EXPECT_EQ(round_to_precision(0.1), static_cast<double>(0.1f));
  PrecisionScope wide(Precision::f64);
  EXPECT_EQ(round_to_precision(0.1), 0.1);
}

TEST(Affine, IdentityWeights) {
  Tape tape;
  Var x = tape.constant(Tensor::from({1, 2}, {2, 3}));
  Var w = tape.constant(Tensor::from({2, 2}, {1, 0, 0, 1}));
  Var b = tape.constant(Tensor::from({2}, {0, 0}));
  Var y = affine(x, w, b);
  EXPECT_EQ(y.value().at({0, 0}), 2.0);
  EXPECT_EQ(y.value().at({0, 1}), 3.0);
}

TEST(Affine, ScalarCase) {
  Tape tape;
  Var y = affine(tape.constant(Tensor::from({1, 1}, {2})), tape.constant(Tensor::from({1, 1}, {3})),
                 tape.constant(Tensor::from({1}, {1})));
  EXPECT_EQ(y.value()[0], 7.0);
}

TEST(Affine, ShapeMismatchNamesBothShapes) {
  Tape tape;
  Var x = tape.constant(Tensor({4, 3}));
  Var w = tape.constant(Tensor({2, 5}));
  try {
    matmul(x, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
    EXPECT_NE(std::string(e.what()).find("[4x3]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[2x5]"), std::string::npos);
  }
}

TEST(Affine, MatchesLoopOracleOnBatchedInput) {
  Tape tape;
  Tensor xv = random_tensor({2, 3, 4}, 1), wv = random_tensor({4, 5}, 2), bv = random_tensor({5}, 3);
  Var y = affine(tape.constant(xv), tape.constant(wv), tape.constant(bv));
  ASSERT_EQ(y.shape(), (Shape{2, 3, 5}));
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t o = 0; o < 5; ++o) {
      double acc = bv[o];
      for (std::size_t i = 0; i < 4; ++i) acc += xv[r * 4 + i] * wv[i * 5 + o];
      EXPECT_NEAR(y.value()[r * 5 + o], acc, 1e-5);
    }
}

TEST(LayerNorm, ConstantRowGivesZeros) {
  Tape tape;
  Var y = layer_norm(tape.constant(Tensor::full({1, 4}, 3.5)), tape.constant(Tensor::full({4}, 1)),
                     tape.constant(Tensor({4})));
  for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, RowsAreStandardized) {
  Tape tape;
  Tensor x = random_tensor({6, 16}, 7, 3.0);
  Var y = layer_norm(tape.constant(x), tape.constant(Tensor::full({16}, 1)),
                     tape.constant(Tensor({16})));
  for (std::size_t r = 0; r < 6; ++r) {
    auto row = y.value().data().subspan(r * 16, 16);
    const double mu = std::accumulate(row.begin(), row.end(), 0.0) / 16;
    double var = 0;
    for (double v : row) var += (v - mu) * (v - mu);
    EXPECT_LT(std::abs(mu), 1e-5);
    EXPECT_NEAR(var / 16, 1.0, 1e-3);
  }
}

TEST(LayerNorm, EmptyFeatureAxisIsDimensionError) {
  Tape tape;
  EXPECT_EQ(kind_of([&] {
              layer_norm(tape.constant(Tensor({3, 0})), tape.constant(Tensor({0})),
                         tape.constant(Tensor({0})));
            }),
            ErrorKind::dimension);
}

TEST(Gelu, ReferenceValues) {
  Tape tape;
  Var y = gelu(tape.constant(Tensor::from({3}, {0.0, 10.0, 1.0})));
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_NEAR(y.value()[1], 10.0, 1e-6);
  // Phi(1) from the complementary error function, independent of erf().
  const double phi1 = 0.5 * std::erfc(-1.0 / std::sqrt(2.0));
  EXPECT_NEAR(y.value()[2], phi1, 1e-7);
  EXPECT_NEAR(y.value()[2], 0.8413447460685429, 1e-7);
}

TEST(Softmax, UniformRow) {
  Tape tape;
  Var y = softmax(tape.constant(Tensor::full({1, 4}, 2.0)), 1);
  for (double v : y.value().data()) EXPECT_NEAR(v, 0.25, 1e-7);
}

TEST(Softmax, TwoElementClosedForm) {
  Tape tape;
  Var y = softmax(tape.constant(Tensor::from({1, 2}, {0.0, std::log(3.0)})), 1);
  EXPECT_NEAR(y.value()[0], 0.25, 1e-7);
  EXPECT_NEAR(y.value()[1], 0.75, 1e-7);
}

TEST(Softmax, ShiftInvarianceAndNormalization) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Tape tape;
    Tensor x = random_tensor({3, 4, 5}, seed, 10.0);
    Tensor shifted = x;
    for (double& v : shifted.data()) v += 1000.0;
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const Tensor& a = softmax(tape.constant(x), axis).value();
      const Tensor& b = softmax(tape.constant(shifted), axis).value();
      EXPECT_LT(max_abs_diff(a, b), 1e-6);
      // Sum along the normalized axis.
      const Shape& s = a.shape();
      std::size_t inner = 1;
      for (std::size_t k = axis + 1; k < 3; ++k) inner *= s[k];
      const std::size_t outer = a.numel() / (inner * s[axis]);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
          double total = 0;
          for (std::size_t j = 0; j < s[axis]; ++j) {
            double v = a[(o * s[axis] + j) * inner + in];
            EXPECT_GE(v, 0.0);
            total += v;
          }
          EXPECT_NEAR(total, 1.0, 1e-6);
        }
    }
  }
}

TEST(Attention, SingleTokenPassesValuePath) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(5);
  auto mha = MultiHeadAttention::create(store, "mha", 8, 8, 2, true, WeightInit{0.3, false});
  Tape tape;
  Var q = tape.constant(random_tensor({1, 1, 8}, 1));
  Var kv = tape.constant(random_tensor({1, 1, 8}, 2));
  Var y = mha(q, kv);
  Var expect = mha.out(mha.value(kv));
  EXPECT_LT(max_abs_diff(y.value(), expect.value()), 1e-12);
}

TEST(Attention, KeyPermutationInvariance) {
  ParamStore store(9);
  auto mha = MultiHeadAttention::create(store, "mha", 8, 8, 2, true, WeightInit{0.3, false});
  Tensor q = random_tensor({2, 3, 8}, 11);
  Tensor kv = random_tensor({2, 5, 8}, 12);
  const std::vector<std::size_t> perm = {3, 0, 4, 2, 1};
  Tensor permuted(kv.shape());
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t j = 0; j < 5; ++j)
      std::copy_n(kv.ptr() + (g * 5 + perm[j]) * 8, 8, permuted.ptr() + (g * 5 + j) * 8);
  Tape tape;
  Var a = mha(tape.constant(q), tape.constant(kv));
  Var b = mha(tape.constant(q), tape.constant(permuted));
  EXPECT_LT(max_abs_diff(a.value(), b.value()), 1e-5);
}

TEST(Attention, MatchesScalarOracle) {
  PrecisionScope wide(Precision::f64);
  Tensor q = random_tensor({1, 2, 4}, 1), k = random_tensor({1, 3, 4}, 2), v = random_tensor({1, 3, 4}, 3);
  Tape tape;
  Var y = attention(tape.constant(q), tape.constant(k), tape.constant(v), 2);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 2; ++i) {
      double s[3], mx = -1e300, z = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        s[j] = (q[i * 4 + 2 * h] * k[j * 4 + 2 * h] + q[i * 4 + 2 * h + 1] * k[j * 4 + 2 * h + 1]) /
               std::sqrt(2.0);
        mx = std::max(mx, s[j]);
      }
      for (double& e : s) z += (e = std::exp(e - mx));
      for (std::size_t c = 0; c < 2; ++c) {
        double o = 0;
        for (std::size_t j = 0; j < 3; ++j) o += s[j] / z * v[j * 4 + 2 * h + c];
        EXPECT_NEAR(y.value()[i * 4 + 2 * h + c], o, 1e-12);
      }
    }
}

TEST(Attention, IndivisibleHeadsIsConfigError) {
  ParamStore store(1);
  Tape tape;
  Var x = tape.constant(Tensor({1, 2, 6}));
  EXPECT_EQ(kind_of([&] { attention(x, x, x, 4); }), ErrorKind::config);
}

TEST(Ops, BroadcastingAddAndShapes) {
  Tape tape;
  Var a = tape.constant(Tensor::from({2, 1}, {1, 2}));
  Var b = tape.constant(Tensor::from({3}, {10, 20, 30}));
  Var c = add(a, b);
  ASSERT_EQ(c.shape(), (Shape{2, 3}));
  EXPECT_EQ(c.value().at({1, 2}), 32.0);
  EXPECT_EQ(kind_of([&] { add(tape.constant(Tensor({2, 3})), tape.constant(Tensor({4}))); }),
            ErrorKind::dimension);
}

TEST(Ops, ConcatSliceAddSliceRoundTrip) {
  Tape tape;
  Tensor x = random_tensor({2, 3, 4}, 4), y = random_tensor({2, 2, 4}, 5);
  Var c = concat(tape.constant(x), tape.constant(y), 1);
  EXPECT_TRUE(slice(c, 1, 0, 3).value().bit_equal(x));
  EXPECT_TRUE(slice(c, 1, 3, 5).value().bit_equal(y));
  Var z = add_slice(tape.constant(Tensor({2, 5, 4})), 1, 3, tape.constant(y));
  EXPECT_TRUE(slice(z, 1, 3, 5).value().bit_equal(y));
  for (double v : slice(z, 1, 0, 3).value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Ops, MeanAndSum) {
  Tape tape;
  Var x = tape.constant(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(sum(x).value()[0], 21.0);
  Var m = mean(x, 1);
  ASSERT_EQ(m.shape(), (Shape{2, 1}));
  EXPECT_EQ(m.value()[1], 5.0);
}

TEST(Ops, CrossEntropyMatchesLogSumExp) {
  PrecisionScope wide(Precision::f64);
  Tape tape;
  Tensor logits = random_tensor({3, 4}, 6);
  const std::vector<int> labels = {0, 3, 1};
  Var loss = cross_entropy(tape.constant(logits), labels);
  double expect = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    double z = 0;
    for (std::size_t c = 0; c < 4; ++c) z += std::exp(logits[r * 4 + c]);
    expect += std::log(z) - logits[r * 4 + labels[r]];
  }
  EXPECT_NEAR(loss.value()[0], expect / 3, 1e-12);
}

TEST(Ops, DoNotMutateInputsAndAreDeterministic) {
  Tensor x = random_tensor({2, 3, 8}, 3), w = random_tensor({8, 8}, 4);
  const Tensor x0 = x, w0 = w;
  Tensor first;
  for (int run = 0; run < 2; ++run) {
    Tape tape;
    Var xv = tape.constant(x);
    Var h = gelu(affine(xv, tape.constant(w), Var()));
    Var y = attention(h, h, h, 2);
    y = softmax(layer_norm(y, tape.constant(Tensor::full({8}, 1)), tape.constant(Tensor({8}))), 2);
    if (run == 0)
      first = y.value();
    else
      EXPECT_TRUE(first.bit_equal(y.value()));
    EXPECT_TRUE(xv.value().bit_equal(x0));
  }
  EXPECT_TRUE(x.bit_equal(x0));
  EXPECT_TRUE(w.bit_equal(w0));
}

TEST(Ops, OutputsFiniteOnFiniteInputs) {
  Tape tape;
  Tensor big = random_tensor({2, 6}, 8, 300.0);
  Var x = tape.constant(big);
  for (Var y : {softmax(x, 1), gelu(x), tanh(x),
                layer_norm(x, tape.constant(Tensor::full({6}, 1)), tape.constant(Tensor({6})))})
    EXPECT_TRUE(y.value().all_finite());
}

}  // namespace
}  // namespace mma

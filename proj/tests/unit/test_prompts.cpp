// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mmadapt/error.hpp"
#include "mmadapt/prompts.hpp"
#include "test_support.hpp"

namespace mma {
namespace {

using testing::random_tensor;

PromptConfig base_prompts() { return PromptConfig{6, {1, 7}, 0.02}; }

TEST(PromptConfig, SliceTilingAndValidation) {
  PromptConfig c = base_prompts();
  EXPECT_NO_THROW(c.validate(12));
  EXPECT_EQ(c.slice_size(), 3u);
  EXPECT_THROW((PromptConfig{5, {1, 7}}.validate(12)), Error);
  EXPECT_THROW((PromptConfig{6, {7, 1}}.validate(12)), Error);
  EXPECT_THROW((PromptConfig{6, {1, 13}}.validate(12)), Error);
  EXPECT_NO_THROW((PromptConfig{6, {}}.validate(12)));
  // Slices [k*M^l, (k+1)*M^l) cover [0, M) exactly once.
  for (std::size_t hooks : {1u, 2u, 3u, 6u}) {
    PromptConfig pc{6, {}};
    for (std::size_t k = 0; k < hooks; ++k) pc.hook_layers.push_back(k + 1);
    std::vector<int> cover(6, 0);
    for (std::size_t k = 0; k < hooks; ++k)
      for (std::size_t r = k * pc.slice_size(); r < (k + 1) * pc.slice_size(); ++r) ++cover[r];
    for (int c2 : cover) EXPECT_EQ(c2, 1);
  }
}

TEST(Prompts, ZeroCountLeavesTokensUnchanged) {
  ParamStore store(1);
  PromptBank bank(store, "p", 4, PromptConfig{}, 12);
  Tape tape;
  Var x = tape.constant(random_tensor({2, 5, 4}, 1));
  Var y = bank.append(x);
  EXPECT_EQ(y.id(), x.id());
  EXPECT_EQ(strip_prompts(y, 0).id(), x.id());
  EXPECT_EQ(store.all().size(), 0u);
}

TEST(Prompts, AppendKeepsDataRowsAndStripInverts) {
  ParamStore store(2);
  PromptBank bank(store, "p", 4, base_prompts(), 12);
  Tape tape;
  Tensor xv = random_tensor({2, 5, 4}, 2);
  Var y = bank.append(tape.constant(xv));
  ASSERT_EQ(y.shape(), (Shape{2, 11, 4}));
  EXPECT_TRUE(slice(y, 1, 0, 5).value().bit_equal(xv));
  EXPECT_TRUE(strip_prompts(y, 6).value().bit_equal(xv));
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 4; ++c)
        EXPECT_EQ(y.value().at({g, 5 + r, c}), bank.base().value.at({r, c}));
}

TEST(Prompts, WidthMismatchRejected) {
  ParamStore store(2);
  PromptBank bank(store, "p", 4, base_prompts(), 12);
  Tape tape;
  EXPECT_THROW(bank.append(tape.constant(Tensor({1, 5, 3}))), Error);
}

TEST(Prompts, ProgressiveUpdateTouchesOnlyItsSlice) {
  ParamStore store(3);
  PromptBank bank(store, "p", 4, base_prompts(), 12);
  Tape tape;
  Var x = bank.append(tape.constant(random_tensor({1, 5, 4}, 3)));
  auto pass = bank.begin_pass();
  (void)pass;
  for (std::size_t hook : {0u, 1u}) {
    Var y = bank.update(x, hook);
    for (std::size_t r = 0; r < 11; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        double expect = x.value().at({0, r, c});
        const std::size_t lo = 5 + hook * 3;
        if (r >= lo && r < lo + 3)
          expect = round_to_precision(expect + bank.progressive(hook).value.at({r - lo, c}));
        EXPECT_EQ(y.value().at({0, r, c}), expect) << "hook " << hook << " row " << r;
      }
  }
}

TEST(Prompts, TwoHooksUpdateRowsInOrder) {
  ParamStore store(4);
  PromptBank bank(store, "p", 4, base_prompts(), 12);
  EXPECT_EQ(bank.hook_index(1), 0u);
  EXPECT_EQ(bank.hook_index(7), 1u);
  EXPECT_FALSE(bank.hook_index(2).has_value());
  Tape tape;
  auto pass = bank.begin_pass();
  Var x = pass.append(tape.constant(Tensor({1, 5, 4})));
  Var base = x;
  x = pass.after_layer(1, x);
  // Rows 5..7 (prompt rows 0..2) changed, 8..10 did not.
  EXPECT_TRUE(slice(x, 1, 8, 11).value().bit_equal(slice(base, 1, 8, 11).value()));
  EXPECT_FALSE(slice(x, 1, 5, 8).value().bit_equal(slice(base, 1, 5, 8).value()));
  Var mid = x;
  x = pass.after_layer(4, x);  // not a hook: no-op
  EXPECT_EQ(x.id(), mid.id());
  x = pass.after_layer(7, x);
  EXPECT_TRUE(slice(x, 1, 5, 8).value().bit_equal(slice(mid, 1, 5, 8).value()));
  EXPECT_EQ(pass.rows_updated(), 6u);
  EXPECT_EQ(pass.rows(), 6u);
}

TEST(Prompts, ZeroProgressivePromptsAreIdentity) {
  ParamStore store(5);
  PromptBank bank(store, "p", 4, base_prompts(), 12);
  testing::zero_parameters(store, "p.progressive");
  Tape tape;
  Var x = bank.append(tape.constant(random_tensor({1, 5, 4}, 5)));
  EXPECT_TRUE(bank.update(x, 0).value().bit_equal(x.value()));
}

TEST(Prompts, DoubleApplicationAddsTwiceButPassRefuses) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(6);
  PromptBank bank(store, "p", 4, base_prompts(), 12);
  Tape tape;
  Var x = bank.append(tape.constant(Tensor({1, 5, 4})));
  Var twice = bank.update(bank.update(x, 0), 0);
  for (std::size_t c = 0; c < 4; ++c)
    EXPECT_NEAR(twice.value().at({0, 5, c}) - x.value().at({0, 5, c}),
                2 * bank.progressive(0).value.at({0, c}), 1e-15);
  auto pass = bank.begin_pass();
  Var y = pass.after_layer(1, pass.append(tape.constant(Tensor({1, 5, 4}))));
  EXPECT_THROW(pass.after_layer(1, y), Error);
}

TEST(Prompts, StripRequiresDataRows) {
  Tape tape;
  Var x = tape.constant(Tensor({1, 6, 4}));
  EXPECT_THROW(strip_prompts(x, 6), Error);
  EXPECT_EQ(strip_prompts(x, 2).shape(), (Shape{1, 4, 4}));
}

TEST(Prompts, ReceiveGradients) {
  ParamStore store(7);
  PromptBank bank(store, "p", 4, base_prompts(), 12);
  Tape tape;
  auto pass = bank.begin_pass();
  Var x = pass.append(tape.constant(random_tensor({2, 5, 4}, 7)));
  x = pass.after_layer(7, pass.after_layer(1, x));
  Var w = tape.constant(random_tensor(x.shape(), 8));
  tape.backward(sum(mul(mul(x, x), w)));
  for (Parameter& p : store.all()) {
    ASSERT_TRUE(p.has_grad()) << p.name;
    double norm = 0;
    for (double g : p.grad.data()) norm += g * g;
    EXPECT_GT(norm, 0.0) << p.name;
  }
}

}  // namespace
}  // namespace mma

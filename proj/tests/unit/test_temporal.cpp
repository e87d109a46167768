// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mmadapt/error.hpp"
#include "mmadapt/gradcheck.hpp"
#include "mmadapt/temporal.hpp"
#include "scalar_oracle.hpp"
#include "test_support.hpp"

namespace mma {
namespace {

using testing::random_tensor;

TemporalHeadConfig small_head(std::size_t frames = 3) {
  TemporalHeadConfig c;
  c.in_dim = 6;
  c.dim = 8;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.frames = frames;
  c.classes = 5;
  return c;
}

TEST(AssembleTemporal, IndexBookkeeping) {
  const std::size_t b = 2, t = 3, n = 4, d = 5;
  Tensor frames = random_tensor({b * t, n, d}, 1);
  Tensor audio = random_tensor({b, 2, d}, 2);
  Tape tape;
  Var seq = assemble_temporal(tape.constant(frames), tape.constant(audio), t);
  ASSERT_EQ(seq.shape(), (Shape{b, t, d}));
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t c = 0; c < d; ++c)
        EXPECT_EQ(seq.value().at({s, i, c}),
                  round_to_precision(frames.at({s * t + i, 0, c}) + audio.at({s, 0, c})));
}

TEST(AssembleTemporal, SingleFrameAndZeroAudio) {
  Tensor frames = random_tensor({2, 3, 4}, 3);
  Tape tape;
  Var one = assemble_temporal(tape.constant(frames), tape.constant(Tensor({2, 1, 4})), 1);
  Var vision_only = assemble_temporal(tape.constant(frames), Var(), 1);
  EXPECT_TRUE(one.value().bit_equal(vision_only.value()));
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(one.value().at({s, 0, c}), frames.at({s, 0, c}));
}

TEST(AssembleTemporal, AudioOnlyRepeatsAudioCls) {
  Tensor audio = random_tensor({2, 3, 4}, 4);
  Tape tape;
  Var seq = assemble_temporal(Var(), tape.constant(audio), 5);
  ASSERT_EQ(seq.shape(), (Shape{2, 5, 4}));
  EXPECT_EQ(seq.value().at({1, 4, 2}), audio.at({1, 0, 2}));
}

TEST(AssembleTemporal, IndivisibleBatchRejected) {
  Tape tape;
  EXPECT_THROW(assemble_temporal(tape.constant(Tensor({5, 2, 3})), Var(), 2), Error);
}

TEST(Jam, ZeroWeightsGiveZeroAndBaseScaleShape) {
  ParamStore store(5);
  TemporalHead head(store, "head", small_head());
  testing::zero_parameters(store, "head.jam");
  Tape tape;
  Var z = head.jam(tape.constant(random_tensor({2, 3, 6}, 6)));
  for (double v : z.value().data()) EXPECT_EQ(v, 0.0);

  ParamStore big(6);
  TemporalHeadConfig pc;
  pc.in_dim = 768;
  pc.dim = 512;
  pc.heads = 8;
  pc.frames = 16;
  pc.classes = 7;
  TemporalHead vit_base(big, "head", pc);
  Tape t2;
  EXPECT_EQ(vit_base.jam(t2.constant(Tensor({1, 16, 768}))).shape(), (Shape{1, 16, 512}));
}

TEST(Mtt, LogitShapeAndFrameMismatch) {
  ParamStore store(7);
  TemporalHeadConfig c = small_head();
  c.classes = 7;
  TemporalHead head(store, "head", c);
  Tape tape;
  EXPECT_EQ(head(tape.constant(random_tensor({4, 3, 6}, 8))).shape(), (Shape{4, 7}));
  try {
    head(tape.constant(Tensor({1, 4, 6})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Mtt, TemporalEmbeddingStartsAtZeroAndExactlyOneBlock) {
  ParamStore store(8);
  TemporalHead head(store, "head", small_head(4));
  EXPECT_EQ(head.temporal_embedding().value.shape(), (Shape{4, 8}));
  for (double v : head.temporal_embedding().value.data()) EXPECT_EQ(v, 0.0);
  EXPECT_NE(store.find("head.mtt.block.attn.query.weight"), nullptr);
  std::size_t blocks = 0;
  for (const Parameter& p : store.all())
    if (p.name.find(".norm1.gamma") != std::string::npos) ++blocks;
  EXPECT_EQ(blocks, 1u);
}

TEST(Mtt, PermutationInvariantWithZeroTemporalEmbedding) {
  ParamStore store(9);
  TemporalHead head(store, "head", small_head(4));
  testing::randomize_all(store, 10);
  head.temporal_embedding().value.fill(0.0);
  Tensor seq = random_tensor({2, 4, 6}, 11);
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  Tensor permuted(seq.shape());
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 6; ++c) permuted.at({b, i, c}) = seq.at({b, perm[i], c});
  Tape tape;
  Var a = head(tape.constant(seq));
  Var b = head(tape.constant(permuted));
  EXPECT_LT(max_abs_diff(a.value(), b.value()), 1e-5);
  // With a non-zero temporal embedding the order matters.
  head.temporal_embedding().value = random_tensor({4, 8}, 12);
  Tape t2;
  EXPECT_GT(max_abs_diff(head(t2.constant(seq)).value(), head(t2.constant(permuted)).value()), 1e-4);
}

TEST(Mtt, MatchesScalarOracle) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(13);
  TemporalHead head(store, "head", small_head(3));
  testing::randomize_all(store, 14);
  Tensor seq = random_tensor({1, 3, 6}, 15);
  Tape tape;
  Var logits = head(tape.constant(seq));
  auto p = [&](const std::string& n) -> const Parameter& { return store.get("head." + n); };
  oracle::Rows tokens = {oracle::Vec(p("mtt.cls_token").value.data().begin(),
                                     p("mtt.cls_token").value.data().end())};
  for (std::size_t i = 0; i < 3; ++i) {
    auto z = oracle::linear(oracle::rows_of(seq, i, 1, 6)[0], p("jam.weight"), &p("jam.bias"));
    tokens.push_back(oracle::plus(z, oracle::rows_of(p("mtt.temporal_embed").value, i, 1, 8)[0]));
  }
  auto out = oracle::transformer_block(store, "head.mtt.block", tokens, 2);
  auto cls = oracle::layer_norm(out[0], p("mtt.norm.gamma"), p("mtt.norm.beta"));
  auto expect = oracle::linear(cls, p("classifier.weight"), &p("classifier.bias"));
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(logits.value()[k], expect[k], 1e-10);
}

TEST(Mtt, AveragedHeadWithoutTransformer) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(16);
  TemporalHeadConfig c = small_head(3);
  c.use_mtt = false;
  TemporalHead head(store, "head", c);
  testing::randomize_all(store, 17);
  EXPECT_EQ(store.find("head.mtt.block.attn.query.weight"), nullptr);
  Tensor seq = random_tensor({1, 3, 6}, 18);
  Tape tape;
  Var logits = head(tape.constant(seq));
  auto p = [&](const std::string& n) -> const Parameter& { return store.get("head." + n); };
  oracle::Rows z;
  for (const auto& row : oracle::rows_of(seq, 0, 3, 6))
    z.push_back(oracle::linear(row, p("jam.weight"), &p("jam.bias")));
  auto expect = oracle::linear(oracle::mean_rows(z), p("classifier.weight"), &p("classifier.bias"));
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(logits.value()[k], expect[k], 1e-12);
}

TEST(TemporalHead, Gradcheck) {
  for (auto [precision, threshold] : {std::pair{Precision::f64, 1e-6}, std::pair{Precision::f32, 1e-3}}) {
    PrecisionScope scope(precision);
    for (bool mtt : {true, false}) {
      ParamStore store(19);
      TemporalHeadConfig c = small_head(3);
      c.use_mtt = mtt;
      TemporalHead head(store, "head", c);
      testing::randomize_all(store, 20);
      Tensor seq = random_tensor({2, 3, 6}, 21);
      const std::vector<int> labels = {1, 4};
      std::vector<Parameter*> params;
      for (Parameter& p : store.all()) params.push_back(&p);
      auto r = finite_diff_check([&](Tape& t) { return cross_entropy(head(t.constant(seq)), labels); },
                                 params, default_gradcheck_options(precision));
      EXPECT_TRUE(r.passed(threshold)) << (mtt ? "mtt " : "avg ") << r.max_rel_error << " at "
                                       << r.worst_param;
    }
  }
}

}  // namespace
}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "mmadapt/encoder.hpp"
#include "mmadapt/error.hpp"
#include "mmadapt/gradcheck.hpp"
#include "test_support.hpp"

namespace mma {
namespace {

using testing::random_tensor;

EncoderConfig vision_cfg(std::size_t side, std::size_t ps = 16) {
  EncoderConfig c;
  c.modality = EncoderModality::vision;
  c.depth = 2;
  c.dim = 8;
  c.heads = 2;
  c.patch_size = ps;
  c.grid_rows = side / ps;
  c.grid_cols = side / ps;
  c.in_channels = 3;
  return c;
}

TEST(PatchEmbed, TokenCounts) {
  EXPECT_EQ(patchify(Tensor({1, 3, 32, 32}), 16).dim(1), 4u);
  EXPECT_EQ(patchify(Tensor({1, 3, 224, 224}), 16).dim(1), 196u);
  EXPECT_EQ(patchify(Tensor({1, 1, 32, 64}), 16).dim(1), 8u);

  ParamStore store(1);
  Encoder vision(store, "vision", vision_cfg(32));
  Tape tape;
  EXPECT_EQ(vision.embed(tape, patchify(Tensor({2, 3, 32, 32}), 16)).shape(), (Shape{2, 5, 8}));

  EncoderConfig ac = vision_cfg(32);
  ac.modality = EncoderModality::audio;
  ac.in_channels = 1;
  ac.grid_rows = 2;
  ac.grid_cols = 4;
  Encoder audio(store, "audio", ac);
  EXPECT_EQ(audio.embed(tape, patchify(Tensor({1, 1, 32, 64}), 16)).shape(), (Shape{1, 9, 8}));
}

TEST(PatchEmbed, IndivisibleInputIsConfigError) {
  try {
    patchify(Tensor({1, 1, 30, 32}), 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(PatchEmbed, ZeroInputGivesPositionalEmbeddings) {
  ParamStore store(2);
  Encoder enc(store, "vision", vision_cfg(32));
  Tape tape;
  const Tensor& tokens = enc.embed(tape, patchify(Tensor({1, 3, 32, 32}), 16)).value();
  const Tensor& pos = enc.pos_embed().value;
  const Tensor& cls = enc.cls_token().value;
  for (std::size_t k = 0; k < 8; ++k)
    EXPECT_EQ(tokens[k], round_to_precision(cls[k] + pos[k]));
  for (std::size_t i = 8; i < tokens.numel(); ++i) EXPECT_EQ(tokens[i], pos[i]);
}

TEST(PatchEmbed, PatchLayoutMatchesPixels) {
  Tensor img = random_tensor({1, 2, 4, 6}, 3);
  Tensor p = patchify(img, 2);
  ASSERT_EQ(p.shape(), (Shape{1, 6, 8}));
  // patch (r=1, c=2), channel 1, row 1, col 0 -> pixel (1, 3, 4)
  EXPECT_EQ(p.at({0, 1 * 3 + 2, (1 * 2 + 1) * 2 + 0}), img.at({0, 1, 3, 4}));
}

TEST(PatchEmbed, IndexMapTilesGridOncePerCell) {
  const std::size_t rows = 3, cols = 5, ps = 2;
  Tensor ids({1, 1, rows * ps, cols * ps});
  Tensor patches({1, rows * cols, ps * ps});
  for (std::size_t p = 0; p < rows * cols; ++p)
    for (std::size_t k = 0; k < ps * ps; ++k) patches.at({0, p, k}) = static_cast<double>(p);
  Tensor image = unpatchify(patches, 1, rows * ps, cols * ps, ps);
  std::vector<int> hits(rows * cols, 0);
  for (double v : image.data()) ++hits[static_cast<std::size_t>(v)];
  for (int h : hits) EXPECT_EQ(h, static_cast<int>(ps * ps));
  for (std::size_t p = 0; p < rows * cols; ++p) {
    GridIndex g = patch_grid_index(p, cols);
    EXPECT_EQ(image.at({0, 0, g.row * ps, g.col * ps}), static_cast<double>(p));
  }
  Tensor round = random_tensor({2, 3, 6, 10}, 4);
  EXPECT_TRUE(unpatchify(patchify(round, 2), 3, 6, 10, 2).bit_equal(round));
}

TEST(PosEmbed, SameGridIsIdentity) {
  Tensor pos = random_tensor({1 + 6, 4}, 5);
  EXPECT_TRUE(interpolate_pos_embed(pos, 2, 3, 2, 3).bit_equal(pos));
}

TEST(PosEmbed, ConstantGridStaysConstant) {
  Tensor pos = Tensor::full({1 + 4, 3}, 0.75);
  pos[0] = 9.0;
  Tensor out = interpolate_pos_embed(pos, 2, 2, 5, 7);
  ASSERT_EQ(out.shape(), (Shape{36, 3}));
  EXPECT_EQ(out[0], 9.0);
  for (std::size_t i = 3; i < out.numel(); ++i) EXPECT_DOUBLE_EQ(out[i], 0.75);
}

TEST(PosEmbed, CornersToThreeByThreeCenter) {
  Tensor pos = Tensor::from({5, 1}, {-1, 0, 1, 2, 3});
  Tensor out = interpolate_pos_embed(pos, 2, 2, 3, 3);
  EXPECT_EQ(out[0], -1.0);  // CLS untouched
  EXPECT_DOUBLE_EQ(out[1 + 4], 1.5);
  EXPECT_DOUBLE_EQ(out[1 + 0], 0.0);
  EXPECT_DOUBLE_EQ(out[1 + 2], 1.0);
  EXPECT_DOUBLE_EQ(out[1 + 8], 3.0);
  EXPECT_DOUBLE_EQ(out[1 + 1], 0.5);
}

TEST(EncoderBlock, ZeroWeightsAreIdentity) {
  ParamStore store(6);
  Encoder enc(store, "vision", vision_cfg(32));
  testing::zero_parameters(store, "vision.blocks.1");
  Tape tape;
  Var x = tape.constant(random_tensor({2, 7, 8}, 7));
  EXPECT_TRUE(enc.block(1, x).value().bit_equal(x.value()));
}

TEST(EncoderBlock, ShapePreservedForAnyLength) {
  ParamStore store(6);
  Encoder enc(store, "vision", vision_cfg(32));
  for (std::size_t n : {1u, 3u, 11u}) {
    Tape tape;
    EXPECT_EQ(enc.block(2, tape.constant(random_tensor({1, n, 8}, n))).shape(), (Shape{1, n, 8}));
  }
  Tape tape;
  EXPECT_THROW(enc.block(3, tape.constant(Tensor({1, 2, 8}))), Error);
}

TEST(EncoderBlock, GradcheckThroughOneBlock) {
  PrecisionScope wide(Precision::f64);
  ParamStore store(8);
  auto block = TransformerBlock::create(store, "b", 8, 2, 32, true, WeightInit{1.0, true});
  const Tensor x = random_tensor({1, 4, 8}, 9);
  const Tensor w = random_tensor({1, 4, 8}, 10);
  std::vector<Parameter*> params;
  for (Parameter& p : store.all()) params.push_back(&p);
  auto r = finite_diff_check([&](Tape& t) { return sum(mul(block(t.constant(x)), t.constant(w))); },
                             params, default_gradcheck_options(Precision::f64));
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(Encoder, OnlyPositionalEmbeddingsTrainable) {
  ParamStore store(9);
  Encoder enc(store, "vision", vision_cfg(32));
  std::set<std::string> trainable;
  for (const Parameter& p : store.all())
    if (p.trainable) trainable.insert(p.name);
  EXPECT_EQ(trainable, (std::set<std::string>{"vision.pos_embed"}));
}

TEST(Encoder, MismatchedDepthPairRejected) {
  EncoderConfig v = vision_cfg(32), a = vision_cfg(32);
  a.modality = EncoderModality::audio;
  a.depth = 3;
  try {
    check_encoder_pair(v, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  a.depth = v.depth;
  EXPECT_NO_THROW(check_encoder_pair(v, a));
}

TEST(Encoder, SeededWeightsAreReproducible) {
  ParamStore a(42), b(42), c(43);
  Encoder ea(a, "vision", vision_cfg(32)), eb(b, "vision", vision_cfg(32)), ec(c, "vision", vision_cfg(32));
  EXPECT_EQ(parameter_digest(a, false), parameter_digest(b, false));
  EXPECT_NE(parameter_digest(a, false), parameter_digest(c, false));
}

}  // namespace
}  // namespace mma

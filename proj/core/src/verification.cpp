// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/verification.hpp"

#include <functional>
#include <random>

#include "mmadapt/fusion.hpp"
#include "mmadapt/gradcheck.hpp"
#include "mmadapt/layers.hpp"
#include "mmadapt/model.hpp"
#include "mmadapt/ops.hpp"
#include "mmadapt/prompts.hpp"
#include "mmadapt/temporal.hpp"

namespace mma {
namespace {

Tensor noise(Shape shape, std::uint64_t seed, double stddev = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = round_to_precision(dist(rng));
  return t;
}

void randomize(ParamStore& store, std::uint64_t seed, double stddev = 0.4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (Parameter& p : store.all())
    if (p.trainable)
      for (double& v : p.value.data()) v = round_to_precision(dist(rng));
}

// Contracts the output with fixed weights so every coordinate reaches the loss.
Var probe(Var y, std::uint64_t seed) { return sum(mul(y, y.tape().constant(noise(y.shape(), seed)))); }

std::vector<Parameter*> trainable(ParamStore& store) {
  std::vector<Parameter*> out;
  for (Parameter& p : store.all())
    if (p.trainable) out.push_back(&p);
  return out;
}

struct Case {
  std::string name;
  std::function<GradCheckResult(const GradCheckOptions&)> run;
};

// Each raw op gets fresh parameters of the listed shapes as inputs.
Case op_case(std::string name, std::vector<Shape> shapes,
             std::function<Var(std::vector<Var>&)> fn) {
  return {name, [name, shapes, fn](const GradCheckOptions& o) {
            ParamStore store(17);
            std::vector<Parameter*> params;
            for (std::size_t i = 0; i < shapes.size(); ++i)
              params.push_back(&store.add(name + "." + std::to_string(i), shapes[i], true,
                                          Init::normal(0.7)));
            return finite_diff_check(
                [&](Tape& tape) {
                  std::vector<Var> vars;
                  for (Parameter* p : params) vars.push_back(tape.param(*p));
                  return probe(fn(vars), 99);
                },
                params, o);
          }};
}

constexpr std::size_t kT = 2, kNv = 3, kNa = 4, kD = 8;

Case fusion_case(std::string name, FusionVariant variant, std::size_t ita_dim) {
  return {name, [variant, ita_dim](const GradCheckOptions& o) {
            FusionConfig fc;
            fc.variant = variant;
            // A two-wide LayerNorm is nearly a sign function; keep the latent wider.
            fc.latent_dim = 4;
            fc.heads = 2;
            fc.ita_dim = ita_dim;
            ParamStore store(26);
            FusionBlock block(store, "fusion", kD, fc);
            randomize(store, 27);
            const Tensor vision = noise({kT, kNv, kD}, 101), audio = noise({1, kNa, kD}, 102);
            const Tensor wv = noise(vision.shape(), 28), wa = noise(audio.shape(), 29);
            auto params = trainable(store);
            return finite_diff_check(
                [&](Tape& t) {
                  FusionOutput out = block(t.constant(vision), t.constant(audio), {kT, kNv, kNa, 0});
                  return add(sum(mul(out.vision, t.constant(wv))), sum(mul(out.audio, t.constant(wa))));
                },
                params, o);
          }};
}

TemporalHeadConfig small_head(bool mtt) {
  TemporalHeadConfig c;
  c.in_dim = 6;
  c.dim = 8;
  c.heads = 2;
  c.frames = 3;
  c.classes = 5;
  c.use_mtt = mtt;
  return c;
}

// Checks only the parameters under `prefix` while the rest stay fixed.
std::vector<Parameter*> under(ParamStore& store, const std::string& prefix) {
  std::vector<Parameter*> out;
  for (Parameter* p : trainable(store))
    if (p->name.rfind(prefix, 0) == 0) out.push_back(p);
  return out;
}

ModelConfig micro_model() {
  ModelConfig c;
  c.dim = 8;
  c.depth = 2;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.patch_size = 4;
  c.image_height = c.image_width = 8;
  c.spec_bins = 4;
  c.spec_frames = 8;
  c.num_prompts = 2;
  c.prompt_layers = {1, 2};
  c.fusion_layers = {1, 2};
  c.latent_dim = 4;
  c.frames = 2;
  c.temporal_dim = 8;
  c.temporal_heads = 2;
  c.num_classes = 3;
  return c;
}

std::vector<Case> cases() {
  std::vector<Case> out = {
      op_case("affine", {{4, 3}, {3, 2}, {2}}, [](auto& p) { return affine(p[0], p[1], p[2]); }),
      op_case("layer_norm", {{3, 5}, {5}, {5}}, [](auto& p) { return layer_norm(p[0], p[1], p[2]); }),
      op_case("gelu", {{3, 4}}, [](auto& p) { return gelu(p[0]); }),
      op_case("tanh", {{3, 4}}, [](auto& p) { return tanh(p[0]); }),
      op_case("softmax", {{2, 3, 4}}, [](auto& p) { return softmax(p[0], 1); }),
      op_case("attention", {{2, 3, 8}, {2, 4, 8}, {2, 4, 8}},
              [](auto& p) { return attention(p[0], p[1], p[2], 2); }),
      op_case("broadcast_mul", {{2, 1, 4}, {3, 1}}, [](auto& p) { return mul(p[0], p[1]); }),
      op_case("mean_concat_slice", {{2, 3, 4}, {2, 2, 4}},
              [](auto& p) { return mean(slice(concat(p[0], p[1], 1), 1, 1, 5), 1); }),
      op_case("add_slice", {{2, 5, 3}, {1, 2, 3}},
              [](auto& p) { return add_slice(p[0], 1, 2, broadcast_to(p[1], {2, 2, 3})); }),
      {"cross_entropy",
       [](const GradCheckOptions& o) {
         ParamStore store(18);
         Parameter* logits = &store.add("logits", {3, 4}, true, Init::normal(0.7));
         static const std::vector<int> labels = {2, 0, 3};
         std::vector<Parameter*> params = {logits};
         return finite_diff_check([&](Tape& t) { return cross_entropy(t.param(*logits), labels); },
                                  params, o);
       }},
      {"transformer_block",
       [](const GradCheckOptions& o) {
         ParamStore store(19);
         auto block = TransformerBlock::create(store, "block", kD, 2, 16, true, WeightInit{0.3, false});
         randomize(store, 20, 0.3);
         const Tensor x = noise({2, 3, kD}, 21);
         auto params = trainable(store);
         return finite_diff_check([&](Tape& t) { return probe(block(t.constant(x)), 22); }, params, o);
       }},
      {"prompts",
       [](const GradCheckOptions& o) {
         ParamStore store(23);
         PromptBank bank(store, "prompts", kD, {4, {1, 2}, 0.02}, 2);
         randomize(store, 24);
         const Tensor x = noise({2, 3, kD}, 25);
         auto params = trainable(store);
         return finite_diff_check(
             [&](Tape& t) {
               auto pass = bank.begin_pass();
               Var seq = pass.append(t.constant(x));
               seq = pass.after_layer(1, gelu(seq));
               return probe(pass.after_layer(2, seq), 26);
             },
             params, o);
       }},
      fusion_case("fusion_bottleneck", FusionVariant::bottleneck, 0),
      fusion_case("fusion_add", FusionVariant::add, 0),
      fusion_case("fusion_mult", FusionVariant::mult, 0),
      fusion_case("fusion_mult_concat", FusionVariant::mult_concat, 0),
      fusion_case("ita_latent", FusionVariant::bottleneck, 4),
      fusion_case("ita_projected", FusionVariant::bottleneck, 2),
      {"jam",
       [](const GradCheckOptions& o) {
         ParamStore store(30);
         TemporalHead head(store, "head", small_head(true));
         randomize(store, 31);
         const Tensor seq = noise({2, 3, 6}, 32);
         auto params = under(store, "head.jam");
         return finite_diff_check([&](Tape& t) { return probe(head.jam(t.constant(seq)), 33); }, params, o);
       }},
      {"mtt",
       [](const GradCheckOptions& o) {
         ParamStore store(34);
         TemporalHead head(store, "head", small_head(true));
         randomize(store, 35);
         const Tensor seq = noise({2, 3, 8}, 36);
         auto params = under(store, "head.mtt");
         return finite_diff_check([&](Tape& t) { return probe(head.mtt(t.constant(seq)), 37); }, params, o);
       }},
      {"temporal_head",
       [](const GradCheckOptions& o) {
         ParamStore store(38);
         TemporalHead head(store, "head", small_head(false));
         randomize(store, 39);
         const Tensor seq = noise({2, 3, 6}, 40);
         static const std::vector<int> labels = {1, 4};
         auto params = trainable(store);
         return finite_diff_check([&](Tape& t) { return cross_entropy(head(t.constant(seq)), labels); },
                                  params, o);
       }},
      {"model",
       [](const GradCheckOptions& o) {
         Model model(micro_model(), 41);
         randomize(model.params(), 42, 0.3);
         const ModelConfig& c = model.config();
         Batch batch;
         batch.video = noise({2, c.frames, c.channels, c.image_height, c.image_width}, 43);
         batch.audio = noise({2, c.spec_bins, c.spec_frames}, 44);
         batch.labels = {0, 2};
         auto params = trainable(model.params());
         return finite_diff_check(
             [&](Tape& t) { return cross_entropy(model.forward(t, batch), batch.labels); }, params, o);
       }},
  };
  return out;
}

}  // namespace

double gradcheck_threshold(Precision precision) { return precision == Precision::f64 ? 1e-6 : 1e-3; }

std::vector<std::string> gradcheck_case_names() {
  std::vector<std::string> names;
  for (const Case& c : cases()) names.push_back(c.name);
  return names;
}

std::vector<GradCheckRow> run_gradcheck_suite(Precision precision) {
  PrecisionScope scope(precision);
  const GradCheckOptions options = default_gradcheck_options(precision);
  const double threshold = gradcheck_threshold(precision);
  std::vector<GradCheckRow> rows;
  for (const Case& c : cases()) {
    const GradCheckResult r = c.run(options);
    GradCheckRow row;
    row.op = c.name;
    row.max_rel_error = r.max_rel_error;
    row.threshold = threshold;
    row.coords = r.coords_checked;
    row.worst = r.finite ? r.worst_param + "[" + std::to_string(r.worst_index) + "]" : r.failure;
    row.passed = r.passed(threshold);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "mmadapt/data.hpp"
#include "mmadapt/fusion.hpp"
#include "mmadapt/model.hpp"
#include "mmadapt/ops.hpp"
#include "mmadapt/training.hpp"

namespace {

using namespace mma;

Tensor noise(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = round_to_precision(dist(rng));
  return t;
}

Batch toy_batch(const ModelConfig& c, std::size_t b) {
  Batch batch;
  batch.video = noise({b, c.frames, c.channels, c.image_height, c.image_width}, 1);
  batch.audio = noise({b, c.spec_bins, c.spec_frames}, 2);
  for (std::size_t i = 0; i < b; ++i) batch.labels.push_back(static_cast<int>(i % c.num_classes));
  return batch;
}

void BM_Affine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor x = noise({n, 64}, 1), w = noise({64, 64}, 2), b = noise({64}, 3);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(affine(tape.constant(x), tape.constant(w), tape.constant(b)).value().ptr());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 64 * 64));
}
BENCHMARK(BM_Affine)->Arg(64)->Arg(256)->Arg(1024);

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor q = noise({4, n, 32}, 1), k = noise({4, n, 32}, 2), v = noise({4, n, 32}, 3);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(
        attention(tape.constant(q), tape.constant(k), tape.constant(v), 2).value().ptr());
  }
}
BENCHMARK(BM_Attention)->Arg(16)->Arg(64)->Arg(197);

void BM_FusionBottleneck(benchmark::State& state) {
  const std::size_t t = 4, nv = 17, na = 9, d = 32;
  ParamStore store(1);
  FusionConfig fc;
  fc.variant = FusionVariant::bottleneck;
  fc.latent_dim = 6;
  FusionBlock block(store, "fb", d, fc);
  const Tensor vision = noise({t, nv, d}, 2), audio = noise({1, na, d}, 3);
  for (auto _ : state) {
    Tape tape;
    FusionOutput out = block(tape.constant(vision), tape.constant(audio), TokenLayout{t, nv, na, 0});
    benchmark::DoNotOptimize(out.vision.value().ptr());
  }
}
BENCHMARK(BM_FusionBottleneck);

void BM_ToyForward(benchmark::State& state) {
  const ModelConfig c = ModelConfig::toy();
  const Model model(c, 1);
  const Batch batch = toy_batch(c, 8);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(model.forward(tape, batch).value().ptr());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ToyForward)->Unit(benchmark::kMillisecond);

void BM_ToyTrainStep(benchmark::State& state) {
  const ModelConfig c = ModelConfig::toy();
  Model model(c, 1);
  AdamW opt(model.params(), {});
  const Batch batch = toy_batch(c, 8);
  for (auto _ : state) {
    model.params().zero_grad();
    Tape tape;
    Var loss = cross_entropy(model.forward(tape, batch), batch.labels);
    tape.backward(loss);
    opt.step(1e-3);
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ToyTrainStep)->Unit(benchmark::kMillisecond);

void BM_LogMelSpectrogram(benchmark::State& state) {
  std::vector<double> wave(16000);
  for (std::size_t i = 0; i < wave.size(); ++i) wave[i] = std::sin(2 * M_PI * 440.0 * i / 16000.0);
  for (auto _ : state) benchmark::DoNotOptimize(log_mel_spectrogram(wave).ptr());
}
BENCHMARK(BM_LogMelSpectrogram)->Unit(benchmark::kMicrosecond);

void BM_SampleRoundTrip(benchmark::State& state) {
  SampleRecord s;
  s.label = 2;
  s.video = noise({16, 1, 32, 32}, 1);
  s.audio = noise({32, 64}, 2);
  for (auto _ : state) {
    auto bytes = encode_sample(s);
    benchmark::DoNotOptimize(decode_sample(bytes).video.ptr());
  }
}
BENCHMARK(BM_SampleRoundTrip)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

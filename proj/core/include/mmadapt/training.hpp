// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mmadapt/model.hpp"

namespace mma {

struct SampleRecord;

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

/// AdamW with bias correction and decoupled weight decay over the trainable
/// parameters of a store. Frozen parameters are never touched.
class AdamW {
 public:
  AdamW(ParamStore& store, AdamWConfig config = {});

  /// One update at learning rate `lr`. Every trainable parameter must carry
  /// a gradient.
  void step(double lr);
  std::size_t steps() const { return steps_; }
  std::size_t slots() const { return slots_.size(); }
  const AdamWConfig& config() const { return config_; }

 private:
  struct Slot {
    Parameter* param;
    Tensor m, v;
  };
  AdamWConfig config_;
  std::vector<Slot> slots_;
  std::size_t steps_ = 0;
};

/// Per-epoch cosine annealing from base_lr to 0.
struct CosineSchedule {
  double base_lr = 1e-4;
  double total_epochs = 25;

  double lr(double epoch) const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  std::size_t batches = 0;
};

/// Builds a batch of the given samples at temporal clip `clip` (0 or 1).
Batch make_batch(std::span<const SampleRecord* const> samples, const ModelConfig& config,
                 std::size_t clip);

/// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

/// One pass over `data` in shuffled mini-batches: forward, cross-entropy,
/// backward, AdamW step. Throws a numeric error naming the batch when the
/// loss is not finite.
EpochStats train_epoch(Model& model, std::span<const SampleRecord* const> data, AdamW& optimizer,
                       double lr, std::size_t batch_size, std::uint64_t shuffle_seed,
                       std::size_t epoch = 0);

struct TrainOptions {
  std::size_t epochs = 25;
  std::size_t batch_size = 8;
  double base_lr = 1e-4;
  AdamWConfig adamw{};
  std::uint64_t seed = 1;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Runs `epochs` epochs; epoch e uses lr(e) of the cosine schedule.
std::vector<EpochStats> train(Model& model, std::span<const SampleRecord* const> data,
                              const TrainOptions& options, const EpochCallback& on_epoch = {});

/// K x K counts; rows are true classes, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {}
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

  std::size_t classes() const { return k_; }
  void add(std::size_t truth, std::size_t predicted);
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_.at(truth * k_ + predicted);
  }
  std::uint64_t row_total(std::size_t truth) const;
  std::uint64_t total() const;
  std::uint64_t correct() const;
  /// Merges counts of another matrix of the same size.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

struct Metrics {
  double uar = 0.0;
  double war = 0.0;
};

/// UAR averages recall over classes with non-zero support; WAR = trace / total.
Metrics compute_metrics(const ConfusionMatrix& cm);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Confusion matrix from logits rows [N, K] and labels.
ConfusionMatrix confusion_from_logits(const Tensor& logits, std::span<const int> labels);

/// Predicts every sample, averaging logits over `clips` temporal clips.
ConfusionMatrix evaluate(const Model& model, std::span<const SampleRecord* const> data,
                         std::size_t clips, std::size_t batch_size = 8);

/// Logits [N, K] averaged over `clips` clips.
Tensor predict_logits(const Model& model, std::span<const SampleRecord* const> data,
                      std::size_t clips, std::size_t batch_size = 8);

}  // namespace mma

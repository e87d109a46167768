// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mmadapt/data.hpp"
#include "mmadapt/error.hpp"

namespace mma {

AdamW::AdamW(ParamStore& store, AdamWConfig config) : config_(config) {
  for (Parameter& p : store.all())
    if (p.trainable) slots_.push_back({&p, Tensor(p.shape), Tensor(p.shape)});
}

void AdamW::step(double lr) {
  for (const Slot& s : slots_)
    require(s.param->has_grad(), ErrorKind::contract,
            "trainable parameter '" + s.param->name + "' has no gradient");
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double decay = 1.0 - lr * config_.weight_decay;
  for (Slot& s : slots_) {
    Tensor& w = s.param->value;
    const Tensor& g = s.param->grad;
    for (std::size_t i = 0; i < w.numel(); ++i) {
      s.m[i] = round_to_precision(b1 * s.m[i] + (1.0 - b1) * g[i]);
      s.v[i] = round_to_precision(b2 * s.v[i] + (1.0 - b2) * g[i] * g[i]);
      const double m_hat = s.m[i] / c1;
      const double v_hat = s.v[i] / c2;
      w[i] = round_to_precision(w[i] * decay - lr * m_hat / (std::sqrt(v_hat) + config_.eps));
    }
  }
}

double CosineSchedule::lr(double epoch) const {
  require(total_epochs > 0, ErrorKind::config, "schedule needs a positive epoch count");
  require(epoch >= 0.0 && epoch <= total_epochs, ErrorKind::contract,
          "epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(total_epochs) + "]");
  if (epoch == total_epochs) return 0.0;
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * epoch / total_epochs));
}

Batch make_batch(std::span<const SampleRecord* const> samples, const ModelConfig& c,
                 std::size_t clip) {
  const std::size_t b = samples.size();
  require(b > 0, ErrorKind::contract, "empty batch");
  Batch batch;
  const std::size_t frame = c.channels * c.image_height * c.image_width;
  const std::size_t spec = c.spec_bins * c.spec_frames;
  if (c.has_vision()) batch.video = Tensor({b, c.frames, c.channels, c.image_height, c.image_width});
  if (c.has_audio()) batch.audio = Tensor({b, c.spec_bins, c.spec_frames});
  for (std::size_t i = 0; i < b; ++i) {
    const SampleRecord& s = *samples[i];
    require(s.label >= 0 && static_cast<std::size_t>(s.label) < c.num_classes, ErrorKind::contract,
            "sample '" + s.id + "' label out of range");
    batch.labels.push_back(s.label);
    if (c.has_vision()) {
      require(s.video.rank() == 4 && s.video.numel() / s.video.dim(0) == frame,
              ErrorKind::dimension,
              "sample '" + s.id + "' frames " + shape_str(s.video.shape()) +
                  " do not match the model geometry");
      const auto idx = sample_frames(s.video.dim(0), c.frames, clip);
      for (std::size_t f = 0; f < c.frames; ++f)
        std::copy_n(s.video.ptr() + idx[f] * frame, frame,
                    batch.video.ptr() + (i * c.frames + f) * frame);
    }
    if (c.has_audio()) {
      require(s.audio.numel() == spec, ErrorKind::dimension,
              "sample '" + s.id + "' spectrogram " + shape_str(s.audio.shape()) +
                  " does not match the model geometry");
      std::copy_n(s.audio.ptr(), spec, batch.audio.ptr() + i * spec);
    }
  }
  return batch;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  return idx;
}

EpochStats train_epoch(Model& model, std::span<const SampleRecord* const> data, AdamW& optimizer,
                       double lr, std::size_t batch_size, std::uint64_t shuffle_seed,
                       std::size_t epoch) {
  require(!data.empty(), ErrorKind::contract, "training set is empty");
  require(batch_size > 0, ErrorKind::config, "batch size must be positive");
  const auto order = shuffled_indices(data.size(), shuffle_seed);
  EpochStats stats;
  stats.epoch = epoch;
  stats.lr = lr;
  double total = 0.0;
  std::vector<const SampleRecord*> members;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    members.clear();
    for (std::size_t i = start; i < std::min(start + batch_size, order.size()); ++i)
      members.push_back(data[order[i]]);
    Batch batch = make_batch(members, model.config(), 0);
    model.params().zero_grad();
    Tape tape;
    Var loss = cross_entropy(model.forward(tape, batch), batch.labels);
    const double value = loss.value()[0];
    if (!std::isfinite(value))
      fail(ErrorKind::numeric, "non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(stats.batches) + " (first sample '" +
                                   members.front()->id + "')");
    tape.backward(loss);
    optimizer.step(lr);
    total += value * static_cast<double>(members.size());
    ++stats.batches;
  }
  stats.mean_loss = total / static_cast<double>(data.size());
  return stats;
}

std::vector<EpochStats> train(Model& model, std::span<const SampleRecord* const> data,
                              const TrainOptions& options, const EpochCallback& on_epoch) {
  AdamW optimizer(model.params(), options.adamw);
  CosineSchedule schedule{options.base_lr, static_cast<double>(options.epochs)};
  std::vector<EpochStats> history;
  for (std::size_t e = 0; e < options.epochs; ++e) {
    const std::uint64_t seed = options.seed * 1000003ULL + e;
    history.push_back(train_epoch(model, data, optimizer, schedule.lr(static_cast<double>(e)),
                                  options.batch_size, seed, e));
    if (on_epoch) on_epoch(history.back());
  }
  return history;
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : k_(classes), counts_(std::move(counts)) {
  require(counts_.size() == k_ * k_, ErrorKind::dimension, "confusion counts must be K x K");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  require(truth < k_ && predicted < k_, ErrorKind::contract, "class index out of range");
  ++counts_[truth * k_ + predicted];
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t n = 0;
  for (std::size_t j = 0; j < k_; ++j) n += at(truth, j);
  return n;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::correct() const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < k_; ++i) n += at(i, i);
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  require(other.k_ == k_, ErrorKind::dimension, "confusion matrices differ in size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  require(cm.total() > 0, ErrorKind::contract, "confusion matrix is empty");
  double recall_sum = 0.0;
  std::size_t supported = 0;
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    const std::uint64_t support = cm.row_total(i);
    if (support == 0) continue;
    recall_sum += static_cast<double>(cm.at(i, i)) / static_cast<double>(support);
    ++supported;
  }
  return {recall_sum / static_cast<double>(supported),
          static_cast<double>(cm.correct()) / static_cast<double>(cm.total())};
}

std::size_t argmax(std::span<const double> values) {
  require(!values.empty(), ErrorKind::contract, "argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

ConfusionMatrix confusion_from_logits(const Tensor& logits, std::span<const int> labels) {
  require(logits.rank() == 2 && logits.dim(0) == labels.size(), ErrorKind::dimension,
          "logits " + shape_str(logits.shape()) + " do not match " +
              std::to_string(labels.size()) + " labels");
  const std::size_t k = logits.dim(1);
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < labels.size(); ++i)
    cm.add(static_cast<std::size_t>(labels[i]), argmax(logits.data().subspan(i * k, k)));
  return cm;
}

Tensor predict_logits(const Model& model, std::span<const SampleRecord* const> data,
                      std::size_t clips, std::size_t batch_size) {
  require(clips == 1 || clips == 2, ErrorKind::config, "clips must be 1 or 2");
  require(batch_size > 0, ErrorKind::config, "batch size must be positive");
  const std::size_t k = model.config().num_classes;
  Tensor out({data.size(), k});
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, data.size());
    auto members = data.subspan(start, end - start);
    for (std::size_t clip = 0; clip < clips; ++clip) {
      Tape tape;
      const Tensor& logits = model.forward(tape, make_batch(members, model.config(), clip)).value();
      for (std::size_t i = 0; i < logits.numel(); ++i) out[start * k + i] += logits[i];
    }
  }
  if (clips > 1)
    for (double& v : out.data()) v /= static_cast<double>(clips);
  return out;
}

ConfusionMatrix evaluate(const Model& model, std::span<const SampleRecord* const> data,
                         std::size_t clips, std::size_t batch_size) {
  std::vector<int> labels;
  for (const SampleRecord* s : data) labels.push_back(s->label);
  return confusion_from_logits(predict_logits(model, data, clips, batch_size), labels);
}

}  // namespace mma

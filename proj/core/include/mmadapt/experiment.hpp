// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmadapt/data.hpp"
#include "mmadapt/model.hpp"
#include "mmadapt/model_config.hpp"
#include "mmadapt/training.hpp"

namespace mma {

struct DataConfig {
  /// Path to a manifest.json; empty generates `synthetic` in memory.
  std::string manifest;
  SynthConfig synthetic;
  int fold = 1;
};

/// One training run, serialized as a strict JSON document.
struct ExperimentConfig {
  std::string preset = "toy";
  ModelConfig model;
  TrainOptions training;
  DataConfig data;
  /// Seeds the adapted parameters and the batch order.
  std::uint64_t seed = 1;
  std::size_t eval_batch_size = 8;
  std::string output_dir = "runs/toy";
  /// Directory relative dataset paths are resolved against. Not serialized.
  std::filesystem::path base_dir;

  /// Desk-scale model on the default synthetic dataset.
  static ExperimentConfig toy();
  /// Published hyperparameters at ViT-base scale; meant for parameter
  /// accounting, too large to train here.
  static ExperimentConfig paper_scale();
  static std::optional<ExperimentConfig> preset_named(std::string_view name);

  /// Throws a config error naming the offending field.
  void validate() const;
  std::filesystem::path manifest_path() const;
};

/// Parses a config document. Keys absent from the document take the values
/// of the chosen "preset"; unknown keys and type mismatches are config errors
/// naming the field.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Fully resolved document; parse(serialize(c)) == c.
std::string serialize_experiment_config(const ExperimentConfig& config);

/// SHA-256 over the serialized config with output_dir removed, so the same
/// experiment written to two places shares one digest.
std::string config_digest(const ExperimentConfig& config);

std::string sha256_hex(std::string_view bytes);

/// Train and test splits of the configured fold.
struct ExperimentData {
  std::vector<SampleRecord> samples;
  DatasetManifest manifest;
  std::vector<const SampleRecord*> train;
  std::vector<const SampleRecord*> test;
};

ExperimentData load_experiment_data(const ExperimentConfig& config);

struct ClipEvaluation {
  std::size_t clips = 1;
  ConfusionMatrix confusion{1};
  Metrics metrics;
};

struct RunReport {
  std::string label;
  std::string config_digest;
  std::string config_json;
  int fold = 1;
  std::uint64_t seed = 1;
  ParamBreakdown params;
  std::vector<EpochStats> epochs;
  std::vector<ClipEvaluation> evaluations;
  double wall_seconds = 0.0;

  const ClipEvaluation& evaluation(std::size_t clips) const;
};

/// Trains on the fold's train split and evaluates the test split with one
/// and two clips.
RunReport run_experiment(const ExperimentConfig& config, const ExperimentData& data,
                         const EpochCallback& on_epoch = {});
RunReport run_experiment(const ExperimentConfig& config, const EpochCallback& on_epoch = {});

/// Writes report.json, epochs.csv and metrics.csv. The CSVs hold no timing
/// and are byte-identical across reruns of one config.
void write_run(const std::filesystem::path& dir, const RunReport& report);
std::string report_json(const RunReport& report);
RunReport parse_report_json(std::string_view text);
RunReport read_run(const std::filesystem::path& dir_or_file);
std::string epochs_csv(const RunReport& report);
std::string metrics_csv(const RunReport& report);

/// Throws a config error when `dir` already holds a report of another config.
void check_output_dir(const std::filesystem::path& dir, const std::string& digest);

/// Output directory after the MMADAPT_OUTPUT_ROOT override for relative paths.
std::filesystem::path resolve_output_dir(const std::string& dir);

struct AblationVariant {
  std::string name;
  /// Unset when the variant cannot be built from this base config.
  std::optional<ExperimentConfig> config;
  std::string note;
};

const std::vector<std::string>& ablation_suites();
/// The variant grid of a suite over `base`; throws a config error for an
/// unknown suite.
std::vector<AblationVariant> ablation_variants(std::string_view suite, const ExperimentConfig& base);

struct AblationRow {
  std::string variant;
  std::string status;  // "ok", "params-only" or "infeasible"
  std::string note;
  ParamBreakdown params;
  std::optional<RunReport> report;
};

/// Columns: suite, variant, status, total and temporal (ITA + MTT) trainable
/// parameters, then UAR/WAR at one and two clips for trained rows.
std::string ablation_csv(std::string_view suite, const std::vector<AblationRow>& rows);

/// One row per run: label, digest, UAR/WAR at one and two clips, params.
std::string summary_csv(const std::vector<RunReport>& reports);
/// Grouped bar chart of UAR and WAR (two-clip protocol) per labelled run.
std::string metrics_svg(const std::vector<std::pair<std::string, Metrics>>& bars,
                        std::string_view title);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mma

// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

// mmadapt: train, ablate and verify audio-visual adapters from the shell.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure
// during training, 4 verification failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmadapt/error.hpp"
#include "mmadapt/experiment.hpp"
#include "mmadapt/model.hpp"
#include "mmadapt/verification.hpp"

namespace fs = std::filesystem;
using namespace mma;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerify = 4;

struct ConfigArgs {
  std::string config;
  std::string preset = "toy";
  std::optional<int> fold;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "Experiment config (JSON)");
    cmd->add_option("--preset", preset, "Built-in config when --config is absent")
        ->check(CLI::IsMember({"toy", "paper_scale"}));
    cmd->add_option("--fold", fold, "Held-out fold (1-based)");
    cmd->add_option("--seed", seed, "Seed for adapted weights and batch order");
  }

  ExperimentConfig load() const {
    ExperimentConfig c = config.empty() ? *ExperimentConfig::preset_named(preset)
                                        : load_experiment_config(config);
    if (fold) c.data.fold = *fold;
    if (seed) {
      c.seed = *seed;
      c.training.seed = *seed;
    }
    c.validate();
    return c;
  }
};

std::string percent(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

void print_breakdown(const ParamBreakdown& b) {
  for (const auto& [group, n] : b.groups) std::printf("  %-12s %12zu\n", group.c_str(), n);
  std::printf("  %-12s %12zu  (%.2fM)\n", "total", b.total, static_cast<double>(b.total) / 1e6);
}

int cmd_train(const ConfigArgs& args, const std::string& output, bool force, bool quiet) {
  ExperimentConfig c = args.load();
  if (!output.empty()) c.output_dir = output;
  const fs::path dir = resolve_output_dir(c.output_dir);
  const std::string digest = config_digest(c);
  if (!force) check_output_dir(dir, digest);

  const ExperimentData data = load_experiment_data(c);
  if (!quiet)
    std::printf("training fold %d: %zu train / %zu test samples, digest %.12s\n", c.data.fold,
                data.train.size(), data.test.size(), digest.c_str());
  RunReport r = run_experiment(c, data, [&](const EpochStats& e) {
    if (!quiet)
      std::printf("epoch %2zu/%zu  lr %.3e  loss %.5f\n", e.epoch + 1, c.training.epochs, e.lr,
                  e.mean_loss);
    std::fflush(stdout);
  });
  r.label = fs::path(c.output_dir).filename().string();
  write_run(dir, r);
  write_text(dir / "config.json", serialize_experiment_config(c));
  for (const auto& e : r.evaluations)
    std::printf("clips=%zu  UAR %s  WAR %s  (%llu/%llu)\n", e.clips, percent(e.metrics.uar).c_str(),
                percent(e.metrics.war).c_str(),
                static_cast<unsigned long long>(e.confusion.correct()),
                static_cast<unsigned long long>(e.confusion.total()));
  std::printf("wrote %s\n", dir.string().c_str());
  return kExitOk;
}

int cmd_ablate(const ConfigArgs& args, const std::string& suite, const std::string& output,
               bool params_only, bool quiet) {
  ExperimentConfig base = args.load();
  if (!output.empty()) base.output_dir = output;
  const auto variants = ablation_variants(suite, base);
  const fs::path root = resolve_output_dir(base.output_dir) / suite;

  std::optional<ExperimentData> data;
  std::vector<AblationRow> rows;
  std::vector<std::pair<std::string, Metrics>> bars;
  for (const auto& v : variants) {
    AblationRow row;
    row.variant = v.name;
    row.note = v.note;
    if (!v.config) {
      row.status = "infeasible";
      std::printf("%-14s infeasible: %s\n", v.name.c_str(), v.note.c_str());
      rows.push_back(std::move(row));
      continue;
    }
    row.params = count_trainable_params(v.config->model);
    if (params_only) {
      row.status = "params-only";
      std::printf("%-14s %12zu params  (temporal %zu)\n", v.name.c_str(), row.params.total,
                  row.params.get("ita") + row.params.get("mtt"));
      rows.push_back(std::move(row));
      continue;
    }
    if (!data) data = load_experiment_data(base);
    if (!quiet) std::printf("%-14s training (%zu params)...\n", v.name.c_str(), row.params.total);
    std::fflush(stdout);
    RunReport r = run_experiment(*v.config, *data);
    r.label = v.name;
    write_run(root / v.name, r);
    row.status = "ok";
    const Metrics two = r.evaluation(2).metrics;
    std::printf("%-14s UAR %s  WAR %s\n", v.name.c_str(), percent(two.uar).c_str(),
                percent(two.war).c_str());
    bars.emplace_back(v.name, two);
    row.report = std::move(r);
    rows.push_back(std::move(row));
  }
  write_text(root / "ablation.csv", ablation_csv(suite, rows));
  if (!bars.empty()) write_text(root / "ablation.svg", metrics_svg(bars, suite + " ablation"));
  std::printf("wrote %s\n", (root / "ablation.csv").string().c_str());
  return kExitOk;
}

int cmd_gradcheck(const std::string& precision) {
  std::vector<Precision> modes;
  if (precision != "32") modes.push_back(Precision::f64);
  if (precision != "64") modes.push_back(Precision::f32);
  std::vector<std::string> failed;
  for (Precision p : modes) {
    const int bits = p == Precision::f64 ? 64 : 32;
    double worst = 0.0;
    std::printf("%d-bit (threshold %.0e)\n", bits, gradcheck_threshold(p));
    for (const auto& row : run_gradcheck_suite(p)) {
      std::printf("  %-20s %.3e  %5zu coords  %s%s\n", row.op.c_str(), row.max_rel_error, row.coords,
                  row.passed ? "ok" : "FAIL ", row.passed ? "" : row.worst.c_str());
      worst = std::max(worst, row.max_rel_error);
      if (!row.passed) failed.push_back(row.op + " (" + std::to_string(bits) + "-bit)");
    }
    std::printf("  max relative error %.3e\n", worst);
  }
  if (!failed.empty()) {
    std::fprintf(stderr, "gradient check failed:");
    for (const auto& f : failed) std::fprintf(stderr, " %s", f.c_str());
    std::fprintf(stderr, "\n");
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_params(const ConfigArgs& args, std::optional<std::size_t> latent, std::optional<std::size_t> ita,
               bool no_mtt) {
  ExperimentConfig c = args.load();
  if (latent) c.model.latent_dim = *latent;
  if (ita) c.model.ita_dim = *ita;
  if (no_mtt) c.model.use_mtt = false;
  c.model.validate();
  std::printf("trainable parameters (%s)\n", c.preset.c_str());
  print_breakdown(count_trainable_params(c.model));
  return kExitOk;
}

int cmd_synth(const ConfigArgs& args, const std::string& out, std::optional<std::size_t> samples,
              std::optional<double> noise, std::optional<std::uint64_t> data_seed) {
  SynthConfig s = args.load().data.synthetic;
  if (samples) s.samples = *samples;
  if (noise) s.noise = *noise;
  if (data_seed) s.seed = *data_seed;
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("synthetic dataset: ") + e.what());
  }
  const fs::path dir = resolve_output_dir(out);
  write_dataset(dir, generate_synthetic(s));
  std::printf("wrote %zu samples and manifest.json to %s\n", s.samples, dir.string().c_str());
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& out,
               const std::string& config, const std::string& title) {
  std::optional<std::string> expected;
  if (!config.empty()) expected = config_digest(load_experiment_config(config));
  std::vector<RunReport> reports;
  std::vector<std::pair<std::string, Metrics>> bars;
  for (const auto& path : runs) {
    RunReport r = read_run(path);
    require(!expected || r.config_digest == *expected, ErrorKind::config,
            path + ": report digest " + r.config_digest.substr(0, 12) +
                " does not match the config (" + expected.value_or("").substr(0, 12) + ")");
    bars.emplace_back(r.label, r.evaluation(2).metrics);
    reports.push_back(std::move(r));
  }
  const fs::path dir = resolve_output_dir(out);
  write_text(dir / "summary.csv", summary_csv(reports));
  write_text(dir / "summary.svg", metrics_svg(bars, title));
  std::printf("wrote %s and %s\n", (dir / "summary.csv").string().c_str(),
              (dir / "summary.svg").string().c_str());
  return kExitOk;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::numeric: return kExitNumeric;
    case ErrorKind::contract: return 1;
    default: return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameter-efficient audio-visual adaptation: training, ablation and verification"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print results");

  ConfigArgs train_args;
  std::string train_out;
  bool force = false;
  auto* train = app.add_subcommand("train", "Train on one fold and evaluate with 1 and 2 clips");
  train_args.add_to(train);
  train->add_option("-o,--output", train_out, "Output directory (overrides output_dir)");
  train->add_flag("--force", force, "Overwrite a run of a different config");

  ConfigArgs ablate_args;
  std::string suite, ablate_out;
  bool params_only = false;
  auto* ablate = app.add_subcommand("ablate", "Train every variant of an ablation grid");
  ablate_args.add_to(ablate);
  ablate->add_option("-s,--suite", suite, "fusion | temporal | prompts | latent | modality")->required();
  ablate->add_option("-o,--output", ablate_out, "Output directory");
  ablate->add_flag("--params-only", params_only, "Tabulate parameter counts without training");

  std::string precision = "both";
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every module");
  gradcheck->add_option("-p,--precision", precision, "64, 32 or both")
      ->check(CLI::IsMember({"64", "32", "both"}));

  ConfigArgs params_args;
  std::optional<std::size_t> latent, ita;
  bool no_mtt = false;
  auto* params = app.add_subcommand("params", "Print the trainable-parameter breakdown");
  params_args.add_to(params);
  params->add_option("--latent-dim", latent, "Override the bottleneck width");
  params->add_option("--ita-dim", ita, "Override the temporal adaptor width (0 disables)");
  params->add_flag("--no-mtt", no_mtt, "Replace the temporal transformer by frame averaging");

  ConfigArgs synth_args;
  std::string synth_out;
  std::optional<std::size_t> samples;
  std::optional<double> noise;
  std::optional<std::uint64_t> data_seed;
  auto* synth = app.add_subcommand("synth", "Write the synthetic dataset to disk");
  synth_args.add_to(synth);
  synth->add_option("-o,--output", synth_out, "Dataset directory")->required();
  synth->add_option("--samples", samples, "Number of samples");
  synth->add_option("--noise", noise, "Gaussian noise level");
  synth->add_option("--data-seed", data_seed, "Generator seed");

  std::vector<std::string> runs;
  std::string report_out, report_config, title = "UAR / WAR per run";
  auto* report = app.add_subcommand("report", "Tabulate runs as CSV plus an SVG bar chart");
  report->add_option("runs", runs, "Run directories or report.json files")->required();
  report->add_option("-o,--output", report_out, "Output directory")->required();
  report->add_option("-c,--config", report_config, "Refuse runs not produced by this config");
  report->add_option("--title", title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args, train_out, force, quiet);
    if (*ablate) return cmd_ablate(ablate_args, suite, ablate_out, params_only, quiet);
    if (*gradcheck) return cmd_gradcheck(precision);
    if (*params) return cmd_params(params_args, latent, ita, no_mtt);
    if (*synth) return cmd_synth(synth_args, synth_out, samples, noise, data_seed);
    if (*report) return cmd_report(runs, report_out, report_config, title);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}

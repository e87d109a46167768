// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mmadapt/error.hpp"
#include "mmadapt/model.hpp"

namespace mma {
namespace {

using Json = nlohmann::ordered_json;

// Reads the keys of one JSON object into fields, remembering which it saw so
// leftovers can be reported as unknown.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), ErrorKind::config, where() + "expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        require(it->is_number_unsigned(), ErrorKind::config,
                field(key) + ": expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, int>) {
        require(it->is_number_integer(), ErrorKind::config, field(key) + ": expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        require(it->is_number(), ErrorKind::config, field(key) + ": expected a number");
      } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        require(it->is_array() && std::all_of(it->begin(), it->end(),
                                               [](const Json& v) { return v.is_number_unsigned(); }),
                ErrorKind::config, field(key) + ": expected an array of non-negative integers");
      }
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::config, field(key) + ": wrong type (" + it->type_name() + ")");
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse, const char* choices) {
    std::string s;
    if (j_.contains(key)) {
      read(key, s);
      auto v = parse(s);
      require(v.has_value(), ErrorKind::config,
              field(key) + ": unknown value '" + s + "' (expected " + choices + ")");
      out = *v;
    } else {
      seen_.insert(key);
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      require(seen_.count(it.key()) > 0, ErrorKind::config,
              field(it.key().c_str()) + ": unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_model(const Json& j, ModelConfig& m) {
  StrictObject o(j, "model");
  o.read("dim", m.dim);
  o.read("depth", m.depth);
  o.read("heads", m.heads);
  o.read("mlp_ratio", m.mlp_ratio);
  o.read("patch_size", m.patch_size);
  o.read("image_height", m.image_height);
  o.read("image_width", m.image_width);
  o.read("channels", m.channels);
  o.read("spec_bins", m.spec_bins);
  o.read("spec_frames", m.spec_frames);
  o.read("encoder_init_gain", m.encoder_init_gain);
  o.read("num_prompts", m.num_prompts);
  o.read("prompt_layers", m.prompt_layers);
  o.read("prompt_init_std", m.prompt_init_std);
  o.read_enum("fusion", m.fusion, parse_fusion_variant, "none, add, mult, mult_concat, bottleneck");
  o.read("fusion_layers", m.fusion_layers);
  o.read("latent_dim", m.latent_dim);
  o.read("fusion_heads", m.fusion_heads);
  o.read("pool_include_cls", m.pool_include_cls);
  o.read("pool_include_prompts", m.pool_include_prompts);
  o.read("frames", m.frames);
  o.read("temporal_dim", m.temporal_dim);
  o.read("temporal_heads", m.temporal_heads);
  o.read("temporal_mlp_ratio", m.temporal_mlp_ratio);
  o.read("use_mtt", m.use_mtt);
  o.read("ita_dim", m.ita_dim);
  o.read("ita_heads", m.ita_heads);
  o.read("num_classes", m.num_classes);
  o.read_enum("modality", m.modality, parse_modality, "multimodal, audio_only, vision_only");
  o.read("head_init_std", m.head_init_std);
  o.finish();
}

Json write_model(const ModelConfig& m) {
  return Json{{"dim", m.dim},
              {"depth", m.depth},
              {"heads", m.heads},
              {"mlp_ratio", m.mlp_ratio},
              {"patch_size", m.patch_size},
              {"image_height", m.image_height},
              {"image_width", m.image_width},
              {"channels", m.channels},
              {"spec_bins", m.spec_bins},
              {"spec_frames", m.spec_frames},
              {"encoder_init_gain", m.encoder_init_gain},
              {"num_prompts", m.num_prompts},
              {"prompt_layers", m.prompt_layers},
              {"prompt_init_std", m.prompt_init_std},
              {"fusion", to_string(m.fusion)},
              {"fusion_layers", m.fusion_layers},
              {"latent_dim", m.latent_dim},
              {"fusion_heads", m.fusion_heads},
              {"pool_include_cls", m.pool_include_cls},
              {"pool_include_prompts", m.pool_include_prompts},
              {"frames", m.frames},
              {"temporal_dim", m.temporal_dim},
              {"temporal_heads", m.temporal_heads},
              {"temporal_mlp_ratio", m.temporal_mlp_ratio},
              {"use_mtt", m.use_mtt},
              {"ita_dim", m.ita_dim},
              {"ita_heads", m.ita_heads},
              {"num_classes", m.num_classes},
              {"modality", to_string(m.modality)},
              {"head_init_std", m.head_init_std}};
}

void read_schedule(const Json& j, TrainOptions& t) {
  StrictObject o(j, "schedule");
  o.read("epochs", t.epochs);
  o.read("batch_size", t.batch_size);
  o.read("base_lr", t.base_lr);
  o.read("beta1", t.adamw.beta1);
  o.read("beta2", t.adamw.beta2);
  o.read("eps", t.adamw.eps);
  o.read("weight_decay", t.adamw.weight_decay);
  o.finish();
}

Json write_schedule(const TrainOptions& t) {
  return Json{{"epochs", t.epochs},           {"batch_size", t.batch_size},
              {"base_lr", t.base_lr},         {"beta1", t.adamw.beta1},
              {"beta2", t.adamw.beta2},       {"eps", t.adamw.eps},
              {"weight_decay", t.adamw.weight_decay}};
}

void read_synth(const Json& j, SynthConfig& s) {
  StrictObject o(j, "data.synthetic");
  o.read("num_classes", s.num_classes);
  o.read("samples", s.samples);
  o.read("frames", s.frames);
  o.read("channels", s.channels);
  o.read("height", s.height);
  o.read("width", s.width);
  o.read("spec_bins", s.spec_bins);
  o.read("spec_frames", s.spec_frames);
  o.read("noise", s.noise);
  o.read("modulation", s.modulation);
  o.read("seed", s.seed);
  o.read("num_folds", s.num_folds);
  o.read("vision_group", s.vision_group);
  o.read("audio_group", s.audio_group);
  o.finish();
}

Json write_synth(const SynthConfig& s) {
  return Json{{"num_classes", s.num_classes}, {"samples", s.samples},
              {"frames", s.frames},           {"channels", s.channels},
              {"height", s.height},           {"width", s.width},
              {"spec_bins", s.spec_bins},     {"spec_frames", s.spec_frames},
              {"noise", s.noise},             {"modulation", s.modulation},
              {"seed", s.seed},               {"num_folds", s.num_folds},
              {"vision_group", s.vision_group}, {"audio_group", s.audio_group}};
}

Json config_to_json(const ExperimentConfig& c, bool with_output) {
  Json j;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  if (with_output) j["output_dir"] = c.output_dir;
  j["eval_batch_size"] = c.eval_batch_size;
  j["model"] = write_model(c.model);
  j["schedule"] = write_schedule(c.training);
  j["data"] = Json{{"manifest", c.data.manifest.empty() ? Json(nullptr) : Json(c.data.manifest)},
                   {"fold", c.data.fold},
                   {"synthetic", write_synth(c.data.synthetic)}};
  return j;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::toy() {
  ExperimentConfig c;
  c.preset = "toy";
  c.model = ModelConfig::toy();
  c.training.base_lr = 3e-3;
  c.output_dir = "runs/toy";
  return c;
}

ExperimentConfig ExperimentConfig::paper_scale() {
  ExperimentConfig c;
  c.preset = "paper_scale";
  c.model = ModelConfig::paper_scale();
  c.training.base_lr = 1e-4;
  SynthConfig& s = c.data.synthetic;
  s.frames = c.model.frames;
  s.channels = c.model.channels;
  s.height = c.model.image_height;
  s.width = c.model.image_width;
  s.spec_bins = c.model.spec_bins;
  s.spec_frames = c.model.spec_frames;
  c.output_dir = "runs/paper_scale";
  return c;
}

std::optional<ExperimentConfig> ExperimentConfig::preset_named(std::string_view name) {
  if (name == "toy") return toy();
  if (name == "paper_scale") return paper_scale();
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  model.validate();
  require(training.epochs > 0, ErrorKind::config, "schedule.epochs must be positive");
  require(training.batch_size > 0, ErrorKind::config, "schedule.batch_size must be positive");
  require(training.base_lr > 0.0 && std::isfinite(training.base_lr), ErrorKind::config,
          "schedule.base_lr must be a positive number");
  require(training.adamw.beta1 >= 0.0 && training.adamw.beta1 < 1.0, ErrorKind::config,
          "schedule.beta1 must lie in [0, 1)");
  require(training.adamw.beta2 >= 0.0 && training.adamw.beta2 < 1.0, ErrorKind::config,
          "schedule.beta2 must lie in [0, 1)");
  require(training.adamw.eps > 0.0, ErrorKind::config, "schedule.eps must be positive");
  require(training.adamw.weight_decay >= 0.0, ErrorKind::config,
          "schedule.weight_decay must be >= 0");
  require(eval_batch_size > 0, ErrorKind::config, "eval_batch_size must be positive");
  require(!output_dir.empty(), ErrorKind::config, "output_dir must not be empty");
  if (data.manifest.empty()) {
    const SynthConfig& s = data.synthetic;
    try {
      s.validate();
    } catch (const Error& e) {
      fail(ErrorKind::config, std::string("data.synthetic: ") + e.what());
    }
    auto same = [](std::size_t a, std::size_t b, const std::string& f) {
      require(a == b, ErrorKind::config,
              "data.synthetic." + f + " = " + std::to_string(a) + " does not match the model (" +
                  std::to_string(b) + ")");
    };
    same(s.num_classes, model.num_classes, "num_classes");
    same(s.channels, model.channels, "channels");
    same(s.height, model.image_height, "height");
    same(s.width, model.image_width, "width");
    same(s.spec_bins, model.spec_bins, "spec_bins");
    same(s.spec_frames, model.spec_frames, "spec_frames");
    require(data.fold >= 1 && data.fold <= s.num_folds, ErrorKind::config,
            "data.fold must lie in [1, " + std::to_string(s.num_folds) + "]");
  } else {
    require(data.fold >= 1, ErrorKind::config, "data.fold must be >= 1");
  }
}

std::filesystem::path ExperimentConfig::manifest_path() const {
  std::filesystem::path p = data.manifest;
  return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  StrictObject root(j, "");
  std::string preset = "toy";
  root.read("preset", preset);
  auto base = ExperimentConfig::preset_named(preset);
  require(base.has_value(), ErrorKind::config,
          "preset: unknown value '" + preset + "' (expected toy or paper_scale)");
  ExperimentConfig c = *base;
  c.base_dir = base_dir;
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  root.read("eval_batch_size", c.eval_batch_size);
  if (const Json* m = root.child("model")) read_model(*m, c.model);
  if (const Json* s = root.child("schedule")) read_schedule(*s, c.training);
  if (const Json* d = root.child("data")) {
    StrictObject data(*d, "data");
    if (const Json* man = data.child("manifest"); man && !man->is_null()) {
      require(man->is_string(), ErrorKind::config, "data.manifest: expected a string or null");
      c.data.manifest = man->get<std::string>();
    }
    data.read("fold", c.data.fold);
    if (const Json* s = data.child("synthetic")) read_synth(*s, c.data.synthetic);
    data.finish();
  }
  root.finish();
  c.training.seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  require(std::filesystem::is_regular_file(path), ErrorKind::config,
          "config file " + path.string() + " does not exist");
  return parse_experiment_config(read_text(path), path.parent_path());
}

std::string serialize_experiment_config(const ExperimentConfig& c) {
  return config_to_json(c, true).dump(2) + "\n";
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) == 1 &&
              EVP_DigestFinal_ex(ctx.get(), md, &len) == 1,
          ErrorKind::io, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string config_digest(const ExperimentConfig& c) { return sha256_hex(config_to_json(c, false).dump()); }

ExperimentData load_experiment_data(const ExperimentConfig& c) {
  ExperimentData d;
  if (c.data.manifest.empty()) {
    SynthDataset ds = generate_synthetic(c.data.synthetic);
    d.samples = std::move(ds.samples);
    d.manifest = std::move(ds.manifest);
  } else {
    const auto path = c.manifest_path();
    require(std::filesystem::is_regular_file(path), ErrorKind::config,
            "data.manifest: " + path.string() + " does not exist");
    d.samples = load_dataset(path, &d.manifest);
    require(d.manifest.class_names.size() == c.model.num_classes, ErrorKind::config,
            "data.manifest lists " + std::to_string(d.manifest.class_names.size()) +
                " classes but model.num_classes is " + std::to_string(c.model.num_classes));
    require(c.data.fold <= d.manifest.num_folds, ErrorKind::config,
            "data.fold exceeds the manifest's " + std::to_string(d.manifest.num_folds) + " folds");
  }
  for (std::size_t i : fold_split(d.manifest, c.data.fold, false)) d.train.push_back(&d.samples[i]);
  for (std::size_t i : fold_split(d.manifest, c.data.fold, true)) d.test.push_back(&d.samples[i]);
  require(!d.train.empty() && !d.test.empty(), ErrorKind::config,
          "fold " + std::to_string(c.data.fold) + " leaves an empty train or test split");
  return d;
}

const ClipEvaluation& RunReport::evaluation(std::size_t clips) const {
  for (const auto& e : evaluations)
    if (e.clips == clips) return e;
  fail(ErrorKind::contract, "report has no " + std::to_string(clips) + "-clip evaluation");
}

RunReport run_experiment(const ExperimentConfig& config, const ExperimentData& data,
                         const EpochCallback& on_epoch) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  RunReport r;
  r.label = config.output_dir;
  r.config_digest = config_digest(config);
  r.config_json = serialize_experiment_config(config);
  r.fold = config.data.fold;
  r.seed = config.seed;
  Model model(config.model, config.seed);
  r.params = model.trainable_breakdown();
  TrainOptions options = config.training;
  options.seed = config.seed;
  r.epochs = train(model, data.train, options, on_epoch);
  for (std::size_t clips : {1u, 2u}) {
    ClipEvaluation e;
    e.clips = clips;
    e.confusion = evaluate(model, data.test, clips, config.eval_batch_size);
    e.metrics = compute_metrics(e.confusion);
    r.evaluations.push_back(std::move(e));
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

RunReport run_experiment(const ExperimentConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  return run_experiment(config, load_experiment_data(config), on_epoch);
}

std::string report_json(const RunReport& r) {
  Json j;
  j["format"] = "mmadapt-run-report";
  j["version"] = 1;
  j["label"] = r.label;
  j["config_digest"] = r.config_digest;
  j["config"] = r.config_json.empty() ? Json(nullptr) : Json::parse(r.config_json);
  j["fold"] = r.fold;
  j["seed"] = r.seed;
  Json groups = Json::object();
  for (const auto& [g, n] : r.params.groups) groups[g] = n;
  j["trainable_params"] = Json{{"total", r.params.total}, {"groups", groups}};
  j["epochs"] = Json::array();
  for (const auto& e : r.epochs)
    j["epochs"].push_back(
        Json{{"epoch", e.epoch}, {"lr", e.lr}, {"mean_loss", e.mean_loss}, {"batches", e.batches}});
  j["evaluations"] = Json::array();
  for (const auto& e : r.evaluations) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < e.confusion.classes(); ++i) {
      Json row = Json::array();
      for (std::size_t k = 0; k < e.confusion.classes(); ++k) row.push_back(e.confusion.at(i, k));
      rows.push_back(row);
    }
    j["evaluations"].push_back(Json{{"clips", e.clips},
                                    {"uar", e.metrics.uar},
                                    {"war", e.metrics.war},
                                    {"correct", e.confusion.correct()},
                                    {"total", e.confusion.total()},
                                    {"confusion", rows}});
  }
  j["wall_time_seconds"] = r.wall_seconds;
  return j.dump(2) + "\n";
}

RunReport parse_report_json(std::string_view text) {
  RunReport r;
  try {
    const Json j = Json::parse(text);
    require(j.value("format", "") == "mmadapt-run-report", ErrorKind::config,
            "not a run report (missing format tag)");
    r.label = j.at("label").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    if (!j.at("config").is_null()) r.config_json = j.at("config").dump(2) + "\n";
    r.fold = j.at("fold").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.params.total = j.at("trainable_params").at("total").get<std::size_t>();
    for (const auto& [g, n] : j.at("trainable_params").at("groups").items())
      r.params.groups[g] = n.get<std::size_t>();
    for (const auto& e : j.at("epochs"))
      r.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("lr").get<double>(),
                          e.at("mean_loss").get<double>(), e.at("batches").get<std::size_t>()});
    for (const auto& e : j.at("evaluations")) {
      const auto& rows = e.at("confusion");
      const std::size_t k = rows.size();
      std::vector<std::uint64_t> counts;
      for (const auto& row : rows)
        for (const auto& v : row) counts.push_back(v.get<std::uint64_t>());
      ClipEvaluation ev;
      ev.clips = e.at("clips").get<std::size_t>();
      ev.confusion = ConfusionMatrix(k, counts);
      ev.metrics = {e.at("uar").get<double>(), e.at("war").get<double>()};
      r.evaluations.push_back(std::move(ev));
    }
    r.wall_seconds = j.value("wall_time_seconds", 0.0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("malformed run report: ") + e.what());
  }
  return r;
}

RunReport read_run(const std::filesystem::path& p) {
  const auto file = std::filesystem::is_directory(p) ? p / "report.json" : p;
  require(std::filesystem::is_regular_file(file), ErrorKind::config,
          "no run report at " + file.string());
  return parse_report_json(read_text(file));
}

std::string epochs_csv(const RunReport& r) {
  std::string out = "epoch,lr,mean_loss,batches\n";
  char buf[128];
  for (const auto& e : r.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%zu\n", e.epoch, e.lr, e.mean_loss, e.batches);
    out += buf;
  }
  return out;
}

std::string metrics_csv(const RunReport& r) {
  std::string out = "config_digest,fold,seed,clips,uar,war,correct,total\n";
  for (const auto& e : r.evaluations)
    out += r.config_digest + "," + std::to_string(r.fold) + "," + std::to_string(r.seed) + "," +
           std::to_string(e.clips) + "," + fmt(e.metrics.uar) + "," + fmt(e.metrics.war) + "," +
           std::to_string(e.confusion.correct()) + "," + std::to_string(e.confusion.total()) + "\n";
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_run(const std::filesystem::path& dir, const RunReport& r) {
  write_text(dir / "report.json", report_json(r));
  write_text(dir / "epochs.csv", epochs_csv(r));
  write_text(dir / "metrics.csv", metrics_csv(r));
}

void check_output_dir(const std::filesystem::path& dir, const std::string& digest) {
  const auto file = dir / "report.json";
  if (!std::filesystem::exists(file)) return;
  const RunReport existing = read_run(file);
  require(existing.config_digest == digest, ErrorKind::config,
          dir.string() + " holds a report for config " + existing.config_digest.substr(0, 12) +
              ", not " + digest.substr(0, 12) + "; refusing to overwrite");
}

std::filesystem::path resolve_output_dir(const std::string& dir) {
  std::filesystem::path p = dir;
  if (p.is_relative())
    if (const char* root = std::getenv("MMADAPT_OUTPUT_ROOT"); root && *root)
      return std::filesystem::path(root) / p;
  return p;
}

const std::vector<std::string>& ablation_suites() {
  static const std::vector<std::string> suites = {"fusion", "temporal", "prompts", "latent",
                                                  "modality"};
  return suites;
}

std::vector<AblationVariant> ablation_variants(std::string_view suite, const ExperimentConfig& base) {
  std::vector<AblationVariant> out;
  auto variant = [&](std::string name, auto edit) {
    ExperimentConfig c = base;
    edit(c.model);
    c.output_dir = base.output_dir + "/" + std::string(suite) + "/" + name;
    out.push_back({std::move(name), std::move(c), ""});
  };
  if (suite == "fusion") {
    for (auto v : {FusionVariant::none, FusionVariant::mult, FusionVariant::mult_concat,
                   FusionVariant::add, FusionVariant::bottleneck})
      variant(std::string(to_string(v)), [v](ModelConfig& m) { m.fusion = v; });
  } else if (suite == "temporal") {
    // Adaptor widths are half, once and twice the bottleneck width.
    const std::size_t lat = base.model.latent_dim;
    for (std::size_t d : {lat / 2, lat, 2 * lat})
      variant("ita_" + std::to_string(d), [d](ModelConfig& m) {
        m.fusion = FusionVariant::bottleneck;
        m.use_mtt = false;
        m.ita_dim = d;
      });
    variant("mtt_ita_" + std::to_string(lat), [lat](ModelConfig& m) {
      m.fusion = FusionVariant::bottleneck;
      m.use_mtt = true;
      m.ita_dim = lat;
    });
    variant("mtt", [](ModelConfig& m) {
      m.use_mtt = true;
      m.ita_dim = 0;
    });
  } else if (suite == "prompts") {
    const std::size_t base_prompts = std::max<std::size_t>(base.model.num_prompts, 1);
    for (std::size_t hooks : {0u, 2u, 4u, 6u, 12u}) {
      const std::string name = std::to_string(hooks);
      if (hooks == 0) {
        variant(name, [](ModelConfig& m) {
          m.num_prompts = 0;
          m.prompt_layers.clear();
        });
        continue;
      }
      auto layers = spaced_hook_layers(hooks, base.model.depth);
      if (!layers) {
        out.push_back({name, std::nullopt,
                       std::to_string(hooks) + " hooks need depth >= " + std::to_string(hooks) +
                           "; encoders have " + std::to_string(base.model.depth) + " layers"});
        continue;
      }
      // Smallest multiple of the hook count holding at least the base prompts.
      const std::size_t count = hooks * ((base_prompts + hooks - 1) / hooks);
      variant(name, [&](ModelConfig& m) {
        m.num_prompts = count;
        m.prompt_layers = *layers;
      });
    }
  } else if (suite == "latent") {
    // Half to four times the base bottleneck width.
    const std::size_t lat = base.model.latent_dim;
    for (std::size_t d : {lat / 2, lat, 2 * lat, 4 * lat}) {
      if (d == 0 || d >= base.model.dim) {
        out.push_back({std::to_string(d), std::nullopt,
                       "latent width must lie in [1, " + std::to_string(base.model.dim) + ")"});
        continue;
      }
      variant(std::to_string(d), [d](ModelConfig& m) {
        m.fusion = FusionVariant::bottleneck;
        m.latent_dim = d;
      });
    }
  } else if (suite == "modality") {
    for (auto mode : {ModalityMode::audio_only, ModalityMode::vision_only, ModalityMode::multimodal})
      variant(std::string(to_string(mode)), [mode](ModelConfig& m) { m.modality = mode; });
  } else {
    std::string names;
    for (const auto& s : ablation_suites()) names += (names.empty() ? "" : ", ") + s;
    fail(ErrorKind::config, "unknown ablation suite '" + std::string(suite) + "' (expected " + names + ")");
  }
  return out;
}

std::string ablation_csv(std::string_view suite, const std::vector<AblationRow>& rows) {
  std::string out =
      "suite,variant,status,trainable_params,temporal_params,uar_clips1,war_clips1,uar_clips2,"
      "war_clips2\n";
  for (const auto& r : rows) {
    out += std::string(suite) + "," + r.variant + "," + r.status + ",";
    if (r.status != "infeasible")
      out += std::to_string(r.params.total) + "," +
             std::to_string(r.params.get("ita") + r.params.get("mtt"));
    else
      out += ",";
    if (r.report) {
      const auto& one = r.report->evaluation(1).metrics;
      const auto& two = r.report->evaluation(2).metrics;
      out += "," + fmt(one.uar) + "," + fmt(one.war) + "," + fmt(two.uar) + "," + fmt(two.war);
    } else {
      out += ",,,,";
    }
    out += "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<RunReport>& reports) {
  std::string out = "label,config_digest,fold,seed,trainable_params,uar_clips1,war_clips1,uar_clips2,war_clips2\n";
  for (const auto& r : reports) {
    const auto& one = r.evaluation(1).metrics;
    const auto& two = r.evaluation(2).metrics;
    out += r.label + "," + r.config_digest + "," + std::to_string(r.fold) + "," +
           std::to_string(r.seed) + "," + std::to_string(r.params.total) + "," + fmt(one.uar) +
           "," + fmt(one.war) + "," + fmt(two.uar) + "," + fmt(two.war) + "\n";
  }
  return out;
}

std::string metrics_svg(const std::vector<std::pair<std::string, Metrics>>& bars, std::string_view title) {
  const int group_w = 90, bar_w = 30, plot_h = 200, left = 50, top = 40;
  const int width = left + static_cast<int>(bars.size()) * group_w + 130;
  const int height = top + plot_h + 70;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const int y = top + plot_h - tick * plot_h / 4;
    s << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - 130 << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << tick * 25
      << "%</text>\n";
  }
  const char* colors[2] = {"#4878a8", "#e08a3c"};
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int x0 = left + static_cast<int>(i) * group_w + 12;
    const double values[2] = {bars[i].second.uar, bars[i].second.war};
    for (int k = 0; k < 2; ++k) {
      const int h = static_cast<int>(std::lround(std::clamp(values[k], 0.0, 1.0) * plot_h));
      s << "<rect x=\"" << x0 + k * bar_w << "\" y=\"" << top + plot_h - h << "\" width=\""
        << bar_w - 2 << "\" height=\"" << h << "\" fill=\"" << colors[k] << "\"><title>"
        << (k == 0 ? "UAR " : "WAR ") << fmt(100.0 * values[k]) << "</title></rect>\n";
    }
    s << "<text x=\"" << x0 + bar_w << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
      << xml_escape(bars[i].first) << "</text>\n";
  }
  const int lx = width - 115;
  for (int k = 0; k < 2; ++k) {
    s << "<rect x=\"" << lx << "\" y=\"" << top + k * 18 << "\" width=\"12\" height=\"12\" fill=\""
      << colors[k] << "\"/>\n";
    s << "<text x=\"" << lx + 18 << "\" y=\"" << top + k * 18 + 10 << "\">" << (k == 0 ? "UAR" : "WAR")
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace mma

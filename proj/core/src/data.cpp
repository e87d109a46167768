// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/data.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <set>

#include <json.hpp>

#include "mmadapt/encoder.hpp"
#include "mmadapt/error.hpp"

namespace mma {
namespace {

static_assert(std::endian::native == std::endian::little, "byte order assumed little-endian");

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void put(T v) {
    bytes(&v, sizeof v);
  }
  void tensor(const Tensor& t) {
    require(t.rank() <= 255, ErrorKind::contract, "tensor rank too large");
    put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t e : t.shape()) {
      require(e <= 0xffffffffu, ErrorKind::contract, "tensor extent too large");
      put<std::uint32_t>(static_cast<std::uint32_t>(e));
    }
    for (double v : t.data()) put<float>(static_cast<float>(v));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, std::string what) : in_(in), what_(std::move(what)) {}

  void bytes(void* p, std::size_t n) {
    if (in_.size() - pos_ < n)
      fail(ErrorKind::truncated, what_ + ": truncated at byte " + std::to_string(pos_) + " (needed " +
                                     std::to_string(n) + " more)");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  Tensor tensor() {
    const auto rank = get<std::uint8_t>();
    Shape shape(rank);
    for (auto& e : shape) e = get<std::uint32_t>();
    const std::size_t n = shape_numel(shape);
    if ((in_.size() - pos_) / sizeof(float) < n)
      fail(ErrorKind::truncated, what_ + ": payload of " + shape_str(shape) + " is truncated");
    Tensor t(shape);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(get<float>());
    return t;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

constexpr char kSampleMagic[4] = {'M', 'M', 'A', 'D'};
constexpr char kWeightsMagic[4] = {'M', 'M', 'A', 'W'};

}  // namespace

std::vector<std::uint8_t> encode_sample(const SampleRecord& record) {
  require(record.label >= 0 && record.label <= 0xffff, ErrorKind::contract, "label out of range");
  require(record.video.all_finite() && record.audio.all_finite(), ErrorKind::contract,
          "sample '" + record.id + "' contains non-finite values");
  ByteWriter w;
  w.bytes(kSampleMagic, 4);
  w.put<std::uint16_t>(kSampleFormatVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(record.label));
  w.put<std::uint8_t>(2);
  w.tensor(record.video);
  w.tensor(record.audio);
  return w.take();
}

SampleRecord decode_sample(std::span<const std::uint8_t> bytes, std::string id) {
  const std::string what = id.empty() ? std::string("sample") : "sample '" + id + "'";
  ByteReader r(bytes, what);
  char magic[4] = {};
  r.bytes(magic, 4);
  if (std::memcmp(magic, kSampleMagic, 4) != 0) fail(ErrorKind::bad_magic, what + ": bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kSampleFormatVersion)
    fail(ErrorKind::version_mismatch, what + ": format version " + std::to_string(version) +
                                          ", expected " + std::to_string(kSampleFormatVersion));
  SampleRecord s;
  s.id = std::move(id);
  s.label = r.get<std::uint16_t>();
  const auto count = r.get<std::uint8_t>();
  require(count == 2, ErrorKind::io, what + ": expected 2 tensors, found " + std::to_string(count));
  s.video = r.tensor();
  s.audio = r.tensor();
  require(r.done(), ErrorKind::io, what + ": trailing bytes after payload");
  require(s.video.rank() == 4 && s.audio.rank() == 2, ErrorKind::io,
          what + ": expected video [F, C, H, W] and spectrogram [F, T]");
  return s;
}

void write_sample(const std::filesystem::path& path, const SampleRecord& record) {
  write_file(path, encode_sample(record));
}

SampleRecord read_sample(const std::filesystem::path& path) {
  return decode_sample(read_file(path), path.stem().string());
}

void DatasetManifest::validate() const {
  require(num_folds >= 1, ErrorKind::config, "manifest needs at least one fold");
  require(!class_names.empty(), ErrorKind::config, "manifest has no classes");
  std::set<std::string> ids;
  for (const auto& e : samples) {
    require(ids.insert(e.id).second, ErrorKind::config, "duplicate sample id '" + e.id + "'");
    require(e.label >= 0 && static_cast<std::size_t>(e.label) < class_names.size(),
            ErrorKind::config, "sample '" + e.id + "' has label out of range");
    require(e.fold >= 1 && e.fold <= num_folds, ErrorKind::config,
            "sample '" + e.id + "' has fold " + std::to_string(e.fold));
  }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  m.validate();
  nlohmann::ordered_json j;
  j["class_names"] = m.class_names;
  j["num_folds"] = m.num_folds;
  j["samples"] = nlohmann::ordered_json::array();
  for (const auto& e : m.samples)
    j["samples"].push_back({{"id", e.id}, {"path", e.path}, {"label", e.label}, {"fold", e.fold}});
  const std::string text = j.dump(2) + "\n";
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.num_folds = j.at("num_folds").get<int>();
    for (const auto& e : j.at("samples"))
      m.samples.push_back({e.at("id").get<std::string>(), e.at("path").get<std::string>(),
                           e.at("label").get<int>(), e.at("fold").get<int>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "malformed manifest " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

std::vector<SampleRecord> load_dataset(const std::filesystem::path& manifest_path,
                                       DatasetManifest* manifest_out) {
  DatasetManifest m = read_manifest(manifest_path);
  const auto root = manifest_path.parent_path();
  std::vector<SampleRecord> out;
  out.reserve(m.samples.size());
  for (const auto& e : m.samples) {
    SampleRecord s = decode_sample(read_file(root / e.path), e.id);
    require(s.label == e.label, ErrorKind::io,
            "sample '" + e.id + "' label disagrees with the manifest");
    out.push_back(std::move(s));
  }
  if (manifest_out) *manifest_out = std::move(m);
  return out;
}

std::vector<std::size_t> SynthConfig::vision_groups() const {
  if (!vision_group.empty()) return vision_group;
  std::vector<std::size_t> g(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) g[c] = c / 2;
  return g;
}

std::vector<std::size_t> SynthConfig::audio_groups() const {
  if (!audio_group.empty()) return audio_group;
  std::vector<std::size_t> g(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) g[c] = (c + 1) / 2;
  return g;
}

void SynthConfig::validate() const {
  require(num_classes >= 2, ErrorKind::config, "synthetic data needs at least two classes");
  require(samples >= num_classes, ErrorKind::config, "fewer samples than classes");
  require(frames > 0 && channels > 0 && height > 0 && width > 0 && spec_bins > 0 && spec_frames > 0,
          ErrorKind::config, "synthetic geometry must be positive");
  require(noise >= 0.0 && modulation >= 0.0, ErrorKind::config, "noise levels must be >= 0");
  require(num_folds >= 1, ErrorKind::config, "need at least one fold");
  const auto vg = vision_groups(), ag = audio_groups();
  require(vg.size() == num_classes && ag.size() == num_classes, ErrorKind::config,
          "group maps must list every class");
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t c = 0; c < num_classes; ++c)
    require(pairs.insert({vg[c], ag[c]}).second, ErrorKind::config,
            "classes must differ in at least one modality");
}

SynthDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto vg = cfg.vision_groups(), ag = cfg.audio_groups();
  const std::size_t n_vg = *std::max_element(vg.begin(), vg.end()) + 1;
  const std::size_t n_ag = *std::max_element(ag.begin(), ag.end()) + 1;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  SynthDataset ds;
  for (std::size_t g = 0; g < n_vg; ++g) {
    Tensor t({cfg.channels, cfg.height, cfg.width});
    for (double& v : t.data()) v = static_cast<float>(normal(rng));
    ds.vision_templates.push_back(std::move(t));
  }
  for (std::size_t g = 0; g < n_ag; ++g) {
    Tensor t({cfg.spec_bins, cfg.spec_frames});
    for (double& v : t.data()) v = static_cast<float>(normal(rng));
    ds.audio_templates.push_back(std::move(t));
  }

  const std::size_t frame = cfg.channels * cfg.height * cfg.width;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    SampleRecord s;
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", i);
    s.id = id;
    const std::size_t c = i % cfg.num_classes;
    s.label = static_cast<int>(c);
    const Tensor& vt = ds.vision_templates[vg[c]];
    const Tensor& at = ds.audio_templates[ag[c]];
    const double phi = phase(rng);
    s.video = Tensor({cfg.frames, cfg.channels, cfg.height, cfg.width});
    for (std::size_t f = 0; f < cfg.frames; ++f) {
      const double gain = 1.0 + cfg.modulation * std::sin(2.0 * std::numbers::pi * static_cast<double>(f) /
                                                               static_cast<double>(cfg.frames) + phi);
      for (std::size_t k = 0; k < frame; ++k)
        s.video[f * frame + k] = static_cast<float>(gain * vt[k] + cfg.noise * normal(rng));
    }
    s.audio = Tensor({cfg.spec_bins, cfg.spec_frames});
    for (std::size_t k = 0; k < s.audio.numel(); ++k)
      s.audio[k] = static_cast<float>(at[k] + cfg.noise * normal(rng));
    ds.samples.push_back(std::move(s));
  }

  // Balanced folds: shuffle, then deal each class round-robin over the folds.
  DatasetManifest& m = ds.manifest;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) m.class_names.push_back("class_" + std::to_string(c));
  m.num_folds = cfg.num_folds;
  std::vector<std::size_t> order(cfg.samples);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<int> fold(cfg.samples);
  std::vector<std::size_t> dealt(cfg.num_classes, 0);
  for (std::size_t i : order) {
    const std::size_t c = static_cast<std::size_t>(ds.samples[i].label);
    fold[i] = static_cast<int>(dealt[c]++ % static_cast<std::size_t>(cfg.num_folds)) + 1;
  }
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const auto& s = ds.samples[i];
    m.samples.push_back({s.id, "samples/" + s.id + ".mmad", s.label, fold[i]});
  }
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds) {
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    write_sample(dir / ds.manifest.samples[i].path, ds.samples[i]);
  write_manifest(dir / "manifest.json", ds.manifest);
}

std::vector<std::size_t> fold_split(const DatasetManifest& manifest, int fold, bool test) {
  require(fold >= 1 && fold <= manifest.num_folds, ErrorKind::config,
          "fold " + std::to_string(fold) + " outside [1, " + std::to_string(manifest.num_folds) + "]");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i)
    if ((manifest.samples[i].fold == fold) == test) out.push_back(i);
  return out;
}

std::vector<std::size_t> sample_frames(std::size_t total, std::size_t t, std::size_t clip) {
  require(total >= 1, ErrorKind::contract, "video has no frames");
  require(t >= 1, ErrorKind::config, "need at least one sampled frame");
  require(clip <= 1, ErrorKind::config, "clip index must be 0 or 1");
  std::vector<std::size_t> idx(t);
  for (std::size_t i = 0; i < t; ++i) {
    // floor((i + clip/2) * total / t) in integers.
    const std::size_t k = ((2 * i + clip) * total) / (2 * t);
    idx[i] = std::min(k, total - 1);
  }
  return idx;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor mel_filterbank(const MelOptions& o) {
  const double f_max = o.f_max > 0.0 ? o.f_max : o.sample_rate / 2.0;
  require(o.n_mels > 0 && o.n_fft > 0 && f_max > o.f_min, ErrorKind::config,
          "invalid mel filterbank settings");
  const std::size_t bins = o.n_fft / 2 + 1;
  const double m_lo = hz_to_mel(o.f_min), m_hi = hz_to_mel(f_max);
  std::vector<double> edges(o.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(o.n_mels + 1));
  Tensor fb({o.n_mels, bins});
  for (std::size_t m = 0; m < o.n_mels; ++m)
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * o.sample_rate / static_cast<double>(o.n_fft);
      const double up = (f - edges[m]) / (edges[m + 1] - edges[m]);
      const double down = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      fb[m * bins + k] = std::max(0.0, std::min(up, down));
    }
  return fb;
}

Tensor log_mel_spectrogram(std::span<const double> waveform, const MelOptions& o) {
  require(!waveform.empty(), ErrorKind::contract, "empty waveform");
  require(o.window > 0 && o.hop > 0 && o.n_fft >= o.window, ErrorKind::config,
          "window must be positive and fit in the FFT");
  const std::size_t len = waveform.size();
  const std::size_t frames = len < o.window ? 1 : 1 + (len - o.window) / o.hop;
  const std::size_t bins = o.n_fft / 2 + 1;
  const Tensor fb = mel_filterbank(o);

  std::vector<double> hann(o.window);
  for (std::size_t n = 0; n < o.window; ++n)
    hann[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                   static_cast<double>(o.window));

  double* in = fftw_alloc_real(o.n_fft);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(o.n_fft), in, out, FFTW_ESTIMATE);
  Tensor spec({o.n_mels, frames});
  std::vector<double> magnitude(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(in, in + o.n_fft, 0.0);
    for (std::size_t n = 0; n < o.window; ++n) {
      const std::size_t i = t * o.hop + n;
      if (i < len) in[n] = waveform[i] * hann[n];
    }
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) magnitude[k] = std::hypot(out[k][0], out[k][1]);
    for (std::size_t m = 0; m < o.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += fb[m * bins + k] * magnitude[k];
      spec[m * frames + t] = std::log(std::max(e, o.log_floor));
    }
  }
  fftw_destroy_plan(plan);
  fftw_free(out);
  fftw_free(in);
  spec.round_to_precision();
  return spec;
}

void write_weights(const std::filesystem::path& path, const ParamStore& store, bool trainable_too) {
  std::vector<const Parameter*> chosen;
  for (const Parameter& p : store.all())
    if (!p.trainable || trainable_too) chosen.push_back(&p);
  ByteWriter w;
  w.bytes(kWeightsMagic, 4);
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(chosen.size()));
  for (const Parameter* p : chosen) {
    require(p->materialized(), ErrorKind::contract, "cannot save unmaterialized '" + p->name + "'");
    require(p->name.size() <= 0xffff, ErrorKind::contract, "parameter name too long");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(p->name.size()));
    w.bytes(p->name.data(), p->name.size());
    w.tensor(p->value);
  }
  const auto bytes = w.take();
  write_file(path, bytes);
}

std::vector<std::pair<std::string, Tensor>> read_weights(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes, path.string());
  char magic[4] = {};
  r.bytes(magic, 4);
  if (std::memcmp(magic, kWeightsMagic, 4) != 0) fail(ErrorKind::bad_magic, path.string() + ": bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != 1)
    fail(ErrorKind::version_mismatch, path.string() + ": weights version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.get<std::uint16_t>(), '\0');
    r.bytes(name.data(), name.size());
    out.emplace_back(std::move(name), r.tensor());
  }
  require(r.done(), ErrorKind::io, path.string() + ": trailing bytes");
  return out;
}

std::size_t load_weights(ParamStore& store, const std::filesystem::path& path,
                         const std::map<std::string, GridResize>& resize) {
  std::size_t loaded = 0;
  for (auto& [name, t] : read_weights(path)) {
    Parameter* p = store.find(name);
    if (!p) continue;
    Tensor value = std::move(t);
    if (auto it = resize.find(name); it != resize.end()) {
      const GridResize& g = it->second;
      value = interpolate_pos_embed(value, g.rows, g.cols, g.new_rows, g.new_cols);
    }
    require(value.shape() == p->shape, ErrorKind::dimension,
            "weights for '" + name + "' have shape " + shape_str(value.shape()) + ", expected " +
                shape_str(p->shape));
    value.round_to_precision();
    p->value = std::move(value);
    ++loaded;
  }
  return loaded;
}

}  // namespace mma

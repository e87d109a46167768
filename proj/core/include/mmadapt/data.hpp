// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmadapt/parameter.hpp"
#include "mmadapt/tensor.hpp"

namespace mma {

/// One labelled audiovisual clip: video frames [F_tot, C, H, W] and a
/// spectrogram [F, T].
struct SampleRecord {
  std::string id;
  int label = 0;
  Tensor video;
  Tensor audio;
};

inline constexpr std::uint16_t kSampleFormatVersion = 1;

/// Sample file layout (little-endian):
///   "MMAD" | u16 version | u16 label | u8 tensor count
///   per tensor: u8 rank | rank x u32 extents | f32 payload
std::vector<std::uint8_t> encode_sample(const SampleRecord& record);
/// Throws bad_magic, version_mismatch or truncated errors on malformed input.
SampleRecord decode_sample(std::span<const std::uint8_t> bytes, std::string id = {});

void write_sample(const std::filesystem::path& path, const SampleRecord& record);
/// The record id is the file stem.
SampleRecord read_sample(const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the manifest's directory
  int label = 0;
  int fold = 1;
};

struct DatasetManifest {
  std::vector<std::string> class_names;
  int num_folds = 5;
  std::vector<ManifestEntry> samples;

  /// Ids unique, labels in range, folds in [1, num_folds].
  void validate() const;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Reads every sample listed in the manifest.
std::vector<SampleRecord> load_dataset(const std::filesystem::path& manifest_path,
                                       DatasetManifest* manifest_out = nullptr);

struct SynthConfig {
  std::size_t num_classes = 7;
  std::size_t samples = 400;
  std::size_t frames = 32;
  std::size_t channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t spec_bins = 32;
  std::size_t spec_frames = 64;
  double noise = 0.5;
  /// Relative amplitude of the per-clip temporal modulation of the frames.
  double modulation = 0.25;
  std::uint64_t seed = 1;
  int num_folds = 5;
  /// Pattern group of each class per modality. Empty means the default split:
  /// vision group c / 2, audio group (c + 1) / 2, so each modality alone
  /// confuses a different set of class pairs.
  std::vector<std::size_t> vision_group;
  std::vector<std::size_t> audio_group;

  std::vector<std::size_t> vision_groups() const;
  std::vector<std::size_t> audio_groups() const;
  void validate() const;
};

struct SynthDataset {
  std::vector<SampleRecord> samples;
  DatasetManifest manifest;
  /// Noise-free patterns: one [C, H, W] frame per vision group, one [F, T]
  /// spectrogram per audio group.
  std::vector<Tensor> vision_templates;
  std::vector<Tensor> audio_templates;
};

SynthDataset generate_synthetic(const SynthConfig& config);

/// Writes `<dir>/samples/<id>.mmad` and `<dir>/manifest.json`.
void write_dataset(const std::filesystem::path& dir, const SynthDataset& dataset);

/// Indices of samples in fold `fold` (test split) or all other folds (train split).
std::vector<std::size_t> fold_split(const DatasetManifest& manifest, int fold, bool test);

/// t frame indices of temporal clip `clip`: floor((i + clip / 2) * F_tot / t),
/// clamped to F_tot - 1. Clip 0 is the uniform sampling; clip 1 is offset by
/// half a stratum. Shorter videos repeat indices.
std::vector<std::size_t> sample_frames(std::size_t total_frames, std::size_t t, std::size_t clip = 0);

struct MelOptions {
  double sample_rate = 16000.0;
  std::size_t window = 400;  // 25 ms
  std::size_t hop = 160;     // 10 ms
  std::size_t n_fft = 512;
  std::size_t n_mels = 128;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means sample_rate / 2
  double log_floor = 1e-10;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular HTK-mel filterbank [n_mels, n_fft / 2 + 1].
Tensor mel_filterbank(const MelOptions& options);

/// Log mel spectrogram [n_mels, T] with T = 1 + floor((len - window) / hop).
/// Inputs shorter than one window are zero-padded to a single frame.
Tensor log_mel_spectrogram(std::span<const double> waveform, const MelOptions& options = {});

/// Named tensor container for dropping in external weights (layout:
/// "MMAW" | u16 version | u32 count | per entry: u16 name length, name,
/// u8 rank, rank x u32 extents, f32 payload).
void write_weights(const std::filesystem::path& path, const ParamStore& store, bool trainable_too);
std::vector<std::pair<std::string, Tensor>> read_weights(const std::filesystem::path& path);

struct GridResize {
  std::size_t rows, cols;          // grid of the table in the file
  std::size_t new_rows, new_cols;  // grid of the parameter in the store
};

/// Copies tensors from the file into same-named store parameters. Tables
/// listed in `resize` are bilinearly resampled to the store's grid; any other
/// shape mismatch is a dimension error. Names absent from the store are
/// skipped. Returns the number of parameters written.
std::size_t load_weights(ParamStore& store, const std::filesystem::path& path,
                         const std::map<std::string, GridResize>& resize = {});

}  // namespace mma

// Copyright 2026 The serboost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ser/common.hpp"

namespace ser {

enum class Emotion : int { anger, disgust, fear, happiness, pleasant_surprise, sadness, neutral };

inline constexpr std::array<Emotion, 7> kEmotions = {
    Emotion::anger,   Emotion::disgust, Emotion::fear,   Emotion::happiness,
    Emotion::pleasant_surprise, Emotion::sadness, Emotion::neutral};

std::string_view emotion_name(Emotion e) noexcept;
std::optional<Emotion> parse_emotion(std::string_view name) noexcept;

/// TESS filename token -> emotion. Tokens: angry, disgust, fear, happy, ps,
/// sad, neutral (case-insensitive); canonical names are accepted as well.
std::optional<Emotion> emotion_from_tess_token(std::string_view token) noexcept;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  Emotion label = Emotion::neutral;
  std::string speaker;
  std::string source_path;

  double duration_s() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  /// Throws Error{"dataset","invalid_clip"} on violated invariants.
  void validate() const;
};

struct LabeledDataset {
  std::vector<AudioClip> clips;
  std::map<Emotion, std::size_t> class_counts;

  std::vector<std::string> label_names() const;
  void recount();
};

struct SplitAssignment {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
};

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;

  std::vector<std::size_t> fold_indices(int fold) const;
  std::vector<std::size_t> training_indices(int fold) const;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// --- audio I/O --------------------------------------------------------------

/// Reads a RIFF/WAVE PCM (8/16/24/32-bit int) or IEEE float32 file, averaging
/// channels to mono. Error codes: wav_unreadable, wav_malformed_header,
/// wav_unsupported_encoding; messages carry the path.
AudioClip load_wav(const std::filesystem::path& path);

enum class WavEncoding { pcm16, pcm24, pcm32, float32, pcm8 };

/// Writes interleaved samples (frames × channels) as a WAV file.
void write_wav(const std::filesystem::path& path, std::span<const double> interleaved, int sample_rate,
               int channels = 1, WavEncoding enc = WavEncoding::pcm16);

/// Kaiser-windowed sinc resampler (beta 8.6, 64 taps per phase). Output
/// length is round(n * target / source). Identity when rates match.
AudioClip resample(const AudioClip& clip, int target_rate);

// --- corpora ----------------------------------------------------------------

/// Scans a TESS-layout tree (`<SPEAKER>_<word>_<emotion>.wav`), resampling
/// every file to 16 kHz mono. Clips come back sorted by path.
LabeledDataset scan_tess(const std::filesystem::path& root);

/// Class-conditional generator parameters (versioned constants table).
struct SynthClassParams {
  Emotion label;
  double f0_lo, f0_hi;  // Hz
  double rms;           // target RMS level
  double am_rate;       // Hz
};
inline constexpr std::string_view kSynthVersion = "synth-v1";
const std::array<SynthClassParams, 7>& synth_class_table() noexcept;

/// n_per_class one-second 16 kHz clips per emotion, deterministic in seed.
LabeledDataset synth_dataset(std::size_t n_per_class, std::uint64_t seed);

// --- partitioning -----------------------------------------------------------

/// Stratified 3-way split over labels; per-class canonical order is the
/// index order in `labels`.
SplitAssignment stratified_split(std::span<const std::string> labels, SplitFractions fractions,
                                 std::uint64_t seed);
/// Dataset overload: canonical order is the sorted source path, so the
/// assignment does not depend on the order clips were supplied in.
SplitAssignment stratified_split(const LabeledDataset& ds, SplitFractions fractions, std::uint64_t seed);

/// Speaker-grouped split: whole speakers go to one partition. Needs at least
/// three speakers.
SplitAssignment speaker_grouped_split(const LabeledDataset& ds, SplitFractions fractions, std::uint64_t seed);

FoldAssignment stratified_kfold(std::span<const std::string> labels, int k, std::uint64_t seed);
FoldAssignment stratified_kfold(const LabeledDataset& ds, int k, std::uint64_t seed);

/// Manifest CSV: `path,label,speaker,split,fold` (fold is -1 outside train).
std::string manifest_csv(const LabeledDataset& ds, const SplitAssignment& split, const FoldAssignment& folds);

struct ManifestRow {
  std::string path;
  std::string label;
  std::string speaker;
  std::string split;  // train, val or test
  int fold = -1;
};

std::vector<ManifestRow> parse_manifest_csv(std::string_view csv);

}  // namespace ser

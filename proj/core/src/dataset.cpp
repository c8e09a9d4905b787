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

#include "ser/dataset.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace ser {

namespace {

constexpr std::array<std::string_view, 7> kEmotionNames = {
    "anger", "disgust", "fear", "happiness", "pleasant_surprise", "sadness", "neutral"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Per-class canonical orders, then a seeded shuffle per class.
std::map<std::string, std::vector<std::size_t>> shuffled_strata(std::span<const std::string> labels,
                                                                std::span<const std::size_t> canonical,
                                                                std::uint64_t seed, std::uint64_t purpose) {
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t idx : canonical) strata[labels[idx]].push_back(idx);
  for (auto& [label, members] : strata) {
    Rng rng(derive_seed(seed, {purpose, fnv1a64(label)}));
    rng.shuffle(members);
  }
  return strata;
}

SplitAssignment split_impl(std::span<const std::string> labels, std::span<const std::size_t> canonical,
                           SplitFractions f, std::uint64_t seed) {
  if (!(f.train > 0 && f.val > 0 && f.test > 0) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw Error("dataset", "invalid_fractions", "split fractions must be positive and sum to 1");
  SplitAssignment out;
  out.seed = seed;
  for (auto& [label, members] : shuffled_strata(labels, canonical, seed, 0x5b11)) {
    const std::size_t n = members.size();
    if (n < 3)
      throw Error("dataset", "class_too_small",
                  "class '" + label + "' has " + std::to_string(n) + " members; need at least 3 to split");
    std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f.val * n)));
    std::size_t n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f.test * n)));
    while (n_val + n_test >= n) {
      if (n_val >= n_test && n_val > 1) --n_val;
      else if (n_test > 1) --n_test;
      else break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_test) out.test_indices.push_back(members[i]);
      else if (i < n_test + n_val) out.val_indices.push_back(members[i]);
      else out.train_indices.push_back(members[i]);
    }
  }
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.val_indices.begin(), out.val_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  return out;
}

FoldAssignment kfold_impl(std::span<const std::string> labels, std::span<const std::size_t> canonical, int k,
                          std::uint64_t seed) {
  if (k < 2) throw Error("dataset", "invalid_k", "k must be at least 2");
  FoldAssignment out;
  out.k = k;
  out.fold_of.assign(labels.size(), -1);
  std::size_t next = 0;
  for (auto& [label, members] : shuffled_strata(labels, canonical, seed, 0xf01d)) {
    if (members.size() < static_cast<std::size_t>(k))
      throw Error("dataset", "class_too_small",
                  "class '" + label + "' has " + std::to_string(members.size()) + " members; need at least k=" +
                      std::to_string(k));
    // Dealing continues where the previous class stopped, so fold totals stay balanced.
    for (std::size_t idx : members) out.fold_of[idx] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return out;
}

std::vector<std::size_t> sorted_by_path(const LabeledDataset& ds) {
  std::vector<std::size_t> order(ds.clips.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ds.clips[a].source_path < ds.clips[b].source_path; });
  return order;
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace

std::string_view emotion_name(Emotion e) noexcept { return kEmotionNames[static_cast<int>(e)]; }

std::optional<Emotion> parse_emotion(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i)
    if (kEmotionNames[i] == name) return static_cast<Emotion>(i);
  return std::nullopt;
}

std::optional<Emotion> emotion_from_tess_token(std::string_view token) noexcept {
  static const std::map<std::string, Emotion> table = {
      {"angry", Emotion::anger},       {"anger", Emotion::anger},
      {"disgust", Emotion::disgust},   {"fear", Emotion::fear},
      {"happy", Emotion::happiness},   {"happiness", Emotion::happiness},
      {"ps", Emotion::pleasant_surprise}, {"pleasant_surprise", Emotion::pleasant_surprise},
      {"pleasant_surprised", Emotion::pleasant_surprise},
      {"sad", Emotion::sadness},       {"sadness", Emotion::sadness},
      {"neutral", Emotion::neutral},
  };
  auto it = table.find(lower(token));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

void AudioClip::validate() const {
  if (sample_rate <= 0) throw Error("dataset", "invalid_clip", "sample_rate must be positive: " + source_path);
  if (samples.empty()) throw Error("dataset", "invalid_clip", "empty sample sequence: " + source_path);
  for (double s : samples)
    if (!std::isfinite(s) || s < -1.0 || s > 1.0)
      throw Error("dataset", "invalid_clip", "sample outside [-1, 1]: " + source_path);
}

std::vector<std::string> LabeledDataset::label_names() const {
  std::vector<std::string> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.emplace_back(emotion_name(c.label));
  return out;
}

void LabeledDataset::recount() {
  class_counts.clear();
  for (const auto& c : clips) ++class_counts[c.label];
}

std::vector<std::size_t> FoldAssignment::fold_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::training_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error("dataset", "invalid_rate", "target rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  constexpr double kBeta = 8.6;
  constexpr double kHalfTaps = 32.0;
  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const double cutoff = std::min(1.0, ratio);
  const double half_width = kHalfTaps / cutoff;  // in input samples
  const double i0_beta = bessel_i0(kBeta);
  const auto n_in = static_cast<long>(clip.samples.size());
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));

  AudioClip out = clip;
  out.sample_rate = target_rate;
  out.samples.assign(n_out, 0.0);
  for (std::size_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const long k0 = static_cast<long>(std::ceil(t - half_width));
    const long k1 = static_cast<long>(std::floor(t + half_width));
    double acc = 0.0, wsum = 0.0;
    for (long k = k0; k <= k1; ++k) {
      const double x = t - static_cast<double>(k);
      const double u = x / half_width;
      if (std::abs(u) > 1.0) continue;
      const double arg = M_PI * cutoff * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double w = cutoff * sinc * bessel_i0(kBeta * std::sqrt(1.0 - u * u)) / i0_beta;
      wsum += w;
      if (k >= 0 && k < n_in) acc += w * clip.samples[static_cast<std::size_t>(k)];
    }
    out.samples[n] = std::clamp(wsum != 0.0 ? acc / wsum : 0.0, -1.0, 1.0);
  }
  return out;
}

LabeledDataset scan_tess(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error("dataset", "dataset_not_found", "dataset root not found: " + root.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    if (lower(entry.path().extension().string()) == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("dataset", "empty_dataset", "no WAV files under " + root.string());

  struct Parsed {
    std::string speaker;
    Emotion label;
  };
  std::vector<Parsed> parsed(files.size());
  std::vector<std::string> unknown;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string stem = files[i].stem().string();
    const auto first = stem.find('_');
    const auto last = stem.rfind('_');
    std::optional<Emotion> e;
    if (first != std::string::npos && last != std::string::npos && last > first) {
      e = emotion_from_tess_token(stem.substr(last + 1));
      if (!e) {
        // `..._pleasant_surprise(d).wav` spells the label with an underscore.
        const auto prev = stem.rfind('_', last - 1);
        if (prev != std::string::npos && prev >= first && prev > 0) e = emotion_from_tess_token(stem.substr(prev + 1));
      }
    }
    if (!e) {
      unknown.push_back(files[i].string());
      continue;
    }
    parsed[i] = {stem.substr(0, first), *e};
  }
  if (!unknown.empty()) {
    std::ostringstream msg;
    msg << unknown.size() << " file(s) with an unknown emotion token:";
    for (const auto& u : unknown) msg << "\n  " << u;
    throw Error("dataset", "unknown_emotion_token", msg.str());
  }

  LabeledDataset ds;
  ds.clips.resize(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    AudioClip clip = resample(load_wav(files[i]), 16000);
    clip.label = parsed[i].label;
    clip.speaker = parsed[i].speaker;
    clip.source_path = files[i].string();
    ds.clips[i] = std::move(clip);
  });
  ds.recount();
  return ds;
}

const std::array<SynthClassParams, 7>& synth_class_table() noexcept {
  static const std::array<SynthClassParams, 7> table = {{
      {Emotion::anger, 230.0, 260.0, 0.30, 6.0},
      {Emotion::disgust, 125.0, 140.0, 0.12, 2.0},
      {Emotion::fear, 270.0, 300.0, 0.16, 8.0},
      {Emotion::happiness, 195.0, 215.0, 0.24, 5.0},
      {Emotion::pleasant_surprise, 320.0, 360.0, 0.20, 3.5},
      {Emotion::sadness, 100.0, 115.0, 0.07, 1.5},
      {Emotion::neutral, 150.0, 170.0, 0.10, 3.0},
  }};
  return table;
}

LabeledDataset synth_dataset(std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw Error("dataset", "invalid_count", "n_per_class must be at least 1");
  constexpr int kRate = 16000;
  constexpr std::size_t kLen = kRate;
  constexpr int kHarmonics = 5;

  LabeledDataset ds;
  const auto& table = synth_class_table();
  ds.clips.resize(table.size() * n_per_class);
  parallel_for(ds.clips.size(), [&](std::size_t flat) {
    const std::size_t c = flat / n_per_class;
    const std::size_t i = flat % n_per_class;
    const SynthClassParams& p = table[c];
    Rng rng(derive_seed(seed, {0x5e17, c, i}));

    const double f0 = rng.uniform(p.f0_lo, p.f0_hi);
    const double vibrato = rng.uniform(0.005, 0.02);
    const double vib_rate = rng.uniform(0.5, 1.5);
    const double am_phase = rng.uniform(0.0, 2.0 * M_PI);
    const double level = p.rms * rng.uniform(0.9, 1.1);
    const double noise_level = rng.uniform(0.01, 0.04);

    std::vector<double> x(kLen);
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (std::size_t n = 0; n < kLen; ++n) {
      const double t = static_cast<double>(n) / kRate;
      const double f = f0 * (1.0 + vibrato * std::sin(2.0 * M_PI * vib_rate * t));
      phase += 2.0 * M_PI * f / kRate;
      double s = 0.0;
      for (int h = 1; h <= kHarmonics; ++h) s += std::sin(h * phase) / h;
      const double env = 0.6 + 0.4 * std::sin(2.0 * M_PI * p.am_rate * t + am_phase);
      x[n] = env * s;
    }
    double sq = 0.0;
    for (double v : x) sq += v * v;
    const double gain = level / std::sqrt(sq / kLen);
    for (double& v : x) v = std::clamp(v * gain + noise_level * level * rng.normal(), -1.0, 1.0);

    AudioClip& clip = ds.clips[flat];
    clip.samples = std::move(x);
    clip.sample_rate = kRate;
    clip.label = p.label;
    clip.speaker = (i % 2 == 0) ? "SYN_A" : "SYN_B";
    char name[96];
    std::snprintf(name, sizeof name, "synth/%s/%05zu.wav", std::string(emotion_name(p.label)).c_str(), i);
    clip.source_path = name;
  });
  ds.recount();
  return ds;
}

SplitAssignment stratified_split(std::span<const std::string> labels, SplitFractions fractions, std::uint64_t seed) {
  std::vector<std::size_t> canonical(labels.size());
  std::iota(canonical.begin(), canonical.end(), 0);
  return split_impl(labels, canonical, fractions, seed);
}

SplitAssignment stratified_split(const LabeledDataset& ds, SplitFractions fractions, std::uint64_t seed) {
  const auto labels = ds.label_names();
  return split_impl(labels, sorted_by_path(ds), fractions, seed);
}

SplitAssignment speaker_grouped_split(const LabeledDataset& ds, SplitFractions fractions, std::uint64_t seed) {
  std::set<std::string> speaker_set;
  for (const auto& c : ds.clips) speaker_set.insert(c.speaker);
  std::vector<std::string> speakers(speaker_set.begin(), speaker_set.end());
  if (speakers.size() < 3)
    throw Error("dataset", "too_few_speakers", "speaker-grouped split needs at least 3 speakers");
  Rng rng(derive_seed(seed, {0x59ea}));
  rng.shuffle(speakers);

  std::map<std::string, int> part;  // 0 train, 1 val, 2 test
  const double total = static_cast<double>(ds.clips.size());
  std::map<std::string, std::size_t> count;
  for (const auto& c : ds.clips) ++count[c.speaker];
  double test = 0, val = 0;
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    const auto& s = speakers[i];
    const std::size_t left = speakers.size() - i;
    if (test == 0 || (test < fractions.test * total && left > 2)) {
      part[s] = 2;
      test += count[s];
    } else if (val == 0 || (val < fractions.val * total && left > 1)) {
      part[s] = 1;
      val += count[s];
    } else {
      part[s] = 0;
    }
  }
  SplitAssignment out;
  out.seed = seed;
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    switch (part[ds.clips[i].speaker]) {
      case 0: out.train_indices.push_back(i); break;
      case 1: out.val_indices.push_back(i); break;
      default: out.test_indices.push_back(i); break;
    }
  }
  if (out.train_indices.empty())
    throw Error("dataset", "too_few_speakers", "speaker-grouped split left the training partition empty");
  return out;
}

FoldAssignment stratified_kfold(std::span<const std::string> labels, int k, std::uint64_t seed) {
  std::vector<std::size_t> canonical(labels.size());
  std::iota(canonical.begin(), canonical.end(), 0);
  return kfold_impl(labels, canonical, k, seed);
}

FoldAssignment stratified_kfold(const LabeledDataset& ds, int k, std::uint64_t seed) {
  const auto labels = ds.label_names();
  return kfold_impl(labels, sorted_by_path(ds), k, seed);
}

std::string manifest_csv(const LabeledDataset& ds, const SplitAssignment& split, const FoldAssignment& folds) {
  std::vector<std::string> part(ds.clips.size(), "");
  std::vector<int> fold(ds.clips.size(), -1);
  for (std::size_t j = 0; j < split.train_indices.size(); ++j) {
    part[split.train_indices[j]] = "train";
    if (j < folds.fold_of.size()) fold[split.train_indices[j]] = folds.fold_of[j];
  }
  for (auto i : split.val_indices) part[i] = "val";
  for (auto i : split.test_indices) part[i] = "test";

  std::ostringstream os;
  os << "path,label,speaker,split,fold\n";
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    const auto& c = ds.clips[i];
    os << csv::escape(c.source_path) << ',' << emotion_name(c.label) << ',' << csv::escape(c.speaker) << ','
       << part[i] << ',' << fold[i] << '\n';
  }
  return os.str();
}

std::vector<ManifestRow> parse_manifest_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows[0] != std::vector<std::string>{"path", "label", "speaker", "split", "fold"})
    throw Error("dataset", "invalid_manifest", "manifest header must be path,label,speaker,split,fold");
  std::vector<ManifestRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 5) throw Error("dataset", "invalid_manifest", "manifest line " + std::to_string(i + 1) + " has " + std::to_string(r.size()) + " fields");
    ManifestRow m{r[0], r[1], r[2], r[3], 0};
    try {
      m.fold = std::stoi(r[4]);
    } catch (const std::exception&) {
      throw Error("dataset", "invalid_manifest", "manifest line " + std::to_string(i + 1) + " has a bad fold");
    }
    if (m.split != "train" && m.split != "val" && m.split != "test")
      throw Error("dataset", "invalid_manifest", "manifest line " + std::to_string(i + 1) + " has unknown split '" + m.split + "'");
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace ser

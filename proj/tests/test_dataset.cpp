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


#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"
#include "ser/dataset.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace ser;

namespace {

std::size_t dominant_bin(const std::vector<double>& x) {
  // Plain DFT magnitude over the first half; only used on short test signals.
  const std::size_t n = x.size();
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = k;
    }
  }
  return best;
}

std::vector<std::string> repeated_labels(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::string> out;
  for (const auto& [label, n] : counts)
    for (std::size_t i = 0; i < n; ++i) out.push_back(label);
  return out;
}

}  // namespace

TEST_CASE("emotion tokens") {
  CHECK(emotion_from_tess_token("angry") == Emotion::anger);
  CHECK(emotion_from_tess_token("ps") == Emotion::pleasant_surprise);
  CHECK(emotion_from_tess_token("PS") == Emotion::pleasant_surprise);
  CHECK(emotion_from_tess_token("happy") == Emotion::happiness);
  CHECK(emotion_from_tess_token("sad") == Emotion::sadness);
  CHECK(emotion_from_tess_token("neutral") == Emotion::neutral);
  CHECK_FALSE(emotion_from_tess_token("bored").has_value());
  for (Emotion e : kEmotions) CHECK(parse_emotion(emotion_name(e)) == e);
}

TEST_CASE("wav: silence round trip") {
  const auto dir = testing::temp_dir("wav_silence");
  const std::vector<double> zeros(16000, 0.0);
  write_wav(dir / "s.wav", zeros, 16000);
  const AudioClip c = load_wav(dir / "s.wav");
  CHECK(c.sample_rate == 16000);
  REQUIRE(c.samples.size() == 16000);
  CHECK(std::all_of(c.samples.begin(), c.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("wav: stereo averages to mono") {
  const auto dir = testing::temp_dir("wav_stereo");
  std::vector<double> lr;
  for (int i = 0; i < 100; ++i) {
    lr.push_back(0.5);
    lr.push_back(-0.5);
  }
  write_wav(dir / "st.wav", lr, 16000, 2);
  const AudioClip c = load_wav(dir / "st.wav");
  REQUIRE(c.samples.size() == 100);
  CHECK(std::all_of(c.samples.begin(), c.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("wav: 16-bit full scale decodes as 32767/32768") {
  const auto dir = testing::temp_dir("wav_max");
  const std::vector<double> one = {1.0};
  write_wav(dir / "m.wav", one, 16000);
  const AudioClip c = load_wav(dir / "m.wav");
  REQUIRE(c.samples.size() == 1);
  CHECK(c.samples[0] == 32767.0 / 32768.0);
}

TEST_CASE("wav: other encodings round trip within quantization") {
  const auto dir = testing::temp_dir("wav_enc");
  std::vector<double> x;
  for (int i = 0; i < 64; ++i) x.push_back(0.9 * std::sin(0.1 * i));
  for (auto [enc, tol] : {std::pair{WavEncoding::pcm8, 1.0 / 100}, std::pair{WavEncoding::pcm24, 1e-6},
                          std::pair{WavEncoding::pcm32, 1e-9}, std::pair{WavEncoding::float32, 1e-7}}) {
    write_wav(dir / "e.wav", x, 22050, 1, enc);
    const AudioClip c = load_wav(dir / "e.wav");
    CHECK(c.sample_rate == 22050);
    REQUIRE(c.samples.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(c.samples[i] - x[i]) <= tol);
  }
}

TEST_CASE("wav: error codes") {
  const auto dir = testing::temp_dir("wav_err");
  try {
    load_wav(dir / "missing.wav");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "wav_unreadable");
    CHECK(std::string(e.what()).find("missing.wav") != std::string::npos);
  }
  write_text_file(dir / "junk.wav", "this is not a riff file at all, not even close");
  try {
    load_wav(dir / "junk.wav");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "wav_malformed_header");
  }
}

TEST_CASE("resample: identity at equal rates") {
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 500; ++i) c.samples.push_back(0.3 * std::sin(0.05 * i));
  const AudioClip r = resample(c, 16000);
  CHECK(r.samples == c.samples);
  CHECK(r.sample_rate == 16000);
}

TEST_CASE("resample: 440 Hz at 44.1 kHz keeps its frequency") {
  AudioClip c;
  c.sample_rate = 44100;
  for (int i = 0; i < 44100; ++i) c.samples.push_back(0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 44100.0));
  const AudioClip r = resample(c, 16000);
  REQUIRE(r.samples.size() == 16000);
  // 1 s at 16 kHz: DFT bin k sits at k Hz. Check on a 4000-sample window (bin = 4 Hz).
  std::vector<double> win(r.samples.begin() + 6000, r.samples.begin() + 10000);
  const double hz = static_cast<double>(dominant_bin(win)) * 4.0;
  CHECK(std::abs(hz - 440.0) <= 4.0);
}

TEST_CASE("resample: DC is preserved") {
  AudioClip c;
  c.sample_rate = 8000;
  c.samples.assign(4000, 0.25);
  const AudioClip r = resample(c, 16000);
  REQUIRE(r.samples.size() == 8000);
  for (std::size_t i = 100; i + 100 < r.samples.size(); ++i) CHECK(std::abs(r.samples[i] - 0.25) <= 1e-3);
}

TEST_CASE("clip validation") {
  AudioClip c;
  c.sample_rate = 16000;
  CHECK_THROWS_AS(c.validate(), Error);  // empty
  c.samples = {0.1, 1.5};
  CHECK_THROWS_AS(c.validate(), Error);  // out of range
  c.samples = {0.1, -0.2};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("scan_tess: naming convention") {
  const auto dir = testing::temp_dir("tess_scan");
  const std::vector<double> tone(800, 0.1);
  write_wav(dir / "OAF_back_angry.wav", tone, 16000);
  {
    const auto ds = scan_tess(dir);
    REQUIRE(ds.clips.size() == 1);
    CHECK(ds.clips[0].label == Emotion::anger);
    CHECK(ds.clips[0].speaker == "OAF");
  }
  fs::create_directories(dir / "YAF_pleasant_surprised");
  write_wav(dir / "YAF_pleasant_surprised" / "YAF_dog_ps.wav", tone, 24414);
  const auto ds = scan_tess(dir);
  REQUIRE(ds.clips.size() == 2);
  const auto& ps = ds.clips[0].speaker == "YAF" ? ds.clips[0] : ds.clips[1];
  CHECK(ps.label == Emotion::pleasant_surprise);
  CHECK(ps.sample_rate == 16000);
  CHECK(ds.class_counts.at(Emotion::anger) == 1);
}

TEST_CASE("scan_tess: missing root") {
  try {
    scan_tess("/nonexistent/serboost/tess");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "dataset_not_found");
    CHECK(e.module() == "dataset");
  }
}

TEST_CASE("synth: counts and determinism") {
  const auto a = synth_dataset(10, 7);
  const auto b = synth_dataset(10, 7);
  REQUIRE(a.clips.size() == 70);
  for (Emotion e : kEmotions) CHECK(a.class_counts.at(e) == 10);
  for (std::size_t i = 0; i < a.clips.size(); ++i) {
    CHECK(a.clips[i].samples == b.clips[i].samples);
    CHECK(a.clips[i].sample_rate == 16000);
    CHECK(a.clips[i].duration_s() == 1.0);
    CHECK_NOTHROW(a.clips[i].validate());
  }
  CHECK(synth_dataset(10, 8).clips[0].samples != a.clips[0].samples);
}

TEST_CASE("split: exact division for 10 clips of one class") {
  const std::vector<std::string> labels(10, "x");
  const auto s = stratified_split(labels, {0.8, 0.1, 0.1}, 1);
  CHECK(s.train_indices.size() == 8);
  CHECK(s.val_indices.size() == 1);
  CHECK(s.test_indices.size() == 1);
}

TEST_CASE("split: TESS-sized counts") {
  std::map<std::string, std::size_t> counts;
  for (Emotion e : kEmotions) counts[std::string(emotion_name(e))] = 400;
  const auto labels = repeated_labels(counts);
  const auto s = stratified_split(labels, {0.8, 0.1, 0.1}, 11);
  CHECK(s.train_indices.size() == 2240);
  CHECK(s.val_indices.size() == 280);
  CHECK(s.test_indices.size() == 280);
  std::map<std::string, std::size_t> val_counts;
  for (auto i : s.val_indices) val_counts[labels[i]]++;
  for (const auto& [l, n] : val_counts) CHECK(n == 40);
}

TEST_CASE("split: disjoint, exhaustive, within one clip per class") {
  const std::map<std::string, std::size_t> counts = {{"a", 37}, {"b", 5}, {"c", 101}, {"d", 13}};
  const auto labels = repeated_labels(counts);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = stratified_split(labels, {0.8, 0.1, 0.1}, seed);
    std::vector<int> seen(labels.size(), 0);
    for (const auto* part : {&s.train_indices, &s.val_indices, &s.test_indices})
      for (auto i : *part) seen[i]++;
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    for (const auto& [label, n] : counts) {
      const double fr[3] = {0.8, 0.1, 0.1};
      const std::vector<std::size_t>* parts[3] = {&s.train_indices, &s.val_indices, &s.test_indices};
      for (int p = 0; p < 3; ++p) {
        const auto got = std::count_if(parts[p]->begin(), parts[p]->end(), [&](auto i) { return labels[i] == label; });
        CHECK(std::abs(static_cast<double>(got) - fr[p] * static_cast<double>(n)) <= 1.0);
      }
    }
  }
}

TEST_CASE("split: dataset overload ignores clip order") {
  auto ds = synth_dataset(4, 3);
  const auto a = stratified_split(ds, {0.5, 0.25, 0.25}, 9);
  auto paths_of = [](const LabeledDataset& d, const std::vector<std::size_t>& idx) {
    std::set<std::string> out;
    for (auto i : idx) out.insert(d.clips[i].source_path);
    return out;
  };
  const auto before = paths_of(ds, a.val_indices);
  std::reverse(ds.clips.begin(), ds.clips.end());
  const auto b = stratified_split(ds, {0.5, 0.25, 0.25}, 9);
  CHECK(paths_of(ds, b.val_indices) == before);
}

TEST_CASE("split: invalid fractions") {
  const std::vector<std::string> labels(10, "x");
  CHECK_THROWS_AS(stratified_split(labels, {0.8, 0.3, 0.1}, 1), Error);
}

TEST_CASE("kfold: 400 per class, k = 10") {
  std::map<std::string, std::size_t> counts = {{"a", 400}, {"b", 400}, {"c", 400}};
  const auto labels = repeated_labels(counts);
  const auto f = stratified_kfold(labels, 10, 5);
  CHECK(f.k == 10);
  for (int k = 0; k < 10; ++k) {
    const auto idx = f.fold_indices(k);
    CHECK(idx.size() == 120);
    for (const std::string l : {"a", "b", "c"})
      CHECK(std::count_if(idx.begin(), idx.end(), [&](auto i) { return labels[i] == l; }) == 40);
  }
}

TEST_CASE("kfold: pigeonhole sizes and exact partition") {
  const std::vector<std::string> labels(21, "x");
  const auto f = stratified_kfold(labels, 10, 2);
  std::vector<int> seen(21, 0);
  for (int k = 0; k < 10; ++k) {
    const auto idx = f.fold_indices(k);
    CHECK((idx.size() == 2 || idx.size() == 3));
    for (auto i : idx) seen[i]++;
    const auto tr = f.training_indices(k);
    CHECK(tr.size() + idx.size() == 21);
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
}

TEST_CASE("kfold: class smaller than k is an error") {
  const std::vector<std::string> labels = {"a", "a", "a", "b", "b", "b"};
  CHECK_THROWS_AS(stratified_kfold(labels, 4, 1), Error);
}

TEST_CASE("speaker-grouped split keeps speakers whole") {
  auto ds = synth_dataset(6, 4);
  const char* spk[] = {"S1", "S2", "S3", "S4", "S5"};
  for (std::size_t i = 0; i < ds.clips.size(); ++i) ds.clips[i].speaker = spk[i % 5];
  const auto s = speaker_grouped_split(ds, {0.6, 0.2, 0.2}, 3);
  std::map<std::string, std::set<int>> where;
  const std::vector<std::size_t>* parts[3] = {&s.train_indices, &s.val_indices, &s.test_indices};
  for (int p = 0; p < 3; ++p)
    for (auto i : *parts[p]) where[ds.clips[i].speaker].insert(p);
  for (const auto& [sp, ps] : where) CHECK(ps.size() == 1);
  CHECK(s.train_indices.size() + s.val_indices.size() + s.test_indices.size() == ds.clips.size());
  auto two = synth_dataset(2, 4);
  for (std::size_t i = 0; i < two.clips.size(); ++i) two.clips[i].speaker = i % 2 ? "OAF" : "YAF";
  CHECK_THROWS_AS(speaker_grouped_split(two, {0.8, 0.1, 0.1}, 1), Error);
}

TEST_CASE("manifest round trip") {
  auto ds = synth_dataset(3, 1);
  ds.clips[0].source_path = "dir,with comma/a.wav";
  const auto split = stratified_split(ds, {0.34, 0.33, 0.33}, 2);
  FoldAssignment folds;
  folds.k = 0;
  folds.fold_of.assign(split.train_indices.size(), -1);
  const auto rows = parse_manifest_csv(manifest_csv(ds, split, folds));
  REQUIRE(rows.size() == ds.clips.size());
  std::size_t n_train = 0;
  for (const auto& r : rows) n_train += r.split == "train";
  CHECK(n_train == split.train_indices.size());
  CHECK(std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.path == "dir,with comma/a.wav"; }));
  CHECK_THROWS_AS(parse_manifest_csv("path,label\nx,y\n"), Error);
}

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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ser/common.hpp"
#include "ser/dataset.hpp"

namespace ser {

/// One (descriptor, statistic) pair of the extraction plan. Temporal scalars
/// use descriptor "temporal"; columns that are not produced by the audio
/// front end (e.g. external tables) carry an empty statistic.
struct CatalogEntry {
  std::string descriptor;
  std::string statistic;

  std::string name() const;
  bool operator==(const CatalogEntry&) const = default;
};

/// Ordered extraction plan. The version is content-addressed from the
/// ordered feature names, so any pruning yields a new version.
class FeatureCatalog {
 public:
  FeatureCatalog() = default;
  explicit FeatureCatalog(std::vector<CatalogEntry> entries);

  /// Default plan: 9 statistics over pitch, energy, intensity and spectral
  /// centroid; mean/std of rolloff, flux, spectrum spread and 13 MFCC
  /// trajectories; 3 temporal scalars; validity flags for pitch and
  /// centroid. 73 features.
  static FeatureCatalog default_catalog();

  /// Rebuilds the plan from feature names (inverse of entry.name()).
  static FeatureCatalog from_names(std::span<const std::string> names);

  const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }
  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& version() const noexcept { return version_; }

  /// Keeps the named entries, preserving catalog order.
  FeatureCatalog subset(std::span<const std::string> keep) const;

  std::string to_json() const;
  static FeatureCatalog from_json(std::string_view json);

 private:
  std::vector<CatalogEntry> entries_;
  std::string version_;
};

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

/// Named-column table (clips × features) with per-row labels and paths.
struct FeatureMatrix {
  std::vector<std::string> column_names;
  Matrix values;
  std::vector<std::string> labels;
  std::vector<std::string> paths;
  std::string catalog_version;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }

  std::optional<std::size_t> column_index(std::string_view name) const;
  FeatureMatrix select_rows(std::span<const std::size_t> idx) const;
  /// Columns by name, in the given order; throws on unknown names.
  FeatureMatrix select_columns(std::span<const std::string> names) const;
  /// Throws Error{"features","invalid_matrix"} on broken invariants.
  void validate() const;
};

FeatureVector extract_all(const AudioClip& clip, const FeatureCatalog& catalog);

/// One row per clip in dataset order. Per-clip failures are collected and
/// reported together (Error code "extraction_failed").
FeatureMatrix extract_matrix(const LabeledDataset& ds, const FeatureCatalog& catalog);

/// CSV: feature columns, then `label,path`; 17 significant digits.
std::string feature_matrix_csv(const FeatureMatrix& m);
FeatureMatrix parse_feature_matrix_csv(std::string_view csv);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ser

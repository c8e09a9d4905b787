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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ser/common.hpp"
#include "ser/features.hpp"

namespace ser::boost {

struct BoostConfig {
  std::size_t p = 10;        // features per combination
  std::size_t m = 200;       // candidate combinations
  double alpha = 0.8;        // threshold on the leading-c cumulative EV fraction
  std::size_t c = 2;         // leading components in the threshold test
  double retain_ev = 0.95;   // cumulative EV fraction that fixes J_i
  std::uint64_t seed = 0;

  /// Throws Error{"feature_boost","invalid_config"}.
  void validate() const;
};

struct FeatureCombination {
  std::size_t index = 0;             // 1-based generation order
  std::vector<std::string> members;  // catalog order
};

/// Column-wise standardization parameters. Constant columns keep std = 1 and
/// are flagged.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;
};

struct Standardized {
  Matrix z;
  Standardization params;
};

Standardized standardize(const Matrix& x);
Matrix apply_standardization(const Matrix& x, const Standardization& s);

struct CombinationPCA {
  Standardization scaling;
  Matrix loadings;              // p × p, column j = eigenvector of PC j
  std::vector<double> lambda;   // descending, >= 0
  std::vector<double> ev;       // percentages, sum 100
  std::size_t rank = 0;
  bool usable = false;          // false when every eigenvalue is zero
};

/// PCA of an already standardized matrix (scaling left empty).
CombinationPCA fit_pca(const Matrix& z);

/// Standardize the columns of `x` then fit.
CombinationPCA fit_combination(const Matrix& x);

/// 100 * lambda_j / sum(lambda). Slightly negative eigenvalues (>= -1e-10)
/// are clamped to 0. Throws Error{"feature_boost","degenerate_combination"}
/// when the sum is zero.
std::vector<double> explained_variance(std::span<const double> lambda);

/// PC scores Z · A[:, 0..J).
Matrix project(const Matrix& z, const CombinationPCA& pca, std::size_t j);

/// Seeded sampling of m distinct p-subsets (exhaustive when m = C(n, p)).
std::vector<FeatureCombination> enumerate_combinations(std::span<const std::string> catalog_features,
                                                       const BoostConfig& cfg);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::size_t n, std::size_t k) noexcept;

struct SelectedCombination {
  FeatureCombination combination;
  CombinationPCA pca;
  std::size_t retained = 0;  // J_i
  double leading_ev = 0.0;   // sum of the first c EV percentages
};

struct BoostedFeatureSet {
  std::vector<SelectedCombination> selected;
  std::vector<std::string> pc_names;  // "PC_<i>_<j>"
  std::string source_catalog_version;
  BoostConfig config;

  std::size_t width() const noexcept { return pc_names.size(); }
};

using Candidate = std::pair<FeatureCombination, CombinationPCA>;

/// Keeps candidates whose leading-c EV reaches 100·alpha; J_i is the first
/// J reaching 100·retain_ev. Ordered by leading EV (desc), then index.
/// Throws Error{"feature_boost","empty_selection"} when nothing passes.
BoostedFeatureSet select_combinations(std::vector<Candidate> candidates, const BoostConfig& cfg,
                                      std::string source_catalog_version);

/// Fits every enumerated combination on `train`, then selects.
BoostedFeatureSet fit_boost(const FeatureMatrix& train, const BoostConfig& cfg);

/// Refits scaling and loadings of an existing selection on new training
/// rows; combinations and J_i are kept (J_i capped at the new rank).
BoostedFeatureSet refit(const BoostedFeatureSet& set, const FeatureMatrix& train);

/// Concatenated PC scores using the stored (train-time) scaling.
FeatureMatrix build_boosted_matrix(const FeatureMatrix& x, const BoostedFeatureSet& set);

struct BiplotData {
  std::vector<double> score1, score2;
  std::vector<std::string> labels;
  std::vector<std::string> features;
  std::vector<double> loading1, loading2;
  double ev1 = 0.0, ev2 = 0.0;
};

BiplotData biplot_data(const FeatureMatrix& x, const SelectedCombination& sel);
std::string biplot_scores_csv(const BiplotData& b);
std::string biplot_loadings_csv(const BiplotData& b);

std::string to_json(const BoostedFeatureSet& set);
BoostedFeatureSet boosted_set_from_json(std::string_view json);

}  // namespace ser::boost

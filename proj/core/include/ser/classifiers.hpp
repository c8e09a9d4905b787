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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ser/common.hpp"
#include "ser/features.hpp"

namespace ser::ml {

enum class Algorithm { decision_tree, random_forest, extra_trees, gradient_boosting, lda, qda };

/// Short names used in reports: DT, RF, ET, GBC, LDA, QDA.
std::string_view algorithm_name(Algorithm a) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;
std::vector<Algorithm> all_algorithms();

using Hyperparameters = std::map<std::string, double>;

/// Hyperparameters by algorithm (0 means "unlimited" for max_depth and
/// "automatic" for max_features):
///   DT      max_depth, min_samples_leaf, max_features
///   RF, ET  n_estimators, max_depth, min_samples_leaf, max_features
///   GBC     n_rounds, learning_rate, max_depth, min_samples_leaf
///   LDA     (none; pooled covariance carries a 1e-6 ridge)
///   QDA     gamma (blend toward the diagonal, in [0, 1])
struct ModelSpec {
  Algorithm algorithm = Algorithm::extra_trees;
  Hyperparameters params;
  std::uint64_t seed = 0;

  /// Value of `name`, falling back to the algorithm default.
  double get(const std::string& name) const;
  /// Throws Error{"classifiers","invalid_hyperparameter"}.
  void validate() const;
  std::string describe() const;
};

Hyperparameters default_hyperparameters(Algorithm a);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::uint32_t value = 0;  // offset into Tree::values
};

/// Binary tree; x[feature] <= threshold goes left. Leaves store `width`
/// values (class probabilities, or one regression output).
struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<double> values;
  std::size_t width = 0;

  std::span<const double> leaf_values(std::span<const double> x) const;
  std::size_t depth() const;
  /// Features referenced by any split.
  std::vector<int> used_features() const;
};

struct TreeEnsemble {
  std::vector<Tree> trees;  // probability trees, averaged
};

struct BoostedTrees {
  std::vector<double> init;               // per-class raw score
  double learning_rate = 0.1;
  std::vector<std::vector<Tree>> rounds;  // rounds[r][k]
};

/// Linear (LDA) or quadratic (QDA) Gaussian discriminant, fitted on
/// z = (x - center) / scale. Constant columns get scale 1.
struct Discriminant {
  bool quadratic = false;
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<double> log_prior;
  Matrix means;                  // K × d
  Matrix weights;                // LDA: K × d, score = w_k·x + b_k
  std::vector<double> bias;      // LDA
  std::vector<Matrix> chol;      // QDA: per-class Cholesky factors
  std::vector<double> log_det;   // QDA
};

class TrainedModel {
 public:
  TrainedModel() = default;

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  /// Rows × classes; checks the column names against fit time.
  Matrix predict_proba(const FeatureMatrix& x) const;
  /// Unchecked variant over a raw matrix in fit-time column order.
  Matrix predict_proba(const Matrix& x) const;
  std::vector<std::size_t> predict(const FeatureMatrix& x) const;

  const TreeEnsemble* ensemble() const noexcept { return std::get_if<TreeEnsemble>(&params_); }
  const BoostedTrees* boosted() const noexcept { return std::get_if<BoostedTrees>(&params_); }
  const Discriminant* discriminant() const noexcept { return std::get_if<Discriminant>(&params_); }

  std::string to_json() const;
  static TrainedModel from_json(std::string_view json);

 private:
  friend TrainedModel train(const ModelSpec&, const FeatureMatrix&, std::span<const std::string>);
  void predict_row(std::span<const double> x, std::span<double> out) const;

  ModelSpec spec_;
  std::vector<std::string> classes_;
  std::vector<std::string> feature_names_;
  std::variant<TreeEnsemble, BoostedTrees, Discriminant> params_;
};

/// Fits `spec` on the rows of `x` (labels from x.labels). `class_order`
/// fixes the class list; empty means the sorted distinct labels.
TrainedModel train(const ModelSpec& spec, const FeatureMatrix& x, std::span<const std::string> class_order = {});

}  // namespace ser::ml

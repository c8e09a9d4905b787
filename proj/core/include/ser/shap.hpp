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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ser/boost.hpp"
#include "ser/classifiers.hpp"
#include "ser/common.hpp"

namespace ser::shap {

/// Batch model output: rows × outputs.
using ModelFn = std::function<Matrix(const Matrix&)>;

/// Class-probability output of a trained model.
ModelFn model_fn(const ml::TrainedModel& model);

enum class Mode { automatic, exact, sampled };

struct ShapConfig {
  Mode mode = Mode::automatic;  // automatic: exact up to exact_limit features
  std::size_t background_size = 100;
  bool mean_background = false;  // one row of feature means instead of a sample
  std::size_t n_permutations = 100;
  std::size_t exact_limit = 15;
  std::size_t max_instances = 0;  // 0 = explain every row
  std::uint64_t seed = 0;

  /// Throws Error{"shap","invalid_config"}.
  void validate() const;
};

/// Seeded sample of training rows (all rows when fewer), or the single
/// row of column means.
Matrix make_background(const Matrix& train, const ShapConfig& cfg);

/// Outputs × features attributions for one instance. `base` receives the
/// mean output over the background when non-null.
Matrix shap_exact(const ModelFn& f, std::span<const double> x, const Matrix& background, const ShapConfig& cfg,
                  std::vector<double>* base = nullptr);

/// Permutation estimator; each drawn ordering is paired with its reverse.
Matrix shap_sampled(const ModelFn& f, std::span<const double> x, const Matrix& background, const ShapConfig& cfg,
                    std::vector<double>* base = nullptr);

struct Attribution {
  std::vector<std::string> features;
  std::vector<std::string> classes;
  std::vector<std::size_t> rows;  // explained row indices of the input
  std::vector<Matrix> phi;        // per instance: classes × features
  std::vector<double> base;       // per class
  bool exact = false;
};

/// Explains rows of `x` (evenly spaced subset when max_instances caps it).
/// Instance i uses seed derive_seed(cfg.seed, {row}).
Attribution explain(const ModelFn& f, const Matrix& x, const Matrix& background, std::vector<std::string> features,
                    std::vector<std::string> classes, const ShapConfig& cfg);

struct ImportanceReport {
  std::vector<std::string> features;
  std::vector<std::string> classes;
  Matrix per_class;             // classes × features, mean |phi|
  std::vector<double> overall;  // per feature, sum over classes
  std::vector<std::size_t> ranking;  // feature indices, descending; ties by name
  std::string evaluated_on;
};

/// Throws Error{"shap","empty_attribution"}.
ImportanceReport class_importance(const Attribution& attrs, std::string evaluated_on = "validation");

/// `feature,class,mean_abs_shap` in ranking order; class "all" is the pooled row.
std::string importance_csv(const ImportanceReport& r);

struct BackMappedImportance {
  std::vector<std::string> features;
  std::vector<double> weight;  // sums to 1 unless every weight is 0
};

/// Weights each original feature by sum |loading| * importance over the
/// selected PCs. Features of `catalog` outside every combination get 0.
/// Throws Error{"shap","unknown_component"} for report features not in `set`.
BackMappedImportance backmap_importance(const ImportanceReport& report, const boost::BoostedFeatureSet& set,
                                        std::span<const std::string> catalog);

std::string backmap_csv(const BackMappedImportance& b);

}  // namespace ser::shap

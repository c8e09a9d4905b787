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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ser/classifiers.hpp"
#include "ser/dataset.hpp"
#include "ser/metrics.hpp"

namespace ser::ml {

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct CVResult {
  std::vector<EvalReport> folds;
  MetricSummary accuracy, precision, recall, f1;
};

/// Turns (fit rows, held-out rows) into the matrices that are actually
/// fitted and scored, e.g. to refit a feature transform on each complement.
using FoldTransform =
    std::function<std::pair<FeatureMatrix, FeatureMatrix>(const FeatureMatrix& fit, const FeatureMatrix& held_out)>;

/// `folds.fold_of` is aligned with the rows of `x`. `classes` fixes the
/// class list for every fold (empty = sorted distinct labels of x).
CVResult cross_validate(const ModelSpec& spec, const FeatureMatrix& x, const FoldAssignment& folds,
                        const FoldTransform& transform = {}, std::span<const std::string> classes = {});

using Grid = std::map<std::string, std::vector<double>>;

inline constexpr const char* kDefaultGridsVersion = "grids-v1";
Grid default_grid(Algorithm a);

/// Cartesian product; the last key (in map order) varies fastest.
std::vector<Hyperparameters> expand_grid(const Grid& grid);

struct GridCell {
  ModelSpec spec;
  EvalReport validation;
};

struct GridResult {
  ModelSpec best;
  EvalReport validation;
  std::size_t best_index = 0;
  std::vector<GridCell> cells;  // grid order
};

/// True when `a` (at grid position ia) beats `b` under the selection rule:
/// higher macro-F1, then fewer estimators, then shallower, then grid order.
bool better_cell(const GridCell& a, std::size_t ia, const GridCell& b, std::size_t ib);

/// Fits every cell on `train` and scores it on `val`. Throws
/// Error{"classifiers","empty_grid"} when a key has no values.
GridResult grid_search(Algorithm algorithm, const Grid& grid, const FeatureMatrix& train, const FeatureMatrix& val,
                       std::uint64_t seed, std::span<const std::string> classes = {});

struct ModelRow {
  ModelSpec spec;
  std::shared_ptr<const TrainedModel> model;
  std::optional<CVResult> cv;
  EvalReport validation;
  std::optional<EvalReport> test;
};

/// Sorted by test accuracy (validation accuracy when no test set), then by
/// input order.
struct RankingTable {
  std::vector<ModelRow> rows;
};

RankingTable compare_models(const std::vector<ModelSpec>& specs, const FeatureMatrix& train, const FeatureMatrix& val,
                            const FeatureMatrix* test = nullptr, const FoldAssignment* folds = nullptr,
                            const FoldTransform& transform = {}, std::span<const std::string> classes = {});

/// `model,accuracy,recall,precision,f1` (test metrics, or validation when
/// absent) followed by validation and CV summary columns.
std::string ranking_csv(const RankingTable& table);

}  // namespace ser::ml

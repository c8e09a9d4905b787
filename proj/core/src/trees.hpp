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

// Tree growers shared by the ensemble classifiers.

#include <cstddef>
#include <span>
#include <vector>

#include "ser/classifiers.hpp"

namespace ser::ml::detail {

struct ClassTreeParams {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // candidate features per split; 0 = all
  bool random_thresholds = false;
};

/// CART (Gini) over `rows`, which may repeat indices (bootstrap). Equal
/// gains prefer the lower feature index, then the lower threshold.
Tree grow_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                              std::span<const std::size_t> rows, const ClassTreeParams& params, Rng& rng);

struct RegressionTreeParams {
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 1;
  double leaf_scale = 1.0;  // multiplies the Newton leaf step
};

/// Per-feature row order by value, shared across boosting rounds.
std::vector<std::vector<std::size_t>> presort(const Matrix& x);

/// Least-squares tree on `target`; leaves hold leaf_scale·Σr / Σhess.
Tree grow_regression_tree(const Matrix& x, std::span<const double> target, std::span<const double> hess,
                          const std::vector<std::vector<std::size_t>>& sorted, const RegressionTreeParams& params);

}  // namespace ser::ml::detail

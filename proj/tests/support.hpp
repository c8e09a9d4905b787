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

// Generators and helpers shared by the unit and acceptance suites.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ser/common.hpp"
#include "ser/dataset.hpp"
#include "ser/features.hpp"
#include "ser/loop.hpp"

namespace ser::testing {

inline constexpr std::size_t kInformative = 5;
inline constexpr std::size_t kNoise = 20;

/// 4 classes. Columns inf_1..inf_5 are noisy copies of a class-dependent
/// latent (so they are mutually correlated and predictive); noise_01..noise_20
/// are independent standard normals.
inline FeatureMatrix planted_matrix(std::size_t n_per_class, std::uint64_t seed) {
  const double weight[kInformative] = {1.0, 0.8, 1.2, -1.0, 0.9};
  const std::size_t n = 4 * n_per_class;
  FeatureMatrix m;
  for (std::size_t i = 0; i < kInformative; ++i) m.column_names.push_back("inf_" + std::to_string(i + 1));
  for (std::size_t i = 0; i < kNoise; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "noise_%02zu", i + 1);
    m.column_names.push_back(buf);
  }
  m.values = Matrix(n, kInformative + kNoise);
  Rng rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t cls = r % 4;
    const double latent = 2.0 * static_cast<double>(cls) + 0.5 * rng.normal();
    for (std::size_t j = 0; j < kInformative; ++j) m.values(r, j) = weight[j] * latent + 0.3 * rng.normal();
    for (std::size_t j = 0; j < kNoise; ++j) m.values(r, kInformative + j) = rng.normal();
    m.labels.push_back("class_" + std::to_string(cls));
    m.paths.push_back("row_" + std::to_string(r));
  }
  m.catalog_version = FeatureCatalog::from_names(m.column_names).version();
  return m;
}

/// Train/val/test split of a matrix by stratified_split over its labels,
/// plus k stratified folds over the training rows (k = 0: none).
inline loop::DataSplits split_matrix(const FeatureMatrix& m, std::uint64_t seed, int k = 0,
                                     SplitFractions fractions = {0.6, 0.2, 0.2}) {
  const auto split = stratified_split(m.labels, fractions, seed);
  FoldAssignment folds;
  const auto train = m.select_rows(split.train_indices);
  if (k > 0) folds = stratified_kfold(train.labels, k, seed + 1);
  return loop::DataSplits(train, m.select_rows(split.val_indices), m.select_rows(split.test_indices), folds);
}

/// Two isotropic unit-variance Gaussians in 2-D with equal priors.
inline FeatureMatrix two_gaussians(std::size_t n_per_class, const double mu_a[2], const double mu_b[2],
                                   std::uint64_t seed) {
  FeatureMatrix m;
  m.column_names = {"x1", "x2"};
  m.values = Matrix(2 * n_per_class, 2);
  Rng rng(seed);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const double* mu = i % 2 == 0 ? mu_a : mu_b;
    m.values(i, 0) = mu[0] + rng.normal();
    m.values(i, 1) = mu[1] + rng.normal();
    m.labels.push_back(i % 2 == 0 ? "A" : "B");
    m.paths.push_back("g" + std::to_string(i));
  }
  m.catalog_version = FeatureCatalog::from_names(m.column_names).version();
  return m;
}

inline double factorial(std::size_t n) { return n <= 1 ? 1.0 : static_cast<double>(n) * factorial(n - 1); }

/// Independent oracle: for each j, loop over subsets T of the other features
/// and evaluate v directly (no memo, no shared code with the library).
inline Matrix brute_force_shapley(const std::function<Matrix(const Matrix&)>& f, std::span<const double> x, const Matrix& bg) {
  const std::size_t n = x.size();
  auto value = [&](std::uint32_t mask) {
    Matrix rows(bg.rows(), n);
    for (std::size_t b = 0; b < bg.rows(); ++b)
      for (std::size_t k = 0; k < n; ++k) rows(b, k) = (mask >> k) & 1u ? x[k] : bg(b, k);
    const Matrix out = f(rows);
    std::vector<double> v(out.cols(), 0.0);
    for (std::size_t b = 0; b < out.rows(); ++b)
      for (std::size_t c = 0; c < out.cols(); ++c) v[c] += out(b, c) / static_cast<double>(bg.rows());
    return v;
  };
  Matrix phi;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::uint32_t t = 0; t < (1u << n); ++t) {
      if ((t >> j) & 1u) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcount(t));
      const double w = factorial(size) * factorial(n - size - 1) / factorial(n);
      const auto with = value(t | (1u << j));
      const auto without = value(t);
      if (phi.empty()) phi = Matrix(with.size(), n);
      for (std::size_t c = 0; c < with.size(); ++c) phi(c, j) += w * (with[c] - without[c]);
    }
  }
  return phi;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("serboost_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ser::testing

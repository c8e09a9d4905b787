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
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <initializer_list>
#include <vector>

namespace ser {

/// Error raised by every module. `code` is a stable machine-readable tag
/// (e.g. "dataset_not_found"); `module` names the subsystem that raised it.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string code, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)), code_(std::move(code)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& code() const noexcept { return code_; }

 private:
  std::string module_;
  std::string code_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transposed() const;
  Matrix operator*(const Matrix& rhs) const;

  /// Rows picked by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> idx) const;
  /// Columns picked by index, in the given order.
  Matrix select_cols(std::span<const std::size_t> idx) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derive a child seed from a parent seed and a stream of tags.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept;

/// FNV-1a over a string, for stable content addressing.
std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Portable seeded generator. Distributions are implemented here rather than
/// via <random> adaptors so results do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : engine_(seed) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept;
  double normal() noexcept;

  template <typename T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Set the worker count used by parallel_for (0 = hardware default).
void set_thread_count(int n);
int thread_count() noexcept;

/// Runs fn(i) for i in [0, n). Callers must write results into per-index
/// slots so the outcome is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

}  // namespace ser

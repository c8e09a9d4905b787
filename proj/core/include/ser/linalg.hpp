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

#include <vector>

#include "ser/common.hpp"

namespace ser::linalg {

/// Eigen-decomposition of a symmetric matrix.
struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]; unit norm
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal mass falls below machine
/// precision. Eigenvalues are returned in descending order (stable on ties);
/// each eigenvector is sign-normalized so its largest-magnitude entry is
/// positive (first such entry when several tie).
SymmetricEigen jacobi_eigen(const Matrix& symmetric, int max_sweeps = 100);

/// Flips the sign of column j when its dominant entry is negative.
void normalize_signs(Matrix& vectors);

/// Population covariance (divide by n) of the columns of x.
Matrix covariance(const Matrix& x);

/// Lower-triangular Cholesky factor of an SPD matrix. Throws
/// Error{"linalg","not_positive_definite"} when a pivot is not positive.
Matrix cholesky(const Matrix& spd);

/// Solves L y = b (forward) and L^T x = y (backward) for a Cholesky factor.
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);

/// Solves L y = b only.
std::vector<double> forward_substitute(const Matrix& lower, std::span<const double> b);

/// log det of the SPD matrix whose Cholesky factor is given.
double cholesky_log_det(const Matrix& lower);

}  // namespace ser::linalg

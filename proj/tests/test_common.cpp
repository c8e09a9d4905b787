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
#include <atomic>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ser/common.hpp"
#include "ser/linalg.hpp"

#ifdef SER_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using ser::Matrix;

namespace {

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
  ser::Rng rng(seed);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
  return a;
}

double residual(const Matrix& a, const ser::linalg::SymmetricEigen& e) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.rows(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double av = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) av += a(i, k) * e.vectors(k, j);
      worst = std::max(worst, std::abs(av - e.values[j] * e.vectors(i, j)));
    }
  return worst;
}

}  // namespace

TEST_CASE("matrix basics") {
  Matrix a(2, 3);
  for (std::size_t i = 0; i < 6; ++i) a.data()[i] = static_cast<double>(i);
  const Matrix t = a.transposed();
  CHECK(t.rows() == 3);
  CHECK(t(2, 1) == 5.0);
  const Matrix p = a * t;  // [[5,14],[14,50]]
  CHECK(p(0, 0) == 5.0);
  CHECK(p(0, 1) == 14.0);
  CHECK(p(1, 1) == 50.0);
  const std::size_t rows[] = {1, 1};
  CHECK(a.select_rows(rows)(1, 2) == 5.0);
  const std::size_t cols[] = {2};
  CHECK(a.select_cols(cols).column(0) == std::vector<double>{2.0, 5.0});
}

TEST_CASE("seed derivation is stable and tag sensitive") {
  CHECK(ser::derive_seed(7, {1, 2}) == ser::derive_seed(7, {1, 2}));
  CHECK(ser::derive_seed(7, {1, 2}) != ser::derive_seed(7, {2, 1}));
  CHECK(ser::derive_seed(7, {1}) != ser::derive_seed(8, {1}));
  ser::Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng ranges") {
  ser::Rng rng(3);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(rng.below(7) < 7u);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / 20000) < 0.05);
  CHECK(std::abs(sq / 20000 - 1.0) < 0.05);
}

TEST_CASE("parallel_for visits every index once") {
  for (int threads : {1, 3}) {
    ser::set_thread_count(threads);
    std::vector<std::atomic<int>> hits(1000);
    ser::parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](const auto& h) { return h.load() == 1; }));
  }
  ser::set_thread_count(0);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678})
    CHECK(std::stod(ser::format_double(v)) == v);
}

TEST_CASE("jacobi: hand 2x2 correlation matrix") {
  const double rho = 0.6;
  Matrix c(2, 2);
  c(0, 0) = c(1, 1) = 1.0;
  c(0, 1) = c(1, 0) = rho;
  const auto e = ser::linalg::jacobi_eigen(c);
  CHECK(e.values[0] == doctest::Approx(1.0 + rho).epsilon(1e-14));
  CHECK(e.values[1] == doctest::Approx(1.0 - rho).epsilon(1e-14));
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(e.vectors(0, 0) - h) < 1e-12);
  CHECK(std::abs(e.vectors(1, 0) - h) < 1e-12);
  // Ties in magnitude: the first entry takes the positive sign.
  CHECK(std::abs(e.vectors(0, 1) - h) < 1e-12);
  CHECK(std::abs(e.vectors(1, 1) + h) < 1e-12);
}

TEST_CASE("jacobi: residual, orthonormality, ordering on random matrices") {
  for (std::size_t n : {1u, 2u, 5u, 12u, 30u}) {
    const Matrix a = random_symmetric(n, 100 + n);
    const auto e = ser::linalg::jacobi_eigen(a);
    CHECK(residual(a, e) <= 1e-8);
    CHECK(std::is_sorted(e.values.rbegin(), e.values.rend()));
    const Matrix g = e.vectors.transposed() * e.vectors;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-10);
  }
}

TEST_CASE("jacobi: diagonal input is already solved") {
  Matrix d(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 3.0;
  d(2, 2) = 2.0;
  const auto e = ser::linalg::jacobi_eigen(d);
  CHECK(e.values == std::vector<double>{3.0, 2.0, 1.0});
  CHECK(e.vectors(1, 0) == 1.0);
}

TEST_CASE("jacobi: rejects non-square") {
  CHECK_THROWS_AS(ser::linalg::jacobi_eigen(Matrix(2, 3)), ser::Error);
}

#ifdef SER_HAVE_EIGEN
TEST_CASE("jacobi agrees with Eigen's self-adjoint solver") {
  for (std::size_t n : {3u, 8u, 20u}) {
    const Matrix a = random_symmetric(n, 7 * n);
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = a(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const auto e = ser::linalg::jacobi_eigen(a);
    for (std::size_t j = 0; j < n; ++j) {
      // Eigen sorts ascending.
      const auto k = static_cast<Eigen::Index>(n - 1 - j);
      CHECK(std::abs(e.values[j] - es.eigenvalues()(k)) <= 1e-10);
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += e.vectors(i, j) * es.eigenvectors()(static_cast<Eigen::Index>(i), k);
      CHECK(std::abs(std::abs(dot) - 1.0) <= 1e-8);
    }
  }
}
#endif

TEST_CASE("population covariance") {
  Matrix x(4, 2);
  const double v[] = {1, 2, 2, 4, 3, 6, 4, 8};
  std::copy(std::begin(v), std::end(v), x.data().begin());
  const Matrix c = ser::linalg::covariance(x);
  CHECK(c(0, 0) == doctest::Approx(1.25));
  CHECK(c(0, 1) == doctest::Approx(2.5));
  CHECK(c(1, 1) == doctest::Approx(5.0));
}

TEST_CASE("cholesky solve and log det") {
  Matrix s(3, 3);
  const double v[] = {4, 2, 0.4, 2, 5, 1, 0.4, 1, 3};
  std::copy(std::begin(v), std::end(v), s.data().begin());
  const Matrix l = ser::linalg::cholesky(s);
  const Matrix back = l * l.transposed();
  for (std::size_t i = 0; i < 9; ++i) CHECK(back.data()[i] == doctest::Approx(v[i]));
  const std::vector<double> b = {1, 2, 3};
  const auto x = ser::linalg::cholesky_solve(l, b);
  for (std::size_t i = 0; i < 3; ++i) {
    double r = 0.0;
    for (std::size_t k = 0; k < 3; ++k) r += s(i, k) * x[k];
    CHECK(r == doctest::Approx(b[i]));
  }
  // det = 4*(15-1) - 2*(6-0.4) + 0.4*(2-2) = 44.8
  CHECK(ser::linalg::cholesky_log_det(l) == doctest::Approx(std::log(44.8)));
}

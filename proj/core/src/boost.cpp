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

#include "ser/boost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "ser/linalg.hpp"

namespace ser::boost {

namespace {

constexpr double kEvTolerance = 1e-9;

[[noreturn]] void fail(const std::string& code, const std::string& msg) { throw Error("feature_boost", code, msg); }

std::vector<std::size_t> member_indices(const FeatureMatrix& x, const FeatureCombination& combo) {
  std::vector<std::size_t> idx;
  for (const auto& name : combo.members) {
    auto i = x.column_index(name);
    if (!i) fail("unknown_feature", "combination member '" + name + "' missing from matrix");
    idx.push_back(*i);
  }
  return idx;
}

std::size_t retained_components(const CombinationPCA& pca, double retain_ev) {
  double cum = 0.0;
  std::size_t j = 0;
  while (j < pca.ev.size()) {
    cum += pca.ev[j];
    ++j;
    if (cum >= 100.0 * retain_ev - kEvTolerance) break;
  }
  return std::clamp<std::size_t>(j, 1, std::max<std::size_t>(pca.rank, 1));
}

}  // namespace

void BoostConfig::validate() const {
  if (p < 1) fail("invalid_config", "p must be >= 1");
  if (c < 1 || c > p) fail("invalid_config", "c must satisfy 1 <= c <= p");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("invalid_config", "alpha must lie in (0, 1]");
  if (!(retain_ev > 0.0 && retain_ev <= 1.0)) fail("invalid_config", "retain_ev must lie in (0, 1]");
  if (m < 1) fail("invalid_config", "m must be >= 1");
}

Standardized standardize(const Matrix& x) {
  if (x.rows() < 2) fail("too_few_rows", "standardize needs at least 2 rows");
  const std::size_t n = x.rows(), d = x.cols();
  Standardized out;
  out.params.mean.assign(d, 0.0);
  out.params.std.assign(d, 1.0);
  out.params.constant.assign(d, false);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    out.params.mean[c] = mean;
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      out.params.std[c] = sd;
    } else {
      out.params.constant[c] = true;
    }
  }
  out.z = apply_standardization(x, out.params);
  return out;
}

Matrix apply_standardization(const Matrix& x, const Standardization& s) {
  if (x.cols() != s.mean.size()) fail("shape_mismatch", "standardization width mismatch");
  Matrix z(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      z(r, c) = s.constant[c] ? 0.0 : (x(r, c) - s.mean[c]) / s.std[c];
  return z;
}

std::vector<double> explained_variance(std::span<const double> lambda) {
  std::vector<double> l(lambda.begin(), lambda.end());
  for (double& v : l) {
    if (v < -1e-10) fail("negative_eigenvalue", "eigenvalue below -1e-10: covariance is not PSD");
    if (v < 0.0) v = 0.0;
  }
  const double total = std::accumulate(l.begin(), l.end(), 0.0);
  if (!(total > 0.0)) fail("degenerate_combination", "all eigenvalues are zero");
  for (double& v : l) v = 100.0 * v / total;
  return l;
}

CombinationPCA fit_pca(const Matrix& z) {
  if (z.rows() < 2) fail("too_few_rows", "fit_pca needs at least 2 rows");
  for (double v : z.data())
    if (!std::isfinite(v)) fail("non_finite", "fit_pca input has non-finite entries");
  const Matrix cov = linalg::covariance(z);
  linalg::SymmetricEigen eig = linalg::jacobi_eigen(cov);

  CombinationPCA pca;
  pca.loadings = std::move(eig.vectors);
  pca.lambda = std::move(eig.values);
  double trace = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) trace += cov(i, i);
  for (double& v : pca.lambda) {
    if (v < -1e-8 * std::max(trace, 1.0)) fail("negative_eigenvalue", "covariance has a negative eigenvalue");
    if (v < 0.0) v = 0.0;
  }
  const double top = pca.lambda.empty() ? 0.0 : pca.lambda.front();
  pca.rank = static_cast<std::size_t>(
      std::count_if(pca.lambda.begin(), pca.lambda.end(), [&](double v) { return v > 1e-12 * top && v > 0.0; }));
  pca.usable = top > 0.0;
  pca.ev = pca.usable ? explained_variance(pca.lambda) : std::vector<double>(pca.lambda.size(), 0.0);
  return pca;
}

CombinationPCA fit_combination(const Matrix& x) {
  Standardized s = standardize(x);
  CombinationPCA pca = fit_pca(s.z);
  pca.scaling = std::move(s.params);
  return pca;
}

Matrix project(const Matrix& z, const CombinationPCA& pca, std::size_t j) {
  if (j < 1 || j > pca.loadings.cols() || (pca.rank > 0 && j > pca.rank))
    fail("invalid_component_count", "J=" + std::to_string(j) + " out of range (rank " + std::to_string(pca.rank) + ")");
  if (z.cols() != pca.loadings.rows()) fail("shape_mismatch", "projection width mismatch");
  Matrix scores(z.rows(), j);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t k = 0; k < j; ++k) {
      double s = 0.0;
      for (std::size_t f = 0; f < row.size(); ++f) s += row[f] * pca.loadings(f, k);
      scores(r, k) = s;
    }
  }
  return scores;
}

std::uint64_t binomial(std::size_t n, std::size_t k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    // r * num / i stays integral at each step.
    if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    r = r * num / i;
  }
  return r;
}

std::vector<FeatureCombination> enumerate_combinations(std::span<const std::string> names, const BoostConfig& cfg) {
  cfg.validate();
  const std::size_t n = names.size();
  if (n < cfg.p)
    fail("catalog_too_small", "catalog has " + std::to_string(n) + " features, p=" + std::to_string(cfg.p));
  const std::uint64_t total = binomial(n, cfg.p);
  if (cfg.m > total)
    fail("insufficient_combinations", "only " + std::to_string(total) + " distinct combinations of " +
                                          std::to_string(cfg.p) + " exist, m=" + std::to_string(cfg.m));

  std::vector<FeatureCombination> out;
  auto emit = [&](const std::vector<std::size_t>& idx) {
    FeatureCombination fc;
    fc.index = out.size() + 1;
    for (auto i : idx) fc.members.push_back(names[i]);
    out.push_back(std::move(fc));
  };

  if (cfg.m == total) {
    std::vector<std::size_t> idx(cfg.p);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      emit(idx);
      std::size_t i = cfg.p;
      while (i > 0 && idx[i - 1] == n - cfg.p + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < cfg.p; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  }

  Rng rng(derive_seed(cfg.seed, {0xc0b0}));
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::size_t> pool(n);
  for (std::size_t draw = 0; draw < 10 * cfg.m && out.size() < cfg.m; ++draw) {
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < cfg.p; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
    std::vector<std::size_t> idx(pool.begin(), pool.begin() + static_cast<long>(cfg.p));
    std::sort(idx.begin(), idx.end());
    if (seen.insert(idx).second) emit(idx);
  }
  if (out.size() < cfg.m)
    fail("insufficient_combinations", "drew only " + std::to_string(out.size()) + " distinct combinations in " +
                                          std::to_string(10 * cfg.m) + " attempts");
  return out;
}

BoostedFeatureSet select_combinations(std::vector<Candidate> candidates, const BoostConfig& cfg,
                                      std::string source_catalog_version) {
  cfg.validate();
  BoostedFeatureSet set;
  set.config = cfg;
  set.source_catalog_version = std::move(source_catalog_version);
  for (auto& [combo, pca] : candidates) {
    if (!pca.usable) continue;
    const std::size_t c = std::min(cfg.c, pca.ev.size());
    const double leading = std::accumulate(pca.ev.begin(), pca.ev.begin() + static_cast<long>(c), 0.0);
    if (leading < 100.0 * cfg.alpha - kEvTolerance) continue;
    SelectedCombination sel;
    sel.combination = std::move(combo);
    sel.pca = std::move(pca);
    sel.leading_ev = leading;
    sel.retained = retained_components(sel.pca, cfg.retain_ev);
    set.selected.push_back(std::move(sel));
  }
  if (set.selected.empty())
    fail("empty_selection", "no combination reaches the cumulative explained-variance threshold alpha=" +
                                format_double(cfg.alpha) + " over the first c=" + std::to_string(cfg.c) +
                                " components; relax alpha");
  std::stable_sort(set.selected.begin(), set.selected.end(), [](const auto& a, const auto& b) {
    if (a.leading_ev != b.leading_ev) return a.leading_ev > b.leading_ev;
    return a.combination.index < b.combination.index;
  });
  for (const auto& s : set.selected)
    for (std::size_t j = 1; j <= s.retained; ++j)
      set.pc_names.push_back("PC_" + std::to_string(s.combination.index) + "_" + std::to_string(j));
  return set;
}

BoostedFeatureSet fit_boost(const FeatureMatrix& train, const BoostConfig& cfg) {
  const auto combos = enumerate_combinations(train.column_names, cfg);
  std::vector<Candidate> cands(combos.size());
  parallel_for(combos.size(), [&](std::size_t i) {
    const Matrix x = train.values.select_cols(member_indices(train, combos[i]));
    cands[i] = {combos[i], fit_combination(x)};
  });
  return select_combinations(std::move(cands), cfg, train.catalog_version);
}

BoostedFeatureSet refit(const BoostedFeatureSet& set, const FeatureMatrix& train) {
  if (train.catalog_version != set.source_catalog_version)
    fail("catalog_mismatch", "training matrix catalog " + train.catalog_version + " differs from boosted set " +
                                 set.source_catalog_version);
  BoostedFeatureSet out = set;
  out.pc_names.clear();
  for (auto& s : out.selected) {
    s.pca = fit_combination(train.values.select_cols(member_indices(train, s.combination)));
    s.retained = std::clamp<std::size_t>(s.retained, 1, std::max<std::size_t>(s.pca.rank, 1));
    s.leading_ev = std::accumulate(s.pca.ev.begin(),
                                   s.pca.ev.begin() + static_cast<long>(std::min(set.config.c, s.pca.ev.size())), 0.0);
    for (std::size_t j = 1; j <= s.retained; ++j)
      out.pc_names.push_back("PC_" + std::to_string(s.combination.index) + "_" + std::to_string(j));
  }
  return out;
}

FeatureMatrix build_boosted_matrix(const FeatureMatrix& x, const BoostedFeatureSet& set) {
  if (set.selected.empty()) fail("empty_selection", "boosted set has no selected combinations");
  if (x.catalog_version != set.source_catalog_version)
    fail("catalog_mismatch",
         "matrix catalog " + x.catalog_version + " differs from boosted set " + set.source_catalog_version);
  FeatureMatrix out;
  out.column_names = set.pc_names;
  out.labels = x.labels;
  out.paths = x.paths;
  out.values = Matrix(x.rows(), set.width());
  std::size_t col = 0;
  for (const auto& s : set.selected) {
    const Matrix z = apply_standardization(x.values.select_cols(member_indices(x, s.combination)), s.pca.scaling);
    const Matrix scores = project(z, s.pca, s.retained);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < s.retained; ++j) out.values(r, col + j) = scores(r, j);
    col += s.retained;
  }
  out.catalog_version = FeatureCatalog::from_names(out.column_names).version();
  return out;
}

BiplotData biplot_data(const FeatureMatrix& x, const SelectedCombination& sel) {
  if (sel.pca.rank < 2) fail("rank_too_low", "biplot needs at least two principal components");
  const Matrix z = apply_standardization(x.values.select_cols(member_indices(x, sel.combination)), sel.pca.scaling);
  const Matrix scores = project(z, sel.pca, 2);
  BiplotData b;
  b.score1 = scores.column(0);
  b.score2 = scores.column(1);
  b.labels = x.labels;
  b.features = sel.combination.members;
  b.loading1 = sel.pca.loadings.column(0);
  b.loading2 = sel.pca.loadings.column(1);
  b.ev1 = sel.pca.ev[0];
  b.ev2 = sel.pca.ev[1];
  return b;
}

std::string biplot_scores_csv(const BiplotData& b) {
  std::ostringstream os;
  os << "pc1,pc2,label,ev1,ev2\n";
  for (std::size_t i = 0; i < b.score1.size(); ++i)
    os << format_double(b.score1[i]) << ',' << format_double(b.score2[i]) << ',' << csv::escape(b.labels[i]) << ','
       << format_double(b.ev1) << ',' << format_double(b.ev2) << '\n';
  return os.str();
}

std::string biplot_loadings_csv(const BiplotData& b) {
  std::ostringstream os;
  os << "feature,loading1,loading2,length,ev1,ev2\n";
  for (std::size_t i = 0; i < b.features.size(); ++i)
    os << csv::escape(b.features[i]) << ',' << format_double(b.loading1[i]) << ',' << format_double(b.loading2[i])
       << ',' << format_double(std::hypot(b.loading1[i], b.loading2[i])) << ',' << format_double(b.ev1) << ','
       << format_double(b.ev2) << '\n';
  return os.str();
}

namespace {

nlohmann::ordered_json matrix_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const std::size_t r = j.size();
  const std::size_t c = r ? j[0].size() : 0;
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

}  // namespace

std::string to_json(const BoostedFeatureSet& set) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["source_catalog_version"] = set.source_catalog_version;
  j["config"] = {{"p", set.config.p},         {"m", set.config.m},
                 {"alpha", set.config.alpha}, {"c", set.config.c},
                 {"retain_ev", set.config.retain_ev}, {"seed", set.config.seed}};
  j["pc_names"] = set.pc_names;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : set.selected) {
    nlohmann::ordered_json e;
    e["index"] = s.combination.index;
    e["members"] = s.combination.members;
    e["retained"] = s.retained;
    e["leading_ev"] = s.leading_ev;
    e["mean"] = s.pca.scaling.mean;
    e["std"] = s.pca.scaling.std;
    e["constant"] = s.pca.scaling.constant;
    e["eigenvalues"] = s.pca.lambda;
    e["explained_variance"] = s.pca.ev;
    e["rank"] = s.pca.rank;
    e["loadings"] = matrix_json(s.pca.loadings);
    arr.push_back(std::move(e));
  }
  j["combinations"] = std::move(arr);
  return j.dump(2) + "\n";
}

BoostedFeatureSet boosted_set_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BoostedFeatureSet set;
    set.source_catalog_version = j.at("source_catalog_version").get<std::string>();
    const auto& c = j.at("config");
    set.config.p = c.at("p").get<std::size_t>();
    set.config.m = c.at("m").get<std::size_t>();
    set.config.alpha = c.at("alpha").get<double>();
    set.config.c = c.at("c").get<std::size_t>();
    set.config.retain_ev = c.at("retain_ev").get<double>();
    set.config.seed = c.at("seed").get<std::uint64_t>();
    set.pc_names = j.at("pc_names").get<std::vector<std::string>>();
    for (const auto& e : j.at("combinations")) {
      SelectedCombination s;
      s.combination.index = e.at("index").get<std::size_t>();
      s.combination.members = e.at("members").get<std::vector<std::string>>();
      s.retained = e.at("retained").get<std::size_t>();
      s.leading_ev = e.at("leading_ev").get<double>();
      s.pca.scaling.mean = e.at("mean").get<std::vector<double>>();
      s.pca.scaling.std = e.at("std").get<std::vector<double>>();
      s.pca.scaling.constant = e.at("constant").get<std::vector<bool>>();
      s.pca.lambda = e.at("eigenvalues").get<std::vector<double>>();
      s.pca.ev = e.at("explained_variance").get<std::vector<double>>();
      s.pca.rank = e.at("rank").get<std::size_t>();
      s.pca.loadings = matrix_from_json(e.at("loadings"));
      s.pca.usable = true;
      set.selected.push_back(std::move(s));
    }
    return set;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("feature_boost", "invalid_boostset_json", ex.what());
  }
}

}  // namespace ser::boost

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

#include "ser/shap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "csv.hpp"

namespace ser::shap {

ModelFn model_fn(const ml::TrainedModel& model) {
  return [&model](const Matrix& x) { return model.predict_proba(x); };
}

void ShapConfig::validate() const {
  if (n_permutations < 1) throw Error("shap", "invalid_config", "n_permutations must be at least 1");
  if (exact_limit > 25) throw Error("shap", "invalid_config", "exact_limit must not exceed 25");
  if (!mean_background && background_size < 1) throw Error("shap", "invalid_config", "background_size must be at least 1");
}

Matrix make_background(const Matrix& train, const ShapConfig& cfg) {
  if (train.rows() == 0) throw Error("shap", "empty_background", "no rows to build a background from");
  if (cfg.mean_background) {
    Matrix m(1, train.cols());
    for (std::size_t j = 0; j < train.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < train.rows(); ++i) s += train(i, j);
      m(0, j) = s / static_cast<double>(train.rows());
    }
    return m;
  }
  std::vector<std::size_t> idx(train.rows());
  std::iota(idx.begin(), idx.end(), 0);
  if (cfg.background_size < idx.size()) {
    Rng rng(derive_seed(cfg.seed, {0xb6}));
    rng.shuffle(idx);
    idx.resize(cfg.background_size);
    std::sort(idx.begin(), idx.end());
  }
  return train.select_rows(idx);
}

namespace {

void check_inputs(std::span<const double> x, const Matrix& background) {
  if (background.rows() == 0) throw Error("shap", "empty_background", "background has no rows");
  if (background.cols() != x.size())
    throw Error("shap", "shape_mismatch", "instance width differs from the background width");
}

// Mean model output for each block of `rows_per_block` consecutive rows.
Matrix block_means(const Matrix& out, std::size_t rows_per_block) {
  const std::size_t blocks = out.rows() / rows_per_block;
  Matrix m(blocks, out.cols());
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t r = 0; r < rows_per_block; ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) m(b, c) += out(b * rows_per_block + r, c);
  for (double& v : m.data()) v /= static_cast<double>(rows_per_block);
  return m;
}

}  // namespace

Matrix shap_exact(const ModelFn& f, std::span<const double> x, const Matrix& background, const ShapConfig& cfg,
                  std::vector<double>* base) {
  check_inputs(x, background);
  const std::size_t n = x.size();
  if (n > cfg.exact_limit || n > 25)
    throw Error("shap", "too_many_features",
                std::to_string(n) + " features exceed the exact limit of " + std::to_string(cfg.exact_limit));
  const std::size_t masks = std::size_t{1} << n;
  const std::size_t nb = background.rows();

  // v(T) for every coalition, evaluated in chunks of masks.
  Matrix v;
  const std::size_t chunk = std::max<std::size_t>(1, 65536 / nb);
  for (std::size_t start = 0; start < masks; start += chunk) {
    const std::size_t end = std::min(masks, start + chunk);
    Matrix batch((end - start) * nb, n);
    for (std::size_t mask = start; mask < end; ++mask)
      for (std::size_t b = 0; b < nb; ++b) {
        auto row = batch.row((mask - start) * nb + b);
        for (std::size_t j = 0; j < n; ++j) row[j] = (mask >> j & 1U) ? x[j] : background(b, j);
      }
    const Matrix means = block_means(f(batch), nb);
    if (v.empty()) v = Matrix(masks, means.cols());
    for (std::size_t r = 0; r < means.rows(); ++r)
      std::copy(means.row(r).begin(), means.row(r).end(), v.row(start + r).begin());
  }
  const std::size_t k = v.cols();

  // w(s) = s! (n - s - 1)! / n!
  std::vector<double> w(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    w[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) + std::lgamma(static_cast<double>(n - s)) -
                    std::lgamma(static_cast<double>(n) + 1.0));

  Matrix phi(k, n);
  for (std::size_t mask = 0; mask < masks; ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1U) continue;
      const std::size_t with = mask | (std::size_t{1} << j);
      for (std::size_t c = 0; c < k; ++c) phi(c, j) += w[size] * (v(with, c) - v(mask, c));
    }
  }
  if (base) base->assign(v.row(0).begin(), v.row(0).end());
  return phi;
}

Matrix shap_sampled(const ModelFn& f, std::span<const double> x, const Matrix& background, const ShapConfig& cfg,
                    std::vector<double>* base) {
  check_inputs(x, background);
  if (cfg.n_permutations < 1) throw Error("shap", "invalid_config", "n_permutations must be at least 1");
  const std::size_t n = x.size();
  const std::size_t nb = background.rows();
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Matrix phi;
  Matrix batch((n + 1) * nb, n);
  std::vector<double> v0;
  for (std::size_t p = 0; p < cfg.n_permutations; ++p) {
    if (p % 2 == 0)
      rng.shuffle(order);
    else
      std::reverse(order.begin(), order.end());
    // Step s switches the first s features of the ordering to x.
    for (std::size_t b = 0; b < nb; ++b) std::copy(background.row(b).begin(), background.row(b).end(), batch.row(b).begin());
    for (std::size_t s = 1; s <= n; ++s)
      for (std::size_t b = 0; b < nb; ++b) {
        auto row = batch.row(s * nb + b);
        const auto prev = batch.row((s - 1) * nb + b);
        std::copy(prev.begin(), prev.end(), row.begin());
        row[order[s - 1]] = x[order[s - 1]];
      }
    const Matrix v = block_means(f(batch), nb);
    if (phi.empty()) {
      phi = Matrix(v.cols(), n);
      v0.assign(v.row(0).begin(), v.row(0).end());
    }
    for (std::size_t s = 1; s <= n; ++s)
      for (std::size_t c = 0; c < v.cols(); ++c) phi(c, order[s - 1]) += v(s, c) - v(s - 1, c);
  }
  for (double& val : phi.data()) val /= static_cast<double>(cfg.n_permutations);
  if (base) *base = v0;
  return phi;
}

Attribution explain(const ModelFn& f, const Matrix& x, const Matrix& background, std::vector<std::string> features,
                    std::vector<std::string> classes, const ShapConfig& cfg) {
  cfg.validate();
  if (features.size() != x.cols()) throw Error("shap", "shape_mismatch", "feature names do not match the matrix width");
  Attribution a;
  a.features = std::move(features);
  a.classes = std::move(classes);
  const std::size_t n = x.rows();
  const std::size_t take = (cfg.max_instances == 0 || cfg.max_instances >= n) ? n : cfg.max_instances;
  for (std::size_t i = 0; i < take; ++i) a.rows.push_back(i * n / take);

  a.exact = cfg.mode == Mode::exact || (cfg.mode == Mode::automatic && x.cols() <= cfg.exact_limit);
  a.phi.resize(a.rows.size());
  std::vector<std::vector<double>> bases(a.rows.size());
  parallel_for(a.rows.size(), [&](std::size_t i) {
    ShapConfig c = cfg;
    c.seed = derive_seed(cfg.seed, {a.rows[i]});
    a.phi[i] = a.exact ? shap_exact(f, x.row(a.rows[i]), background, c, &bases[i])
                       : shap_sampled(f, x.row(a.rows[i]), background, c, &bases[i]);
  });
  if (!bases.empty()) a.base = bases.front();
  return a;
}

ImportanceReport class_importance(const Attribution& attrs, std::string evaluated_on) {
  if (attrs.phi.empty()) throw Error("shap", "empty_attribution", "no attributions to summarize");
  ImportanceReport r;
  r.features = attrs.features;
  r.classes = attrs.classes;
  r.evaluated_on = std::move(evaluated_on);
  const std::size_t k = attrs.phi.front().rows(), n = attrs.phi.front().cols();
  r.per_class = Matrix(k, n);
  for (const auto& phi : attrs.phi)
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < n; ++j) r.per_class(c, j) += std::abs(phi(c, j));
  for (double& v : r.per_class.data()) v /= static_cast<double>(attrs.phi.size());
  r.overall.assign(n, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < n; ++j) r.overall[j] += r.per_class(c, j);
  r.ranking.resize(n);
  std::iota(r.ranking.begin(), r.ranking.end(), 0);
  std::sort(r.ranking.begin(), r.ranking.end(), [&](std::size_t a, std::size_t b) {
    if (r.overall[a] != r.overall[b]) return r.overall[a] > r.overall[b];
    return r.features[a] < r.features[b];
  });
  return r;
}

std::string importance_csv(const ImportanceReport& r) {
  std::ostringstream os;
  os << "feature,class,mean_abs_shap\n";
  for (std::size_t j : r.ranking) {
    os << csv::escape(r.features[j]) << ",all," << format_double(r.overall[j]) << '\n';
    for (std::size_t c = 0; c < r.classes.size(); ++c)
      os << csv::escape(r.features[j]) << ',' << csv::escape(r.classes[c]) << ',' << format_double(r.per_class(c, j))
         << '\n';
  }
  return os.str();
}

BackMappedImportance backmap_importance(const ImportanceReport& report, const boost::BoostedFeatureSet& set,
                                        std::span<const std::string> catalog) {
  std::map<std::string, double> pc_importance;
  for (std::size_t j = 0; j < report.features.size(); ++j) pc_importance[report.features[j]] = report.overall[j];
  for (const auto& [name, _] : pc_importance)
    if (std::find(set.pc_names.begin(), set.pc_names.end(), name) == set.pc_names.end())
      throw Error("shap", "unknown_component", "'" + name + "' is not a component of the boosted set");

  BackMappedImportance out;
  out.features.assign(catalog.begin(), catalog.end());
  out.weight.assign(out.features.size(), 0.0);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < out.features.size(); ++i) pos[out.features[i]] = i;

  for (const auto& sel : set.selected) {
    for (std::size_t j = 0; j < sel.retained; ++j) {
      const std::string name = "PC_" + std::to_string(sel.combination.index) + "_" + std::to_string(j + 1);
      auto it = pc_importance.find(name);
      if (it == pc_importance.end()) continue;
      for (std::size_t k = 0; k < sel.combination.members.size(); ++k) {
        auto p = pos.find(sel.combination.members[k]);
        if (p == pos.end())
          throw Error("shap", "unknown_feature", "'" + sel.combination.members[k] + "' is not in the catalog");
        out.weight[p->second] += std::abs(sel.pca.loadings(k, j)) * it->second;
      }
    }
  }
  const double total = std::accumulate(out.weight.begin(), out.weight.end(), 0.0);
  if (total > 0.0)
    for (double& w : out.weight) w /= total;
  return out;
}

std::string backmap_csv(const BackMappedImportance& b) {
  std::ostringstream os;
  os << "feature,weight\n";
  for (std::size_t i = 0; i < b.features.size(); ++i)
    os << csv::escape(b.features[i]) << ',' << format_double(b.weight[i]) << '\n';
  return os.str();
}

}  // namespace ser::shap

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

#include "ser/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ser/linalg.hpp"
#include "trees.hpp"

namespace ser::ml {

namespace {

constexpr double kRidge = 1e-6;

struct Range {
  double lo, hi;
  bool integer;
};

const std::map<std::string, Range>& ranges(Algorithm a) {
  static const std::map<std::string, Range> dt{
      {"max_depth", {0, 1000, true}}, {"min_samples_leaf", {1, 1e6, true}}, {"max_features", {0, 1e6, true}}};
  static const std::map<std::string, Range> forest{{"n_estimators", {1, 10000, true}},
                                                   {"max_depth", {0, 1000, true}},
                                                   {"min_samples_leaf", {1, 1e6, true}},
                                                   {"max_features", {0, 1e6, true}}};
  static const std::map<std::string, Range> gbc{{"n_rounds", {1, 10000, true}},
                                                {"learning_rate", {1e-6, 1, false}},
                                                {"max_depth", {1, 32, true}},
                                                {"min_samples_leaf", {1, 1e6, true}}};
  static const std::map<std::string, Range> lda{};
  static const std::map<std::string, Range> qda{{"gamma", {0, 1, false}}};
  switch (a) {
    case Algorithm::decision_tree: return dt;
    case Algorithm::random_forest:
    case Algorithm::extra_trees: return forest;
    case Algorithm::gradient_boosting: return gbc;
    case Algorithm::lda: return lda;
    case Algorithm::qda: return qda;
  }
  return lda;
}

std::size_t as_size(double v) { return static_cast<std::size_t>(std::llround(v)); }

void softmax(std::span<double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

TreeEnsemble fit_forest(const ModelSpec& spec, const Matrix& x, const std::vector<int>& y, std::size_t k) {
  const bool single = spec.algorithm == Algorithm::decision_tree;
  const bool bootstrap = spec.algorithm == Algorithm::random_forest;
  const std::size_t n_trees = single ? 1 : as_size(spec.get("n_estimators"));
  const std::size_t d = x.cols();
  detail::ClassTreeParams p;
  p.max_depth = as_size(spec.get("max_depth"));
  p.min_samples_leaf = as_size(spec.get("min_samples_leaf"));
  const std::size_t mf = as_size(spec.get("max_features"));
  if (mf > 0)
    p.max_features = std::min(mf, d);
  else
    p.max_features = single ? d : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  p.random_thresholds = spec.algorithm == Algorithm::extra_trees;

  TreeEnsemble out;
  out.trees.resize(n_trees);
  const std::size_t n = x.rows();
  parallel_for(n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(spec.seed, {t}));
    std::vector<std::size_t> rows(n);
    if (bootstrap)
      for (auto& r : rows) r = rng.below(n);
    else
      std::iota(rows.begin(), rows.end(), 0);
    out.trees[t] = detail::grow_classification_tree(x, y, k, rows, p, rng);
  });
  return out;
}

BoostedTrees fit_gbc(const ModelSpec& spec, const Matrix& x, const std::vector<int>& y, std::size_t k) {
  const std::size_t n = x.rows();
  BoostedTrees out;
  out.learning_rate = spec.get("learning_rate");
  std::vector<double> counts(k, 0.0);
  for (int c : y) counts[static_cast<std::size_t>(c)] += 1.0;
  for (double c : counts) out.init.push_back(std::log(std::max(c, 1.0) / static_cast<double>(n)));

  detail::RegressionTreeParams p;
  p.max_depth = as_size(spec.get("max_depth"));
  p.min_samples_leaf = as_size(spec.get("min_samples_leaf"));
  p.leaf_scale = static_cast<double>(k - 1) / static_cast<double>(k);
  const auto sorted = detail::presort(x);

  Matrix score(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) score(i, c) = out.init[c];
  Matrix prob(n, k);
  const std::size_t rounds = as_size(spec.get("n_rounds"));
  for (std::size_t r = 0; r < rounds; ++r) {
    prob = score;
    for (std::size_t i = 0; i < n; ++i) softmax(prob.row(i));
    std::vector<Tree> trees(k);
    parallel_for(k, [&](std::size_t c) {
      std::vector<double> resid(n), hess(n);
      for (std::size_t i = 0; i < n; ++i) {
        resid[i] = (y[i] == static_cast<int>(c) ? 1.0 : 0.0) - prob(i, c);
        const double a = std::abs(resid[i]);
        hess[i] = a * (1.0 - a);
      }
      trees[c] = detail::grow_regression_tree(x, resid, hess, sorted, p);
    });
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c) score(i, c) += out.learning_rate * trees[c].leaf_values(x.row(i))[0];
    out.rounds.push_back(std::move(trees));
  }
  return out;
}

Matrix class_cov(const Matrix& z, const std::vector<int>& y, int cls, std::span<const double> mu) {
  const std::size_t d = z.cols();
  Matrix s(d, d);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (cls >= 0 && y[i] != cls) continue;
    for (std::size_t a = 0; a < d; ++a) {
      const double da = z(i, a) - (cls >= 0 ? mu[a] : mu[static_cast<std::size_t>(y[i]) * d + a]);
      if (da == 0.0) continue;
      for (std::size_t b = 0; b <= a; ++b) {
        const double db = z(i, b) - (cls >= 0 ? mu[b] : mu[static_cast<std::size_t>(y[i]) * d + b]);
        s(a, b) += da * db;
      }
    }
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < a; ++b) s(b, a) = s(a, b);
  return s;
}

Discriminant fit_discriminant(const ModelSpec& spec, const Matrix& x, const std::vector<int>& y, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  Discriminant m;
  m.quadratic = spec.algorithm == Algorithm::qda;
  m.center.assign(d, 0.0);
  m.scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    m.center[j] = mean;
    if (sd > 0.0 && std::isfinite(sd)) m.scale[j] = sd;
  }
  Matrix z(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) z(i, j) = (x(i, j) - m.center[j]) / m.scale[j];

  std::vector<double> counts(k, 0.0);
  m.means = Matrix(k, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    counts[c] += 1.0;
    for (std::size_t j = 0; j < d; ++j) m.means(c, j) += z(i, j);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] < 2.0)
      throw Error("classifiers", "class_too_small", "discriminant models need at least 2 rows per class");
    for (std::size_t j = 0; j < d; ++j) m.means(c, j) /= counts[c];
    m.log_prior.push_back(std::log(counts[c] / static_cast<double>(n)));
  }

  auto factor = [&](Matrix s) {
    for (std::size_t j = 0; j < d; ++j) s(j, j) += kRidge;
    try {
      return linalg::cholesky(s);
    } catch (const Error&) {
      throw Error("classifiers", "singular_covariance", "covariance is singular beyond regularization");
    }
  };

  if (!m.quadratic) {
    if (n <= k) throw Error("classifiers", "class_too_small", "LDA needs more rows than classes");
    Matrix s = class_cov(z, y, -1, m.means.data());
    for (double& v : s.data()) v /= static_cast<double>(n - k);
    const Matrix l = factor(std::move(s));
    m.weights = Matrix(k, d);
    for (std::size_t c = 0; c < k; ++c) {
      const auto w = linalg::cholesky_solve(l, m.means.row(c));
      double quad = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        m.weights(c, j) = w[j];
        quad += w[j] * m.means(c, j);
      }
      m.bias.push_back(-0.5 * quad + m.log_prior[c]);
    }
  } else {
    const double gamma = spec.get("gamma");
    for (std::size_t c = 0; c < k; ++c) {
      Matrix s = class_cov(z, y, static_cast<int>(c), m.means.row(c));
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
          s(a, b) /= counts[c] - 1.0;
          if (a != b) s(a, b) *= 1.0 - gamma;
        }
      m.chol.push_back(factor(std::move(s)));
      m.log_det.push_back(linalg::cholesky_log_det(m.chol.back()));
    }
  }
  return m;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::decision_tree: return "DT";
    case Algorithm::random_forest: return "RF";
    case Algorithm::extra_trees: return "ET";
    case Algorithm::gradient_boosting: return "GBC";
    case Algorithm::lda: return "LDA";
    case Algorithm::qda: return "QDA";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept {
  for (Algorithm a : all_algorithms())
    if (algorithm_name(a) == name) return a;
  return std::nullopt;
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::decision_tree, Algorithm::random_forest, Algorithm::extra_trees,
          Algorithm::gradient_boosting, Algorithm::lda, Algorithm::qda};
}

Hyperparameters default_hyperparameters(Algorithm a) {
  switch (a) {
    case Algorithm::decision_tree: return {{"max_depth", 0}, {"min_samples_leaf", 1}, {"max_features", 0}};
    case Algorithm::random_forest:
    case Algorithm::extra_trees:
      return {{"n_estimators", 100}, {"max_depth", 0}, {"min_samples_leaf", 1}, {"max_features", 0}};
    case Algorithm::gradient_boosting:
      return {{"n_rounds", 100}, {"learning_rate", 0.1}, {"max_depth", 3}, {"min_samples_leaf", 1}};
    case Algorithm::lda: return {};
    case Algorithm::qda: return {{"gamma", 0.0}};
  }
  return {};
}

double ModelSpec::get(const std::string& name) const {
  if (auto it = params.find(name); it != params.end()) return it->second;
  const auto defaults = default_hyperparameters(algorithm);
  if (auto it = defaults.find(name); it != defaults.end()) return it->second;
  throw Error("classifiers", "invalid_hyperparameter",
              std::string(algorithm_name(algorithm)) + " has no hyperparameter '" + name + "'");
}

void ModelSpec::validate() const {
  const auto& r = ranges(algorithm);
  for (const auto& [name, value] : params) {
    auto it = r.find(name);
    if (it == r.end())
      throw Error("classifiers", "invalid_hyperparameter",
                  std::string(algorithm_name(algorithm)) + " has no hyperparameter '" + name + "'");
    const Range& rg = it->second;
    if (!std::isfinite(value) || value < rg.lo || value > rg.hi || (rg.integer && value != std::floor(value)))
      throw Error("classifiers", "invalid_hyperparameter",
                  std::string(algorithm_name(algorithm)) + " " + name + "=" + format_double(value) + " out of range");
  }
}

std::string ModelSpec::describe() const {
  std::ostringstream os;
  os << algorithm_name(algorithm);
  auto all = default_hyperparameters(algorithm);
  for (const auto& [k, v] : params) all[k] = v;
  if (!all.empty()) {
    os << '(';
    bool first = true;
    for (const auto& [k, v] : all) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", v);
      os << (first ? "" : ",") << k << '=' << buf;
      first = false;
    }
    os << ')';
  }
  return os.str();
}

TrainedModel train(const ModelSpec& spec, const FeatureMatrix& x, std::span<const std::string> class_order) {
  spec.validate();
  if (x.labels.size() != x.rows())
    throw Error("classifiers", "invalid_matrix", "label count does not match row count");
  if (x.rows() == 0) throw Error("classifiers", "single_class", "training matrix is empty");

  TrainedModel model;
  model.spec_ = spec;
  model.feature_names_ = x.column_names;
  if (class_order.empty()) {
    std::set<std::string> distinct(x.labels.begin(), x.labels.end());
    model.classes_.assign(distinct.begin(), distinct.end());
  } else {
    model.classes_.assign(class_order.begin(), class_order.end());
  }
  const std::size_t k = model.classes_.size();
  std::vector<int> y(x.rows());
  std::vector<bool> present(k, false);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto it = std::find(model.classes_.begin(), model.classes_.end(), x.labels[i]);
    if (it == model.classes_.end())
      throw Error("classifiers", "unknown_label", "label '" + x.labels[i] + "' is not in the class list");
    y[i] = static_cast<int>(it - model.classes_.begin());
    present[static_cast<std::size_t>(y[i])] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2)
    throw Error("classifiers", "single_class", "training data must contain at least 2 classes");

  switch (spec.algorithm) {
    case Algorithm::decision_tree:
    case Algorithm::random_forest:
    case Algorithm::extra_trees: model.params_ = fit_forest(spec, x.values, y, k); break;
    case Algorithm::gradient_boosting: model.params_ = fit_gbc(spec, x.values, y, k); break;
    case Algorithm::lda:
    case Algorithm::qda: model.params_ = fit_discriminant(spec, x.values, y, k); break;
  }
  return model;
}

void TrainedModel::predict_row(std::span<const double> x, std::span<double> out) const {
  const std::size_t k = classes_.size();
  std::fill(out.begin(), out.end(), 0.0);
  if (const auto* e = ensemble()) {
    for (const auto& t : e->trees) {
      const auto leaf = t.leaf_values(x);
      for (std::size_t c = 0; c < k; ++c) out[c] += leaf[c];
    }
    const double n = static_cast<double>(e->trees.size());
    for (double& v : out) v /= n;
    return;
  }
  if (const auto* b = boosted()) {
    for (std::size_t c = 0; c < k; ++c) out[c] = b->init[c];
    for (const auto& round : b->rounds)
      for (std::size_t c = 0; c < k; ++c) out[c] += b->learning_rate * round[c].leaf_values(x)[0];
    softmax(out);
    return;
  }
  const auto& m = *discriminant();
  const std::size_t d = m.center.size();
  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) z[j] = (x[j] - m.center[j]) / m.scale[j];
  if (!m.quadratic) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = m.bias[c];
      for (std::size_t j = 0; j < d; ++j) s += m.weights(c, j) * z[j];
      out[c] = s;
    }
  } else {
    std::vector<double> diff(d);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < d; ++j) diff[j] = z[j] - m.means(c, j);
      const auto u = linalg::forward_substitute(m.chol[c], diff);
      double maha = 0.0;
      for (double v : u) maha += v * v;
      out[c] = m.log_prior[c] - 0.5 * m.log_det[c] - 0.5 * maha;
    }
  }
  softmax(out);
}

Matrix TrainedModel::predict_proba(const Matrix& x) const {
  Matrix out(x.rows(), classes_.size());
  parallel_for(x.rows(), [&](std::size_t i) { predict_row(x.row(i), out.row(i)); });
  return out;
}

Matrix TrainedModel::predict_proba(const FeatureMatrix& x) const {
  if (x.column_names != feature_names_)
    throw Error("classifiers", "schema_mismatch", "feature columns differ from those seen at fit time");
  return predict_proba(x.values);
}

std::vector<std::size_t> TrainedModel::predict(const FeatureMatrix& x) const {
  const Matrix p = predict_proba(x);
  std::vector<std::size_t> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto r = p.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson matrix_json(const Matrix& m) {
  ojson j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data().begin(), m.data().end());
  return j;
}

Matrix matrix_from(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols()) throw Error("classifiers", "invalid_model_json", "matrix size mismatch");
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

ojson tree_json(const Tree& t) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold;
  std::vector<std::uint32_t> value;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  ojson j;
  j["width"] = t.width;
  j["feature"] = feature;
  j["threshold"] = threshold;
  j["left"] = left;
  j["right"] = right;
  j["value"] = value;
  j["values"] = t.values;
  return j;
}

Tree tree_from(const nlohmann::json& j) {
  Tree t;
  t.width = j.at("width").get<std::size_t>();
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<std::uint32_t>>();
  t.values = j.at("values").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || n == 0)
    throw Error("classifiers", "invalid_model_json", "tree arrays differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    const bool leaf = feature[i] < 0;
    if (!leaf && (left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i) || left[i] >= static_cast<int>(n) ||
                  right[i] >= static_cast<int>(n)))
      throw Error("classifiers", "invalid_model_json", "tree child index out of range");
    if (leaf && value[i] + t.width > t.values.size())
      throw Error("classifiers", "invalid_model_json", "leaf value offset out of range");
    t.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
  }
  return t;
}

}  // namespace

std::string TrainedModel::to_json() const {
  ojson j;
  j["schema_version"] = 1;
  j["algorithm"] = std::string(algorithm_name(spec_.algorithm));
  j["hyperparameters"] = spec_.params;
  j["seed"] = spec_.seed;
  j["classes"] = classes_;
  j["features"] = feature_names_;
  if (const auto* e = ensemble()) {
    auto arr = ojson::array();
    for (const auto& t : e->trees) arr.push_back(tree_json(t));
    j["trees"] = arr;
  } else if (const auto* b = boosted()) {
    j["init"] = b->init;
    j["learning_rate"] = b->learning_rate;
    auto rounds = ojson::array();
    for (const auto& r : b->rounds) {
      auto per = ojson::array();
      for (const auto& t : r) per.push_back(tree_json(t));
      rounds.push_back(per);
    }
    j["rounds"] = rounds;
  } else {
    const auto& m = *discriminant();
    j["center"] = m.center;
    j["scale"] = m.scale;
    j["log_prior"] = m.log_prior;
    j["means"] = matrix_json(m.means);
    if (m.quadratic) {
      auto chol = ojson::array();
      for (const auto& l : m.chol) chol.push_back(matrix_json(l));
      j["chol"] = chol;
      j["log_det"] = m.log_det;
    } else {
      j["weights"] = matrix_json(m.weights);
      j["bias"] = m.bias;
    }
  }
  return j.dump() + "\n";
}

TrainedModel TrainedModel::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != 1)
      throw Error("classifiers", "invalid_model_json", "unsupported model schema version");
    TrainedModel m;
    const auto alg = parse_algorithm(j.at("algorithm").get<std::string>());
    if (!alg) throw Error("classifiers", "invalid_model_json", "unknown algorithm");
    m.spec_.algorithm = *alg;
    m.spec_.params = j.at("hyperparameters").get<Hyperparameters>();
    m.spec_.seed = j.at("seed").get<std::uint64_t>();
    m.spec_.validate();
    m.classes_ = j.at("classes").get<std::vector<std::string>>();
    m.feature_names_ = j.at("features").get<std::vector<std::string>>();
    switch (*alg) {
      case Algorithm::decision_tree:
      case Algorithm::random_forest:
      case Algorithm::extra_trees: {
        TreeEnsemble e;
        for (const auto& t : j.at("trees")) e.trees.push_back(tree_from(t));
        m.params_ = std::move(e);
        break;
      }
      case Algorithm::gradient_boosting: {
        BoostedTrees b;
        b.init = j.at("init").get<std::vector<double>>();
        b.learning_rate = j.at("learning_rate").get<double>();
        for (const auto& r : j.at("rounds")) {
          std::vector<Tree> per;
          for (const auto& t : r) per.push_back(tree_from(t));
          b.rounds.push_back(std::move(per));
        }
        m.params_ = std::move(b);
        break;
      }
      case Algorithm::lda:
      case Algorithm::qda: {
        Discriminant d;
        d.quadratic = *alg == Algorithm::qda;
        d.center = j.at("center").get<std::vector<double>>();
        d.scale = j.at("scale").get<std::vector<double>>();
        d.log_prior = j.at("log_prior").get<std::vector<double>>();
        d.means = matrix_from(j.at("means"));
        if (d.quadratic) {
          for (const auto& l : j.at("chol")) d.chol.push_back(matrix_from(l));
          d.log_det = j.at("log_det").get<std::vector<double>>();
        } else {
          d.weights = matrix_from(j.at("weights"));
          d.bias = j.at("bias").get<std::vector<double>>();
        }
        m.params_ = std::move(d);
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("classifiers", "invalid_model_json", ex.what());
  }
}

}  // namespace ser::ml

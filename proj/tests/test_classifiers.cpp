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
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ser/classifiers.hpp"
#include "ser/metrics.hpp"
#include "ser/model_selection.hpp"
#include "support.hpp"

using namespace ser;
using namespace ser::ml;

namespace {

FeatureMatrix table(std::vector<std::vector<double>> rows, std::vector<std::string> labels) {
  FeatureMatrix m;
  for (std::size_t c = 0; c < rows[0].size(); ++c) m.column_names.push_back("f" + std::to_string(c));
  m.values = Matrix(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.values(r, c) = rows[r][c];
  m.labels = std::move(labels);
  m.paths.assign(rows.size(), "");
  m.catalog_version = FeatureCatalog::from_names(m.column_names).version();
  return m;
}

const FeatureMatrix& synth_features() {
  static const FeatureMatrix m = extract_matrix(synth_dataset(20, 7), FeatureCatalog::default_catalog());
  return m;
}

std::pair<FeatureMatrix, FeatureMatrix> halves(const FeatureMatrix& m, std::uint64_t seed) {
  const auto s = stratified_split(m.labels, {0.5, 0.4, 0.1}, seed);
  return {m.select_rows(s.train_indices), m.select_rows(s.val_indices)};
}

void check_simplex(const Matrix& p) {
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double sum = 0.0;
    for (double v : p.row(r)) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

double training_accuracy(const TrainedModel& m, const FeatureMatrix& x) { return evaluate(m, x).accuracy; }

}  // namespace

TEST_CASE("algorithm names") {
  for (Algorithm a : all_algorithms()) CHECK(parse_algorithm(algorithm_name(a)) == a);
  CHECK(algorithm_name(Algorithm::extra_trees) == "ET");
  CHECK_FALSE(parse_algorithm("SVM").has_value());
}

TEST_CASE("hyperparameter validation") {
  ModelSpec s{Algorithm::random_forest, {{"n_estimators", 0}}, 1};
  CHECK_THROWS_AS(s.validate(), Error);
  s.params = {{"n_estimators", 2.5}};
  CHECK_THROWS_AS(s.validate(), Error);
  s.params = {{"gamma", 0.1}};
  CHECK_THROWS_AS(s.validate(), Error);
  s = {Algorithm::qda, {{"gamma", 1.5}}, 1};
  CHECK_THROWS_AS(s.validate(), Error);
  s = {Algorithm::gradient_boosting, {{"learning_rate", 0.0}}, 1};
  CHECK_THROWS_AS(s.validate(), Error);
  s = {Algorithm::extra_trees, {{"max_depth", 10}}, 1};
  CHECK_NOTHROW(s.validate());
  CHECK(s.get("n_estimators") == 100);
  CHECK(s.describe().rfind("ET(", 0) == 0);
}

TEST_CASE("decision tree: 1-D separable threshold") {
  const auto x = table({{0}, {1}, {10}, {11}}, {"A", "A", "B", "B"});
  const auto m = train({Algorithm::decision_tree, {}, 0}, x);
  CHECK(training_accuracy(m, x) == 1.0);
  const auto& tree = m.ensemble()->trees.at(0);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold > 1.0);
  CHECK(tree.nodes[0].threshold < 10.0);
  const auto p = m.predict_proba(x);
  CHECK(p(0, 0) == 1.0);
  CHECK(p(3, 1) == 1.0);
}

TEST_CASE("decision tree: memorizes consistent data") {
  Rng rng(4);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (int i = 0; i < 300; ++i) {
    rows.push_back({rng.normal(), rng.normal(), rng.normal()});
    labels.push_back("c" + std::to_string(rng.below(4)));
  }
  const auto x = table(rows, labels);
  const auto m = train({Algorithm::decision_tree, {}, 3}, x);
  CHECK(training_accuracy(m, x) == 1.0);
  check_simplex(m.predict_proba(x));
}

TEST_CASE("extra trees: a single stump cannot solve xor") {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (int rep = 0; rep < 25; ++rep)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        rows.push_back({static_cast<double>(a), static_cast<double>(b)});
        labels.push_back(a == b ? "same" : "diff");
      }
  const auto x = table(rows, labels);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = train({Algorithm::extra_trees, {{"n_estimators", 1}, {"max_depth", 1}}, seed}, x);
    CHECK(training_accuracy(m, x) <= 0.75);
  }
}

TEST_CASE("random forest: probability is the member mean") {
  const auto m = testing::planted_matrix(15, 2);
  const auto model = train({Algorithm::random_forest, {{"n_estimators", 7}}, 5}, m);
  const auto p = model.predict_proba(m);
  check_simplex(p);
  const auto& trees = model.ensemble()->trees;
  REQUIRE(trees.size() == 7);
  for (std::size_t r = 0; r < m.rows(); r += 7) {
    std::vector<double> mean(model.classes().size(), 0.0);
    for (const auto& t : trees) {
      auto leaf = t.leaf_values(m.values.row(r));
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += leaf[k] / 7.0;
    }
    for (std::size_t k = 0; k < mean.size(); ++k) CHECK(p(r, k) == doctest::Approx(mean[k]).epsilon(1e-12));
  }
}

TEST_CASE("every family: simplex, determinism, JSON round trip, schema check") {
  const auto m = testing::planted_matrix(15, 3);
  for (Algorithm a : all_algorithms()) {
    CAPTURE(algorithm_name(a));
    ModelSpec spec{a, {}, 11};
    if (a == Algorithm::random_forest || a == Algorithm::extra_trees) spec.params["n_estimators"] = 20;
    if (a == Algorithm::gradient_boosting) spec.params["n_rounds"] = 20;
    set_thread_count(1);
    const auto one = train(spec, m);
    set_thread_count(4);
    const auto four = train(spec, m);
    set_thread_count(0);
    CHECK(one.to_json() == four.to_json());
    const auto p = one.predict_proba(m);
    check_simplex(p);
    CHECK(training_accuracy(one, m) > 0.5);
    const auto back = TrainedModel::from_json(one.to_json());
    CHECK(back.predict_proba(m) == p);
    CHECK(back.to_json() == one.to_json());

    auto renamed = m;
    renamed.column_names[0] = "other";
    CHECK_THROWS_AS(one.predict_proba(renamed), Error);
  }
  CHECK_THROWS_AS(TrainedModel::from_json("{\"schema_version\":1,\"algorithm\":\"SVM\"}"), Error);
  CHECK_THROWS_AS(TrainedModel::from_json("not json"), Error);
}

TEST_CASE("training errors") {
  const auto one = table({{0}, {1}}, {"A", "A"});
  try {
    train({Algorithm::decision_tree, {}, 0}, one);
    FAIL("expected single_class");
  } catch (const Error& e) {
    CHECK(e.code() == "single_class");
  }
  const auto tiny = table({{0}, {1}, {5}}, {"A", "A", "B"});
  try {
    train({Algorithm::qda, {}, 0}, tiny);
    FAIL("expected class_too_small");
  } catch (const Error& e) {
    CHECK(e.code() == "class_too_small");
  }
  const std::vector<std::string> cls = {"A", "C"};
  CHECK_THROWS_AS(train({Algorithm::decision_tree, {}, 0}, tiny, cls), Error);
}

TEST_CASE("lda: two-Gaussian boundary matches the closed form") {
  const double mu_a[2] = {1.0, 0.5};
  const double mu_b[2] = {-0.5, -1.0};
  const auto x = testing::two_gaussians(1000, mu_a, mu_b, 21);
  const auto model = train({Algorithm::lda, {}, 0}, x);
  const auto* d = model.discriminant();
  REQUIRE(d != nullptr);
  // Back to x-space: score_k = w_k·(x - c)/s + b_k.
  double w[2], b = d->bias[0] - d->bias[1];
  for (int j = 0; j < 2; ++j) {
    const double dz = d->weights(0, j) - d->weights(1, j);
    w[j] = dz / d->scale[j];
    b -= dz * d->center[j] / d->scale[j];
  }
  const double n[2] = {mu_a[0] - mu_b[0], mu_a[1] - mu_b[1]};
  const double cosang = (w[0] * n[0] + w[1] * n[1]) / (std::hypot(w[0], w[1]) * std::hypot(n[0], n[1]));
  CHECK(std::acos(std::min(1.0, cosang)) <= 0.05);
  const double mid[2] = {0.5 * (mu_a[0] + mu_b[0]), 0.5 * (mu_a[1] + mu_b[1])};
  CHECK(std::abs(w[0] * mid[0] + w[1] * mid[1] + b) / std::hypot(w[0], w[1]) <= 0.05);
}

TEST_CASE("qda fits class-specific spread") {
  Rng rng(3);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (int i = 0; i < 400; ++i) {
    const bool wide = i % 2;
    const double s = wide ? 4.0 : 0.5;
    rows.push_back({s * rng.normal(), s * rng.normal()});
    labels.push_back(wide ? "wide" : "narrow");
  }
  const auto x = table(rows, labels);
  const auto q = train({Algorithm::qda, {}, 0}, x);
  const auto l = train({Algorithm::lda, {}, 0}, x);
  CHECK(training_accuracy(q, x) > 0.85);
  CHECK(training_accuracy(q, x) > training_accuracy(l, x));
  CHECK(training_accuracy(train({Algorithm::qda, {{"gamma", 1.0}}, 0}, x), x) > 0.85);
}

TEST_CASE("gradient boosting separates the planted classes") {
  const auto m = testing::planted_matrix(30, 6);
  const auto [tr, va] = halves(m, 2);
  const auto g = train({Algorithm::gradient_boosting, {{"n_rounds", 30}, {"max_depth", 2}}, 0}, tr);
  CHECK(g.boosted()->rounds.size() == 30);
  CHECK(evaluate(g, va).accuracy > 0.8);
}

TEST_CASE("ensembles improve with size on the synthetic corpus") {
  const auto& m = synth_features();
  for (Algorithm a : {Algorithm::random_forest, Algorithm::extra_trees}) {
    CAPTURE(algorithm_name(a));
    double mean[3] = {0, 0, 0};
    const int sizes[3] = {1, 10, 50};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto [tr, te] = halves(m, 100 + seed);
      for (int k = 0; k < 3; ++k)
        mean[k] += evaluate(train({a, {{"n_estimators", sizes[k]}}, seed}, tr), te).accuracy / 5.0;
    }
    CHECK(mean[0] <= mean[1]);
    CHECK(mean[1] <= mean[2]);
  }
}

TEST_CASE("metrics: hand-built 3-class confusion") {
  const auto r = report_from_confusion({"a", "b", "c"}, {{2, 1, 0}, {0, 2, 0}, {0, 0, 2}});
  CHECK(r.accuracy == doctest::Approx(6.0 / 7.0));
  CHECK(r.macro_recall == doctest::Approx((2.0 / 3.0 + 1.0 + 1.0) / 3.0));
  // precision: a 1, b 2/3, c 1
  CHECK(r.macro_precision == doctest::Approx((1.0 + 2.0 / 3.0 + 1.0) / 3.0));
  const double f1a = 2 * 1.0 * (2.0 / 3.0) / (1.0 + 2.0 / 3.0);
  const double f1b = 2 * (2.0 / 3.0) * 1.0 / (2.0 / 3.0 + 1.0);
  CHECK(r.macro_f1 == doctest::Approx((f1a + f1b + 1.0) / 3.0));
  CHECK(r.support == std::vector<std::size_t>{3, 2, 2});
  CHECK(r.total() == 7);
  const auto pct = row_normalized_percent(r);
  CHECK(pct[0][1] == doctest::Approx(100.0 / 3.0));
  for (const auto& row : pct) CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(100.0));
  const auto dom = dominant_confusion(r);
  CHECK(dom.actual == "a");
  CHECK(dom.predicted == "b");
  CHECK(confusion_csv(r).rfind("actual,a,b,c\n", 0) == 0);
}

TEST_CASE("metrics: conventions") {
  std::vector<std::string> classes, actual;
  for (int k = 0; k < 7; ++k) classes.push_back("c" + std::to_string(k));
  for (int k = 0; k < 7; ++k)
    for (int i = 0; i < 5; ++i) actual.push_back(classes[k]);
  std::vector<std::size_t> perfect, constant(actual.size(), 0);
  for (int k = 0; k < 7; ++k)
    for (int i = 0; i < 5; ++i) perfect.push_back(static_cast<std::size_t>(k));
  const auto p = evaluate_predictions(classes, actual, perfect);
  CHECK(p.accuracy == 1.0);
  CHECK(p.macro_f1 == 1.0);
  CHECK(p.macro_precision == 1.0);
  const auto c = evaluate_predictions(classes, actual, constant);
  CHECK(c.accuracy == doctest::Approx(1.0 / 7.0));
  // Six classes never predicted: precision 0 and F1 0 each.
  CHECK(c.precision[3] == 0.0);
  CHECK(c.f1[3] == 0.0);
  CHECK(c.macro_precision == doctest::Approx(1.0 / 7.0 / 7.0));
}

TEST_CASE("cross-validation") {
  const auto m = testing::planted_matrix(10, 12);
  const auto folds = stratified_kfold(m.labels, 5, 3);
  const ModelSpec spec{Algorithm::extra_trees, {{"n_estimators", 10}}, 4};
  const auto cv = cross_validate(spec, m, folds);
  REQUIRE(cv.folds.size() == 5);
  double lo = 1.0, hi = 0.0;
  for (const auto& f : cv.folds) {
    lo = std::min(lo, f.accuracy);
    hi = std::max(hi, f.accuracy);
    CHECK(f.total() == 8);
  }
  CHECK(cv.accuracy.mean >= lo);
  CHECK(cv.accuracy.mean <= hi);
  const auto again = cross_validate(spec, m, folds);
  for (std::size_t f = 0; f < 5; ++f) CHECK(again.folds[f].confusion == cv.folds[f].confusion);

  FoldAssignment short_folds = folds;
  short_folds.fold_of.pop_back();
  CHECK_THROWS_AS(cross_validate(spec, m, short_folds), Error);

  const auto tiny = table({{0}, {1}, {2}, {3}, {4}, {5}}, {"A", "A", "A", "B", "B", "B"});
  FoldAssignment bad;
  bad.k = 2;
  bad.fold_of = {0, 0, 0, 1, 1, 1};  // each training complement holds one class
  try {
    cross_validate({Algorithm::decision_tree, {}, 0}, tiny, bad);
    FAIL("expected a fold-tagged error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("fold 0: ", 0) == 0);
  }
}

TEST_CASE("grid expansion order and errors") {
  const Grid g = {{"a", {1, 2}}, {"b", {10, 20, 30}}};
  const auto cells = expand_grid(g);
  REQUIRE(cells.size() == 6);
  CHECK(cells[0].at("b") == 10);
  CHECK(cells[1].at("b") == 20);
  CHECK(cells[3].at("a") == 2);
  CHECK(expand_grid({}).size() == 1);
  try {
    expand_grid({{"a", {}}});
    FAIL("expected empty_grid");
  } catch (const Error& e) {
    CHECK(e.code() == "empty_grid");
  }
  for (Algorithm a : all_algorithms())
    for (const auto& h : expand_grid(default_grid(a))) CHECK_NOTHROW(ModelSpec({a, h, 0}).validate());
}

TEST_CASE("grid tie rules") {
  GridCell a, b;
  a.validation.macro_f1 = b.validation.macro_f1 = 0.9;
  a.spec = {Algorithm::random_forest, {{"n_estimators", 300}, {"max_depth", 10}}, 0};
  b.spec = {Algorithm::random_forest, {{"n_estimators", 100}, {"max_depth", 20}}, 0};
  CHECK(better_cell(b, 1, a, 0));
  b.spec.params["n_estimators"] = 300;
  CHECK(better_cell(a, 0, b, 1));  // lower depth
  a.spec.params["max_depth"] = 0;  // unlimited counts as deepest
  CHECK(better_cell(b, 1, a, 0));
  b.spec.params["max_depth"] = 0;
  CHECK(better_cell(a, 0, b, 1));  // grid order
  CHECK_FALSE(better_cell(b, 1, a, 0));
  b.validation.macro_f1 = 0.91;
  CHECK(better_cell(b, 1, a, 0));
}

TEST_CASE("grid search: singleton, ties, known best") {
  const auto m = testing::planted_matrix(20, 14);
  const auto [tr, va] = halves(m, 1);
  const auto single = grid_search(Algorithm::decision_tree, {{"max_depth", {4}}}, tr, va, 9);
  CHECK(single.best.params.at("max_depth") == 4);
  CHECK(single.cells.size() == 1);

  // Blocks of 10/30/30/10 on one feature: the middle cut is the strict Gini
  // optimum, so depth 2 separates everything and depth 1 cannot.
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (int i = 0; i < 80; ++i) {
    rows.push_back({static_cast<double>(i)});
    labels.push_back("c" + std::to_string((i >= 10) + (i >= 40) + (i >= 70)));
  }
  const auto line = table(rows, labels);
  const Grid depths = {{"max_depth", {1, 3, 2, 5}}};
  const auto gs = grid_search(Algorithm::decision_tree, depths, line, line, 0);
  // Oracle: evaluate every cell here and apply the rule by hand.
  std::size_t best = 0;
  double best_f1 = -1.0, best_depth = 0.0;
  const std::vector<double> ds = {1, 3, 2, 5};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double f1 = evaluate(train({Algorithm::decision_tree, {{"max_depth", ds[i]}}, 0}, line), line).macro_f1;
    if (f1 > best_f1 || (f1 == best_f1 && ds[i] < best_depth)) {
      best = i;
      best_f1 = f1;
      best_depth = ds[i];
    }
  }
  CHECK(gs.best_index == best);
  CHECK(gs.best.params.at("max_depth") == 2);
  CHECK(gs.validation.macro_f1 == 1.0);

  const auto ties = grid_search(Algorithm::extra_trees, {{"n_estimators", {30, 10}}, {"min_samples_leaf", {1, 2}}},
                                line, line, 0);
  if (ties.cells[0].validation.macro_f1 == ties.cells[2].validation.macro_f1)
    CHECK(ties.best.params.at("n_estimators") == 10);
}

TEST_CASE("compare models on the synthetic corpus beats chance") {
  const auto& m = synth_features();
  const auto s = stratified_split(m.labels, {0.6, 0.2, 0.2}, 4);
  const auto tr = m.select_rows(s.train_indices), va = m.select_rows(s.val_indices), te = m.select_rows(s.test_indices);
  std::vector<ModelSpec> specs;
  for (Algorithm a : all_algorithms()) {
    ModelSpec spec{a, {}, 1};
    if (a == Algorithm::random_forest || a == Algorithm::extra_trees) spec.params["n_estimators"] = 30;
    if (a == Algorithm::gradient_boosting) spec.params["n_rounds"] = 20;
    if (a == Algorithm::qda) spec.params["gamma"] = 0.5;
    specs.push_back(spec);
  }
  const auto folds = stratified_kfold(tr.labels, 3, 2);
  const auto t = compare_models(specs, tr, va, &te, &folds);
  REQUIRE(t.rows.size() == specs.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CAPTURE(algorithm_name(t.rows[i].spec.algorithm));
    CHECK(t.rows[i].test->accuracy > 1.0 / 7.0);
    CHECK(t.rows[i].cv->folds.size() == 3);
    if (i > 0) CHECK(t.rows[i - 1].test->accuracy >= t.rows[i].test->accuracy);
  }
  const auto csv = ranking_csv(t);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(specs.size() + 1));
}

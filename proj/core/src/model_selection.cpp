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

#include "ser/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "csv.hpp"

namespace ser::ml {

namespace {

MetricSummary summarize(const std::vector<EvalReport>& folds, double EvalReport::*field) {
  MetricSummary s;
  if (folds.empty()) return s;
  for (const auto& f : folds) s.mean += f.*field;
  s.mean /= static_cast<double>(folds.size());
  double var = 0.0;
  for (const auto& f : folds) var += (f.*field - s.mean) * (f.*field - s.mean);
  s.std = std::sqrt(var / static_cast<double>(folds.size()));
  return s;
}

std::vector<std::string> class_list(const FeatureMatrix& x, std::span<const std::string> classes) {
  if (!classes.empty()) return {classes.begin(), classes.end()};
  std::set<std::string> s(x.labels.begin(), x.labels.end());
  return {s.begin(), s.end()};
}

double estimators(const ModelSpec& s) {
  switch (s.algorithm) {
    case Algorithm::random_forest:
    case Algorithm::extra_trees: return s.get("n_estimators");
    case Algorithm::gradient_boosting: return s.get("n_rounds");
    default: return 1.0;
  }
}

double depth(const ModelSpec& s) {
  if (s.algorithm == Algorithm::lda || s.algorithm == Algorithm::qda) return 0.0;
  const double d = s.get("max_depth");
  return d == 0.0 ? std::numeric_limits<double>::infinity() : d;
}

}  // namespace

CVResult cross_validate(const ModelSpec& spec, const FeatureMatrix& x, const FoldAssignment& folds,
                        const FoldTransform& transform, std::span<const std::string> classes) {
  if (folds.fold_of.size() != x.rows())
    throw Error("classifiers", "fold_mismatch", "fold assignment does not cover the matrix rows");
  const auto cls = class_list(x, classes);
  CVResult out;
  out.folds.resize(static_cast<std::size_t>(folds.k));
  parallel_for(out.folds.size(), [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto fit_idx = folds.training_indices(fold);
    const auto held_idx = folds.fold_indices(fold);
    FeatureMatrix fit = x.select_rows(fit_idx);
    FeatureMatrix held = x.select_rows(held_idx);
    try {
      if (transform) std::tie(fit, held) = transform(fit, held);
      ModelSpec s = spec;
      s.seed = derive_seed(spec.seed, {0xf01d, f});
      const auto model = train(s, fit, cls);
      out.folds[f] = evaluate(model, held);
    } catch (const Error& e) {
      throw Error(e.module(), e.code(), "fold " + std::to_string(f) + ": " + e.what());
    }
  });
  out.accuracy = summarize(out.folds, &EvalReport::accuracy);
  out.precision = summarize(out.folds, &EvalReport::macro_precision);
  out.recall = summarize(out.folds, &EvalReport::macro_recall);
  out.f1 = summarize(out.folds, &EvalReport::macro_f1);
  return out;
}

Grid default_grid(Algorithm a) {
  switch (a) {
    case Algorithm::decision_tree: return {{"max_depth", {0, 10, 20}}, {"min_samples_leaf", {1, 3}}};
    case Algorithm::random_forest:
    case Algorithm::extra_trees:
      return {{"n_estimators", {100, 300}}, {"max_depth", {0, 10, 20}}, {"min_samples_leaf", {1, 3}}};
    case Algorithm::gradient_boosting: return {{"n_rounds", {50, 100}}, {"learning_rate", {0.1}}, {"max_depth", {2, 3}}};
    case Algorithm::lda: return {};
    case Algorithm::qda: return {{"gamma", {0.0, 0.1, 0.5}}};
  }
  return {};
}

std::vector<Hyperparameters> expand_grid(const Grid& grid) {
  std::vector<Hyperparameters> out{{}};
  for (const auto& [name, values] : grid) {
    if (values.empty()) throw Error("classifiers", "empty_grid", "grid key '" + name + "' has no values");
    std::vector<Hyperparameters> next;
    for (const auto& partial : out)
      for (double v : values) {
        auto h = partial;
        h[name] = v;
        next.push_back(std::move(h));
      }
    out = std::move(next);
  }
  return out;
}

bool better_cell(const GridCell& a, std::size_t ia, const GridCell& b, std::size_t ib) {
  if (a.validation.macro_f1 != b.validation.macro_f1) return a.validation.macro_f1 > b.validation.macro_f1;
  const double ea = estimators(a.spec), eb = estimators(b.spec);
  if (ea != eb) return ea < eb;
  const double da = depth(a.spec), db = depth(b.spec);
  if (da != db) return da < db;
  return ia < ib;
}

GridResult grid_search(Algorithm algorithm, const Grid& grid, const FeatureMatrix& train_x, const FeatureMatrix& val,
                       std::uint64_t seed, std::span<const std::string> classes) {
  const auto combos = expand_grid(grid);
  const auto cls = class_list(train_x, classes);
  GridResult out;
  out.cells.resize(combos.size());
  for (std::size_t i = 0; i < combos.size(); ++i) {
    out.cells[i].spec = ModelSpec{algorithm, combos[i], seed};
    out.cells[i].spec.validate();
  }
  for (auto& cell : out.cells) cell.validation = evaluate(train(cell.spec, train_x, cls), val);
  for (std::size_t i = 1; i < out.cells.size(); ++i)
    if (better_cell(out.cells[i], i, out.cells[out.best_index], out.best_index)) out.best_index = i;
  out.best = out.cells[out.best_index].spec;
  out.validation = out.cells[out.best_index].validation;
  return out;
}

RankingTable compare_models(const std::vector<ModelSpec>& specs, const FeatureMatrix& train_x, const FeatureMatrix& val,
                            const FeatureMatrix* test, const FoldAssignment* folds, const FoldTransform& transform,
                            std::span<const std::string> classes) {
  const auto cls = class_list(train_x, classes);
  RankingTable t;
  for (const auto& spec : specs) {
    ModelRow row;
    row.spec = spec;
    if (folds) row.cv = cross_validate(spec, train_x, *folds, transform, cls);
    row.model = std::make_shared<const TrainedModel>(train(spec, train_x, cls));
    row.validation = evaluate(*row.model, val);
    if (test) row.test = evaluate(*row.model, *test);
    t.rows.push_back(std::move(row));
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const ModelRow& a, const ModelRow& b) {
    const double sa = a.test ? a.test->accuracy : a.validation.accuracy;
    const double sb = b.test ? b.test->accuracy : b.validation.accuracy;
    return sa > sb;
  });
  return t;
}

std::string ranking_csv(const RankingTable& table) {
  std::ostringstream os;
  os << "model,accuracy,recall,precision,f1,val_accuracy,val_f1,cv_accuracy_mean,cv_accuracy_std,cv_f1_mean,spec\n";
  for (const auto& r : table.rows) {
    const EvalReport& e = r.test ? *r.test : r.validation;
    os << algorithm_name(r.spec.algorithm) << ',' << format_double(e.accuracy) << ',' << format_double(e.macro_recall)
       << ',' << format_double(e.macro_precision) << ',' << format_double(e.macro_f1) << ','
       << format_double(r.validation.accuracy) << ',' << format_double(r.validation.macro_f1) << ',';
    if (r.cv)
      os << format_double(r.cv->accuracy.mean) << ',' << format_double(r.cv->accuracy.std) << ','
         << format_double(r.cv->f1.mean);
    else
      os << ",,";
    os << ',' << csv::escape(r.spec.describe()) << '\n';
  }
  return os.str();
}

}  // namespace ser::ml

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

#include "ser/loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace ser::loop {

namespace {

void mark(std::vector<AccessEvent>& log, std::size_t iteration, std::string partition, std::string purpose) {
  log.push_back({log.size(), iteration, std::move(partition), std::move(purpose)});
}

std::size_t family_rank(const LoopConfig& cfg, ml::Algorithm a) {
  const auto it = std::find(cfg.families.begin(), cfg.families.end(), a);
  return static_cast<std::size_t>(it - cfg.families.begin());
}

[[noreturn]] void rethrow_in_iteration(const Error& e, std::size_t iteration) {
  throw Error(e.module(), e.code(), "iteration " + std::to_string(iteration) + ": " + e.what());
}

}  // namespace

void LoopConfig::validate(const boost::BoostConfig& boost) const {
  auto fail = [](const std::string& m) { throw Error("boost_loop", "invalid_config", m); };
  if (max_iterations < 1) fail("max_iterations must be at least 1");
  if (!(epsilon >= 0.0)) fail("epsilon must be non-negative");
  if (patience < 1) fail("patience must be at least 1");
  if (!(prune_quantile > 0.0 && prune_quantile < 1.0)) fail("prune_quantile must lie in (0, 1)");
  if (min_features < boost.p) fail("min_features must be at least the combination size p");
  if (cv_folds == 1 || cv_folds < 0) fail("cv_folds must be 0 or at least 2");
  if (families.empty()) fail("at least one model family is required");
  for (const auto& [name, grid] : grids)
    if (!ml::parse_algorithm(name)) fail("grid given for unknown model '" + name + "'");
}

Metrics Metrics::of(const ml::EvalReport& r) { return {r.accuracy, r.macro_recall, r.macro_precision, r.macro_f1}; }

std::string_view status_name(Status s) noexcept {
  switch (s) {
    case Status::running: return "running";
    case Status::converged: return "converged";
    case Status::max_iter: return "max_iter";
    case Status::floor_reached: return "floor_reached";
  }
  return "running";
}

Status parse_status(std::string_view s) {
  for (Status st : {Status::running, Status::converged, Status::max_iter, Status::floor_reached})
    if (status_name(st) == s) return st;
  throw Error("boost_loop", "invalid_state", "unknown status '" + std::string(s) + "'");
}

std::string_view decision_name(Decision d) noexcept {
  switch (d) {
    case Decision::proceed: return "continue";
    case Decision::converged: return "converged";
    case Decision::max_iter: return "max_iter";
    case Decision::floor_reached: return "floor_reached";
  }
  return "continue";
}

DataSplits::DataSplits(FeatureMatrix train, FeatureMatrix val, FeatureMatrix test, FoldAssignment folds)
    : train_(std::move(train)), val_(std::move(val)), test_(std::move(test)), folds_(std::move(folds)) {
  if (train_.column_names != val_.column_names || train_.column_names != test_.column_names)
    throw Error("boost_loop", "schema_mismatch", "train, validation and test columns differ");
  if (!folds_.fold_of.empty() && folds_.fold_of.size() != train_.rows())
    throw Error("boost_loop", "fold_mismatch", "folds do not cover the training rows");
  std::set<std::string> cls(train_.labels.begin(), train_.labels.end());
  classes_.assign(cls.begin(), cls.end());
}

const FeatureMatrix& DataSplits::test(std::vector<AccessEvent>& log, std::size_t iteration, std::string purpose) const {
  mark(log, iteration, "test", std::move(purpose));
  return test_;
}

PipelineState initial_state(FeatureCatalog catalog, boost::BoostConfig boost, LoopConfig loop, shap::ShapConfig shap,
                            std::uint64_t seed) {
  PipelineState s;
  s.surviving = catalog.names();
  s.catalog = std::move(catalog);
  s.boost = boost;
  s.loop = std::move(loop);
  s.shap = shap;
  s.seed = seed;
  return s;
}

PruneResult prune_features(const shap::BackMappedImportance& importance, const LoopConfig& cfg) {
  const std::size_t n = importance.features.size();
  std::size_t count = static_cast<std::size_t>(std::floor(cfg.prune_quantile * static_cast<double>(n) + 1e-9));
  count = std::min(count, n > cfg.min_features ? n - cfg.min_features : 0);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (importance.weight[a] != importance.weight[b]) return importance.weight[a] < importance.weight[b];
    return importance.features[a] > importance.features[b];
  });
  PruneResult out;
  std::vector<bool> drop(n, false);
  for (std::size_t i = 0; i < count; ++i) {
    drop[order[i]] = true;
    out.pruned.push_back(importance.features[order[i]]);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!drop[i]) out.kept.push_back(importance.features[i]);
  return out;
}

Decision converged(const std::vector<IterationRecord>& history, const LoopConfig& cfg) {
  if (history.empty()) return Decision::proceed;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (const auto& r : history) {
    const double f = r.stage.best_validation.macro_f1;
    // 1e-12 absorbs decimal round-off: 0.951 - 0.95 > 0.001 in binary.
    if (f - best > cfg.epsilon + 1e-12)
      stale = 0;
    else
      ++stale;
    best = std::max(best, f);
  }
  if (stale >= cfg.patience) return Decision::converged;
  const auto& last = history.back();
  if (last.catalog.size() - last.pruned.size() <= cfg.min_features) return Decision::floor_reached;
  if (last.pruned.empty()) return Decision::converged;
  if (history.size() >= 2 && history[history.size() - 2].catalog == last.catalog) return Decision::converged;
  if (history.size() >= cfg.max_iterations) return Decision::max_iter;
  return Decision::proceed;
}

StageFit fit_stage(const StageInputs& in, const DataSplits& splits, const LoopConfig& cfg, std::uint64_t seed) {
  const auto& classes = splits.classes();
  std::vector<ml::ModelSpec> specs;
  for (auto a : cfg.families) specs.push_back({a, {}, derive_seed(seed, {static_cast<std::uint64_t>(a)})});

  StageFit fit;
  fit.ranking = ml::compare_models(specs, in.train, in.val, nullptr, nullptr, {}, classes);
  if (cfg.cv_folds > 0 && splits.folds().k >= 2)
    for (auto& row : fit.ranking.rows)
      row.cv = ml::cross_validate(row.spec, in.cv_source, splits.folds(), in.cv_transform, classes);

  auto cv_f1 = [](const ml::ModelRow& r) { return r.cv ? r.cv->f1.mean : 0.0; };
  const ml::ModelRow* best = nullptr;
  for (const auto& row : fit.ranking.rows) {
    if (!best) {
      best = &row;
      continue;
    }
    if (row.validation.macro_f1 != best->validation.macro_f1) {
      if (row.validation.macro_f1 > best->validation.macro_f1) best = &row;
    } else if (cv_f1(row) != cv_f1(*best)) {
      if (cv_f1(row) > cv_f1(*best)) best = &row;
    } else if (family_rank(cfg, row.spec.algorithm) < family_rank(cfg, best->spec.algorithm)) {
      best = &row;
    }
  }
  const auto name = std::string(ml::algorithm_name(best->spec.algorithm));
  const auto g = cfg.grids.find(name);
  const ml::Grid grid = g != cfg.grids.end() ? g->second : ml::default_grid(best->spec.algorithm);
  const auto result = ml::grid_search(best->spec.algorithm, grid, in.train, in.val, best->spec.seed, classes);
  fit.best_spec = result.best;
  fit.best_validation = result.validation;
  fit.best_model = std::make_shared<const ml::TrainedModel>(ml::train(result.best, in.train, classes));
  return fit;
}

StageResult score_stage(const StageFit& fit, const StageInputs& in, const DataSplits& splits,
                        std::vector<AccessEvent>& log, std::size_t iteration) {
  const FeatureMatrix test = in.to_model_inputs(splits.test(log, iteration, "final_evaluation"));
  StageResult out;
  std::vector<std::pair<std::size_t, TableRow>> rows;
  for (std::size_t i = 0; i < fit.ranking.rows.size(); ++i) {
    const auto& r = fit.ranking.rows[i];
    TableRow t;
    t.model = std::string(ml::algorithm_name(r.spec.algorithm));
    t.spec = r.spec.describe();
    t.test = Metrics::of(ml::evaluate(*r.model, test));
    t.validation = Metrics::of(r.validation);
    if (r.cv) {
      t.has_cv = true;
      t.cv_accuracy_mean = r.cv->accuracy.mean;
      t.cv_accuracy_std = r.cv->accuracy.std;
      t.cv_f1_mean = r.cv->f1.mean;
    }
    rows.emplace_back(static_cast<std::size_t>(r.spec.algorithm), std::move(t));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.test.accuracy != b.second.test.accuracy) return a.second.test.accuracy > b.second.test.accuracy;
    return a.first < b.first;
  });
  for (auto& [_, t] : rows) out.table.push_back(std::move(t));
  out.best_spec = fit.best_spec;
  out.best_validation = fit.best_validation;
  out.best_test = ml::evaluate(*fit.best_model, test);
  return out;
}

StageInputs initial_inputs(const DataSplits& splits, const std::vector<std::string>& names) {
  StageInputs in;
  in.train = splits.train().select_columns(names);
  in.val = splits.val().select_columns(names);
  in.cv_source = in.train;
  in.to_model_inputs = [names](const FeatureMatrix& t) { return t.select_columns(names); };
  return in;
}

StageInputs boosted_inputs(const DataSplits& splits, const std::vector<std::string>& names,
                           std::shared_ptr<const boost::BoostedFeatureSet> set) {
  StageInputs in;
  in.cv_source = splits.train().select_columns(names);
  in.train = boost::build_boosted_matrix(in.cv_source, *set);
  in.val = boost::build_boosted_matrix(splits.val().select_columns(names), *set);
  in.cv_transform = [set](const FeatureMatrix& fit, const FeatureMatrix& held) {
    const auto refitted = boost::refit(*set, fit);
    return std::make_pair(boost::build_boosted_matrix(fit, refitted), boost::build_boosted_matrix(held, refitted));
  };
  in.to_model_inputs = [set, names](const FeatureMatrix& t) {
    return boost::build_boosted_matrix(t.select_columns(names), *set);
  };
  return in;
}

void run_baseline(PipelineState& state, const DataSplits& splits) {
  try {
    const StageInputs in = initial_inputs(splits, state.catalog.names());
    mark(state.access_log, 0, "train", "fit_models");
    mark(state.access_log, 0, "val", "model_selection");
    const StageFit fit = fit_stage(in, splits, state.loop, derive_seed(state.seed, {0, 2}));
    mark(state.access_log, 0, "-", "decisions_final");
    state.baseline = score_stage(fit, in, splits, state.access_log, 0);
  } catch (const Error& e) {
    rethrow_in_iteration(e, 0);
  }
}

IterationRecord run_iteration(PipelineState& state, const DataSplits& splits) {
  const std::size_t it = state.history.size() + 1;
  IterationRecord rec;
  rec.iteration = it;
  rec.catalog = state.surviving;
  const auto names = rec.catalog;
  try {
    boost::BoostConfig bc = state.boost;
    bc.seed = derive_seed(state.seed, {it, 1});
    bc.m = static_cast<std::size_t>(std::min<std::uint64_t>(bc.m, boost::binomial(names.size(), bc.p)));
    mark(state.access_log, it, "train", "fit_boost");
    const auto set =
        std::make_shared<const boost::BoostedFeatureSet>(boost::fit_boost(splits.train().select_columns(names), bc));
    rec.candidate_count = bc.m;
    rec.selected_count = set->selected.size();
    rec.boosted_width = set->width();
    rec.boostset_json = boost::to_json(*set);
    for (const auto& s : set->selected)
      rec.selected.push_back({s.combination.index, s.combination.members, s.retained, s.leading_ev});

    const StageInputs in = boosted_inputs(splits, names, set);

    mark(state.access_log, it, "train", "fit_models");
    mark(state.access_log, it, "val", "model_selection");
    const StageFit fit = fit_stage(in, splits, state.loop, derive_seed(state.seed, {it, 2}));

    shap::ShapConfig sc = state.shap;
    sc.seed = derive_seed(state.seed, {it, 3});
    mark(state.access_log, it, "train", "attribution_background");
    mark(state.access_log, it, "val", "attribution");
    const Matrix background = shap::make_background(in.train.values, sc);
    const auto attrs = shap::explain(shap::model_fn(*fit.best_model), in.val.values, background, in.train.column_names,
                                     fit.best_model->classes(), sc);
    rec.importance = shap::class_importance(attrs, "validation");
    rec.backmap = shap::backmap_importance(rec.importance, *set, names);

    const PruneResult pr = prune_features(rec.backmap, state.loop);
    rec.pruned = pr.pruned;
    mark(state.access_log, it, "-", "decisions_final");

    rec.stage = score_stage(fit, in, splits, state.access_log, it);
    const double prev = state.history.empty() ? -std::numeric_limits<double>::infinity()
                                              : state.history.back().best_so_far_f1;
    rec.best_so_far_f1 = std::max(prev, rec.stage.best_validation.macro_f1);

    state.surviving = pr.kept;
  } catch (const Error& e) {
    rethrow_in_iteration(e, it);
  }
  state.history.push_back(rec);
  switch (converged(state.history, state.loop)) {
    case Decision::proceed: state.status = Status::running; break;
    case Decision::converged: state.status = Status::converged; break;
    case Decision::max_iter: state.status = Status::max_iter; break;
    case Decision::floor_reached: state.status = Status::floor_reached; break;
  }
  return rec;
}

void run_loop(PipelineState& state, const DataSplits& splits, const ProgressFn& progress) {
  state.loop.validate(state.boost);
  state.boost.validate();
  state.shap.validate();
  if (splits.train().column_names != state.catalog.names())
    throw Error("boost_loop", "catalog_mismatch", "feature columns do not match the pipeline catalog");
  if (state.loop.cv_folds > 0 && splits.folds().k < 2)
    throw Error("boost_loop", "fold_mismatch", "cross-validation needs a fold assignment with at least 2 folds");
  if (!state.baseline) run_baseline(state, splits);
  while (state.status == Status::running) {
    const auto rec = run_iteration(state, splits);
    if (progress) progress(state, rec);
  }
}

FinalReport final_report(const PipelineState& state) {
  if (state.history.empty()) throw Error("boost_loop", "empty_history", "no iteration has been recorded");
  std::size_t best = 0;
  for (std::size_t i = 1; i < state.history.size(); ++i)
    if (state.history[i].stage.best_validation.macro_f1 > state.history[best].stage.best_validation.macro_f1) best = i;
  const auto& rec = state.history[best];
  FinalReport r;
  r.best_iteration = rec.iteration;
  r.status = state.status;
  if (state.baseline) {
    r.initial = state.baseline->table;
    r.initial_best_test = state.baseline->best_test;
  }
  r.boosted = rec.stage.table;
  r.best_model = rec.stage.best_spec.describe();
  r.best_test = rec.stage.best_test;
  r.confusion_percent = ml::row_normalized_percent(r.best_test);
  r.dominant = ml::dominant_confusion(r.best_test);
  r.catalog = rec.catalog;
  r.selected_count = rec.selected_count;
  return r;
}

FinalReport comparison_report(const StageResult& initial, const StageResult& boosted, std::size_t selected_count,
                              std::vector<std::string> catalog) {
  FinalReport r;
  r.initial = initial.table;
  r.initial_best_test = initial.best_test;
  r.boosted = boosted.table;
  r.best_model = boosted.best_spec.describe();
  r.best_test = boosted.best_test;
  r.confusion_percent = ml::row_normalized_percent(r.best_test);
  r.dominant = ml::dominant_confusion(r.best_test);
  r.catalog = std::move(catalog);
  r.selected_count = selected_count;
  return r;
}

}  // namespace ser::loop

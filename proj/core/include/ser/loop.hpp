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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ser/boost.hpp"
#include "ser/classifiers.hpp"
#include "ser/dataset.hpp"
#include "ser/features.hpp"
#include "ser/metrics.hpp"
#include "ser/model_selection.hpp"
#include "ser/shap.hpp"

namespace ser::loop {

struct LoopConfig {
  std::size_t max_iterations = 10;
  double epsilon = 0.001;       // a gain counts only when strictly larger
  std::size_t patience = 2;
  double prune_quantile = 0.2;
  std::size_t min_features = 10;
  int cv_folds = 10;            // 0 disables cross-validation; the folds come from DataSplits
  // Earlier families win ties on validation and CV macro-F1.
  std::vector<ml::Algorithm> families = {ml::Algorithm::extra_trees, ml::Algorithm::random_forest,
                                         ml::Algorithm::gradient_boosting, ml::Algorithm::lda, ml::Algorithm::qda,
                                         ml::Algorithm::decision_tree};
  std::map<std::string, ml::Grid> grids;  // by algorithm short name; default grid otherwise

  /// Throws Error{"boost_loop","invalid_config"}.
  void validate(const boost::BoostConfig& boost) const;
};

struct Metrics {
  double accuracy = 0.0, recall = 0.0, precision = 0.0, f1 = 0.0;
  static Metrics of(const ml::EvalReport& r);
  bool operator==(const Metrics&) const = default;
};

/// One model line of an initial-vs-boosted comparison table.
struct TableRow {
  std::string model;
  std::string spec;
  Metrics test;
  Metrics validation;
  bool has_cv = false;
  double cv_accuracy_mean = 0.0, cv_accuracy_std = 0.0, cv_f1_mean = 0.0;
  bool operator==(const TableRow&) const = default;
};

/// Outcome of comparing the families, tuning the best one and scoring on test.
struct StageResult {
  std::vector<TableRow> table;  // sorted by test accuracy, then family order
  ml::ModelSpec best_spec;
  ml::EvalReport best_validation;
  ml::EvalReport best_test;
};

struct SelectedSummary {
  std::size_t index = 0;
  std::vector<std::string> members;
  std::size_t retained = 0;
  double leading_ev = 0.0;
  bool operator==(const SelectedSummary&) const = default;
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  std::vector<std::string> catalog;  // surviving names at the start
  std::size_t candidate_count = 0;
  std::size_t selected_count = 0;
  std::size_t boosted_width = 0;
  std::vector<SelectedSummary> selected;
  std::string boostset_json;
  StageResult stage;
  shap::ImportanceReport importance;
  shap::BackMappedImportance backmap;
  std::vector<std::string> pruned;
  double best_so_far_f1 = 0.0;
};

enum class Status { running, converged, max_iter, floor_reached };
std::string_view status_name(Status s) noexcept;
Status parse_status(std::string_view s);

struct AccessEvent {
  std::size_t sequence = 0;
  std::size_t iteration = 0;  // 0 = baseline on the initial features
  std::string partition;      // train, val, test, or "-" for decision markers
  std::string purpose;
  bool operator==(const AccessEvent&) const = default;
};

/// Train/validation/test feature matrices plus CV folds over the training
/// rows. The test rows are reachable only through test(), which logs.
class DataSplits {
 public:
  DataSplits(FeatureMatrix train, FeatureMatrix val, FeatureMatrix test, FoldAssignment folds);

  const FeatureMatrix& train() const noexcept { return train_; }
  const FeatureMatrix& val() const noexcept { return val_; }
  const FoldAssignment& folds() const noexcept { return folds_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const FeatureMatrix& test(std::vector<AccessEvent>& log, std::size_t iteration, std::string purpose) const;

 private:
  FeatureMatrix train_, val_, test_;
  FoldAssignment folds_;
  std::vector<std::string> classes_;
};

struct PipelineState {
  FeatureCatalog catalog;  // initial
  boost::BoostConfig boost;
  LoopConfig loop;
  shap::ShapConfig shap;
  std::uint64_t seed = 0;
  std::string run_config_json;  // opaque caller configuration, kept for resume

  std::optional<StageResult> baseline;
  std::vector<IterationRecord> history;
  std::vector<std::string> surviving;
  std::vector<AccessEvent> access_log;
  Status status = Status::running;
};

PipelineState initial_state(FeatureCatalog catalog, boost::BoostConfig boost, LoopConfig loop, shap::ShapConfig shap,
                            std::uint64_t seed);

struct PruneResult {
  std::vector<std::string> kept;    // input order
  std::vector<std::string> pruned;  // pruning order
};

/// Removes floor(quantile * n) lowest-weight features, never going below
/// min_features. Equal weights prune the lexicographically later name first.
PruneResult prune_features(const shap::BackMappedImportance& importance, const LoopConfig& cfg);

enum class Decision { proceed, converged, max_iter, floor_reached };
std::string_view decision_name(Decision d) noexcept;

/// Stopping rule: converged after `patience` records whose best-so-far F1
/// gain is not above epsilon, or when a record pruned nothing; floor_reached
/// when the catalog sits at min_features; max_iter at the iteration bound.
Decision converged(const std::vector<IterationRecord>& history, const LoopConfig& cfg);

struct StageInputs {
  FeatureMatrix train;  // model inputs
  FeatureMatrix val;
  FeatureMatrix cv_source;  // rows aligned with the folds, before `cv_transform`
  ml::FoldTransform cv_transform;
  std::function<FeatureMatrix(const FeatureMatrix&)> to_model_inputs;  // applied to test rows
};

/// Stage inputs over the raw `names` columns.
StageInputs initial_inputs(const DataSplits& splits, const std::vector<std::string>& names);
/// Stage inputs over the PC scores of `set`; CV folds refit its scaling and
/// loadings on each training complement.
StageInputs boosted_inputs(const DataSplits& splits, const std::vector<std::string>& names,
                           std::shared_ptr<const boost::BoostedFeatureSet> set);

/// Decision half of a stage: families compared with default
/// hyperparameters, the best by validation macro-F1 tuned by grid search.
struct StageFit {
  ml::RankingTable ranking;
  ml::ModelSpec best_spec;
  ml::EvalReport best_validation;
  std::shared_ptr<const ml::TrainedModel> best_model;
};

StageFit fit_stage(const StageInputs& in, const DataSplits& splits, const LoopConfig& cfg, std::uint64_t seed);

/// Scoring half: the only place that reads the test rows.
StageResult score_stage(const StageFit& fit, const StageInputs& in, const DataSplits& splits,
                        std::vector<AccessEvent>& log, std::size_t iteration);

/// Initial-feature comparison (stored in state.baseline).
void run_baseline(PipelineState& state, const DataSplits& splits);

/// One boost → model → attribute → prune cycle over state.surviving.
IterationRecord run_iteration(PipelineState& state, const DataSplits& splits);

using ProgressFn = std::function<void(const PipelineState&, const IterationRecord&)>;

/// Runs the baseline if missing, then iterations until the stopping rule
/// fires. `progress` is invoked after every iteration.
void run_loop(PipelineState& state, const DataSplits& splits, const ProgressFn& progress = {});

struct FinalReport {
  std::size_t best_iteration = 0;
  Status status = Status::running;
  std::vector<TableRow> initial;
  std::vector<TableRow> boosted;
  std::string best_model;
  ml::EvalReport best_test;
  ml::EvalReport initial_best_test;
  std::vector<std::vector<double>> confusion_percent;
  ml::ConfusionPair dominant;
  std::vector<std::string> catalog;  // surviving at the best iteration
  std::size_t selected_count = 0;
};

/// Throws Error{"boost_loop","empty_history"}.
FinalReport final_report(const PipelineState& state);

/// Initial-vs-boosted report for one comparison outside the loop.
FinalReport comparison_report(const StageResult& initial, const StageResult& boosted, std::size_t selected_count,
                              std::vector<std::string> catalog);

// --- persistence -------------------------------------------------------------

std::string state_to_json(const PipelineState& state);
PipelineState state_from_json(std::string_view json);
std::string history_csv(const PipelineState& state);
/// Omits status and best_iteration when best_iteration is 0 (a single
/// comparison outside the loop).
std::string report_to_json(const FinalReport& report);
/// `model,accuracy,recall,precision,f1` on test, then validation and CV columns.
std::string table_csv(const std::vector<TableRow>& rows);

}  // namespace ser::loop

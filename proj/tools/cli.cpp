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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include "json.hpp"
#include "ser/dataset.hpp"
#include "ser/features.hpp"
#include "ser/metrics.hpp"

namespace ser::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Sub-seed tags.
constexpr std::uint64_t kSynthTag = 0x51;
constexpr std::uint64_t kSplitTag = 0x52;
constexpr std::uint64_t kFoldTag = 0x53;
constexpr std::uint64_t kLoopTag = 0x54;
constexpr std::uint64_t kBoostTag = 0x55;
constexpr std::uint64_t kTrainTag = 0x56;
constexpr std::uint64_t kShapTag = 0x57;

[[noreturn]] void bad_config(const std::string& msg) { throw Error("cli", "invalid_config", msg); }

template <typename T>
T take(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    bad_config("config key '" + key + "' has the wrong type");
  }
}

std::string shap_mode_check(const std::string& m) {
  if (m != "auto" && m != "exact" && m != "sampled") bad_config("shap_mode must be auto, exact or sampled");
  return m;
}

}  // namespace

RunConfig config_from_json(std::string_view text, RunConfig c) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad_config(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "schema_version") {
      if (take<int>(v, k) != 1) bad_config("unsupported config schema_version");
    } else if (k == "tess") c.tess = take<std::string>(v, k);
    else if (k == "synth") c.synth = take<std::size_t>(v, k);
    else if (k == "seed") c.seed = take<std::uint64_t>(v, k);
    else if (k == "out") c.out = take<std::string>(v, k);
    else if (k == "threads") c.threads = take<int>(v, k);
    else if (k == "split") c.split = take<std::string>(v, k);
    else if (k == "catalog") c.catalog = take<std::vector<std::string>>(v, k);
    else if (k == "p") c.boost.p = take<std::size_t>(v, k);
    else if (k == "m") c.boost.m = take<std::size_t>(v, k);
    else if (k == "alpha") c.boost.alpha = take<double>(v, k);
    else if (k == "c") c.boost.c = take<std::size_t>(v, k);
    else if (k == "retain_ev") c.boost.retain_ev = take<double>(v, k);
    else if (k == "max_iterations") c.loop.max_iterations = take<std::size_t>(v, k);
    else if (k == "epsilon") c.loop.epsilon = take<double>(v, k);
    else if (k == "patience") c.loop.patience = take<std::size_t>(v, k);
    else if (k == "prune_quantile") c.loop.prune_quantile = take<double>(v, k);
    else if (k == "min_features") c.loop.min_features = take<std::size_t>(v, k);
    else if (k == "cv_folds") c.loop.cv_folds = take<int>(v, k);
    else if (k == "families") c.families = take<std::vector<std::string>>(v, k);
    else if (k == "grids") c.loop.grids = take<std::map<std::string, ml::Grid>>(v, k);
    else if (k == "shap_mode") c.shap_mode = shap_mode_check(take<std::string>(v, k));
    else if (k == "shap_background") c.shap_background = take<std::size_t>(v, k);
    else if (k == "shap_permutations") c.shap_permutations = take<std::size_t>(v, k);
    else if (k == "shap_exact_limit") c.shap_exact_limit = take<std::size_t>(v, k);
    else if (k == "shap_max_instances") c.shap_max_instances = take<std::size_t>(v, k);
    else if (k == "features") c.features = take<std::string>(v, k);
    else if (k == "boostset") c.boostset = take<std::string>(v, k);
    else if (k == "model") c.model = take<std::string>(v, k);
    else bad_config("unknown config key '" + k + "'");
  }
  return c;
}

std::string config_to_json(const RunConfig& c) {
  ojson j;
  j["schema_version"] = 1;
  j["tess"] = c.tess;
  j["synth"] = c.synth;
  j["seed"] = c.seed;
  j["split"] = c.split;
  j["catalog"] = c.catalog;
  j["p"] = c.boost.p;
  j["m"] = c.boost.m;
  j["alpha"] = c.boost.alpha;
  j["c"] = c.boost.c;
  j["retain_ev"] = c.boost.retain_ev;
  j["max_iterations"] = c.loop.max_iterations;
  j["epsilon"] = c.loop.epsilon;
  j["patience"] = c.loop.patience;
  j["prune_quantile"] = c.loop.prune_quantile;
  j["min_features"] = c.loop.min_features;
  j["cv_folds"] = c.loop.cv_folds;
  j["families"] = c.families;
  j["grids"] = c.loop.grids;
  j["shap_mode"] = c.shap_mode;
  j["shap_background"] = c.shap_background;
  j["shap_permutations"] = c.shap_permutations;
  j["shap_exact_limit"] = c.shap_exact_limit;
  j["shap_max_instances"] = c.shap_max_instances;
  return j.dump();
}

namespace {

struct Workspace {
  FeatureMatrix matrix;
  std::optional<loop::DataSplits> splits;
};

fs::path out_file(const RunConfig& c, const char* name) { return fs::path(c.out) / name; }

loop::LoopConfig loop_config(const RunConfig& c) {
  loop::LoopConfig l = c.loop;
  if (!c.families.empty()) {
    l.families.clear();
    for (const auto& f : c.families) {
      const auto a = ml::parse_algorithm(f);
      if (!a) bad_config("unknown model family '" + f + "' (expected DT, RF, ET, GBC, LDA or QDA)");
      l.families.push_back(*a);
    }
  }
  return l;
}

shap::ShapConfig shap_config(const RunConfig& c) {
  shap::ShapConfig s;
  s.mode = c.shap_mode == "exact" ? shap::Mode::exact : c.shap_mode == "sampled" ? shap::Mode::sampled : shap::Mode::automatic;
  s.background_size = c.shap_background;
  s.n_permutations = c.shap_permutations;
  s.exact_limit = c.shap_exact_limit;
  s.max_instances = c.shap_max_instances;
  s.seed = derive_seed(c.seed, {kShapTag});
  return s;
}

LabeledDataset load_dataset(const RunConfig& c) {
  if (!c.tess.empty() && c.synth > 0) bad_config("--tess and --synth are mutually exclusive");
  if (!c.tess.empty()) return scan_tess(c.tess);
  if (c.synth > 0) return synth_dataset(c.synth, derive_seed(c.seed, {kSynthTag}));
  bad_config("a dataset source is required (--tess <root> or --synth N)");
}

FeatureCatalog catalog_of(const RunConfig& c) {
  const auto def = FeatureCatalog::default_catalog();
  return c.catalog.empty() ? def : def.subset(c.catalog);
}

loop::DataSplits splits_from(const FeatureMatrix& m, const std::vector<ManifestRow>& manifest) {
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < m.paths.size(); ++i) row_of[m.paths[i]] = i;
  std::vector<std::size_t> train, val, test;
  FoldAssignment folds;
  for (const auto& r : manifest) {
    const auto it = row_of.find(r.path);
    if (it == row_of.end()) throw Error("cli", "manifest_mismatch", "manifest path '" + r.path + "' is not in the feature table");
    if (r.split == "train") {
      train.push_back(it->second);
      folds.fold_of.push_back(r.fold);
      folds.k = std::max(folds.k, r.fold + 1);
    } else {
      (r.split == "val" ? val : test).push_back(it->second);
    }
  }
  if (folds.k == 0) folds.fold_of.clear();
  return loop::DataSplits(m.select_rows(train), m.select_rows(val), m.select_rows(test), std::move(folds));
}

Workspace extract_to_disk(const RunConfig& c, std::ostream& out) {
  const LabeledDataset ds = load_dataset(c);
  const FeatureCatalog catalog = catalog_of(c);
  Workspace ws;
  ws.matrix = extract_matrix(ds, catalog);
  const SplitFractions fractions;
  const auto split = c.split == "speaker" ? speaker_grouped_split(ds, fractions, derive_seed(c.seed, {kSplitTag}))
                                          : stratified_split(ds, fractions, derive_seed(c.seed, {kSplitTag}));
  if (c.split != "speaker" && c.split != "stratified") bad_config("split must be stratified or speaker");
  std::vector<std::string> train_labels;
  for (auto i : split.train_indices) train_labels.emplace_back(emotion_name(ds.clips[i].label));
  // Folds are capped by the smallest training class so every fold sees every class.
  std::map<std::string, int> per_class;
  for (const auto& l : train_labels) ++per_class[l];
  int k = c.loop.cv_folds;
  for (const auto& [_, n] : per_class) k = std::min(k, n);
  FoldAssignment folds;
  if (k >= 2) {
    folds = stratified_kfold(train_labels, k, derive_seed(c.seed, {kFoldTag}));
    if (k < c.loop.cv_folds) out << "cross-validation reduced to " << k << " folds (smallest class)\n";
  }
  const std::string manifest = manifest_csv(ds, split, folds);

  write_text_file(out_file(c, "features.csv"), feature_matrix_csv(ws.matrix));
  write_text_file(out_file(c, "manifest.csv"), manifest);
  write_text_file(out_file(c, "catalog.json"), catalog.to_json());
  ws.splits.emplace(splits_from(ws.matrix, parse_manifest_csv(manifest)));
  out << "extracted " << ws.matrix.rows() << " clips x " << ws.matrix.cols() << " features -> "
      << out_file(c, "features.csv").string() << "\n";
  return ws;
}

Workspace load_workspace(const RunConfig& c) {
  Workspace ws;
  const fs::path features = c.features.empty() ? out_file(c, "features.csv") : fs::path(c.features);
  ws.matrix = parse_feature_matrix_csv(read_text_file(features));
  const fs::path manifest = features.parent_path() / "manifest.csv";
  ws.splits.emplace(splits_from(ws.matrix, parse_manifest_csv(read_text_file(manifest))));
  return ws;
}

boost::BoostedFeatureSet fit_or_load_boost(const RunConfig& c, const Workspace& ws, std::size_t* candidates) {
  if (!c.boostset.empty()) {
    auto set = boost::boosted_set_from_json(read_text_file(c.boostset));
    if (candidates) *candidates = set.config.m;
    return set;
  }
  boost::BoostConfig bc = c.boost;
  bc.seed = derive_seed(c.seed, {kBoostTag});
  bc.validate();
  const auto& train = ws.splits->train();
  bc.m = static_cast<std::size_t>(std::min<std::uint64_t>(bc.m, boost::binomial(train.cols(), bc.p)));
  if (candidates) *candidates = bc.m;
  return boost::fit_boost(train, bc);
}

std::string fmt(double v, const char* f = "%.4f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print_summary(const loop::FinalReport& r, std::ostream& out) {
  if (r.best_iteration > 0)
    out << "status: " << loop::status_name(r.status) << " (best iteration " << r.best_iteration << ")\n";
  if (!r.initial.empty()) out << "initial features: best test accuracy " << fmt(r.initial_best_test.accuracy) << "\n";
  out << "boosted features: " << r.best_model << " test accuracy " << fmt(r.best_test.accuracy) << ", macro-F1 "
      << fmt(r.best_test.macro_f1) << "\n";
  out << "selected combinations: " << r.selected_count << "\n";
  out << "dominant confusion: " << r.dominant.actual << " -> " << r.dominant.predicted << " ("
      << fmt(r.dominant.percent, "%.2f") << "%)\n";
}

void write_report_artifacts(const loop::PipelineState& state, const RunConfig& c, std::ostream& out) {
  const auto report = loop::final_report(state);
  const auto& best = state.history[report.best_iteration - 1];
  write_text_file(out_file(c, "metrics.json"), loop::report_to_json(report));
  write_text_file(out_file(c, "confusion.csv"), ml::confusion_csv(report.best_test));
  write_text_file(out_file(c, "ranking.csv"), loop::table_csv(report.boosted));
  write_text_file(out_file(c, "ranking_initial.csv"), loop::table_csv(report.initial));
  write_text_file(out_file(c, "shap_importance.csv"), shap::importance_csv(best.importance));
  write_text_file(out_file(c, "backmap.csv"), shap::backmap_csv(best.backmap));
  write_text_file(out_file(c, "boostset.json"), best.boostset_json);
  write_text_file(out_file(c, "history.csv"), loop::history_csv(state));
  print_summary(report, out);
}

int cmd_extract(const RunConfig& c, std::ostream& out) {
  extract_to_disk(c, out);
  return 0;
}

int cmd_boost(const RunConfig& c, std::ostream& out) {
  const Workspace ws = load_workspace(c);
  std::size_t candidates = 0;
  const auto set = fit_or_load_boost(c, ws, &candidates);
  write_text_file(out_file(c, "boosted.csv"), feature_matrix_csv(boost::build_boosted_matrix(ws.matrix, set)));
  if (c.boostset.empty()) write_text_file(out_file(c, "boostset.json"), boost::to_json(set));
  const auto bip = boost::biplot_data(ws.splits->train(), set.selected.front());
  write_text_file(out_file(c, "biplot_scores.csv"), boost::biplot_scores_csv(bip));
  write_text_file(out_file(c, "biplot_loadings.csv"), boost::biplot_loadings_csv(bip));
  out << "selected " << set.selected.size() << " of " << candidates << " combinations (alpha=" << set.config.alpha
      << ", c=" << set.config.c << "), " << set.width() << " boosted features\n";
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  const Workspace ws = load_workspace(c);
  const auto& splits = *ws.splits;
  const auto lc = loop_config(c);
  lc.validate(c.boost);
  const auto set = std::make_shared<const boost::BoostedFeatureSet>(fit_or_load_boost(c, ws, nullptr));
  const auto names = ws.matrix.column_names;
  std::vector<loop::AccessEvent> log;

  const auto initial_in = loop::initial_inputs(splits, names);
  const auto initial_fit = loop::fit_stage(initial_in, splits, lc, derive_seed(c.seed, {kTrainTag, 0}));
  const auto boosted_in = loop::boosted_inputs(splits, names, set);
  const auto boosted_fit = loop::fit_stage(boosted_in, splits, lc, derive_seed(c.seed, {kTrainTag, 1}));
  const auto initial = loop::score_stage(initial_fit, initial_in, splits, log, 0);
  const auto boosted = loop::score_stage(boosted_fit, boosted_in, splits, log, 0);

  const auto report = loop::comparison_report(initial, boosted, set->selected.size(), names);
  write_text_file(out_file(c, "metrics.json"), loop::report_to_json(report));
  write_text_file(out_file(c, "confusion.csv"), ml::confusion_csv(report.best_test));
  write_text_file(out_file(c, "ranking.csv"), loop::table_csv(report.boosted));
  write_text_file(out_file(c, "ranking_initial.csv"), loop::table_csv(report.initial));
  write_text_file(out_file(c, "model.json"), boosted_fit.best_model->to_json());
  if (c.boostset.empty()) write_text_file(out_file(c, "boostset.json"), boost::to_json(*set));
  print_summary(report, out);
  return 0;
}

int cmd_explain(const RunConfig& c, std::ostream& out) {
  const Workspace ws = load_workspace(c);
  const auto& splits = *ws.splits;
  const auto set = boost::boosted_set_from_json(
      read_text_file(c.boostset.empty() ? out_file(c, "boostset.json") : fs::path(c.boostset)));
  const auto model =
      ml::TrainedModel::from_json(read_text_file(c.model.empty() ? out_file(c, "model.json") : fs::path(c.model)));
  const auto train = boost::build_boosted_matrix(splits.train(), set);
  const auto val = boost::build_boosted_matrix(splits.val(), set);
  if (model.feature_names() != train.column_names)
    throw Error("cli", "schema_mismatch", "model features do not match the boosted feature set");

  const auto sc = shap_config(c);
  const Matrix background = shap::make_background(train.values, sc);
  const auto attrs = shap::explain(shap::model_fn(model), val.values, background, train.column_names, model.classes(), sc);
  const auto importance = shap::class_importance(attrs, "validation");
  const auto backmap = shap::backmap_importance(importance, set, ws.matrix.column_names);
  write_text_file(out_file(c, "shap_importance.csv"), shap::importance_csv(importance));
  write_text_file(out_file(c, "backmap.csv"), shap::backmap_csv(backmap));

  out << "explained " << attrs.phi.size() << " validation rows (" << (attrs.exact ? "exact" : "sampled") << ")\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, importance.ranking.size()); ++i) {
    const auto j = importance.ranking[i];
    out << "  " << importance.features[j] << " " << fmt(importance.overall[j]) << "\n";
  }
  return 0;
}

loop::Status status_of(loop::Decision d) {
  switch (d) {
    case loop::Decision::proceed: return loop::Status::running;
    case loop::Decision::converged: return loop::Status::converged;
    case loop::Decision::max_iter: return loop::Status::max_iter;
    case loop::Decision::floor_reached: return loop::Status::floor_reached;
  }
  return loop::Status::running;
}

int cmd_run(const RunConfig& c, std::optional<loop::PipelineState> resumed, std::ostream& out) {
  Workspace ws;
  loop::PipelineState state;
  if (resumed) {
    state = std::move(*resumed);
    state.loop.max_iterations = c.loop.max_iterations;
    if (state.status != loop::Status::running) state.status = status_of(loop::converged(state.history, state.loop));
    if (fs::exists(out_file(c, "features.csv")) && fs::exists(out_file(c, "manifest.csv")))
      ws = load_workspace(c);
    else
      ws = extract_to_disk(c, out);
    out << "resuming after iteration " << state.history.size() << "\n";
  } else {
    c.boost.validate();
    const auto lc = loop_config(c);
    lc.validate(c.boost);
    ws = extract_to_disk(c, out);
    state = loop::initial_state(FeatureCatalog::from_names(ws.matrix.column_names), c.boost, lc, shap_config(c),
                                derive_seed(c.seed, {kLoopTag}));
    state.run_config_json = config_to_json(c);
  }

  const auto state_path = out_file(c, "state.json");
  loop::run_loop(state, *ws.splits, [&](const loop::PipelineState& s, const loop::IterationRecord& r) {
    out << "iteration " << r.iteration << ": " << r.catalog.size() << " features, " << r.selected_count
        << " combinations, " << r.stage.best_spec.describe() << " val macro-F1 " << fmt(r.stage.best_validation.macro_f1)
        << ", pruned " << r.pruned.size() << "\n";
    write_text_file(state_path, loop::state_to_json(s));
    write_text_file(out_file(c, "history.csv"), loop::history_csv(s));
  });
  write_text_file(state_path, loop::state_to_json(state));

  const auto report = loop::final_report(state);
  const auto& best = state.history[report.best_iteration - 1];
  const auto set = boost::boosted_set_from_json(best.boostset_json);
  write_text_file(out_file(c, "boosted.csv"),
                  feature_matrix_csv(boost::build_boosted_matrix(ws.matrix.select_columns(best.catalog), set)));
  write_report_artifacts(state, c, out);
  return 0;
}

int cmd_report(const RunConfig& c, const std::string& state_path, std::ostream& out) {
  const auto state = loop::state_from_json(read_text_file(state_path.empty() ? out_file(c, "state.json") : fs::path(state_path)));
  write_report_artifacts(state, c, out);
  return 0;
}

const std::set<std::string>& config_codes() {
  static const std::set<std::string> codes{"invalid_config",       "invalid_hyperparameter", "invalid_state",
                                           "invalid_catalog_json", "invalid_boostset_json",  "invalid_model_json",
                                           "invalid_csv",          "invalid_manifest",       "catalog_mismatch",
                                           "catalog_version_mismatch", "unknown_feature",    "manifest_mismatch",
                                           "empty_grid",           "fold_mismatch"};
  return codes;
}

int exit_code(const Error& e) {
  if (e.code() == "empty_selection") return 3;
  if (e.module() == "dataset" || e.module() == "io" || config_codes().count(e.code())) return 2;
  return 1;
}

void print_error(std::ostream& err, const std::string& code, const std::string& module, const std::string& message) {
  ojson j;
  j["error"] = code;
  j["module"] = module;
  j["message"] = message;
  if (code == "empty_selection") j["hint"] = "no combination passed the threshold; lower --alpha or raise --m";
  err << j.dump() << "\n";
}

struct Options {
  RunConfig cfg;
  std::string config_path;
  std::string resume;
};

void add_options(CLI::App* sc, Options& o) {
  RunConfig& c = o.cfg;
  sc->add_option("--config", o.config_path, "JSON run configuration (flags override it)");
  sc->add_option("--seed", c.seed, "global seed");
  sc->add_option("--out", c.out, "output directory");
  sc->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  sc->add_option("--resume", o.resume, "state.json to continue from (run) or report on (report)");
  sc->add_option("--tess", c.tess, "TESS corpus root");
  sc->add_option("--synth", c.synth, "synthetic clips per class");
  sc->add_option("--split", c.split, "stratified or speaker");
  sc->add_option("--catalog", c.catalog, "comma-separated feature subset")->delimiter(',');
  sc->add_option("--features", c.features, "features.csv (default: <out>/features.csv)");
  sc->add_option("--boostset", c.boostset, "boostset.json to reuse instead of fitting");
  sc->add_option("--model", c.model, "model.json (default: <out>/model.json)");
  sc->add_option("--p", c.boost.p, "features per combination");
  sc->add_option("--m", c.boost.m, "candidate combinations");
  sc->add_option("--alpha", c.boost.alpha, "leading-EV selection threshold in (0, 1]");
  sc->add_option("--c", c.boost.c, "leading components in the threshold");
  sc->add_option("--retain-ev", c.boost.retain_ev, "cumulative EV fraction fixing the retained PCs");
  sc->add_option("--max-iterations", c.loop.max_iterations);
  sc->add_option("--epsilon", c.loop.epsilon, "minimum validation macro-F1 gain");
  sc->add_option("--patience", c.loop.patience);
  sc->add_option("--prune-quantile", c.loop.prune_quantile);
  sc->add_option("--min-features", c.loop.min_features);
  sc->add_option("--cv-folds", c.loop.cv_folds, "0 disables cross-validation");
  sc->add_option("--families", c.families, "comma-separated subset of DT,RF,ET,GBC,LDA,QDA")->delimiter(',');
  sc->add_option("--shap-mode", c.shap_mode, "auto, exact or sampled");
  sc->add_option("--shap-background", c.shap_background);
  sc->add_option("--shap-permutations", c.shap_permutations);
  sc->add_option("--shap-exact-limit", c.shap_exact_limit);
  sc->add_option("--shap-max-instances", c.shap_max_instances);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speech emotion recognition with iterative feature boosting", "ser"};
  app.require_subcommand(1);
  Options o;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"extract", "decode the corpus and write features.csv + manifest.csv"},
           {"boost", "fit combination PCA on the training rows and write boosted.csv"},
           {"train", "compare models on initial and boosted features"},
           {"explain", "attribute a trained model on the validation rows"},
           {"run", "full boosting loop"},
           {"report", "regenerate report artifacts from state.json"}}) {
    auto* sc = app.add_subcommand(name, help);
    add_options(sc, o);
    subs.push_back(sc);
  }

  try {
    app.parse(argc, argv);
    std::optional<loop::PipelineState> resumed;
    RunConfig base;
    const bool is_run = app.got_subcommand("run");
    if (!o.resume.empty() && is_run) {
      resumed = loop::state_from_json(read_text_file(o.resume));
      base = config_from_json(resumed->run_config_json);
      base.out = fs::path(o.resume).parent_path().string();
    } else if (!o.config_path.empty()) {
      base = config_from_json(read_text_file(o.config_path));
    }
    if (resumed || !o.config_path.empty()) {
      const std::string resume = o.resume;
      o.cfg = base;
      app.clear();
      app.parse(argc, argv);
      o.resume = resume;
    }
    RunConfig& c = o.cfg;
    set_thread_count(c.threads);
    shap_mode_check(c.shap_mode);

    if (app.got_subcommand("extract")) return cmd_extract(c, out);
    if (app.got_subcommand("boost")) return cmd_boost(c, out);
    if (app.got_subcommand("train")) return cmd_train(c, out);
    if (app.got_subcommand("explain")) return cmd_explain(c, out);
    if (is_run) return cmd_run(c, std::move(resumed), out);
    return cmd_report(c, o.resume, out);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", "cli", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(err, e.code(), e.module(), e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    print_error(err, "internal", "cli", e.what());
    return 1;
  }
}

}  // namespace ser::cli

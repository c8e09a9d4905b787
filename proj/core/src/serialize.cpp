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

#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "ser/loop.hpp"

namespace ser::loop {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int kStateSchema = 1;

ojson metrics_json(const Metrics& m) {
  return ojson{{"accuracy", m.accuracy}, {"recall", m.recall}, {"precision", m.precision}, {"f1", m.f1}};
}

Metrics metrics_from(const ojson& j) {
  return {j.at("accuracy").get<double>(), j.at("recall").get<double>(), j.at("precision").get<double>(),
          j.at("f1").get<double>()};
}

ojson row_json(const TableRow& r) {
  ojson j;
  j["model"] = r.model;
  j["spec"] = r.spec;
  j["test"] = metrics_json(r.test);
  j["validation"] = metrics_json(r.validation);
  if (r.has_cv)
    j["cv"] = ojson{{"accuracy_mean", r.cv_accuracy_mean}, {"accuracy_std", r.cv_accuracy_std}, {"f1_mean", r.cv_f1_mean}};
  return j;
}

TableRow row_from(const ojson& j) {
  TableRow r;
  r.model = j.at("model").get<std::string>();
  r.spec = j.at("spec").get<std::string>();
  r.test = metrics_from(j.at("test"));
  r.validation = metrics_from(j.at("validation"));
  if (j.contains("cv")) {
    r.has_cv = true;
    r.cv_accuracy_mean = j["cv"].at("accuracy_mean").get<double>();
    r.cv_accuracy_std = j["cv"].at("accuracy_std").get<double>();
    r.cv_f1_mean = j["cv"].at("f1_mean").get<double>();
  }
  return r;
}

ojson report_json(const ml::EvalReport& r) { return ojson{{"classes", r.classes}, {"confusion", r.confusion}}; }

ml::EvalReport report_from(const ojson& j) {
  return ml::report_from_confusion(j.at("classes").get<std::vector<std::string>>(),
                                   j.at("confusion").get<std::vector<std::vector<std::size_t>>>());
}

ojson spec_json(const ml::ModelSpec& s) {
  return ojson{{"algorithm", std::string(ml::algorithm_name(s.algorithm))}, {"hyperparameters", s.params}, {"seed", s.seed}};
}

ml::ModelSpec spec_from(const ojson& j) {
  ml::ModelSpec s;
  const auto a = ml::parse_algorithm(j.at("algorithm").get<std::string>());
  if (!a) throw Error("boost_loop", "invalid_state", "unknown algorithm in state");
  s.algorithm = *a;
  s.params = j.at("hyperparameters").get<ml::Hyperparameters>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

ojson stage_json(const StageResult& s) {
  ojson j;
  auto rows = ojson::array();
  for (const auto& r : s.table) rows.push_back(row_json(r));
  j["table"] = rows;
  j["best_spec"] = spec_json(s.best_spec);
  j["best_validation"] = report_json(s.best_validation);
  j["best_test"] = report_json(s.best_test);
  return j;
}

StageResult stage_from(const ojson& j) {
  StageResult s;
  for (const auto& r : j.at("table")) s.table.push_back(row_from(r));
  s.best_spec = spec_from(j.at("best_spec"));
  s.best_validation = report_from(j.at("best_validation"));
  s.best_test = report_from(j.at("best_test"));
  return s;
}

const char* mode_name(shap::Mode m) {
  switch (m) {
    case shap::Mode::exact: return "exact";
    case shap::Mode::sampled: return "sampled";
    case shap::Mode::automatic: return "auto";
  }
  return "auto";
}

shap::Mode mode_from(const std::string& s) {
  if (s == "exact") return shap::Mode::exact;
  if (s == "sampled") return shap::Mode::sampled;
  if (s == "auto") return shap::Mode::automatic;
  throw Error("boost_loop", "invalid_state", "unknown attribution mode '" + s + "'");
}

}  // namespace

std::string state_to_json(const PipelineState& state) {
  ojson j;
  j["schema_version"] = kStateSchema;
  j["seed"] = state.seed;
  j["status"] = std::string(status_name(state.status));
  j["run"] = state.run_config_json.empty() ? ojson() : ojson::parse(state.run_config_json);
  j["catalog"] = ojson::parse(state.catalog.to_json());

  const auto& b = state.boost;
  j["boost"] = ojson{{"p", b.p}, {"m", b.m}, {"alpha", b.alpha}, {"c", b.c}, {"retain_ev", b.retain_ev}, {"seed", b.seed}};

  const auto& l = state.loop;
  ojson loop{{"max_iterations", l.max_iterations}, {"epsilon", l.epsilon},           {"patience", l.patience},
             {"prune_quantile", l.prune_quantile}, {"min_features", l.min_features}, {"cv_folds", l.cv_folds}};
  auto fam = ojson::array();
  for (auto a : l.families) fam.push_back(std::string(ml::algorithm_name(a)));
  loop["families"] = fam;
  loop["grids"] = l.grids;
  j["loop"] = loop;

  const auto& s = state.shap;
  j["shap"] = ojson{{"mode", mode_name(s.mode)},
                    {"background_size", s.background_size},
                    {"mean_background", s.mean_background},
                    {"n_permutations", s.n_permutations},
                    {"exact_limit", s.exact_limit},
                    {"max_instances", s.max_instances},
                    {"seed", s.seed}};

  j["baseline"] = state.baseline ? stage_json(*state.baseline) : ojson();
  auto hist = ojson::array();
  for (const auto& r : state.history) {
    ojson h;
    h["iteration"] = r.iteration;
    h["catalog"] = r.catalog;
    h["candidate_count"] = r.candidate_count;
    h["selected_count"] = r.selected_count;
    h["boosted_width"] = r.boosted_width;
    auto sel = ojson::array();
    for (const auto& s2 : r.selected)
      sel.push_back(ojson{{"index", s2.index}, {"members", s2.members}, {"retained", s2.retained}, {"leading_ev", s2.leading_ev}});
    h["selected"] = sel;
    h["boostset"] = ojson::parse(r.boostset_json);
    h["stage"] = stage_json(r.stage);
    auto per_class = ojson::array();
    for (std::size_t c = 0; c < r.importance.per_class.rows(); ++c)
      per_class.push_back(std::vector<double>(r.importance.per_class.row(c).begin(), r.importance.per_class.row(c).end()));
    h["importance"] = ojson{{"evaluated_on", r.importance.evaluated_on},
                            {"features", r.importance.features},
                            {"classes", r.importance.classes},
                            {"per_class", per_class},
                            {"overall", r.importance.overall},
                            {"ranking", r.importance.ranking}};
    h["backmap"] = ojson{{"features", r.backmap.features}, {"weight", r.backmap.weight}};
    h["pruned"] = r.pruned;
    h["best_so_far_f1"] = r.best_so_far_f1;
    hist.push_back(h);
  }
  j["history"] = hist;
  j["surviving"] = state.surviving;
  auto log = ojson::array();
  for (const auto& e : state.access_log)
    log.push_back(ojson{{"sequence", e.sequence}, {"iteration", e.iteration}, {"partition", e.partition}, {"purpose", e.purpose}});
  j["access_log"] = log;
  return j.dump(2) + "\n";
}

PipelineState state_from_json(std::string_view text) {
  try {
    const auto j = ojson::parse(text);
    if (j.at("schema_version").get<int>() != kStateSchema)
      throw Error("boost_loop", "invalid_state", "unsupported state schema version");
    PipelineState s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.status = parse_status(j.at("status").get<std::string>());
    if (!j.at("run").is_null()) s.run_config_json = j["run"].dump();
    s.catalog = FeatureCatalog::from_json(j.at("catalog").dump());

    const auto& b = j.at("boost");
    s.boost.p = b.at("p").get<std::size_t>();
    s.boost.m = b.at("m").get<std::size_t>();
    s.boost.alpha = b.at("alpha").get<double>();
    s.boost.c = b.at("c").get<std::size_t>();
    s.boost.retain_ev = b.at("retain_ev").get<double>();
    s.boost.seed = b.at("seed").get<std::uint64_t>();

    const auto& l = j.at("loop");
    s.loop.max_iterations = l.at("max_iterations").get<std::size_t>();
    s.loop.epsilon = l.at("epsilon").get<double>();
    s.loop.patience = l.at("patience").get<std::size_t>();
    s.loop.prune_quantile = l.at("prune_quantile").get<double>();
    s.loop.min_features = l.at("min_features").get<std::size_t>();
    s.loop.cv_folds = l.at("cv_folds").get<int>();
    s.loop.families.clear();
    for (const auto& f : l.at("families")) {
      const auto a = ml::parse_algorithm(f.get<std::string>());
      if (!a) throw Error("boost_loop", "invalid_state", "unknown model family in state");
      s.loop.families.push_back(*a);
    }
    s.loop.grids = l.at("grids").get<std::map<std::string, ml::Grid>>();

    const auto& sh = j.at("shap");
    s.shap.mode = mode_from(sh.at("mode").get<std::string>());
    s.shap.background_size = sh.at("background_size").get<std::size_t>();
    s.shap.mean_background = sh.at("mean_background").get<bool>();
    s.shap.n_permutations = sh.at("n_permutations").get<std::size_t>();
    s.shap.exact_limit = sh.at("exact_limit").get<std::size_t>();
    s.shap.max_instances = sh.at("max_instances").get<std::size_t>();
    s.shap.seed = sh.at("seed").get<std::uint64_t>();

    if (!j.at("baseline").is_null()) s.baseline = stage_from(j["baseline"]);
    for (const auto& h : j.at("history")) {
      IterationRecord r;
      r.iteration = h.at("iteration").get<std::size_t>();
      r.catalog = h.at("catalog").get<std::vector<std::string>>();
      r.candidate_count = h.at("candidate_count").get<std::size_t>();
      r.selected_count = h.at("selected_count").get<std::size_t>();
      r.boosted_width = h.at("boosted_width").get<std::size_t>();
      for (const auto& x : h.at("selected"))
        r.selected.push_back({x.at("index").get<std::size_t>(), x.at("members").get<std::vector<std::string>>(),
                              x.at("retained").get<std::size_t>(), x.at("leading_ev").get<double>()});
      r.boostset_json = h.at("boostset").dump(2) + "\n";
      r.stage = stage_from(h.at("stage"));
      const auto& imp = h.at("importance");
      r.importance.evaluated_on = imp.at("evaluated_on").get<std::string>();
      r.importance.features = imp.at("features").get<std::vector<std::string>>();
      r.importance.classes = imp.at("classes").get<std::vector<std::string>>();
      const auto pc = imp.at("per_class").get<std::vector<std::vector<double>>>();
      r.importance.per_class = Matrix(pc.size(), r.importance.features.size());
      for (std::size_t c = 0; c < pc.size(); ++c)
        for (std::size_t f = 0; f < pc[c].size() && f < r.importance.features.size(); ++f) r.importance.per_class(c, f) = pc[c][f];
      r.importance.overall = imp.at("overall").get<std::vector<double>>();
      r.importance.ranking = imp.at("ranking").get<std::vector<std::size_t>>();
      r.backmap.features = h.at("backmap").at("features").get<std::vector<std::string>>();
      r.backmap.weight = h.at("backmap").at("weight").get<std::vector<double>>();
      r.pruned = h.at("pruned").get<std::vector<std::string>>();
      r.best_so_far_f1 = h.at("best_so_far_f1").get<double>();
      s.history.push_back(std::move(r));
    }
    s.surviving = j.at("surviving").get<std::vector<std::string>>();
    for (const auto& e : j.at("access_log"))
      s.access_log.push_back({e.at("sequence").get<std::size_t>(), e.at("iteration").get<std::size_t>(),
                              e.at("partition").get<std::string>(), e.at("purpose").get<std::string>()});
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("boost_loop", "invalid_state", ex.what());
  }
}

std::string history_csv(const PipelineState& state) {
  std::ostringstream os;
  os << "iteration,catalog_size,selected_count,boosted_width,model,val_accuracy,val_f1,test_accuracy,test_f1,"
        "best_so_far_f1,pruned_count\n";
  for (const auto& r : state.history) {
    os << r.iteration << ',' << r.catalog.size() << ',' << r.selected_count << ',' << r.boosted_width << ','
       << csv::escape(r.stage.best_spec.describe()) << ',' << format_double(r.stage.best_validation.accuracy) << ','
       << format_double(r.stage.best_validation.macro_f1) << ',' << format_double(r.stage.best_test.accuracy) << ','
       << format_double(r.stage.best_test.macro_f1) << ',' << format_double(r.best_so_far_f1) << ',' << r.pruned.size()
       << '\n';
  }
  return os.str();
}

std::string report_to_json(const FinalReport& r) {
  ojson j;
  j["schema_version"] = 1;
  if (r.best_iteration > 0) {
    j["status"] = std::string(status_name(r.status));
    j["best_iteration"] = r.best_iteration;
  }
  j["best_model"] = r.best_model;
  j["selected_combinations"] = r.selected_count;
  auto initial = ojson::array();
  for (const auto& row : r.initial) initial.push_back(row_json(row));
  j["initial_features"] = initial;
  auto boosted = ojson::array();
  for (const auto& row : r.boosted) boosted.push_back(row_json(row));
  j["boosted_features"] = boosted;
  j["initial_best_test"] = metrics_json(Metrics::of(r.initial_best_test));
  j["boosted_best_test"] = metrics_json(Metrics::of(r.best_test));
  j["confusion_percent"] = ojson{{"classes", r.best_test.classes}, {"rows", r.confusion_percent}};
  j["dominant_confusion"] = ojson{{"actual", r.dominant.actual}, {"predicted", r.dominant.predicted}, {"percent", r.dominant.percent}};
  j["catalog"] = r.catalog;
  return j.dump(2) + "\n";
}

std::string table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os << "model,accuracy,recall,precision,f1,val_accuracy,val_f1,cv_accuracy_mean,cv_accuracy_std,cv_f1_mean,spec\n";
  for (const auto& r : rows) {
    os << r.model << ',' << format_double(r.test.accuracy) << ',' << format_double(r.test.recall) << ','
       << format_double(r.test.precision) << ',' << format_double(r.test.f1) << ','
       << format_double(r.validation.accuracy) << ',' << format_double(r.validation.f1) << ',';
    if (r.has_cv)
      os << format_double(r.cv_accuracy_mean) << ',' << format_double(r.cv_accuracy_std) << ','
         << format_double(r.cv_f1_mean);
    else
      os << ",,";
    os << ',' << csv::escape(r.spec) << '\n';
  }
  return os.str();
}

}  // namespace ser::loop

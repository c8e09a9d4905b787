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

#include "ser/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "csv.hpp"

namespace ser::ml {

std::size_t EvalReport::total() const {
  std::size_t t = 0;
  for (auto s : support) t += s;
  return t;
}

EvalReport report_from_confusion(std::vector<std::string> classes, std::vector<std::vector<std::size_t>> confusion) {
  const std::size_t k = classes.size();
  if (confusion.size() != k)
    throw Error("classifiers", "invalid_confusion", "confusion matrix does not match the class list");
  for (const auto& row : confusion)
    if (row.size() != k) throw Error("classifiers", "invalid_confusion", "confusion matrix is not square");

  EvalReport r;
  r.classes = std::move(classes);
  r.confusion = std::move(confusion);
  r.precision.assign(k, 0.0);
  r.recall.assign(k, 0.0);
  r.f1.assign(k, 0.0);
  r.support.assign(k, 0);
  std::size_t total = 0, correct = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t p = 0; p < k; ++p) r.support[a] += r.confusion[a][p];
    total += r.support[a];
    correct += r.confusion[a][a];
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0;
    for (std::size_t a = 0; a < k; ++a) predicted += r.confusion[a][c];
    const double tp = static_cast<double>(r.confusion[c][c]);
    r.precision[c] = predicted ? tp / static_cast<double>(predicted) : 0.0;
    r.recall[c] = r.support[c] ? tp / static_cast<double>(r.support[c]) : 0.0;
    const double s = r.precision[c] + r.recall[c];
    r.f1[c] = s > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / s : 0.0;
    r.macro_precision += r.precision[c];
    r.macro_recall += r.recall[c];
    r.macro_f1 += r.f1[c];
  }
  if (k) {
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
  }
  r.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return r;
}

EvalReport evaluate_predictions(const std::vector<std::string>& classes, const std::vector<std::string>& actual,
                                const std::vector<std::size_t>& predicted) {
  if (actual.size() != predicted.size())
    throw Error("classifiers", "invalid_confusion", "prediction count does not match label count");
  const std::size_t k = classes.size();
  std::vector<std::vector<std::size_t>> conf(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < actual.size(); ++i) {
    auto it = std::find(classes.begin(), classes.end(), actual[i]);
    if (it == classes.end()) throw Error("classifiers", "unknown_label", "label '" + actual[i] + "' is not in the class list");
    if (predicted[i] >= k) throw Error("classifiers", "unknown_label", "predicted class index out of range");
    ++conf[static_cast<std::size_t>(it - classes.begin())][predicted[i]];
  }
  return report_from_confusion(classes, std::move(conf));
}

EvalReport evaluate(const TrainedModel& model, const FeatureMatrix& x) {
  return evaluate_predictions(model.classes(), x.labels, model.predict(x));
}

std::vector<std::vector<double>> row_normalized_percent(const EvalReport& r) {
  std::vector<std::vector<double>> out;
  for (std::size_t a = 0; a < r.confusion.size(); ++a) {
    std::vector<double> row(r.confusion[a].size(), 0.0);
    if (r.support[a])
      for (std::size_t p = 0; p < row.size(); ++p)
        row[p] = 100.0 * static_cast<double>(r.confusion[a][p]) / static_cast<double>(r.support[a]);
    out.push_back(std::move(row));
  }
  return out;
}

ConfusionPair dominant_confusion(const EvalReport& r) {
  const auto pct = row_normalized_percent(r);
  ConfusionPair best;
  bool found = false;
  for (std::size_t a = 0; a < pct.size(); ++a)
    for (std::size_t p = 0; p < pct[a].size(); ++p) {
      if (a == p) continue;
      if (!found || pct[a][p] > best.percent) {
        best = {r.classes[a], r.classes[p], pct[a][p]};
        found = true;
      }
    }
  return best;
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "actual";
  for (const auto& c : r.classes) os << ',' << csv::escape(c);
  os << '\n';
  const auto pct = row_normalized_percent(r);
  for (std::size_t a = 0; a < pct.size(); ++a) {
    os << csv::escape(r.classes[a]);
    for (double v : pct[a]) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace ser::ml

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
#include <string>
#include <vector>

#include "ser/classifiers.hpp"

namespace ser::ml {

/// Classification metrics. Precision of a class that is never predicted is
/// taken as 0, and F1 is 0 whenever precision + recall is 0.
struct EvalReport {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted]
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision, recall, f1;
  std::vector<std::size_t> support;

  std::size_t total() const;
};

EvalReport report_from_confusion(std::vector<std::string> classes, std::vector<std::vector<std::size_t>> confusion);
EvalReport evaluate_predictions(const std::vector<std::string>& classes, const std::vector<std::string>& actual,
                                const std::vector<std::size_t>& predicted);
/// Scores `model` on the rows of `x` against x.labels.
EvalReport evaluate(const TrainedModel& model, const FeatureMatrix& x);

/// Confusion rows scaled to percentages (rows with no support stay 0).
std::vector<std::vector<double>> row_normalized_percent(const EvalReport& r);

struct ConfusionPair {
  std::string actual;
  std::string predicted;
  double percent = 0.0;
};
/// Largest off-diagonal row-normalized cell (first in row-major order on ties).
ConfusionPair dominant_confusion(const EvalReport& r);

/// `actual,<class...>` with row-normalized percentages.
std::string confusion_csv(const EvalReport& r);

}  // namespace ser::ml

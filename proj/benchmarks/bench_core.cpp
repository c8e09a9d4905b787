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


#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ser/classifiers.hpp"
#include "ser/dataset.hpp"
#include "ser/dsp.hpp"
#include "ser/features.hpp"
#include "ser/linalg.hpp"
#include "ser/shap.hpp"

using namespace ser;

namespace {

Matrix random_spd(std::size_t n) {
  Rng rng(9);
  Matrix x(4 * n, n);
  for (auto& v : x.data()) v = rng.normal();
  return linalg::covariance(x);
}

FeatureMatrix bench_features() {
  static const FeatureMatrix m = extract_matrix(synth_dataset(10, 3), FeatureCatalog::default_catalog());
  return m;
}

void BM_Jacobi(benchmark::State& st) {
  const Matrix c = random_spd(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(linalg::jacobi_eigen(c));
}
BENCHMARK(BM_Jacobi)->Arg(10)->Arg(30)->Arg(73);

void BM_ExtractClip(benchmark::State& st) {
  const auto ds = synth_dataset(1, 5);
  const auto& cat = FeatureCatalog::default_catalog();
  for (auto _ : st) benchmark::DoNotOptimize(extract_all(ds.clips[0], cat));
}
BENCHMARK(BM_ExtractClip)->Unit(benchmark::kMillisecond);

void BM_TrainET(benchmark::State& st) {
  const auto x = bench_features();
  const ml::ModelSpec spec{ml::Algorithm::extra_trees, {{"n_estimators", static_cast<double>(st.range(0))}}, 1};
  for (auto _ : st) benchmark::DoNotOptimize(ml::train(spec, x));
}
BENCHMARK(BM_TrainET)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Shap(benchmark::State& st) {
  const auto full = bench_features();
  const std::vector<std::string> cols = {"pitch_mean", "energy_mean", "intensity_mean", "centroid_mean", "mfcc0_mean",
                                      "mfcc1_mean", "mfcc2_mean", "voiced_ratio", "energy_peak_rate", "duration_s"};
  const auto x = full.select_columns(cols);
  const auto model = ml::train({ml::Algorithm::extra_trees, {{"n_estimators", 50}}, 1}, x);
  shap::ShapConfig cfg;
  cfg.background_size = 20;
  cfg.n_permutations = 50;
  cfg.mode = st.range(0) ? shap::Mode::exact : shap::Mode::sampled;
  const Matrix bg = shap::make_background(x.values, cfg);
  const auto f = shap::model_fn(model);
  for (auto _ : st) {
    if (st.range(0))
      benchmark::DoNotOptimize(shap::shap_exact(f, x.values.row(0), bg, cfg));
    else
      benchmark::DoNotOptimize(shap::shap_sampled(f, x.values.row(0), bg, cfg));
  }
}
BENCHMARK(BM_Shap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ser/boost.hpp"
#include "ser/loop.hpp"
#include "ser/shap.hpp"

namespace ser::cli {

/// Flat run configuration. Every field has a JSON key of the same name and
/// a command-line flag (underscores become dashes); flags win.
struct RunConfig {
  std::string tess;           // corpus root; empty when unused
  std::size_t synth = 0;      // clips per class for the synthetic corpus
  std::uint64_t seed = 0;
  std::string out = "out";
  int threads = 0;
  std::string split = "stratified";  // or "speaker"
  std::vector<std::string> catalog;  // feature subset; empty = default catalog

  boost::BoostConfig boost;
  loop::LoopConfig loop;
  std::vector<std::string> families;  // empty = all
  std::string shap_mode = "auto";
  std::size_t shap_background = 50;
  std::size_t shap_permutations = 20;
  std::size_t shap_exact_limit = 15;
  std::size_t shap_max_instances = 0;

  // Inputs of the staged subcommands; default to files under `out`.
  std::string features;
  std::string boostset;
  std::string model;
};

/// Throws Error{"cli","invalid_config"} on unknown keys or wrong types.
RunConfig config_from_json(std::string_view json, RunConfig base = {});
std::string config_to_json(const RunConfig& cfg);

/// Entry point behind the `ser` binary. Exit codes: 0 success, 1 runtime
/// failure, 2 configuration or dataset error, 3 empty combination selection.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ser::cli

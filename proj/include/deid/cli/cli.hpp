// Copyright 2026 The deid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"
#include "deid/evalmetrics/evalmetrics.hpp"
#include "deid/surrogate/surrogate.hpp"
#include "deid/syngen/syngen.hpp"

namespace deid::cli {

inline constexpr const char* kEndpointEnv = "DEID_BACKEND_ENDPOINT";

// One JSON file configuring every stage; command-line flags override it.
//   {
//     "seed": 0, "concurrency": 4, "output_dir": "out",
//     "io": {"schema": "canonical" | "infer" | path},
//     "tagmap": {"path": "map.json"},
//     "surrogate": {...surrogate keys...},
//     "recognize": {"backend": "rules" | "external", "endpoint", "rulebook",
//                   "timeout_ms", "retry", "repeats"},
//     "eval": {"mode": "token" | "entity_strict"},
//     "stats": {"ngram_window", "top_k", "stoplist", "zero_count_weight", "embed_dim"},
//     "syngen": {"template", "fanout", "temperature", "timeout_ms", "filter": {...}}
//   }
// Unknown keys are rejected and referenced files must exist.
struct PipelineConfig {
  std::uint64_t seed = 0;
  unsigned concurrency = 4;
  std::filesystem::path output_dir;

  std::string schema = "infer";
  std::filesystem::path tagmap;  // empty: the built-in canonical map

  surrogate::SurrogateConfig surrogate = surrogate::SurrogateConfig::defaults();

  std::string backend = "rules";
  std::string endpoint;
  std::filesystem::path rulebook;  // empty: the built-in rulebook
  std::chrono::milliseconds timeout{30000};
  unsigned retry = 0;
  unsigned repeats = 1;

  evalmetrics::EvalMode eval_mode = evalmetrics::EvalMode::kToken;

  std::size_t ngram_window = 3;
  std::size_t top_k = 10;
  std::filesystem::path stoplist;
  double zero_count_weight = 10.0;
  std::size_t embed_dim = 64;

  std::string template_id = "B";  // A, B, C or a template file
  unsigned fanout = 1;
  double temperature = 0.9;
  std::chrono::milliseconds generation_timeout{120000};
  syngen::FilterPolicy filter;

  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
};

// Loads .jsonl, .conll or .xml (one inline record per file). `schema` is
// "canonical", "infer" or a path to a {name, tags, other} JSON file.
Corpus load_corpus(const std::filesystem::path& path, const std::string& schema);
TagSchema resolve_schema(const std::string& spec);

// Cross-product of train and test sets, one evaluation report per cell.
//   {
//     "train_sets": {"name": ["a.jsonl", ...], ...},
//     "test_sets": {"name": "c.jsonl", ...},
//     "recognizer": "rules" | "gazetteer" | "external",
//     "mode": "token" | "entity_strict",
//     "seed": 0
//   }
// Writes train/<T>.conll, train/<T>.weights.json, reports/<T>__<S>.json,
// reports/<T>__<S>.txt and grid.json under out_dir; returns the report paths.
// "gazetteer" adds the train set's entity surfaces to the built-in rules, a
// desk-scale stand-in for a model trained on that set.
std::vector<std::filesystem::path> run_matrix(const std::filesystem::path& matrix_path, const PipelineConfig& config,
                                              const std::filesystem::path& out_dir, std::ostream& log);

// Entry point shared by the deid executable and the tests. args[0] is the
// program name. Returns 0 on success, 1 on invalid input or usage and 2 on
// I/O or backend failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deid::cli

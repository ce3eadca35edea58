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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/annot_io/inline_xml.hpp"
#include "deid/core/types.hpp"
#include "deid/corpusstats/corpusstats.hpp"

namespace deid::recognize {
class Transport;
}

namespace deid::syngen {

inline constexpr std::string_view kExemplarSlot = "<discharge summary>";

struct PromptTemplate {
  std::string id;  // "A", "B", "C" or a custom name
  std::string body;
  std::vector<std::string> required_sections;
  std::vector<std::string> entity_inventory;

  // Throws SlotMissing unless the body holds exactly one exemplar slot.
  void validate() const;
};

// The shipped templates A, B and C. Throws InvalidConfig for other ids.
const PromptTemplate& builtin_template(std::string_view id);

// A ".txt" file becomes a custom template body; a ".json" file holds
// {"id", "body" | "body_path", "required_sections", "entity_inventory"}.
PromptTemplate load_template(const std::filesystem::path& path);

// Replaces the slot with the exemplar serialised as an enveloped inline-XML
// record.
std::string render_prompt(const PromptTemplate& tmpl, const Document& exemplar);

struct FilterPolicy {
  bool require_record_envelope = true;
  std::size_t min_annotations = 3;  // entities outside the catch-all, after mapping
  std::size_t min_tokens = 100;
  std::size_t max_tokens = 4500;
  double printable_ratio_min = 0.97;
  double max_repeat_ratio = 0.15;  // most frequent word / all words
  annot_io::UnknownTagAction unknown_tags = annot_io::UnknownTagAction::kReject;

  // Throws InvalidConfig.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static FilterPolicy from_json(const nlohmann::json& j);
};

struct GenerationJob {
  PromptTemplate tmpl = builtin_template("B");
  Corpus exemplars;
  unsigned fanout = 1;
  double temperature = 0.9;
  std::string endpoint;
  std::chrono::milliseconds timeout{120000};
  unsigned concurrency = 4;
  unsigned retry = 0;
  FilterPolicy validation;

  // Throws InvalidConfig.
  void validate() const;
  // {"template": "A"|"B"|"C"|path, "exemplars": jsonl path, "fanout",
  //  "temperature", "endpoint", "timeout_ms", "concurrency", "retry",
  //  "filter": {...}}. Relative paths resolve against base_dir.
  static GenerationJob from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

struct Attempt {
  std::string exemplar_id;
  unsigned replicate = 0;
  bool ok = false;
  std::string text;        // when ok
  std::string error_code;  // otherwise
  std::string error;
  unsigned requests = 0;

  // Idempotency key and request id: "<exemplar_id>#<replicate>".
  std::string key() const;
};

struct GenerationResult {
  std::vector<Attempt> attempts;  // exemplar order, then replicate

  std::size_t scheduled() const { return attempts.size(); }
  std::size_t succeeded() const;
  std::size_t failed() const;
  nlohmann::ordered_json to_json() const;
};

// Sends {"id", "prompt", "temperature"} per attempt and expects {"id", "text"}
// (or {"id", "error"}). Failures are recorded on the attempt. Timeouts and
// transport errors are retried up to job.retry times.
GenerationResult generate(const GenerationJob& job, recognize::Transport& transport);

// raw/<exemplar>/<replicate>.txt for each success plus raw/attempts.jsonl.
void write_raw(const GenerationResult& result, const std::filesystem::path& out_dir);
GenerationResult read_raw(const std::filesystem::path& out_dir);

struct RawOutput {
  std::string id;
  std::string text;
};

std::vector<RawOutput> successful_outputs(const GenerationResult& result);

struct Reject {
  std::string id;
  std::string reason;  // no_envelope, malformed_markup, unknown_tag, ...
  std::string detail;
};

struct FilterResult {
  Corpus accepted;  // canonical schema
  std::vector<Reject> rejects;

  nlohmann::ordered_json summary() const;
  std::string rejects_jsonl() const;
};

// Source tags a generation may use: every source tag of the canonical map,
// the canonical tags, and the template's entity inventory.
TagSchema generation_schema(const PromptTemplate& tmpl);

// Checks, in order: envelope, markup, tags, length, annotation count,
// printable ratio, repetition. The first failure is the reject reason.
// Accepted documents are mapped into the canonical schema.
FilterResult filter_outputs(const std::vector<RawOutput>& raw, const FilterPolicy& policy, const TagSchema& schema);

struct QualityReport {
  double bert_f1_mean = 0;
  double bert_precision_mean = 0;
  double bert_recall_mean = 0;
  double avg_length_words = 0;
  std::size_t n_generated = 0;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

// Each generated document is scored against its source exemplar (the part
// of its id before '#'); ids without a matching exemplar use reference
// document (i mod |reference|). Throws EmptyCorpus.
QualityReport score_generation_quality(const Corpus& generated, const Corpus& reference,
                                       corpusstats::Embedder& embedder);

}  // namespace deid::syngen

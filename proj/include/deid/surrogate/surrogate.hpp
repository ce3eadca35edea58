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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"

namespace deid::surrogate {

struct AgePolicy {
  enum class Kind { kPreserve, kJitter };
  Kind kind = Kind::kPreserve;
  int k = 0;  // jitter half-width in years
};

struct SurrogateConfig {
  std::uint64_t seed = 0;
  int date_offset_days = 30;
  int time_offset_minutes = 60;
  // Replacement values for PATIENT, DOCTOR, LOCATION and HOSPITAL.
  std::map<TagId, std::vector<std::string>> lexicons;
  AgePolicy age_policy;
  // Only "format_preserving" exists.
  std::string id_policy = "format_preserving";
  // Share one plan across every document of a corpus (linkage studies).
  bool global_plan = false;

  // Built-in lexicons, preserve ages, seed 0.
  static SurrogateConfig defaults();
  // Throws MissingLexicon / InvalidConfig.
  void validate() const;
};

const std::map<TagId, std::vector<std::string>>& builtin_lexicons();

// One value per line; blank lines skipped. Throws MissingLexicon when the
// file has no values and IoError when it cannot be read.
std::vector<std::string> read_lexicon(const std::filesystem::path& path);

// Keys: seed, date_offset_days, time_offset_minutes, locale_lexicons
// ({tag: path}), age_policy ("preserve" | {"jitter": k}), id_policy,
// global_plan. Lexicon paths are resolved against base_dir. Unknown keys are
// rejected.
SurrogateConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
SurrogateConfig load_config(const std::filesystem::path& path);

// ASCII case-fold plus whitespace collapse/trim.
std::string normalize_surface(std::string_view surface);

struct PlanKey {
  TagId tag;
  std::string normalized;

  friend auto operator<=>(const PlanKey&, const PlanKey&) = default;
};

struct AuditEntry {
  std::string doc_id;
  TagId tag;
  std::string original;
  std::string replacement;
  std::string reason;  // empty for ordinary bindings

  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

struct SurrogatePlan {
  std::string scope;  // document id, or "" for a corpus-wide plan
  std::map<PlanKey, std::string> bindings;
  std::vector<AuditEntry> fallbacks;

  const std::string* find(const TagId& tag, std::string_view surface) const;

  friend bool operator==(const SurrogatePlan&, const SurrogatePlan&) = default;
};

SurrogatePlan plan_surrogates(const Document& doc, const SurrogateConfig& cfg);
// One plan covering every document; used when cfg.global_plan is set.
SurrogatePlan plan_surrogates_global(const std::vector<Document>& docs, const SurrogateConfig& cfg);

// Throws PlanIncomplete when a non-OTHERS entity has no binding.
Document apply_surrogates(const Document& doc, const SurrogatePlan& plan);

// Replaces every non-OTHERS entity with "[TAG]".
Document redact(const Document& doc);

enum class ScrubMode { kRedact, kSurrogate };

Document scrub(const Document& doc, ScrubMode mode, const SurrogateConfig& cfg = SurrogateConfig::defaults());

struct ScrubResult {
  Corpus corpus;
  std::vector<SurrogatePlan> plans;  // one per document (empty in redact mode)
};

// Documents are processed on up to `threads` workers; output order and
// content do not depend on the thread count.
ScrubResult scrub_corpus(const Corpus& corpus, ScrubMode mode, const SurrogateConfig& cfg, unsigned threads = 1);

// Bindings and fallbacks as JSON lines. Contains original PHI.
std::string audit_jsonl(const std::vector<SurrogatePlan>& plans);

}  // namespace deid::surrogate

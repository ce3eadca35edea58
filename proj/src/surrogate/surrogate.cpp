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

#include "deid/surrogate/surrogate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"
#include "deid/core/rng.hpp"
#include "deid/core/utf8.hpp"
#include "deid/surrogate/temporal.hpp"
#include "deid/tagmap/tagmap.hpp"

namespace deid::surrogate {
namespace {

constexpr std::string_view kOther = "OTHERS";
constexpr int kMaxDraws = 32;

const std::vector<std::string> kNames{
    "Aarav Mehta",   "Ananya Iyer",   "Arjun Nair",      "Bhavna Kulkarni",     "Chetan Rao",   "Deepika Menon",
    "Farhan Qureshi", "Gauri Deshpande", "Harish Pillai", "Ishita Bose",         "Jatin Malhotra", "Kavya Reddy",
    "Lakshmi Subramanian", "Manoj Tiwari", "Meera Joshi", "Nikhil Bhatt",        "Pooja Saxena", "Pranav Ghosh",
    "Rashmi Patil",  "Rohit Chauhan", "Sahil Kapoor",    "Shreya Banerjee",     "Siddharth Varma", "Sunita Yadav",
    "Tanvi Agarwal", "Uday Shetty",   "Varun Mishra",    "Vidya Krishnan",      "Yash Thakur",  "Zoya Siddiqui"};

const std::vector<std::string> kCities{"Pune",     "Nagpur",  "Indore",     "Bhopal",  "Surat",
                                       "Vadodara", "Coimbatore", "Madurai", "Mysuru",  "Visakhapatnam",
                                       "Lucknow",  "Kanpur",  "Jaipur",     "Udaipur", "Dehradun",
                                       "Ranchi",   "Guwahati", "Raipur",    "Nashik",  "Thrissur"};

const std::vector<std::string> kHospitals{"Sunrise Multispeciality Hospital",
                                          "Lotus Care Hospital",
                                          "Greenfield Medical Centre",
                                          "Sahyadri Nursing Home",
                                          "Riverside General Hospital",
                                          "Ashoka Memorial Hospital",
                                          "Silverline Clinic",
                                          "Navjeevan Hospital",
                                          "Lakeview Heart Institute",
                                          "Shanti Health Centre",
                                          "Meadows Children's Hospital",
                                          "Northgate Medical College Hospital"};

const std::vector<TagId> kLexiconTags{"PATIENT", "DOCTOR", "LOCATION", "HOSPITAL"};

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }
bool is_upper(char32_t c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char32_t c) { return c >= 'a' && c <= 'z'; }
bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool has_alnum(std::string_view s) {
  for (const char c : s) {
    if (is_digit(c) || is_upper(c) || is_lower(c)) return true;
  }
  return false;
}

bool has_letter(std::string_view s) {
  for (const char c : s) {
    if (is_upper(c) || is_lower(c)) return true;
  }
  return false;
}

bool all_caps(std::string_view s) {
  bool upper = false;
  for (const char c : s) {
    if (is_lower(c)) return false;
    upper = upper || is_upper(c);
  }
  return upper;
}

std::string to_upper(std::string s) {
  for (auto& c : s) {
    if (is_lower(c)) c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (const char c : s) {
    if (is_ws(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

// digit->digit, letter->letter of the same case; everything else kept.
std::string scramble(std::string_view s, SplitMix64& rng, bool digits_only) {
  std::string out;
  for (const char32_t c : utf8::decode(s)) {
    if (is_digit(c)) {
      utf8::append(out, U'0' + static_cast<char32_t>(rng.below(10)));
    } else if (!digits_only && is_upper(c)) {
      utf8::append(out, U'A' + static_cast<char32_t>(rng.below(26)));
    } else if (!digits_only && is_lower(c)) {
      utf8::append(out, U'a' + static_cast<char32_t>(rng.below(26)));
    } else {
      utf8::append(out, c);
    }
  }
  return out;
}

struct Scope {
  const SurrogateConfig& cfg;
  std::string id;
  std::set<std::string> originals;
  std::set<std::pair<TagId, std::string>> used;
};

// A replacement must differ from every original surface in scope and must not
// carry one of length >= 4 inside it.
bool acceptable(const std::string& candidate, const Scope& scope) {
  if (candidate.empty()) return false;
  for (const auto& o : scope.originals) {
    if (candidate == o) return false;
    if (utf8::length(o) >= 4 && candidate.find(o) != std::string::npos) return false;
  }
  return true;
}

bool fresh(const TagId& tag, const std::string& candidate, const Scope& scope) {
  return acceptable(candidate, scope) && !scope.used.count({tag, candidate});
}

std::optional<std::string> draw_scrambled(std::string_view s, SplitMix64& rng, bool digits_only, const Scope& scope) {
  if (!(digits_only ? std::any_of(s.begin(), s.end(), [](char c) { return is_digit(c); }) : has_alnum(s))) {
    return std::nullopt;
  }
  for (int i = 0; i < kMaxDraws; ++i) {
    auto candidate = scramble(s, rng, digits_only);
    if (acceptable(candidate, scope)) return candidate;
  }
  return std::nullopt;
}

const std::vector<std::string>& lexicon_for(const TagId& tag, const SurrogateConfig& cfg) {
  const auto it = cfg.lexicons.find(tag);
  if (it == cfg.lexicons.end() || it->second.empty()) {
    throw Error(ErrorCode::kMissingLexicon, "no lexicon configured for tag " + tag);
  }
  return it->second;
}

class Planner {
 public:
  explicit Planner(Scope& scope) : scope_(scope) {}

  std::string replace(const std::string& doc_id, const EntitySpan& e, SplitMix64& rng, SurrogatePlan& plan) {
    const auto fallback = [&](std::string replacement, std::string reason) {
      plan.fallbacks.push_back({doc_id, e.tag, e.surface, replacement, std::move(reason)});
      return replacement;
    };
    const std::string placeholder = "[" + e.tag + "]";

    if (e.tag == "AGE") return age(e.surface, rng, placeholder);

    if (e.tag == "DATE") {
      const auto shifted = shift_temporal(e.surface, scope_.cfg.date_offset_days, scope_.cfg.time_offset_minutes);
      std::string reason;
      if (!shifted) {
        reason = std::string(to_string(ErrorCode::kUnparseableDate));
      } else if (!acceptable(*shifted, scope_)) {
        reason = "collides_with_original";
      } else {
        return *shifted;
      }
      return fallback(draw_scrambled(e.surface, rng, true, scope_).value_or(placeholder), reason);
    }

    if (e.tag == "PATIENT" || e.tag == "DOCTOR") return person(e, rng, placeholder, fallback);

    if ((e.tag == "LOCATION" && has_letter(e.surface)) || e.tag == "HOSPITAL") {
      const auto& lex = lexicon_for(e.tag, scope_.cfg);
      const bool caps = all_caps(e.surface);
      for (int i = 0; i < kMaxDraws; ++i) {
        auto candidate = lex[rng.below(lex.size())];
        if (caps) candidate = to_upper(candidate);
        if (fresh(e.tag, candidate, scope_)) return candidate;
      }
      return fallback(draw_scrambled(e.surface, rng, false, scope_).value_or(placeholder), "lexicon_exhausted");
    }

    // ID, CONTACT, digit-only LOCATION and any other tag.
    return draw_scrambled(e.surface, rng, false, scope_).value_or(placeholder);
  }

 private:
  std::string age(const std::string& surface, SplitMix64& rng, const std::string& placeholder) {
    const auto& policy = scope_.cfg.age_policy;
    if (policy.kind == AgePolicy::Kind::kPreserve || policy.k == 0) return surface;
    const auto first = surface.find_first_of("0123456789");
    if (first == std::string::npos) return placeholder;
    auto last = surface.find_first_not_of("0123456789", first);
    if (last == std::string::npos) last = surface.size();
    if (last - first > 9) return draw_scrambled(surface, rng, true, scope_).value_or(placeholder);
    const long long value = std::stoll(surface.substr(first, last - first));
    const auto k = static_cast<std::uint64_t>(policy.k);
    for (int i = 0; i < kMaxDraws; ++i) {
      const auto d = static_cast<long long>(rng.below(2 * k));
      const long long delta = d < policy.k ? -(policy.k - d) : d - policy.k + 1;
      long long jittered = value + delta;
      if (jittered < 0) jittered = value + (delta < 0 ? -delta : delta);
      auto candidate = surface.substr(0, first) + std::to_string(jittered) + surface.substr(last);
      if (acceptable(candidate, scope_)) return candidate;
    }
    return placeholder;
  }

  template <class Fallback>
  std::string person(const EntitySpan& e, SplitMix64& rng, const std::string& placeholder, Fallback& fallback) {
    EntitySpan rest = make_span(e.surface, 0, utf8::length(e.surface), "NAME");
    if (!tagmap::strip_titles(e.surface, rest, tagmap::NormalizationPolicy{})) return placeholder;
    const utf8::CharIndex index(e.surface);
    const std::string prefix = e.surface.substr(0, index.byte_offset(rest.start));
    const bool single = word_count(rest.surface) <= 1;
    const bool caps = all_caps(rest.surface);
    const auto& lex = lexicon_for(e.tag, scope_.cfg);
    for (int i = 0; i < kMaxDraws; ++i) {
      std::string name = lex[rng.below(lex.size())];
      if (single) name = name.substr(0, name.find(' '));
      if (caps) name = to_upper(name);
      auto candidate = prefix + name;
      if (fresh(e.tag, candidate, scope_)) return candidate;
    }
    return fallback(draw_scrambled(e.surface, rng, false, scope_).value_or(placeholder), "lexicon_exhausted");
  }

  Scope& scope_;
};

using Occurrence = std::pair<const std::string*, const EntitySpan*>;

// Per-key adjustments used to repair boundary leaks: a salt forces a fresh
// draw, a placeholder gives up on realism for that key.
struct Overrides {
  std::map<PlanKey, std::uint64_t> salt;
  std::set<PlanKey> placeholder;
};

SurrogatePlan build_plan(const std::vector<Occurrence>& occurrences, std::string scope_id, const SurrogateConfig& cfg,
                         const Overrides& overrides) {
  Scope scope{cfg, std::move(scope_id), {}, {}};
  for (const auto& [_, e] : occurrences) {
    if (e->tag != kOther) scope.originals.insert(e->surface);
  }
  SurrogatePlan plan;
  plan.scope = scope.id;
  Planner planner(scope);
  for (const auto& [doc_id, e] : occurrences) {
    if (e->tag == kOther) continue;
    PlanKey key{e->tag, normalize_surface(e->surface)};
    if (plan.bindings.count(key)) continue;
    std::uint64_t h = hash_combine(fnv1a(""), cfg.seed);
    h = hash_combine(h, std::string_view(scope.id));
    h = hash_combine(h, std::string_view(key.tag));
    h = hash_combine(h, std::string_view(key.normalized));
    if (const auto it = overrides.salt.find(key); it != overrides.salt.end()) h = hash_combine(h, it->second);
    SplitMix64 rng(h);
    std::string replacement;
    if (overrides.placeholder.count(key)) {
      replacement = "[" + e->tag + "]";
      plan.fallbacks.push_back({*doc_id, e->tag, e->surface, replacement, "boundary_leak"});
    } else {
      replacement = planner.replace(*doc_id, *e, rng, plan);
    }
    scope.used.insert({e->tag, replacement});
    plan.bindings.emplace(std::move(key), std::move(replacement));
  }
  return plan;
}

template <class Replace>
Document rewrite(const Document& doc, Replace&& replacement_for) {
  validate_document(doc);
  const utf8::CharIndex index(doc.text);
  Document out;
  out.id = doc.id;
  out.meta = doc.meta;
  std::size_t prev = 0;       // char offset into doc.text
  std::size_t out_chars = 0;  // char length of out.text
  for (const auto& e : doc.entities) {
    const auto gap = index.slice(doc.text, prev, e.start);
    out.text += gap;
    out_chars += e.start - prev;
    const std::string& replacement = replacement_for(e);
    const auto len = utf8::length(replacement);
    out.text += replacement;
    out.entities.push_back({out_chars, out_chars + len, e.tag, replacement});
    out_chars += len;
    prev = e.end;
  }
  out.text += index.slice(doc.text, prev, index.size());
  return out;
}

bool preserved_by_policy(const EntitySpan& e, const SurrogateConfig& cfg) {
  return e.tag == "AGE" && (cfg.age_policy.kind == AgePolicy::Kind::kPreserve || cfg.age_policy.k == 0);
}

// Keys whose replacements, together with neighbouring text, spell out an
// original PHI surface (length >= 4) that the input only had inside entities.
std::set<PlanKey> boundary_leaks(const Document& doc, const Document& out, const SurrogateConfig& cfg) {
  const utf8::CharIndex in_index(doc.text);
  std::string residual;
  std::size_t prev = 0;
  for (const auto& e : doc.entities) {
    if (e.tag == kOther) continue;
    residual += in_index.slice(doc.text, prev, e.start);
    residual += '\0';
    prev = e.end;
  }
  residual += in_index.slice(doc.text, prev, in_index.size());

  std::set<PlanKey> keys;
  const utf8::CharIndex out_index(out.text);
  for (const auto& e : doc.entities) {
    if (e.tag == kOther || preserved_by_policy(e, cfg) || utf8::length(e.surface) < 4) continue;
    if (residual.find(e.surface) != std::string::npos) continue;
    for (auto pos = out.text.find(e.surface); pos != std::string::npos; pos = out.text.find(e.surface, pos + 1)) {
      for (std::size_t k = 0; k < out.entities.size(); ++k) {
        const auto& o = out.entities[k];
        const auto b = out_index.byte_offset(o.start), f = out_index.byte_offset(o.end);
        if (o.tag != kOther && b < pos + e.surface.size() && pos < f) {
          keys.insert({o.tag, normalize_surface(doc.entities[k].surface)});
        }
      }
    }
  }
  return keys;
}

}  // namespace

Document apply_surrogates(const Document& doc, const SurrogatePlan& plan);

namespace {

SurrogatePlan plan_with_repair(const std::vector<Occurrence>& occurrences, const std::vector<const Document*>& docs,
                               const std::string& scope_id, const SurrogateConfig& cfg) {
  constexpr int kRounds = 16;
  constexpr std::uint64_t kRedraws = 4;
  Overrides overrides;
  SurrogatePlan plan;
  for (int round = 0; round < kRounds; ++round) {
    plan = build_plan(occurrences, scope_id, cfg, overrides);
    std::set<PlanKey> leaks;
    for (const auto* doc : docs) leaks.merge(boundary_leaks(*doc, apply_surrogates(*doc, plan), cfg));
    if (leaks.empty()) break;
    for (const auto& key : leaks) {
      if (++overrides.salt[key] > kRedraws) overrides.placeholder.insert(key);
    }
  }
  return plan;
}

}  // namespace

const std::map<TagId, std::vector<std::string>>& builtin_lexicons() {
  static const std::map<TagId, std::vector<std::string>> lexicons{
      {"PATIENT", kNames}, {"DOCTOR", kNames}, {"LOCATION", kCities}, {"HOSPITAL", kHospitals}};
  return lexicons;
}

SurrogateConfig SurrogateConfig::defaults() {
  SurrogateConfig cfg;
  cfg.lexicons = builtin_lexicons();
  return cfg;
}

void SurrogateConfig::validate() const {
  for (const auto& tag : kLexiconTags) {
    const auto it = lexicons.find(tag);
    if (it == lexicons.end() || it->second.empty()) {
      throw Error(ErrorCode::kMissingLexicon, "no lexicon configured for tag " + tag);
    }
  }
  if (age_policy.kind == AgePolicy::Kind::kJitter && age_policy.k < 0) {
    throw Error(ErrorCode::kInvalidConfig, "age jitter must be >= 0");
  }
  if (id_policy != "format_preserving") {
    throw Error(ErrorCode::kInvalidConfig, "unsupported id_policy '" + id_policy + "'");
  }
}

std::vector<std::string> read_lexicon(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  utf8::require_valid(raw, path.string());
  std::vector<std::string> values;
  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t");
    values.push_back(line.substr(b, e - b + 1));
  }
  if (values.empty()) throw Error(ErrorCode::kMissingLexicon, "lexicon " + path.string() + " is empty");
  return values;
}

SurrogateConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "surrogate config must be a JSON object");
  SurrogateConfig cfg = SurrogateConfig::defaults();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "date_offset_days") {
        cfg.date_offset_days = value.get<int>();
      } else if (key == "time_offset_minutes") {
        cfg.time_offset_minutes = value.get<int>();
      } else if (key == "locale_lexicons") {
        for (const auto& [tag, path] : value.items()) {
          std::filesystem::path p = path.get<std::string>();
          if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
          cfg.lexicons[tag] = read_lexicon(p);
        }
      } else if (key == "age_policy") {
        if (value.is_string() && value.get<std::string>() == "preserve") {
          cfg.age_policy = {};
        } else if (value.is_object() && value.size() == 1 && value.contains("jitter")) {
          cfg.age_policy = {AgePolicy::Kind::kJitter, value["jitter"].get<int>()};
        } else {
          throw Error(ErrorCode::kInvalidConfig, "age_policy must be \"preserve\" or {\"jitter\": k}");
        }
      } else if (key == "id_policy") {
        cfg.id_policy = value.get<std::string>();
      } else if (key == "global_plan") {
        cfg.global_plan = value.get<bool>();
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown surrogate config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  cfg.validate();
  return cfg;
}

SurrogateConfig load_config(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what(), SourceLocation{path.string(), 0, std::nullopt});
  }
  return config_from_json(j, path.parent_path());
}

std::string normalize_surface(std::string_view surface) {
  std::string out;
  bool pending_space = false;
  for (const char c : surface) {
    if (is_ws(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

const std::string* SurrogatePlan::find(const TagId& tag, std::string_view surface) const {
  const auto it = bindings.find(PlanKey{tag, normalize_surface(surface)});
  return it == bindings.end() ? nullptr : &it->second;
}

SurrogatePlan plan_surrogates(const Document& doc, const SurrogateConfig& cfg) {
  cfg.validate();
  validate_document(doc);
  std::vector<Occurrence> occurrences;
  for (const auto& e : doc.entities) occurrences.emplace_back(&doc.id, &e);
  return plan_with_repair(occurrences, {&doc}, cfg.global_plan ? std::string() : doc.id, cfg);
}

SurrogatePlan plan_surrogates_global(const std::vector<Document>& docs, const SurrogateConfig& cfg) {
  cfg.validate();
  std::vector<Occurrence> occurrences;
  for (const auto& doc : docs) {
    validate_document(doc);
    for (const auto& e : doc.entities) occurrences.emplace_back(&doc.id, &e);
  }
  std::vector<const Document*> all;
  for (const auto& doc : docs) all.push_back(&doc);
  return plan_with_repair(occurrences, all, std::string(), cfg);
}

Document apply_surrogates(const Document& doc, const SurrogatePlan& plan) {
  return rewrite(doc, [&](const EntitySpan& e) -> const std::string& {
    if (e.tag == kOther) return e.surface;
    const auto* replacement = plan.find(e.tag, e.surface);
    if (!replacement) {
      SourceLocation where;
      where.offset = e.start;
      throw Error(ErrorCode::kPlanIncomplete, "no binding for " + e.tag + " entity in document '" + doc.id + "'",
                  where);
    }
    return *replacement;
  });
}

Document redact(const Document& doc) {
  std::string placeholder;
  return rewrite(doc, [&](const EntitySpan& e) -> const std::string& {
    if (e.tag == kOther) return e.surface;
    placeholder = "[" + e.tag + "]";
    return placeholder;
  });
}

Document scrub(const Document& doc, ScrubMode mode, const SurrogateConfig& cfg) {
  if (mode == ScrubMode::kRedact) return redact(doc);
  return apply_surrogates(doc, plan_surrogates(doc, cfg));
}

ScrubResult scrub_corpus(const Corpus& corpus, ScrubMode mode, const SurrogateConfig& cfg, unsigned threads) {
  const auto n = corpus.documents.size();
  ScrubResult result;
  result.corpus.schema = corpus.schema;
  result.corpus.documents.resize(n);

  std::optional<SurrogatePlan> global;
  if (mode == ScrubMode::kSurrogate && cfg.global_plan) {
    global = plan_surrogates_global(corpus.documents, cfg);
  } else if (mode == ScrubMode::kSurrogate) {
    result.plans.resize(n);
  }

  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        const auto& doc = corpus.documents[i];
        if (mode == ScrubMode::kRedact) {
          result.corpus.documents[i] = redact(doc);
        } else if (global) {
          result.corpus.documents[i] = apply_surrogates(doc, *global);
        } else {
          result.plans[i] = plan_surrogates(doc, cfg);
          result.corpus.documents[i] = apply_surrogates(doc, result.plans[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (global) result.plans.push_back(std::move(*global));
  return result;
}

std::string audit_jsonl(const std::vector<SurrogatePlan>& plans) {
  std::string out;
  for (const auto& plan : plans) {
    for (const auto& [key, replacement] : plan.bindings) {
      nlohmann::ordered_json j;
      j["kind"] = "binding";
      j["scope"] = plan.scope;
      j["tag"] = key.tag;
      j["key"] = key.normalized;
      j["replacement"] = replacement;
      out += j.dump() + "\n";
    }
    for (const auto& f : plan.fallbacks) {
      nlohmann::ordered_json j;
      j["kind"] = "fallback";
      j["doc_id"] = f.doc_id;
      j["tag"] = f.tag;
      j["original"] = f.original;
      j["replacement"] = f.replacement;
      j["reason"] = f.reason;
      out += j.dump() + "\n";
    }
  }
  return out;
}

}  // namespace deid::surrogate

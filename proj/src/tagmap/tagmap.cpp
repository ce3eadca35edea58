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

#include "deid/tagmap/tagmap.hpp"

#include <cctype>
#include <cstdio>
#include <set>

#include "deid/core/error.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/core/utf8.hpp"

namespace deid::tagmap {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json schema_to_json(const TagSchema& s) {
  ordered_json j;
  j["name"] = s.name;
  j["tags"] = s.tags;
  j["other"] = s.other;
  return j;
}

TagSchema schema_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "schema must be an object");
  TagSchema s;
  s.name = j.value("name", std::string{});
  s.tags = j.at("tags").get<std::vector<TagId>>();
  s.other = j.at("other").get<TagId>();
  s.validate();
  return s;
}

}  // namespace

std::string normalize_tag(std::string_view tag) {
  std::string out;
  out.reserve(tag.size());
  bool pending_sep = false;
  for (const char c : tag) {
    if (c == ' ' || c == '_' || c == '-' || c == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out.push_back('_');
    pending_sep = false;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

TagMap::TagMap(TagSchema source, TagSchema target, std::map<std::string, TagId> rules, TagId fallback)
    : source_(std::move(source)), target_(std::move(target)), fallback_(std::move(fallback)) {
  target_.validate();
  if (!target_.contains(fallback_)) {
    throw Error(ErrorCode::kInvalidConfig, "default tag '" + fallback_ + "' is not in the target schema");
  }
  for (auto& [src, dst] : rules) {
    if (!target_.contains(dst)) {
      throw Error(ErrorCode::kInvalidConfig, "rule " + src + " -> " + dst + " targets a tag outside the schema");
    }
    rules_[normalize_tag(src)] = std::move(dst);
  }
}

const TagId* TagMap::find_rule(std::string_view source_tag) const {
  const auto it = rules_.find(normalize_tag(source_tag));
  return it == rules_.end() ? nullptr : &it->second;
}

TagId TagMap::map(std::string_view source_tag) const {
  const auto* hit = find_rule(source_tag);
  return hit ? *hit : fallback_;
}

ordered_json TagMap::to_json() const {
  ordered_json j;
  j["source"] = schema_to_json(source_);
  j["target"] = schema_to_json(target_);
  ordered_json rules = ordered_json::object();
  for (const auto& [k, v] : rules_) rules[k] = v;
  j["rules"] = std::move(rules);
  j["default"] = fallback_;
  return j;
}

TagMap TagMap::from_json(const json& j) {
  try {
    for (const auto& [key, _] : j.items()) {
      if (key != "source" && key != "target" && key != "rules" && key != "default" && key != "version") {
        throw Error(ErrorCode::kInvalidConfig, "unknown tag map field '" + key + "'");
      }
    }
    return TagMap(schema_from_json(j.at("source")), schema_from_json(j.at("target")),
                  j.at("rules").get<std::map<std::string, TagId>>(), j.at("default").get<TagId>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("tag map: ") + e.what());
  }
}

ordered_json MappingAudit::to_json() const {
  ordered_json j;
  j["total_entities"] = total_entities;
  ordered_json hits = ordered_json::object();
  for (const auto& [k, v] : rule_hits) hits[k] = v;
  j["rule_hits"] = std::move(hits);
  ordered_json defaults = ordered_json::object();
  for (const auto& [k, v] : default_hits) defaults[k] = v;
  j["default_hits"] = std::move(defaults);
  return j;
}

MappedCorpus apply_tagmap(const Corpus& corpus, const TagMap& map) {
  MappedCorpus out;
  out.corpus.schema = map.target();
  out.corpus.documents.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    Document mapped = doc;
    for (auto& e : mapped.entities) {
      ++out.audit.total_entities;
      if (const auto* hit = map.find_rule(e.tag)) {
        ++out.audit.rule_hits[e.tag];
        e.tag = *hit;
      } else {
        ++out.audit.default_hits[e.tag];
        e.tag = map.fallback();
      }
    }
    out.corpus.documents.push_back(std::move(mapped));
  }
  return out;
}

const std::vector<std::pair<std::string, TagId>>& canonical_table() {
  static const auto table = [] {
    const std::vector<std::pair<TagId, std::vector<std::string>>> rows{
        {"DATE", {"Treatment_Date", "Patient_DOB", "Investigation_Date", "Admission Date", "Procedure_Date", "Date"}},
        {"HOSPITAL", {"Ward_Location", "Hospital_Name", "Department"}},
        {"ID", {"Patient_ID", "Misc_Medical_ID", "Employee_ID", "Admission Number"}},
        {"AGE", {"Age"}},
        {"DOCTOR", {"Doctor_Name", "Staff_Name", "Prepared by", "Signature", "Doctor_Signature",
                    "Signature of Consultant"}},
        {"PATIENT", {"Patient_Name", "Gaurdian_Name", "Patient_Signature", "Patient_Spouse", "Family_Member_Name"}},
        {"CONTACT", {"Zip", "Phone_No", "Landline", "IP_Address", "Phone", "Contact_Info", "Contact_Number",
                     "Contact_No", "Mobile", "Phone Number", "Patient_Phone", "Email", "Email_ID",
                     "Contact Information", "Phone No"}},
        {"LOCATION", {"City", "State", "Country", "Street", "Other_Location", "Correspondence_Address",
                      "Contact_Address", "Contact Information", "Pin", "Pin Code", "Pin_No", "Postal_Code",
                      "Address", "Contact_Address"}},
    };
    std::vector<std::pair<std::string, TagId>> out;
    std::set<std::string> seen;
    for (const auto& [target, sources] : rows) {
      for (const auto& s : sources) {
        // first row wins for duplicated sources
        if (seen.insert(normalize_tag(s)).second) out.emplace_back(s, target);
      }
    }
    return out;
  }();
  return table;
}

TagMap builtin_canonical_map(const std::vector<TagId>& source_inventory,
                             const std::map<std::string, TagId>& overrides) {
  const auto& canonical = canonical_schema();
  std::map<std::string, TagId> lookup;
  for (const auto& t : canonical.tags) lookup[normalize_tag(t)] = t;
  for (const auto& [src, dst] : canonical_table()) lookup[normalize_tag(src)] = dst;
  for (const auto& [src, dst] : overrides) lookup[normalize_tag(src)] = dst;

  std::map<std::string, TagId> rules;
  for (const auto& t : canonical.tags) rules[t] = t;
  for (const auto& t : source_inventory) {
    const auto it = lookup.find(normalize_tag(t));
    if (it != lookup.end()) rules[t] = it->second;
  }

  TagSchema source;
  source.name = "source";
  std::set<std::string> seen;
  for (const auto& t : source_inventory) {
    if (seen.insert(t).second) source.tags.push_back(t);
  }
  source.other = canonical.other;
  if (!seen.count(source.other)) source.tags.push_back(source.other);
  return TagMap(std::move(source), canonical, std::move(rules), canonical.other);
}

const TagSchema& comparison_schema() {
  static const TagSchema schema{"comparison-6", {"DATE", "NAME", "LOCATION", "AGE", "ID", "CONTACT", "OTHERS"},
                                "OTHERS"};
  return schema;
}

ComparisonMapping commercial_comparison_map() {
  std::map<std::string, TagId> rules{
      {"CONTACT", "CONTACT"}, {"PATIENT", "NAME"}, {"DOCTOR", "NAME"},        {"ID", "ID"},
      {"DATE", "DATE"},       {"LOCATION", "LOCATION"}, {"HOSPITAL", "LOCATION"}, {"AGE", "AGE"},
      {"OTHERS", "OTHERS"},   {"NAME", "NAME"},
  };
  return ComparisonMapping{TagMap(canonical_schema(), comparison_schema(), std::move(rules), "OTHERS"), {}};
}

bool strip_titles(std::string_view text, EntitySpan& span, const NormalizationPolicy& policy) {
  const std::u32string cps = utf8::decode(span.surface);
  std::size_t pos = 0;
  bool progressed = true;
  while (progressed && pos < cps.size()) {
    progressed = false;
    for (const auto& title : policy.title_lexicon) {
      const std::u32string t = utf8::decode(title);
      if (pos + t.size() > cps.size()) continue;
      bool match = true;
      for (std::size_t k = 0; k < t.size() && match; ++k) {
        const char32_t a = cps[pos + k], b = t[k];
        const auto lower = [](char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; };
        match = lower(a) == lower(b);
      }
      if (!match) continue;
      std::size_t next = pos + t.size();
      if (next < cps.size() && cps[next] == U'.') {
        ++next;
      } else if (next < cps.size() && !is_space(cps[next])) {
        continue;  // "Drake" is not "Dr"
      }
      while (next < cps.size() && is_space(cps[next])) ++next;
      pos = next;
      progressed = true;
      break;
    }
  }
  if (pos == 0) return true;
  if (pos >= cps.size()) return false;
  span = make_span(text, span.start + pos, span.end, span.tag);
  return true;
}

MappedCorpus apply_comparison(const Corpus& corpus, const ComparisonMapping& mapping, TitleStripAudit* strip_audit) {
  MappedCorpus out = apply_tagmap(corpus, mapping.map);
  for (auto& doc : out.corpus.documents) {
    std::vector<EntitySpan> kept;
    kept.reserve(doc.entities.size());
    for (auto& e : doc.entities) {
      if (e.tag != mapping.policy.name_tag) {
        kept.push_back(std::move(e));
        continue;
      }
      const auto before = e.start;
      if (!strip_titles(doc.text, e, mapping.policy)) {
        if (strip_audit) ++strip_audit->dropped;
        continue;
      }
      if (strip_audit && e.start != before) ++strip_audit->stripped;
      kept.push_back(std::move(e));
    }
    doc.entities = std::move(kept);
  }
  return out;
}

ordered_json TagDistribution::to_json() const {
  ordered_json j;
  ordered_json tags = ordered_json::object();
  for (const auto& [tag, c] : per_tag) tags[tag] = {{"entities", c.entities}, {"tokens", c.tokens}};
  j["per_tag"] = std::move(tags);
  j["total_entities"] = total_entities;
  j["total_entity_tokens"] = total_entity_tokens;
  return j;
}

std::string TagDistribution::to_table(const TagSchema& schema) const {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %10s %10s\n", "Tag", "Entities", "Tokens");
  out += line;
  for (const auto& tag : schema.tags) {
    const auto it = per_tag.find(tag);
    const TagCount c = it == per_tag.end() ? TagCount{} : it->second;
    std::snprintf(line, sizeof line, "%-12s %10zu %10zu\n", tag.c_str(), c.entities, c.tokens);
    out += line;
  }
  for (const auto& [tag, c] : per_tag) {
    if (schema.contains(tag)) continue;
    std::snprintf(line, sizeof line, "%-12s %10zu %10zu\n", tag.c_str(), c.entities, c.tokens);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-12s %10zu %10zu\n", "Total", total_entities, total_entity_tokens);
  out += line;
  return out;
}

TagDistribution tag_distribution(const Corpus& corpus) {
  TagDistribution dist;
  for (const auto& t : corpus.schema.tags) dist.per_tag[t];
  for (const auto& doc : corpus.documents) {
    for (const auto& e : doc.entities) {
      auto& c = dist.per_tag[e.tag];
      const auto n = tokenize(e.surface).tokens.size();
      ++c.entities;
      c.tokens += n;
      ++dist.total_entities;
      dist.total_entity_tokens += n;
    }
  }
  return dist;
}

}  // namespace deid::tagmap

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

#include "deid/recognize/rules.hpp"

#include <algorithm>
#include <sstream>

#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"
#include "deid/core/utf8.hpp"

namespace deid::recognize {
namespace {

using nlohmann::json;

constexpr const char* kMonth =
    "(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec|January|February|March|April|June|July|August|"
    "September|October|November|December)";

Rulebook make_builtin() {
  Rulebook b;
  b.schema = canonical_schema();
  b.priority = {"ID", "CONTACT", "DATE", "AGE", "DOCTOR", "PATIENT", "HOSPITAL", "LOCATION"};
  const std::string name = R"([A-Z][A-Za-z]+(?:[ ]+[A-Z][A-Za-z]+){0,2})";
  b.patterns = {
      {"ID", R"(\bCRNO\s*[:#-]?\s*(\d{6,}))", 1, true},
      {"ID", R"(\bADM-\d{6,}\b)", 0, false},
      {"ID", R"(\b(?:UHID|MRN|IP\s*No\.?|Reg\.?\s*No\.?)\s*[:#-]?\s*([A-Z0-9][A-Z0-9/-]{3,}))", 1, true},
      {"CONTACT", R"(\+91[ -]?\d{10}\b)", 0, false},
      {"CONTACT", R"(\+91[ -]?\d{5}[ -]\d{5}\b)", 0, false},
      {"CONTACT", R"(\b[6-9]\d{9}\b)", 0, false},
      {"CONTACT", R"(\b0\d{2,4}[ -]\d{6,8}\b)", 0, false},
      {"CONTACT", R"(\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b)", 0, false},
      {"DATE", R"(\b\d{1,2}[-/.]\d{1,2}[-/.]\d{4}\b)", 0, false},
      {"DATE", R"(\b\d{4}-\d{2}-\d{2}\b)", 0, false},
      {"DATE", std::string(R"(\b\d{1,2}(?:st|nd|rd|th)?[ -])") + kMonth + R"(\.?,?[ -]\d{4}\b)", 0, true},
      {"DATE", std::string(R"(\b)") + kMonth + R"(\.? \d{1,2},? \d{4}\b)", 0, true},
      {"AGE", R"(\b\d{1,3}\s*(?:years?|yrs?)(?:\s*old)?\b)", 0, true},
      {"AGE", R"(\b\d{1,3}\s*/\s*[YM]\s*/\s*[MF]\b)", 0, true},
      {"AGE", R"(\b[Aa]ge\s*[:-]\s*(\d{1,3})\b)", 1, false},
      {"DOCTOR", R"(\b(?:Dr|DR)\.?\s*()" + name + ")", 1, false},
      {"PATIENT", R"(\b(?:Patient\s+)?[Nn]ame\s*[:-]\s*(?:(?:Mr|Mrs|Ms|Master|Baby)\.?\s+)?()" + name + ")", 1, false},
      {"PATIENT", R"(\b(?:Mr|Mrs|Ms)\.?\s+()" + name + ")", 1, false},
      {"HOSPITAL",
       R"(\b(?:[A-Z][A-Za-z'&.]*[ ]+){1,4}(?:Hospitals?|Clinic|Medical[ ]+Cent(?:re|er)|Nursing[ ]+Home|Institute(?:[ ]+of[ ]+[A-Z][A-Za-z]+(?:[ ]+[A-Z][A-Za-z]+)*)?)\b)",
       0, false},
      {"LOCATION", R"(\b[1-9]\d{5}\b)", 0, false},
  };
  b.lexicons = {
      {"LOCATION",
       {"New Delhi", "Delhi", "Mumbai", "Kolkata", "Chennai", "Bengaluru", "Bangalore", "Hyderabad", "Ahmedabad",
        "Pune", "Jaipur", "Lucknow", "Chandigarh", "Gurugram", "Gurgaon", "Noida", "Faridabad", "Ghaziabad",
        "Haryana", "Uttar Pradesh", "Rajasthan", "Punjab", "Bihar", "Maharashtra", "Karnataka", "Kerala",
        "Tamil Nadu", "West Bengal", "Dwarka", "Rohini", "Saket"}},
      {"HOSPITAL", {"AIIMS", "PGIMER", "Safdarjung Hospital", "Apollo", "Fortis", "Max Healthcare", "Medanta"}},
  };
  return b;
}

bool is_word_byte(char c) {
  return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (static_cast<unsigned char>(c) >= 0x80);
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

struct Candidate {
  std::size_t start, end;  // byte offsets
  std::size_t priority;
  TagId tag;
};

}  // namespace

struct RuleRecognizer::Compiled {
  TagId tag;
  std::size_t priority;
  std::optional<std::regex> regex;
  std::size_t group = 0;
  std::vector<std::string> phrases;  // lowercased
};

const Rulebook& builtin_rulebook() {
  static const Rulebook book = make_builtin();
  return book;
}

Rulebook Rulebook::from_json(const json& j, const std::filesystem::path& base_dir) {
  auto bad = [](const std::string& msg) { return Error(ErrorCode::kInvalidConfig, "rulebook: " + msg); };
  if (!j.is_object()) throw bad("not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "schema" && key != "priority" && key != "patterns" && key != "lexicons") {
      throw bad("unknown key '" + key + "'");
    }
  }
  Rulebook b;
  try {
    const auto& s = j.at("schema");
    if (s.is_string()) {
      if (s.get<std::string>() != canonical_schema().name) throw bad("unknown schema '" + s.get<std::string>() + "'");
      b.schema = canonical_schema();
    } else {
      b.schema = {s.at("name").get<std::string>(), s.at("tags").get<std::vector<TagId>>(),
                  s.at("other").get<std::string>()};
    }
    b.priority = j.at("priority").get<std::vector<TagId>>();
    for (const auto& p : j.value("patterns", json::array())) {
      for (const auto& [key, _] : p.items()) {
        if (key != "tag" && key != "regex" && key != "group" && key != "icase") throw bad("unknown pattern key '" + key + "'");
      }
      b.patterns.push_back(
          {p.at("tag").get<std::string>(), p.at("regex").get<std::string>(), p.value("group", 0), p.value("icase", false)});
    }
    for (const auto& l : j.value("lexicons", json::array())) {
      LexiconRule rule{l.at("tag").get<std::string>(), {}};
      if (l.contains("entries")) {
        rule.entries = l.at("entries").get<std::vector<std::string>>();
      } else {
        std::filesystem::path p = l.at("path").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        std::istringstream in(read_file(p));
        for (std::string line; std::getline(in, line);) {
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty()) rule.entries.push_back(line);
        }
      }
      b.lexicons.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw bad(e.what());
  }
  return b;
}

json Rulebook::to_json() const {
  json j;
  if (schema == canonical_schema()) {
    j["schema"] = schema.name;
  } else {
    j["schema"] = {{"name", schema.name}, {"tags", schema.tags}, {"other", schema.other}};
  }
  j["priority"] = priority;
  j["patterns"] = json::array();
  for (const auto& p : patterns) {
    j["patterns"].push_back({{"tag", p.tag}, {"regex", p.regex}, {"group", p.group}, {"icase", p.icase}});
  }
  j["lexicons"] = json::array();
  for (const auto& l : lexicons) j["lexicons"].push_back({{"tag", l.tag}, {"entries", l.entries}});
  return j;
}

Rulebook load_rulebook(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what(), SourceLocation{path.string(), 0, std::nullopt});
  }
  return Rulebook::from_json(j, path.parent_path());
}

RuleRecognizer::RuleRecognizer(Rulebook book) : book_(std::move(book)) {
  book_.schema.validate();
  auto priority_of = [&](const TagId& tag) {
    if (!book_.schema.contains(tag)) throw Error(ErrorCode::kInvalidConfig, "rule tag " + tag + " is not in the schema");
    const auto it = std::find(book_.priority.begin(), book_.priority.end(), tag);
    if (it == book_.priority.end()) throw Error(ErrorCode::kInvalidConfig, "rule tag " + tag + " has no priority");
    return static_cast<std::size_t>(it - book_.priority.begin());
  };
  auto compiled = std::make_shared<std::vector<Compiled>>();
  for (std::size_t i = 0; i < book_.patterns.size(); ++i) {
    const auto& p = book_.patterns[i];
    Compiled c{p.tag, priority_of(p.tag), std::nullopt, 0, {}};
    try {
      auto flags = std::regex::ECMAScript | std::regex::optimize;
      if (p.icase) flags |= std::regex::icase;
      c.regex.emplace(p.regex, flags);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::kInvalidPattern, "pattern " + std::to_string(i) + " (" + p.tag + "): " + e.what());
    }
    if (p.group < 0 || static_cast<std::size_t>(p.group) > c.regex->mark_count()) {
      throw Error(ErrorCode::kInvalidPattern,
                  "pattern " + std::to_string(i) + " (" + p.tag + ") has no group " + std::to_string(p.group));
    }
    c.group = static_cast<std::size_t>(p.group);
    compiled->push_back(std::move(c));
  }
  for (const auto& l : book_.lexicons) {
    Compiled c{l.tag, priority_of(l.tag), std::nullopt, 0, {}};
    for (const auto& e : l.entries) {
      if (e.empty()) continue;
      std::string low;
      for (const char ch : e) low.push_back(lower(ch));
      c.phrases.push_back(std::move(low));
    }
    compiled->push_back(std::move(c));
  }
  compiled_ = std::move(compiled);
}

std::vector<EntitySpan> RuleRecognizer::recognize(std::string_view text) const {
  utf8::require_valid(text, "recognizer input");
  const std::string owned(text);
  std::vector<Candidate> candidates;
  for (const auto& c : *compiled_) {
    if (c.regex) {
      for (std::sregex_iterator it(owned.begin(), owned.end(), *c.regex), end; it != end; ++it) {
        const auto& m = *it;
        if (!m[c.group].matched || m.length(c.group) == 0) continue;
        const auto b = static_cast<std::size_t>(m.position(c.group));
        candidates.push_back({b, b + static_cast<std::size_t>(m.length(c.group)), c.priority, c.tag});
      }
    } else {
      std::string low;
      for (const char ch : owned) low.push_back(lower(ch));
      for (const auto& phrase : c.phrases) {
        for (auto pos = low.find(phrase); pos != std::string::npos; pos = low.find(phrase, pos + 1)) {
          const auto end = pos + phrase.size();
          if (pos > 0 && is_word_byte(owned[pos - 1])) continue;
          if (end < owned.size() && is_word_byte(owned[end])) continue;
          candidates.push_back({pos, end, c.priority, c.tag});
        }
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const auto la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    if (a.start != b.start) return a.start < b.start;
    return a.priority < b.priority;
  });
  const utf8::CharIndex index(owned);
  std::vector<EntitySpan> spans;
  std::vector<std::pair<std::size_t, std::size_t>> taken;
  for (const auto& c : candidates) {
    const auto s = index.char_offset(c.start), e = index.char_offset(c.end);
    if (s == utf8::CharIndex::npos || e == utf8::CharIndex::npos) continue;
    const bool overlaps = std::any_of(taken.begin(), taken.end(),
                                      [&](const auto& t) { return c.start < t.second && t.first < c.end; });
    if (overlaps) continue;
    taken.emplace_back(c.start, c.end);
    spans.push_back(make_span(owned, s, e, c.tag));
  }
  sort_entities(spans);
  return spans;
}

std::vector<EntitySpan> recognize_rules(std::string_view text, const RuleRecognizer& recognizer) {
  return recognizer.recognize(text);
}

}  // namespace deid::recognize

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

#include "deid/syngen/syngen.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "deid/annot_io/jsonl.hpp"
#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"
#include "deid/core/parallel.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/core/utf8.hpp"
#include "deid/recognize/transport.hpp"
#include "deid/tagmap/tagmap.hpp"

namespace deid::syngen {
namespace detail {
extern const std::string_view kPromptA;
extern const std::string_view kPromptB;
extern const std::string_view kPromptC;
}  // namespace detail

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string trim_trailing_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

const std::vector<std::string>& section_list() {
  static const std::vector<std::string> sections{
      "Admission Details",   "Diagnosis / Chief Complaints",   "Allergies",
      "Physical Examination", "Medical History",               "Family Medical history",
      "Treatment Plan",      "Investigations",                 "Medications",
      "Follow-up Instructions", "Procedures/Lab Tests Conducted", "Special Instructions"};
  return sections;
}

std::size_t count_slots(std::string_view body) {
  std::size_t n = 0;
  for (auto pos = body.find(kExemplarSlot); pos != std::string_view::npos;
       pos = body.find(kExemplarSlot, pos + kExemplarSlot.size())) {
    ++n;
  }
  return n;
}

std::string exemplar_of(const std::string& id) {
  const auto hash = id.rfind('#');
  return hash == std::string::npos ? id : id.substr(0, hash);
}

// Keeps file names portable: anything but [A-Za-z0-9._-] becomes '_'.
std::string safe_name(const std::string& s) {
  std::string out;
  for (const char c : s) {
    const bool ok = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '.' ||
                    c == '_' || c == '-';
    out += ok ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

bool printable(char32_t cp) {
  if (cp == '\n' || cp == '\t' || cp == '\r') return true;
  if (cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp < 0xA0)) return false;
  return cp != 0xFFFD;
}

std::string fold_word(std::string_view surface) {
  std::string out;
  for (const char32_t cp : utf8::decode(surface)) {
    if (is_punct(cp)) continue;
    utf8::append(out, (cp >= 'A' && cp <= 'Z') ? cp + ('a' - 'A') : cp);
  }
  return out;
}

std::size_t word_count(const std::string& text) {
  std::size_t n = 0;
  for (const auto& t : tokenize(text).tokens) n += !fold_word(t.surface).empty();
  return n;
}

}  // namespace

void PromptTemplate::validate() const {
  const auto n = count_slots(body);
  if (n != 1) {
    throw Error(ErrorCode::kSlotMissing, "template '" + id + "' must contain exactly one " +
                                             std::string(kExemplarSlot) + " slot (found " + std::to_string(n) + ")");
  }
}

const PromptTemplate& builtin_template(std::string_view id) {
  static const std::map<std::string, PromptTemplate, std::less<>> templates = [] {
    std::map<std::string, PromptTemplate, std::less<>> m;
    m["A"] = {"A", trim_trailing_newlines(detail::kPromptA), {}, {}};
    m["B"] = {"B", trim_trailing_newlines(detail::kPromptB), section_list(), {}};
    m["C"] = {"C",
              trim_trailing_newlines(detail::kPromptC),
              section_list(),
              {"Patient Name", "Hospital_Name", "Staff_Name", "Doctor_Name", "Age", "Gaurdian_Name", "Gender",
               "Patient_ID", "Misc_Medical_ID", "Aadhar", "Driver_License", "Voter_ID", "PAN_Card", "Patient_DOB",
               "Treatment_Date", "Treatment_Time", "Phone_No", "Landline", "Email", "IP_Address", "Fax",
               "Doctor_Specialisation", "Patient_Profession", "City", "Ward_Location", "Device_Number", "Other_Info",
               "State", "Street", "Zip", "Country", "Other_Location", "Other_Govt_ID", "Insurance_Number", "Web_url"}};
    return m;
  }();
  const auto it = templates.find(id);
  if (it == templates.end()) throw Error(ErrorCode::kInvalidConfig, "no built-in template '" + std::string(id) + "'");
  return it->second;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  PromptTemplate t;
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidConfig, std::string("bad template JSON: ") + e.what(), {path.string(), 0, std::nullopt});
    }
    for (const auto& [k, v] : j.items()) {
      if (k != "id" && k != "body" && k != "body_path" && k != "required_sections" && k != "entity_inventory") {
        throw Error(ErrorCode::kInvalidConfig, "unknown template key '" + k + "'", {path.string(), 0, std::nullopt});
      }
    }
    t.id = j.value("id", path.stem().string());
    if (j.contains("body_path")) {
      t.body = trim_trailing_newlines(read_file(path.parent_path() / j["body_path"].get<std::string>()));
    } else {
      t.body = j.value("body", std::string{});
    }
    t.required_sections = j.value("required_sections", std::vector<std::string>{});
    t.entity_inventory = j.value("entity_inventory", std::vector<std::string>{});
  } else {
    t.id = path.stem().string();
    t.body = trim_trailing_newlines(read_file(path));
  }
  t.validate();
  return t;
}

std::string render_prompt(const PromptTemplate& tmpl, const Document& exemplar) {
  tmpl.validate();
  const auto pos = tmpl.body.find(kExemplarSlot);
  return tmpl.body.substr(0, pos) + annot_io::write_inline_xml(exemplar, annot_io::InlineXmlPolicy::strict()) +
         tmpl.body.substr(pos + kExemplarSlot.size());
}

void FilterPolicy::validate() const {
  if (min_tokens > max_tokens) throw Error(ErrorCode::kInvalidConfig, "filter min_tokens exceeds max_tokens");
  if (printable_ratio_min < 0 || printable_ratio_min > 1) {
    throw Error(ErrorCode::kInvalidConfig, "printable_ratio_min must lie in [0, 1]");
  }
  if (max_repeat_ratio < 0 || max_repeat_ratio > 1) {
    throw Error(ErrorCode::kInvalidConfig, "max_repeat_ratio must lie in [0, 1]");
  }
  if (unknown_tags == annot_io::UnknownTagAction::kPassthrough) {
    throw Error(ErrorCode::kInvalidConfig, "unknown tags must be rejected or mapped to the catch-all");
  }
}

nlohmann::ordered_json FilterPolicy::to_json() const {
  return {{"require_record_envelope", require_record_envelope},
          {"min_annotations", min_annotations},
          {"length_bounds", {min_tokens, max_tokens}},
          {"printable_ratio_min", printable_ratio_min},
          {"max_repeat_ratio", max_repeat_ratio},
          {"unknown_tags", unknown_tags == annot_io::UnknownTagAction::kReject ? "reject" : "map_to_others"}};
}

FilterPolicy FilterPolicy::from_json(const nlohmann::json& j) {
  FilterPolicy p;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "require_record_envelope") {
        p.require_record_envelope = v.get<bool>();
      } else if (k == "min_annotations") {
        p.min_annotations = v.get<std::size_t>();
      } else if (k == "length_bounds") {
        const auto b = v.get<std::vector<std::size_t>>();
        if (b.size() != 2) throw Error(ErrorCode::kInvalidConfig, "length_bounds must be [min, max]");
        p.min_tokens = b[0];
        p.max_tokens = b[1];
      } else if (k == "printable_ratio_min") {
        p.printable_ratio_min = v.get<double>();
      } else if (k == "max_repeat_ratio") {
        p.max_repeat_ratio = v.get<double>();
      } else if (k == "unknown_tags") {
        const auto s = v.get<std::string>();
        if (s == "reject") {
          p.unknown_tags = annot_io::UnknownTagAction::kReject;
        } else if (s == "map_to_others") {
          p.unknown_tags = annot_io::UnknownTagAction::kMapToOthers;
        } else {
          throw Error(ErrorCode::kInvalidConfig, "unknown_tags must be 'reject' or 'map_to_others'");
        }
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown filter key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad filter policy: ") + e.what());
  }
  p.validate();
  return p;
}

void GenerationJob::validate() const {
  tmpl.validate();
  if (fanout < 1) throw Error(ErrorCode::kInvalidConfig, "fanout must be at least 1");
  if (!(temperature >= 0 && temperature <= 2)) throw Error(ErrorCode::kInvalidConfig, "temperature must lie in [0, 2]");
  if (concurrency < 1) throw Error(ErrorCode::kInvalidConfig, "concurrency must be at least 1");
  std::set<std::string> ids;
  for (const auto& d : exemplars.documents) {
    if (!ids.insert(d.id).second) throw Error(ErrorCode::kInvalidConfig, "duplicate exemplar id '" + d.id + "'");
  }
  validation.validate();
}

GenerationJob GenerationJob::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  GenerationJob job;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "template") {
        const auto s = v.get<std::string>();
        job.tmpl = (s == "A" || s == "B" || s == "C") ? builtin_template(s) : load_template(resolve(s));
      } else if (k == "exemplars") {
        const auto path = resolve(v.get<std::string>());
        job.exemplars = annot_io::read_jsonl_infer(read_file(path), "exemplars");
      } else if (k == "fanout") {
        job.fanout = v.get<unsigned>();
      } else if (k == "temperature") {
        job.temperature = v.get<double>();
      } else if (k == "endpoint") {
        job.endpoint = v.get<std::string>();
      } else if (k == "timeout_ms") {
        job.timeout = std::chrono::milliseconds(v.get<long long>());
      } else if (k == "concurrency") {
        job.concurrency = v.get<unsigned>();
      } else if (k == "retry") {
        job.retry = v.get<unsigned>();
      } else if (k == "filter") {
        job.validation = FilterPolicy::from_json(v);
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown job key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad generation job: ") + e.what());
  }
  job.validate();
  return job;
}

std::string Attempt::key() const { return exemplar_id + "#" + std::to_string(replicate); }

std::size_t GenerationResult::succeeded() const {
  return static_cast<std::size_t>(std::count_if(attempts.begin(), attempts.end(), [](const Attempt& a) { return a.ok; }));
}

std::size_t GenerationResult::failed() const { return attempts.size() - succeeded(); }

nlohmann::ordered_json GenerationResult::to_json() const {
  ordered_json failures = ordered_json::array();
  for (const auto& a : attempts) {
    if (!a.ok) failures.push_back({{"id", a.key()}, {"code", a.error_code}, {"error", a.error}});
  }
  return {{"scheduled", scheduled()}, {"succeeded", succeeded()}, {"failed", failed()}, {"failures", failures}};
}

GenerationResult generate(const GenerationJob& job, recognize::Transport& transport) {
  job.validate();
  GenerationResult result;
  std::vector<std::string> prompts;
  for (const auto& ex : job.exemplars.documents) {
    prompts.push_back(render_prompt(job.tmpl, ex));
    for (unsigned r = 0; r < job.fanout; ++r) result.attempts.push_back({ex.id, r, false, {}, {}, {}, 0});
  }

  parallel_for(result.attempts.size(), job.concurrency, [&](std::size_t i) {
    auto& a = result.attempts[i];
    const json request{{"id", a.key()}, {"prompt", prompts[i / job.fanout]}, {"temperature", job.temperature}};
    for (unsigned attempt = 0;; ++attempt) {
      ++a.requests;
      try {
        const auto resp = transport.call(request, job.timeout);
        if (!resp.is_object() || resp.value("id", std::string{}) != a.key()) {
          throw Error(ErrorCode::kProtocolViolation, "response does not answer '" + a.key() + "'");
        }
        if (resp.contains("error")) {
          throw Error(ErrorCode::kBackendError,
                      resp["error"].is_string() ? resp["error"].get<std::string>() : resp["error"].dump());
        }
        if (!resp.contains("text") || !resp["text"].is_string()) {
          throw Error(ErrorCode::kProtocolViolation, "response has no 'text' string");
        }
        a.text = resp["text"].get<std::string>();
        a.ok = true;
        return;
      } catch (const Error& e) {
        const bool transient = e.code() == ErrorCode::kTimeout || e.code() == ErrorCode::kTransportError;
        if (transient && attempt < job.retry) continue;
        a.error_code = std::string(to_string(e.code()));
        a.error = e.detail();
        return;
      } catch (const std::exception& e) {
        a.error_code = std::string(to_string(ErrorCode::kBackendError));
        a.error = e.what();
        return;
      }
    }
  });
  return result;
}

void write_raw(const GenerationResult& result, const std::filesystem::path& out_dir) {
  std::string index;
  for (const auto& a : result.attempts) {
    ordered_json line{{"id", a.key()}, {"exemplar", a.exemplar_id}, {"replicate", a.replicate}, {"ok", a.ok}};
    if (a.ok) {
      const auto rel = std::filesystem::path("raw") / safe_name(a.exemplar_id) / (std::to_string(a.replicate) + ".txt");
      write_file(out_dir / rel, a.text);
      line["path"] = rel.generic_string();
    } else {
      line["code"] = a.error_code;
      line["error"] = a.error;
    }
    line["requests"] = a.requests;
    index += line.dump() + "\n";
  }
  write_file(out_dir / "raw" / "attempts.jsonl", index);
}

GenerationResult read_raw(const std::filesystem::path& out_dir) {
  GenerationResult result;
  const auto index = read_file(out_dir / "raw" / "attempts.jsonl");
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < index.size();) {
    auto end = index.find('\n', pos);
    if (end == std::string::npos) end = index.size();
    const auto line = index.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      Attempt a;
      a.exemplar_id = j.at("exemplar").get<std::string>();
      a.replicate = j.at("replicate").get<unsigned>();
      a.ok = j.at("ok").get<bool>();
      a.requests = j.value("requests", 0u);
      if (a.ok) {
        a.text = read_file(out_dir / j.at("path").get<std::string>());
      } else {
        a.error_code = j.value("code", std::string{});
        a.error = j.value("error", std::string{});
      }
      result.attempts.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, e.what(), {(out_dir / "raw" / "attempts.jsonl").string(), line_no, std::nullopt});
    }
  }
  return result;
}

std::vector<RawOutput> successful_outputs(const GenerationResult& result) {
  std::vector<RawOutput> out;
  for (const auto& a : result.attempts) {
    if (a.ok) out.push_back({a.key(), a.text});
  }
  return out;
}

nlohmann::ordered_json FilterResult::summary() const {
  std::map<std::string, std::size_t> by_reason;
  for (const auto& r : rejects) ++by_reason[r.reason];
  return {{"accepted", accepted.documents.size()}, {"rejected", rejects.size()}, {"reasons", by_reason}};
}

std::string FilterResult::rejects_jsonl() const {
  std::string out;
  for (const auto& r : rejects) {
    out += ordered_json{{"id", r.id}, {"reason", r.reason}, {"detail", r.detail}}.dump() + "\n";
  }
  return out;
}

TagSchema generation_schema(const PromptTemplate& tmpl) {
  TagSchema s;
  s.name = "generation";
  std::set<std::string> seen;
  auto add = [&](const std::string& t) {
    if (seen.insert(tagmap::normalize_tag(t)).second) s.tags.push_back(t);
  };
  for (const auto& [source, target] : tagmap::canonical_table()) add(source);
  for (const auto& t : canonical_schema().tags) add(t);
  for (const auto& t : tmpl.entity_inventory) add(t);
  s.other = canonical_schema().other;
  return s;
}

FilterResult filter_outputs(const std::vector<RawOutput>& raw, const FilterPolicy& policy, const TagSchema& schema) {
  policy.validate();
  FilterResult result;
  result.accepted.schema = canonical_schema();

  std::set<std::string> allowed;
  for (const auto& t : schema.tags) allowed.insert(tagmap::normalize_tag(t));
  const auto map = tagmap::builtin_canonical_map(schema.tags);

  annot_io::InlineXmlPolicy parse_policy;
  parse_policy.require_envelope = policy.require_record_envelope;
  parse_policy.unknown_tag_action = annot_io::UnknownTagAction::kPassthrough;

  for (const auto& r : raw) {
    auto reject = [&](const char* reason, std::string detail) { result.rejects.push_back({r.id, reason, std::move(detail)}); };

    Document doc;
    try {
      doc = annot_io::parse_inline_xml(r.text, parse_policy, schema, r.id);
    } catch (const Error& e) {
      reject(e.code() == ErrorCode::kMissingEnvelope ? "no_envelope" : "malformed_markup", e.what());
      continue;
    }

    std::string unknown;
    for (auto& e : doc.entities) {
      if (allowed.count(tagmap::normalize_tag(e.tag))) continue;
      if (policy.unknown_tags == annot_io::UnknownTagAction::kReject) {
        unknown = e.tag;
        break;
      }
      e.tag = schema.other;
    }
    if (!unknown.empty()) {
      reject("unknown_tag", "tag '" + unknown + "' is not allowed");
      continue;
    }

    const auto n_tokens = tokenize(doc.text).tokens.size();
    if (n_tokens < policy.min_tokens || n_tokens > policy.max_tokens) {
      reject("length_out_of_bounds", std::to_string(n_tokens) + " tokens, allowed [" +
                                         std::to_string(policy.min_tokens) + ", " + std::to_string(policy.max_tokens) +
                                         "]");
      continue;
    }

    Corpus one{{doc}, schema};
    auto mapped = tagmap::apply_tagmap(one, map).corpus.documents.front();
    const auto n_phi = static_cast<std::size_t>(std::count_if(
        mapped.entities.begin(), mapped.entities.end(), [](const EntitySpan& e) { return e.tag != canonical_schema().other; }));
    if (n_phi < policy.min_annotations) {
      reject("too_few_annotations",
             std::to_string(n_phi) + " annotations, need " + std::to_string(policy.min_annotations));
      continue;
    }

    const auto cps = utf8::decode(r.text);
    const auto n_printable = static_cast<std::size_t>(std::count_if(cps.begin(), cps.end(), printable));
    const double ratio = cps.empty() ? 1.0 : static_cast<double>(n_printable) / static_cast<double>(cps.size());
    if (ratio < policy.printable_ratio_min) {
      reject("low_printable_ratio", "printable ratio " + std::to_string(ratio));
      continue;
    }

    std::map<std::string, std::size_t> freq;
    std::size_t words = 0, top = 0;
    for (const auto& t : tokenize(doc.text).tokens) {
      auto w = fold_word(t.surface);
      if (w.empty()) continue;
      ++words;
      top = std::max(top, ++freq[w]);
    }
    const double repeat = words == 0 ? 0.0 : static_cast<double>(top) / static_cast<double>(words);
    if (repeat > policy.max_repeat_ratio) {
      reject("high_repetition", "top word ratio " + std::to_string(repeat));
      continue;
    }

    try {
      validate_document(mapped, &result.accepted.schema);
    } catch (const Error& e) {
      reject("malformed_markup", e.what());
      continue;
    }
    result.accepted.documents.push_back(std::move(mapped));
  }
  return result;
}

nlohmann::ordered_json QualityReport::to_json() const {
  return {{"n_generated", n_generated},
          {"bert_f1_mean", bert_f1_mean},
          {"bert_precision_mean", bert_precision_mean},
          {"bert_recall_mean", bert_recall_mean},
          {"avg_length_words", avg_length_words}};
}

std::string QualityReport::to_table() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-14s %s\n%-14zu %-14.4f %.2f\n", "Generated", "BERT F1-Score",
                "Avg. Summary Length (words)", n_generated, bert_f1_mean, avg_length_words);
  return buf;
}

QualityReport score_generation_quality(const Corpus& generated, const Corpus& reference,
                                       corpusstats::Embedder& embedder) {
  if (generated.documents.empty() || reference.documents.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "quality scoring needs generated and reference documents");
  }
  std::map<std::string, const Document*> by_id;
  for (const auto& d : reference.documents) by_id[d.id] = &d;
  QualityReport q;
  q.n_generated = generated.documents.size();
  std::size_t words = 0;
  for (std::size_t i = 0; i < generated.documents.size(); ++i) {
    const auto& g = generated.documents[i];
    const auto it = by_id.find(exemplar_of(g.id));
    const auto& ref = it != by_id.end() ? *it->second : reference.documents[i % reference.documents.size()];
    const auto s = corpusstats::bertscore_documents(g, ref, embedder);
    q.bert_f1_mean += s.f1;
    q.bert_precision_mean += s.precision;
    q.bert_recall_mean += s.recall;
    words += word_count(g.text);
  }
  const double n = static_cast<double>(q.n_generated);
  q.bert_f1_mean /= n;
  q.bert_precision_mean /= n;
  q.bert_recall_mean /= n;
  q.avg_length_words = static_cast<double>(words) / n;
  return q;
}

}  // namespace deid::syngen

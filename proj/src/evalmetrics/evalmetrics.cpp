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

#include "deid/evalmetrics/evalmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "deid/core/bio.hpp"
#include "deid/core/error.hpp"
#include "deid/core/tokenize.hpp"

namespace deid::evalmetrics {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json scores_json(const Scores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string_view to_string(EvalMode mode) { return mode == EvalMode::kToken ? "token" : "entity_strict"; }

EvalMode parse_mode(std::string_view s) {
  if (s == "token") return EvalMode::kToken;
  if (s == "entity_strict" || s == "entity") return EvalMode::kEntityStrict;
  throw Error(ErrorCode::kInvalidConfig, "unknown evaluation mode '" + std::string(s) + "'");
}

ConfusionMatrix::ConfusionMatrix(std::vector<TagId> l)
    : labels(std::move(l)), counts(labels.size(), std::vector<std::size_t>(labels.size(), 0)) {}

std::size_t ConfusionMatrix::index(const TagId& tag) const {
  const auto it = std::find(labels.begin(), labels.end(), tag);
  if (it == labels.end()) throw Error(ErrorCode::kUnknownTag, "tag '" + tag + "' is not a confusion label");
  return static_cast<std::size_t>(it - labels.begin());
}

void ConfusionMatrix::add(const TagId& gold, const TagId& pred, std::size_t n) { counts[index(gold)][index(pred)] += n; }

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.labels != labels) throw Error(ErrorCode::kSchemaMismatch, "confusion matrices have different labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) counts[i][j] += other.counts[i][j];
  }
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::size_t s = 0;
  for (const auto c : counts[i]) s += c;
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t j) const {
  std::size_t s = 0;
  for (const auto& row : counts) s += row[j];
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += row_sum(i);
  return s;
}

double safe_ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

double harmonic(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

const TagScores& MetricsReport::tag(const TagId& t) const {
  for (const auto& s : per_tag) {
    if (s.tag == t) return s;
  }
  throw Error(ErrorCode::kUnknownTag, "no scores for tag '" + t + "'");
}

MetricsReport score_confusion(const ConfusionMatrix& cm, const TagId& other, EvalMode mode) {
  MetricsReport r;
  r.mode = mode;
  r.confusion = cm;
  const auto n = cm.labels.size();
  std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0, support_sum = 0;
  double p_sum = 0, r_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cm.labels[i] == other) continue;
    TagScores t;
    t.tag = cm.labels[i];
    t.tp = cm.counts[i][i];
    t.fp = cm.col_sum(i) - t.tp;
    t.fn = cm.row_sum(i) - t.tp;
    t.support = t.tp + t.fn;
    t.scores.precision = safe_ratio(static_cast<double>(t.tp), static_cast<double>(t.tp + t.fp));
    t.scores.recall = safe_ratio(static_cast<double>(t.tp), static_cast<double>(t.tp + t.fn));
    t.scores.f1 = harmonic(t.scores.precision, t.scores.recall);
    tp_sum += t.tp;
    fp_sum += t.fp;
    fn_sum += t.fn;
    support_sum += t.support;
    p_sum += t.scores.precision;
    r_sum += t.scores.recall;
    r.per_tag.push_back(std::move(t));
  }
  r.micro.precision = safe_ratio(static_cast<double>(tp_sum), static_cast<double>(tp_sum + fp_sum));
  r.micro.recall = safe_ratio(static_cast<double>(tp_sum), static_cast<double>(tp_sum + fn_sum));
  r.micro.f1 = harmonic(r.micro.precision, r.micro.recall);

  const auto k = static_cast<double>(r.per_tag.size());
  r.macro.precision = safe_ratio(p_sum, k);
  r.macro.recall = safe_ratio(r_sum, k);
  r.macro.f1 = harmonic(r.macro.precision, r.macro.recall);

  for (const auto& t : r.per_tag) {
    const double w = safe_ratio(static_cast<double>(t.support), static_cast<double>(support_sum));
    r.weighted.precision += w * t.scores.precision;
    r.weighted.recall += w * t.scores.recall;
    r.weighted.f1 += w * t.scores.f1;
  }

  std::size_t diag = 0, all_fp = 0, all_fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diag += cm.counts[i][i];
    all_fp += cm.col_sum(i) - cm.counts[i][i];
    all_fn += cm.row_sum(i) - cm.counts[i][i];
  }
  r.micro_all.precision = safe_ratio(static_cast<double>(diag), static_cast<double>(diag + all_fp));
  r.micro_all.recall = safe_ratio(static_cast<double>(diag), static_cast<double>(diag + all_fn));
  r.micro_all.f1 = harmonic(r.micro_all.precision, r.micro_all.recall);
  return r;
}

ConfusionMatrix document_confusion(const Document& gold, const Document& pred, const TagSchema& schema,
                                   EvalMode mode) {
  if (gold.text != pred.text) {
    throw Error(ErrorCode::kSchemaMismatch, "prediction text differs from gold text in document '" + gold.id + "'");
  }
  ConfusionMatrix cm(schema.tags);
  for (const auto* d : {&gold, &pred}) {
    for (const auto& e : d->entities) {
      if (!schema.contains(e.tag)) {
        throw Error(ErrorCode::kSchemaMismatch, "tag '" + e.tag + "' in document '" + d->id + "' is not in schema " +
                                                    schema.name);
      }
    }
  }
  if (mode == EvalMode::kToken) {
    const auto tokens = tokenize(gold.text).tokens;
    const auto g = token_tags(tokens, gold.entities, schema.other);
    const auto p = token_tags(tokens, pred.entities, schema.other);
    for (std::size_t i = 0; i < tokens.size(); ++i) cm.add(g[i], p[i]);
    return cm;
  }

  using Key = std::tuple<std::size_t, std::size_t, TagId>;
  std::multiset<Key> gold_set, pred_set;
  for (const auto& e : gold.entities) {
    if (e.tag != schema.other) gold_set.insert({e.start, e.end, e.tag});
  }
  for (const auto& e : pred.entities) {
    if (e.tag != schema.other) pred_set.insert({e.start, e.end, e.tag});
  }
  std::vector<Key> gold_left;
  for (const auto& k : gold_set) {
    const auto it = pred_set.find(k);
    if (it != pred_set.end()) {
      cm.add(std::get<2>(k), std::get<2>(k));
      pred_set.erase(it);
    } else {
      gold_left.push_back(k);
    }
  }
  for (const auto& [s, e, tag] : gold_left) {
    auto it = std::find_if(pred_set.begin(), pred_set.end(),
                           [&](const Key& p) { return std::get<0>(p) == s && std::get<1>(p) == e; });
    if (it != pred_set.end()) {
      cm.add(tag, std::get<2>(*it));
      pred_set.erase(it);
    } else {
      cm.add(tag, schema.other);
    }
  }
  for (const auto& k : pred_set) cm.add(schema.other, std::get<2>(k));
  return cm;
}

MetricsReport evaluate(const Corpus& gold, const Corpus& pred, EvalMode mode) {
  if (gold.schema.tags != pred.schema.tags || gold.schema.other != pred.schema.other) {
    throw Error(ErrorCode::kSchemaMismatch,
                "gold schema " + gold.schema.name + " and prediction schema " + pred.schema.name + " differ");
  }
  gold.schema.validate();
  std::map<std::string, const Document*> by_id;
  for (const auto& d : pred.documents) {
    if (!by_id.emplace(d.id, &d).second) {
      throw Error(ErrorCode::kInvalidDocument, "duplicate prediction for document '" + d.id + "'");
    }
  }
  ConfusionMatrix cm(gold.schema.tags);
  std::set<std::string> seen;
  for (const auto& g : gold.documents) {
    const auto it = by_id.find(g.id);
    if (it == by_id.end()) throw Error(ErrorCode::kMissingDocument, "no prediction for document '" + g.id + "'");
    seen.insert(g.id);
    cm.merge(document_confusion(g, *it->second, gold.schema, mode));
  }
  for (const auto& [id, _] : by_id) {
    if (!seen.count(id)) throw Error(ErrorCode::kMissingDocument, "prediction for unknown document '" + id + "'");
  }
  return score_confusion(cm, gold.schema.other, mode);
}

ordered_json MetricsReport::to_json() const {
  ordered_json j;
  j["mode"] = std::string(to_string(mode));
  ordered_json tags = ordered_json::object();
  for (const auto& t : per_tag) {
    tags[t.tag] = {{"precision", t.scores.precision}, {"recall", t.scores.recall}, {"f1", t.scores.f1},
                   {"support", t.support},           {"tp", t.tp},                 {"fp", t.fp},
                   {"fn", t.fn}};
  }
  j["per_tag"] = std::move(tags);
  j["micro"] = scores_json(micro);
  j["macro"] = scores_json(macro);
  j["weighted"] = scores_json(weighted);
  j["micro_all_labels"] = scores_json(micro_all);
  j["confusion"] = {{"labels", confusion.labels}, {"counts", confusion.counts}};
  return j;
}

std::string MetricsReport::to_table() const {
  std::size_t width = 12;
  for (const auto& t : per_tag) width = std::max(width, t.tag.size() + 2);
  char line[256];
  std::string out = "mode: " + std::string(to_string(mode)) + "\n";
  std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %9s\n", static_cast<int>(width), "tag", "precision", "recall",
                "f1", "support");
  out += line;
  std::size_t support = 0;
  for (const auto& t : per_tag) {
    std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %9zu\n", static_cast<int>(width), t.tag.c_str(),
                  fixed(t.scores.precision).c_str(), fixed(t.scores.recall).c_str(), fixed(t.scores.f1).c_str(),
                  t.support);
    out += line;
    support += t.support;
  }
  const std::pair<const char*, const Scores*> footer[] = {
      {"micro avg", &micro}, {"macro avg", &macro}, {"weighted avg", &weighted}};
  for (const auto& [name, s] : footer) {
    std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %9zu\n", static_cast<int>(width), name,
                  fixed(s->precision).c_str(), fixed(s->recall).c_str(), fixed(s->f1).c_str(), support);
    out += line;
  }
  return out;
}

ordered_json AgreementReport::to_json() const {
  return {{"kappa", kappa}, {"observed_agreement", observed}, {"expected_agreement", expected},
          {"n_items", n_items}, {"degenerate", degenerate}};
}

AgreementReport cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "labelings have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " items");
  }
  if (a.empty()) throw Error(ErrorCode::kEmptyInput, "no items to compare");
  std::map<std::string, std::pair<std::size_t, std::size_t>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
  }
  const auto n = static_cast<double>(a.size());
  AgreementReport r;
  r.n_items = a.size();
  r.observed = static_cast<double>(agree) / n;
  double pe = 0;
  for (const auto& [_, c] : marginals) pe += static_cast<double>(c.first) * static_cast<double>(c.second);
  r.expected = pe / (n * n);
  if (r.expected == 1.0) {
    r.degenerate = true;
    r.kappa = 1.0;
  } else {
    r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  }
  return r;
}

ordered_json BinaryMetrics::to_json() const {
  return {{"tp", counts.tp},         {"fp", counts.fp},         {"fn", counts.fn}, {"tn", counts.tn},
          {"precision", scores.precision}, {"recall", scores.recall}, {"f1", scores.f1}};
}

BinaryMetrics binary_metrics(const BinaryCounts& c) {
  BinaryMetrics m;
  m.counts = c;
  m.scores.precision = safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  m.scores.recall = safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  m.scores.f1 = harmonic(m.scores.precision, m.scores.recall);
  return m;
}

BinaryMetrics binary_review_metrics(const std::vector<std::string>& gold, const std::vector<std::string>& assigned,
                                    const std::string& positive) {
  if (gold.size() != assigned.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "gold has " + std::to_string(gold.size()) + " labels, review has " + std::to_string(assigned.size()));
  }
  if (gold.empty()) throw Error(ErrorCode::kEmptyInput, "no reviewed items");
  std::set<std::string> values(gold.begin(), gold.end());
  values.insert(assigned.begin(), assigned.end());
  if (values.size() > 2) throw Error(ErrorCode::kSchemaMismatch, "review labels must be binary");
  BinaryCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == positive, p = assigned[i] == positive;
    if (g && p) ++c.tp;
    if (!g && p) ++c.fp;
    if (g && !p) ++c.fn;
    if (!g && !p) ++c.tn;
  }
  return binary_metrics(c);
}

}  // namespace deid::evalmetrics

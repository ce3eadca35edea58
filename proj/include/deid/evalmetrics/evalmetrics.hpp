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

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"

namespace deid::evalmetrics {

enum class EvalMode { kToken, kEntityStrict };

std::string_view to_string(EvalMode mode);
// "token" | "entity_strict"; throws InvalidConfig otherwise.
EvalMode parse_mode(std::string_view s);

// Rows are gold, columns predicted.
struct ConfusionMatrix {
  std::vector<TagId> labels;
  std::vector<std::vector<std::size_t>> counts;

  explicit ConfusionMatrix(std::vector<TagId> labels = {});
  std::size_t index(const TagId& tag) const;  // throws UnknownTag
  void add(const TagId& gold, const TagId& pred, std::size_t n = 1);
  // Element-wise sum; labels must match.
  void merge(const ConfusionMatrix& other);
  std::size_t row_sum(std::size_t i) const;
  std::size_t col_sum(std::size_t j) const;
  std::size_t total() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Scores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  friend bool operator==(const Scores&, const Scores&) = default;
};

struct TagScores {
  TagId tag;
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t support = 0;  // gold count: tp + fn
  Scores scores;
};

struct MetricsReport {
  EvalMode mode = EvalMode::kToken;
  std::vector<TagScores> per_tag;  // schema order, catch-all tag excluded
  Scores micro;                    // pooled over PHI tags
  Scores macro;                    // mean P and R over PHI tags; F1 is their harmonic mean
  Scores weighted;                 // per-tag values weighted by gold support
  Scores micro_all;                // pooled over every label including the catch-all
  ConfusionMatrix confusion;

  const TagScores& tag(const TagId& t) const;
  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

double safe_ratio(double num, double den);
// 2PR/(P+R), or 0 when P+R is 0.
double harmonic(double p, double r);

// Scores from a confusion matrix whose labels include `other`.
MetricsReport score_confusion(const ConfusionMatrix& cm, const TagId& other, EvalMode mode);

// Gold and predicted corpora must share a schema and document ids (with
// identical text). Throws SchemaMismatch or MissingDocument.
//
// Token mode tags every token with the entity overlapping it (catch-all when
// none) and counts (gold, pred) pairs. Entity mode matches exact
// (start, end, tag) triples; catch-all entities are ignored and unmatched
// entities land in the catch-all row or column, or in the mismatched tag's
// cell when a predicted span has the same extent as the gold one.
MetricsReport evaluate(const Corpus& gold, const Corpus& pred, EvalMode mode = EvalMode::kToken);

// Per-document confusion; evaluate() sums these.
ConfusionMatrix document_confusion(const Document& gold, const Document& pred, const TagSchema& schema,
                                   EvalMode mode);

struct AgreementReport {
  double kappa = 0;
  double observed = 0;  // p_o
  double expected = 0;  // p_e
  std::size_t n_items = 0;
  // p_e == 1: both raters used one and the same label; kappa is set to 1.
  bool degenerate = false;

  nlohmann::ordered_json to_json() const;
};

// Throws LengthMismatch or EmptyInput.
AgreementReport cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct BinaryMetrics {
  BinaryCounts counts;
  Scores scores;

  nlohmann::ordered_json to_json() const;
};

BinaryMetrics binary_metrics(const BinaryCounts& counts);

// `positive` is the class being detected (e.g. "real"). Labels must take at
// most two values. Throws LengthMismatch, EmptyInput or SchemaMismatch.
BinaryMetrics binary_review_metrics(const std::vector<std::string>& gold, const std::vector<std::string>& assigned,
                                    const std::string& positive = "real");

}  // namespace deid::evalmetrics

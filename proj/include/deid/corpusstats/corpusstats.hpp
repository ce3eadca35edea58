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
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/core/types.hpp"

namespace deid::recognize {
class Transport;
}

namespace deid::corpusstats {

// Statistics over per-word character lengths. Words are tokens containing at
// least one letter or digit; se is the sample standard deviation over sqrt(n).
struct WordLengthStats {
  std::size_t n_words = 0;
  std::size_t total_chars = 0;
  double mean = 0;
  double se = 0;
  double median = 0;
  std::size_t min = 0;
  std::size_t max = 0;
};

struct CorpusSummary {
  std::size_t n_summaries = 0;
  std::size_t n_tokens = 0;
  std::size_t n_unique_tokens = 0;  // case-sensitive
  std::size_t max_len = 0;          // tokens per document
  std::size_t min_len = 0;
  double avg_len = 0;
  std::size_t n_original_tags = 0;  // distinct entity tags in use
  std::size_t char_counts = 0;      // characters of document text
  WordLengthStats word_length;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

CorpusSummary summarize(const Corpus& corpus);

enum class NGramScope { kWholeText, kPhiAdjacent };

std::string_view to_string(NGramScope scope);
NGramScope parse_scope(std::string_view s);  // "whole_text" | "phi_adjacent"

struct NGramProfile {
  std::size_t n = 1;
  NGramScope scope = NGramScope::kWholeText;
  std::size_t window = 3;
  std::vector<std::pair<std::string, std::size_t>> top_k;  // count desc, then ngram asc

  std::string to_csv() const;  // header "ngram,count"
  nlohmann::ordered_json to_json() const;
};

struct NGramOptions {
  std::size_t n = 1;
  std::size_t k = 10;
  NGramScope scope = NGramScope::kWholeText;
  std::size_t window = 3;  // tokens either side of a PHI token
  std::set<std::string> stoplist;
};

// Tokens are lowercased and stripped of punctuation; tokens left empty or in
// the stoplist are dropped before n-grams are formed. In phi_adjacent scope
// an n-gram counts only if one of its tokens lies within `window` tokens of a
// token overlapping a non-catch-all entity.
NGramProfile ngram_profile(const Corpus& corpus, const NGramOptions& options);

std::set<std::string> vocabulary(const Corpus& corpus);

// 1 - |Va ∩ Vb| / |Va ∪ Vb| over case-sensitive token vocabularies.
// Throws BothEmpty.
double jaccard_distance(const Corpus& a, const Corpus& b);
double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b);

using Vector = std::vector<double>;
using Embeddings = std::vector<Vector>;

struct BertScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  nlohmann::ordered_json to_json() const;
};

// Cosine similarity; 0 when either vector is all zeros.
double cosine(const Vector& a, const Vector& b);

// Greedy max-cosine matching without idf weighting or baseline rescaling.
// Throws EmptySide or DimensionMismatch.
BertScore bertscore_greedy(const Embeddings& candidate, const Embeddings& reference);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embeddings embed(const std::vector<std::string>& tokens) = 0;
};

// Deterministic pseudo-embeddings: each lowercased token hashes to a fixed
// random vector, so equal tokens embed identically.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
  Embeddings embed(const std::vector<std::string>& tokens) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Sends {"id", "tokens"} and expects {"id", "vectors"} back.
class RemoteEmbedder : public Embedder {
 public:
  RemoteEmbedder(std::shared_ptr<recognize::Transport> transport,
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  Embeddings embed(const std::vector<std::string>& tokens) override;

 private:
  std::shared_ptr<recognize::Transport> transport_;
  std::chrono::milliseconds timeout_;
  std::uint64_t next_id_ = 0;
};

// Token surfaces of a document, in order.
std::vector<std::string> token_surfaces(const Document& doc);

BertScore bertscore_documents(const Document& cand, const Document& ref, Embedder& embedder);

// Each document of `a` is scored against document (i mod |b|) of `b`; the
// per-pair P, R and F1 are averaged. Throws EmptyCorpus.
BertScore bertscore_corpus(const Corpus& a, const Corpus& b, Embedder& embedder);

struct ClassWeight {
  TagId tag;
  std::size_t n_t = 0;
  double w_t = 0;
  bool capped = false;  // n_t == 0, weight set to the configured cap
};

struct ClassWeights {
  std::size_t n = 0;
  std::vector<ClassWeight> weights;  // schema order
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
};

// ln(4 n / n_t).
double class_weight(double n, double n_t);

// Counts token-level tags (tokens outside entities count as the catch-all).
// Throws EmptyCorpus when there are no tokens.
ClassWeights class_weights(const Corpus& corpus, double zero_count_weight = 10.0);

struct Split {
  Corpus train, val, test;
};

// `ratios` are either document counts summing to the corpus size or
// fractions summing to 1 (allocated by largest remainder). Documents are
// assigned by a seeded shuffle, keep their input order within a partition
// and get meta["split"]. Throws RatioMismatch.
Split split(const Corpus& corpus, const std::vector<double>& ratios, std::uint64_t seed);

}  // namespace deid::corpusstats

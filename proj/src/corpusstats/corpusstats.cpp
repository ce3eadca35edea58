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

#include "deid/corpusstats/corpusstats.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "deid/core/bio.hpp"
#include "deid/core/error.hpp"
#include "deid/core/rng.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/core/utf8.hpp"
#include "deid/recognize/transport.hpp"

namespace deid::corpusstats {
namespace {

using ordered_json = nlohmann::ordered_json;

bool is_word(std::string_view surface) {
  for (const char32_t cp : utf8::decode(surface)) {
    if (!is_punct(cp) && !is_space(cp)) return true;
  }
  return false;
}

// Lowercase (ASCII) with punctuation removed.
std::string normalize_token(std::string_view surface) {
  std::string out;
  for (const char32_t cp : utf8::decode(surface)) {
    if (is_punct(cp)) continue;
    utf8::append(out, cp < 128 ? static_cast<char32_t>(std::tolower(static_cast<int>(cp))) : cp);
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

nlohmann::ordered_json CorpusSummary::to_json() const {
  return {{"n_summaries", n_summaries},
          {"n_tokens", n_tokens},
          {"n_unique_tokens", n_unique_tokens},
          {"max_len", max_len},
          {"min_len", min_len},
          {"avg_len", avg_len},
          {"n_original_tags", n_original_tags},
          {"char_counts", char_counts},
          {"word_length",
           {{"n_words", word_length.n_words},
            {"total_chars", word_length.total_chars},
            {"mean", word_length.mean},
            {"se", word_length.se},
            {"median", word_length.median},
            {"min", word_length.min},
            {"max", word_length.max}}}};
}

std::string CorpusSummary::to_table() const {
  std::string out;
  auto row = [&](const std::string& k, const std::string& v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-22s %s\n", k.c_str(), v.c_str());
    out += buf;
  };
  row("# Summaries", std::to_string(n_summaries));
  row("# Tokens", std::to_string(n_tokens));
  row("# Unique Tokens", std::to_string(n_unique_tokens));
  row("Max Length", std::to_string(max_len));
  row("Min Length", std::to_string(min_len));
  row("Avg. Summary Length", fixed(avg_len, 2));
  row("Original Tag Set", std::to_string(n_original_tags));
  row("Characters", std::to_string(char_counts));
  row("Length (words)", std::to_string(word_length.n_words));
  row("Word length mean", fixed(word_length.mean, 2) + " +- " + fixed(word_length.se, 3));
  row("Word length median", fixed(word_length.median, 1));
  row("Word length min", std::to_string(word_length.min));
  row("Word length max", std::to_string(word_length.max));
  return out;
}

CorpusSummary summarize(const Corpus& corpus) {
  CorpusSummary s;
  s.n_summaries = corpus.documents.size();
  std::set<std::string> vocab;
  std::set<TagId> tags;
  std::vector<std::size_t> lengths;
  for (const auto& doc : corpus.documents) {
    const auto toks = tokenize(doc.text).tokens;
    s.n_tokens += toks.size();
    s.char_counts += utf8::length(doc.text);
    s.max_len = std::max(s.max_len, toks.size());
    s.min_len = &doc == &corpus.documents.front() ? toks.size() : std::min(s.min_len, toks.size());
    for (const auto& t : toks) {
      vocab.insert(t.surface);
      if (is_word(t.surface)) lengths.push_back(utf8::length(t.surface));
    }
    for (const auto& e : doc.entities) tags.insert(e.tag);
  }
  s.n_unique_tokens = vocab.size();
  s.n_original_tags = tags.size();
  if (s.n_summaries > 0) s.avg_len = static_cast<double>(s.n_tokens) / static_cast<double>(s.n_summaries);

  auto& w = s.word_length;
  w.n_words = lengths.size();
  if (!lengths.empty()) {
    std::sort(lengths.begin(), lengths.end());
    w.total_chars = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
    const double n = static_cast<double>(lengths.size());
    w.mean = static_cast<double>(w.total_chars) / n;
    if (lengths.size() > 1) {
      double ss = 0;
      for (const auto l : lengths) ss += (static_cast<double>(l) - w.mean) * (static_cast<double>(l) - w.mean);
      w.se = std::sqrt(ss / (n - 1)) / std::sqrt(n);
    }
    const auto mid = lengths.size() / 2;
    w.median = lengths.size() % 2 ? static_cast<double>(lengths[mid])
                                  : (static_cast<double>(lengths[mid - 1]) + static_cast<double>(lengths[mid])) / 2;
    w.min = lengths.front();
    w.max = lengths.back();
  }
  return s;
}

std::string_view to_string(NGramScope scope) {
  return scope == NGramScope::kWholeText ? "whole_text" : "phi_adjacent";
}

NGramScope parse_scope(std::string_view s) {
  if (s == "whole_text") return NGramScope::kWholeText;
  if (s == "phi_adjacent") return NGramScope::kPhiAdjacent;
  throw Error(ErrorCode::kInvalidConfig, "unknown n-gram scope '" + std::string(s) + "'");
}

std::string NGramProfile::to_csv() const {
  std::string out = "ngram,count\n";
  for (const auto& [g, c] : top_k) out += csv_field(g) + "," + std::to_string(c) + "\n";
  return out;
}

nlohmann::ordered_json NGramProfile::to_json() const {
  ordered_json items = ordered_json::array();
  for (const auto& [g, c] : top_k) items.push_back({{"ngram", g}, {"count", c}});
  return {{"n", n}, {"scope", to_string(scope)}, {"window", window}, {"top_k", items}};
}

NGramProfile ngram_profile(const Corpus& corpus, const NGramOptions& opt) {
  if (opt.n == 0) throw Error(ErrorCode::kInvalidConfig, "n-gram order must be at least 1");
  NGramProfile p;
  p.n = opt.n;
  p.scope = opt.scope;
  p.window = opt.window;
  std::map<std::string, std::size_t> counts;

  for (const auto& doc : corpus.documents) {
    const auto toks = tokenize(doc.text).tokens;
    const auto tags = token_tags(toks, doc.entities, corpus.schema.other);
    std::vector<std::string> words;
    std::vector<bool> phi;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto w = normalize_token(toks[i].surface);
      if (w.empty() || opt.stoplist.count(w)) continue;
      words.push_back(std::move(w));
      phi.push_back(tags[i] != corpus.schema.other);
    }
    // Distance from each kept token to the nearest PHI token.
    std::vector<std::size_t> near(words.size(), static_cast<std::size_t>(-1));
    std::size_t last = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (phi[i]) last = i;
      if (last != static_cast<std::size_t>(-1)) near[i] = i - last;
    }
    last = static_cast<std::size_t>(-1);
    for (std::size_t i = words.size(); i-- > 0;) {
      if (phi[i]) last = i;
      if (last != static_cast<std::size_t>(-1)) near[i] = std::min(near[i], last - i);
    }
    for (std::size_t i = 0; i + opt.n <= words.size(); ++i) {
      if (opt.scope == NGramScope::kPhiAdjacent) {
        bool adjacent = false;
        for (std::size_t j = i; j < i + opt.n && !adjacent; ++j) adjacent = near[j] <= opt.window;
        if (!adjacent) continue;
      }
      std::string g = words[i];
      for (std::size_t j = i + 1; j < i + opt.n; ++j) g += " " + words[j];
      ++counts[g];
    }
  }
  p.top_k.assign(counts.begin(), counts.end());
  std::stable_sort(p.top_k.begin(), p.top_k.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (p.top_k.size() > opt.k) p.top_k.resize(opt.k);
  return p;
}

std::set<std::string> vocabulary(const Corpus& corpus) {
  std::set<std::string> v;
  for (const auto& doc : corpus.documents) {
    for (auto& t : tokenize(doc.text).tokens) v.insert(std::move(t.surface));
  }
  return v;
}

double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) throw Error(ErrorCode::kBothEmpty, "both vocabularies are empty");
  std::size_t inter = 0;
  for (const auto& w : a) inter += b.count(w);
  const std::size_t uni = a.size() + b.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard_distance(const Corpus& a, const Corpus& b) { return jaccard_distance(vocabulary(a), vocabulary(b)); }

nlohmann::ordered_json BertScore::to_json() const {
  return {{"precision", precision}, {"recall", recall}, {"f1", f1}};
}

double cosine(const Vector& a, const Vector& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

BertScore bertscore_greedy(const Embeddings& cand, const Embeddings& ref) {
  if (cand.empty() || ref.empty()) throw Error(ErrorCode::kEmptySide, "bertscore needs at least one token per side");
  const auto dim = cand.front().size();
  for (const auto* side : {&cand, &ref}) {
    for (const auto& v : *side) {
      if (v.size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "embedding of size " + std::to_string(v.size()) + ", expected " + std::to_string(dim));
      }
    }
  }
  std::vector<double> best_c(cand.size(), -1.0), best_r(ref.size(), -1.0);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const double s = cosine(cand[i], ref[j]);
      best_c[i] = std::max(best_c[i], s);
      best_r[j] = std::max(best_r[j], s);
    }
  }
  BertScore r;
  r.precision = std::accumulate(best_c.begin(), best_c.end(), 0.0) / static_cast<double>(cand.size());
  r.recall = std::accumulate(best_r.begin(), best_r.end(), 0.0) / static_cast<double>(ref.size());
  r.f1 = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Embeddings HashEmbedder::embed(const std::vector<std::string>& tokens) {
  Embeddings out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    std::string key = t;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    SplitMix64 rng(hash_combine(hash_combine(fnv1a("embed"), seed_), key));
    Vector v(dim_);
    for (auto& x : v) x = rng.unit() * 2.0 - 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::shared_ptr<recognize::Transport> transport, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout) {}

Embeddings RemoteEmbedder::embed(const std::vector<std::string>& tokens) {
  const std::string id = "embed-" + std::to_string(next_id_++);
  const auto resp = transport_->call({{"id", id}, {"tokens", tokens}}, timeout_);
  if (!resp.is_object() || resp.value("id", std::string{}) != id) {
    throw Error(ErrorCode::kProtocolViolation, "embed response does not answer request '" + id + "'");
  }
  if (resp.contains("error")) throw Error(ErrorCode::kBackendError, resp["error"].dump());
  if (!resp.contains("vectors") || !resp["vectors"].is_array() || resp["vectors"].size() != tokens.size()) {
    throw Error(ErrorCode::kProtocolViolation, "embed response must carry one vector per token");
  }
  Embeddings out;
  try {
    out = resp["vectors"].get<Embeddings>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocolViolation, std::string("bad vectors: ") + e.what());
  }
  return out;
}

std::vector<std::string> token_surfaces(const Document& doc) {
  std::vector<std::string> out;
  for (auto& t : tokenize(doc.text).tokens) out.push_back(std::move(t.surface));
  return out;
}

BertScore bertscore_documents(const Document& cand, const Document& ref, Embedder& embedder) {
  return bertscore_greedy(embedder.embed(token_surfaces(cand)), embedder.embed(token_surfaces(ref)));
}

BertScore bertscore_corpus(const Corpus& a, const Corpus& b, Embedder& embedder) {
  if (a.documents.empty() || b.documents.empty()) throw Error(ErrorCode::kEmptyCorpus, "bertscore needs two non-empty corpora");
  BertScore mean;
  for (std::size_t i = 0; i < a.documents.size(); ++i) {
    const auto s = bertscore_documents(a.documents[i], b.documents[i % b.documents.size()], embedder);
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.f1 += s.f1;
  }
  const double n = static_cast<double>(a.documents.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  return mean;
}

nlohmann::ordered_json ClassWeights::to_json() const {
  ordered_json tags = ordered_json::array();
  for (const auto& w : weights) tags.push_back({{"tag", w.tag}, {"n_t", w.n_t}, {"w_t", w.w_t}, {"capped", w.capped}});
  return {{"n", n}, {"log", "natural"}, {"weights", tags}, {"warnings", warnings}};
}

double class_weight(double n, double n_t) { return std::log(4.0 * n / n_t); }

ClassWeights class_weights(const Corpus& corpus, double zero_count_weight) {
  std::map<TagId, std::size_t> counts;
  ClassWeights cw;
  for (const auto& doc : corpus.documents) {
    const auto toks = tokenize(doc.text).tokens;
    cw.n += toks.size();
    for (const auto& t : token_tags(toks, doc.entities, corpus.schema.other)) ++counts[t];
  }
  if (cw.n == 0) throw Error(ErrorCode::kEmptyCorpus, "class weights need at least one token");
  for (const auto& tag : corpus.schema.tags) {
    ClassWeight w;
    w.tag = tag;
    w.n_t = counts.count(tag) ? counts[tag] : 0;
    if (w.n_t == 0) {
      w.w_t = zero_count_weight;
      w.capped = true;
      cw.warnings.push_back("tag " + tag + " has no tokens; weight set to " + fixed(zero_count_weight, 4));
    } else {
      w.w_t = class_weight(static_cast<double>(cw.n), static_cast<double>(w.n_t));
    }
    cw.weights.push_back(std::move(w));
  }
  return cw;
}

Split split(const Corpus& corpus, const std::vector<double>& ratios, std::uint64_t seed) {
  const std::size_t total = corpus.documents.size();
  if (ratios.size() != 3) throw Error(ErrorCode::kRatioMismatch, "expected three ratios (train, val, test)");
  for (const double r : ratios) {
    if (!(r >= 0) || !std::isfinite(r)) throw Error(ErrorCode::kRatioMismatch, "ratios must be non-negative");
  }
  const double sum = ratios[0] + ratios[1] + ratios[2];
  const bool integral = std::all_of(ratios.begin(), ratios.end(), [](double r) { return r == std::floor(r); });
  std::array<std::size_t, 3> sizes{};
  if (integral && sum == static_cast<double>(total) && !(sum == 1.0 && total != 1)) {
    for (int i = 0; i < 3; ++i) sizes[i] = static_cast<std::size_t>(ratios[i]);
  } else if (std::abs(sum - 1.0) < 1e-9) {
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
      const double exact = ratios[i] * static_cast<double>(total);
      sizes[i] = static_cast<std::size_t>(std::floor(exact));
      rem[i] = exact - std::floor(exact);
      used += sizes[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; used < total; ++k, ++used) ++sizes[order[k % 3]];
  } else {
    throw Error(ErrorCode::kRatioMismatch, "ratios sum to " + fixed(sum, 6) + "; expected 1 or the corpus size " +
                                               std::to_string(total));
  }

  std::vector<std::size_t> perm(total);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(hash_combine(fnv1a("split"), seed));
  for (std::size_t i = total; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<int> part(total);
  for (std::size_t k = 0; k < total; ++k) part[perm[k]] = k < sizes[0] ? 0 : k < sizes[0] + sizes[1] ? 1 : 2;

  Split s{{{}, corpus.schema}, {{}, corpus.schema}, {{}, corpus.schema}};
  static constexpr const char* kNames[] = {"train", "val", "test"};
  for (std::size_t i = 0; i < total; ++i) {
    auto doc = corpus.documents[i];
    doc.meta["split"] = kNames[part[i]];
    (part[i] == 0 ? s.train : part[i] == 1 ? s.val : s.test).documents.push_back(std::move(doc));
  }
  return s;
}

}  // namespace deid::corpusstats

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

// Random document generators shared by the unit and acceptance suites.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "deid/core/tokenize.hpp"
#include "deid/core/types.hpp"
#include "deid/core/utf8.hpp"

namespace deid::testing {

inline const std::vector<std::string>& fuzz_words() {
  static const std::vector<std::string> words{
      "patient", "Rahul", "Kumar", "admitted", "on", "25-08-2023", "BP:", "120/80", "mmHg", "Dr.",
      "Rohan", "Sharma", "CRNO:", "1234567890", "+91-9812345678", "mg/dL,", "(AKI)", "café", "नमस्ते",
      "ward-B", "<5", "a&b", "&lt;", "&amp;", "<TYPE", "</TYPE>", "<RECORD>", "x'y", "\"q\"", "...",
      "—", "Sector", "11,", "Dwarka", "New", "Delhi", "110075", "ICU", "e.g.", "Hb", "12.5", "g/dL"};
  return words;
}

// Text of random words joined by random whitespace.
inline std::string fuzz_text(std::mt19937_64& rng, std::size_t max_words) {
  const auto& words = fuzz_words();
  static const std::vector<std::string> gaps{" ", " ", " ", "  ", "\n", "\t", " \n "};
  std::uniform_int_distribution<std::size_t> n_words(0, max_words);
  std::uniform_int_distribution<std::size_t> pick_word(0, words.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_gap(0, gaps.size() - 1);
  std::string text;
  const auto n = n_words(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) text += gaps[pick_gap(rng)];
    text += words[pick_word(rng)];
  }
  return text;
}

// Document whose entities are non-overlapping runs of whole tokens.
inline Document fuzz_document(std::mt19937_64& rng, const std::string& id, const TagSchema& schema,
                              std::size_t max_words = 40) {
  Document doc;
  doc.id = id;
  doc.text = fuzz_text(rng, max_words);
  const auto toks = tokenize(doc.text).tokens;
  std::uniform_int_distribution<int> coin(0, 3);
  std::uniform_int_distribution<std::size_t> run_len(1, 3);
  std::uniform_int_distribution<std::size_t> pick_tag(0, schema.tags.size() - 1);
  std::size_t i = 0;
  while (i < toks.size()) {
    if (coin(rng) == 0) {
      const auto len = std::min(run_len(rng), toks.size() - i);
      doc.entities.push_back(make_span(doc.text, toks[i].start, toks[i + len - 1].end, schema.tags[pick_tag(rng)]));
      i += len;
      if (i < toks.size() && coin(rng) != 0) ++i;  // mostly leave a gap, sometimes adjacent
    } else {
      ++i;
    }
  }
  if (coin(rng) == 0) doc.meta["split"] = "train";
  if (coin(rng) == 0) doc.meta["source"] = "fuzz \"corpus\"";
  return doc;
}

// A noisy copy of gold's entities: spans dropped, retagged, stretched or
// shrunk by a few characters (so boundaries may split tokens), plus spurious
// spans. The result is sorted and non-overlapping.
inline Document fuzz_prediction(std::mt19937_64& rng, const Document& gold, const TagSchema& schema) {
  Document pred = gold;
  pred.entities.clear();
  const std::size_t len = utf8::length(gold.text);
  if (len == 0) return pred;
  std::uniform_int_distribution<int> die(0, 9);
  std::uniform_int_distribution<int> nudge(-2, 2);
  std::uniform_int_distribution<std::size_t> pick_tag(0, schema.tags.size() - 1);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::vector<TagId> tags;
  for (const auto& e : gold.entities) {
    const int roll = die(rng);
    if (roll == 0) continue;  // dropped
    long s = static_cast<long>(e.start), t = static_cast<long>(e.end);
    if (roll == 1) s += nudge(rng);
    if (roll == 2) t += nudge(rng);
    s = std::clamp<long>(s, 0, static_cast<long>(len) - 1);
    t = std::clamp<long>(t, s + 1, static_cast<long>(len));
    ranges.emplace_back(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
    tags.push_back(roll == 3 ? schema.tags[pick_tag(rng)] : e.tag);
  }
  std::uniform_int_distribution<std::size_t> pos(0, len - 1);
  const int extra = die(rng) % 3;
  for (int i = 0; i < extra; ++i) {
    const auto s = pos(rng);
    const auto t = std::min(len, s + 1 + pos(rng) % 8);
    ranges.emplace_back(s, t);
    tags.push_back(schema.tags[pick_tag(rng)]);
  }
  std::vector<std::size_t> order(ranges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranges[a] < ranges[b]; });
  std::size_t last_end = 0;
  for (const auto i : order) {
    if (ranges[i].first < last_end) continue;
    pred.entities.push_back(make_span(gold.text, ranges[i].first, ranges[i].second, tags[i]));
    last_end = ranges[i].second;
  }
  return pred;
}

inline Corpus fuzz_corpus(std::mt19937_64& rng, std::size_t n_docs, const TagSchema& schema,
                          std::size_t max_words = 40) {
  Corpus c;
  c.schema = schema;
  for (std::size_t i = 0; i < n_docs; ++i) {
    c.documents.push_back(fuzz_document(rng, "doc-" + std::to_string(i), schema, max_words));
  }
  return c;
}

}  // namespace deid::testing

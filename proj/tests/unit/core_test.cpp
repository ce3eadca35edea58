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

#include <random>

#include <gtest/gtest.h>

#include "deid/core/bio.hpp"
#include "deid/core/error.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/core/utf8.hpp"
#include "support/fuzz.hpp"

namespace deid {
namespace {

std::vector<std::string> surfaces(const TokenSeq& seq) {
  std::vector<std::string> out;
  for (const auto& t : seq.tokens) out.push_back(t.surface);
  return out;
}

TEST(Utf8Test, CharIndexMapsCodePoints) {
  const std::string text = "a\xC3\xA9z";  // "aéz"
  const utf8::CharIndex index(text);
  EXPECT_EQ(index.size(), 3u);
  EXPECT_EQ(index.byte_offset(2), 3u);
  EXPECT_EQ(index.char_offset(1), 1u);
  EXPECT_EQ(index.char_offset(2), utf8::CharIndex::npos);
  EXPECT_EQ(index.slice(text, 1, 2), "\xC3\xA9");
}

TEST(Utf8Test, RejectsInvalidSequences) {
  EXPECT_FALSE(utf8::is_valid("\xC3"));
  EXPECT_FALSE(utf8::is_valid("\xC0\xAF"));  // overlong '/'
  EXPECT_FALSE(utf8::is_valid("\xED\xA0\x80"));  // surrogate
  EXPECT_TRUE(utf8::is_valid("\xF0\x9F\x98\x80"));
  EXPECT_THROW(tokenize("ok \xFF"), Error);
}

TEST(TokenizeTest, EmptyInput) { EXPECT_TRUE(tokenize("").tokens.empty()); }

TEST(TokenizeTest, BloodPressureLine) {
  const auto seq = tokenize("BP: 120/80 mmHg");
  ASSERT_EQ(surfaces(seq), (std::vector<std::string>{"BP", ":", "120/80", "mmHg"}));
  const std::vector<std::pair<std::size_t, std::size_t>> offsets{{0, 2}, {2, 3}, {4, 10}, {11, 15}};
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    EXPECT_EQ(seq.tokens[i].start, offsets[i].first);
    EXPECT_EQ(seq.tokens[i].end, offsets[i].second);
    EXPECT_EQ(std::string("BP: 120/80 mmHg").substr(offsets[i].first, offsets[i].second - offsets[i].first),
              seq.tokens[i].surface);
  }
}

TEST(TokenizeTest, TitleSplitsPeriod) {
  EXPECT_EQ(surfaces(tokenize("Dr. Rohan Sharma")), (std::vector<std::string>{"Dr", ".", "Rohan", "Sharma"}));
}

TEST(TokenizeTest, PunctuationOnlyChunkIsOneToken) {
  EXPECT_EQ(surfaces(tokenize("a -- (b).")), (std::vector<std::string>{"a", "--", "(", "b", ")."}));
}

TEST(TokenizeTest, OffsetsAreCharacters) {
  const auto seq = tokenize("café ok");
  ASSERT_EQ(seq.tokens.size(), 2u);
  EXPECT_EQ(seq.tokens[1].start, 5u);
  EXPECT_EQ(seq.tokens[1].end, 7u);
}

// Every non-whitespace character is covered by exactly one token, tokens are
// ordered and disjoint, and gaps are whitespace only.
TEST(TokenizeTest, PartitionRefinementProperty) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 300; ++iter) {
    const auto text = testing::fuzz_text(rng, 30);
    const auto cps = utf8::decode(text);
    const auto seq = tokenize(text);
    std::vector<int> cover(cps.size(), 0);
    std::size_t prev_end = 0;
    for (const auto& t : seq.tokens) {
      ASSERT_LT(t.start, t.end);
      ASSERT_GE(t.start, prev_end);
      prev_end = t.end;
      for (std::size_t k = t.start; k < t.end; ++k) ++cover[k];
      EXPECT_EQ(utf8::encode(std::u32string_view(cps).substr(t.start, t.end - t.start)), t.surface);
    }
    for (std::size_t k = 0; k < cps.size(); ++k) {
      EXPECT_EQ(cover[k], is_space(cps[k]) ? 0 : 1) << "char " << k << " of '" << text << "'";
    }
  }
}

Document doc_with(std::string text, std::vector<std::tuple<std::size_t, std::size_t, std::string>> spans) {
  Document d;
  d.id = "d";
  d.text = std::move(text);
  for (auto& [b, e, tag] : spans) d.entities.push_back(make_span(d.text, b, e, tag));
  return d;
}

std::vector<std::string> label_strings(const TokenSeq& seq) {
  std::vector<std::string> out;
  for (const auto& l : *seq.labels) out.push_back(l.str());
  return out;
}

TEST(BioTest, NoEntitiesAllOutside) {
  const auto d = doc_with("plain clinical text", {});
  EXPECT_EQ(label_strings(spans_to_bio(d, tokenize(d.text))), (std::vector<std::string>{"O", "O", "O"}));
}

TEST(BioTest, TwoTokenPatient) {
  const auto d = doc_with("Name: Rahul Kumar today", {{6, 17, "PATIENT"}});
  EXPECT_EQ(label_strings(spans_to_bio(d, tokenize(d.text))),
            (std::vector<std::string>{"O", "O", "B-PATIENT", "I-PATIENT", "O"}));
}

TEST(BioTest, SingleTokenDate) {
  const auto d = doc_with("25-08-2023", {{0, 10, "DATE"}});
  EXPECT_EQ(label_strings(spans_to_bio(d, tokenize(d.text))), (std::vector<std::string>{"B-DATE"}));
}

TEST(BioTest, MisalignedEntityReportsOffsets) {
  const auto d = doc_with("Rahul's file", {{0, 5, "PATIENT"}});
  try {
    spans_to_bio(d, tokenize(d.text));
    FAIL() << "expected misalignment";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEntityTokenMisalignment);
    EXPECT_EQ(e.where().offset, 0u);
  }
}

TokenSeq labelled(const std::string& text, const std::vector<std::string>& labels) {
  auto seq = tokenize(text);
  std::vector<BioLabel> ls;
  for (const auto& l : labels) ls.push_back(*BioLabel::parse(l));
  seq.labels = ls;
  return seq;
}

TEST(BioTest, DecodeAllOutside) {
  EXPECT_TRUE(bio_to_spans(labelled("a b", {"O", "O"}), "a b").spans.empty());
}

TEST(BioTest, DecodeTwoSpans) {
  const std::string text = "AB 12 x 35";
  const auto r = bio_to_spans(labelled(text, {"B-ID", "I-ID", "O", "B-AGE"}), text);
  ASSERT_EQ(r.spans.size(), 2u);
  EXPECT_EQ(r.spans[0], (EntitySpan{0, 5, "ID", "AB 12"}));
  EXPECT_EQ(r.spans[1], (EntitySpan{8, 10, "AGE", "35"}));
}

TEST(BioTest, DanglingInsideStrictVsLenient) {
  const std::string text = "on 25-08-2023";
  const auto seq = labelled(text, {"O", "I-DATE"});
  try {
    bio_to_spans(seq, text, BioMode::kStrict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidBioSequence);
  }
  const auto r = bio_to_spans(seq, text, BioMode::kLenient);
  ASSERT_EQ(r.spans.size(), 1u);
  EXPECT_EQ(r.spans[0].tag, "DATE");
  EXPECT_EQ(r.spans[0].surface, "25-08-2023");
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(BioTest, InsideAfterDifferentTagIsInvalid) {
  EXPECT_THROW(validate_bio({*BioLabel::parse("B-ID"), *BioLabel::parse("I-AGE")}), Error);
  EXPECT_NO_THROW(validate_bio({*BioLabel::parse("B-ID"), *BioLabel::parse("I-ID"), *BioLabel::parse("B-ID")}));
}

TEST(BioTest, RoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 300; ++iter) {
    const auto doc = testing::fuzz_document(rng, "d", canonical_schema());
    const auto seq = spans_to_bio(doc, tokenize(doc.text));
    ASSERT_NO_THROW(validate_bio(*seq.labels));
    const auto back = bio_to_spans(seq, doc.text);
    EXPECT_EQ(back.spans, doc.entities);
    EXPECT_TRUE(back.warnings.empty());
  }
}

TEST(ValidateTest, RejectsOverlapAndBadSurface) {
  auto d = doc_with("abcdef", {{0, 3, "ID"}, {2, 5, "ID"}});
  EXPECT_THROW(validate_document(d), Error);
  d = doc_with("abcdef", {{0, 3, "ID"}});
  d.entities[0].surface = "xyz";
  EXPECT_THROW(validate_document(d), Error);
  d = doc_with("abcdef", {{0, 3, "NOPE"}});
  EXPECT_THROW(validate_document(d, &canonical_schema()), Error);
  EXPECT_NO_THROW(validate_document(doc_with("abcdef", {{0, 3, "ID"}, {3, 6, "ID"}}), &canonical_schema()));
}

TEST(SchemaTest, CanonicalSchemaIsTheNineTags) {
  const auto& s = canonical_schema();
  EXPECT_EQ(s.tags.size(), 9u);
  EXPECT_EQ(s.other, "OTHERS");
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.phi_tags().size(), 8u);
}

}  // namespace
}  // namespace deid

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

// Brute-force recount of evaluation metrics straight from (gold, pred)
// document pairs, written without the library's confusion-matrix code.

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "deid/core/tokenize.hpp"
#include "deid/core/types.hpp"

namespace deid::testing {

struct OracleCounts {
  double tp = 0, fp = 0, fn = 0;
};

struct OracleScores {
  double p = 0, r = 0, f1 = 0;
};

struct OracleReport {
  std::map<std::string, OracleCounts> counts;  // PHI tags only
  std::map<std::string, OracleScores> per_tag;
  OracleScores micro, macro, weighted;
  double accuracy = 0;  // token mode only
};

inline double oracle_div(double a, double b) { return b == 0 ? 0 : a / b; }
inline double oracle_f1(double p, double r) { return p + r == 0 ? 0 : 2 * p * r / (p + r); }

inline std::string oracle_token_tag(const Token& t, const std::vector<EntitySpan>& spans, const std::string& other) {
  for (const auto& s : spans) {
    if (s.start < t.end && t.start < s.end) return s.tag;
  }
  return other;
}

// token = true: per-token tags; false: exact (start, end, tag) matching.
inline OracleReport oracle_evaluate(const std::vector<std::pair<Document, Document>>& pairs, const TagSchema& schema,
                                    bool token) {
  OracleReport r;
  for (const auto& t : schema.tags) {
    if (t != schema.other) r.counts[t];
  }
  double correct = 0, total = 0;
  for (const auto& [g, p] : pairs) {
    if (token) {
      for (const auto& tok : tokenize(g.text).tokens) {
        const auto gt = oracle_token_tag(tok, g.entities, schema.other);
        const auto pt = oracle_token_tag(tok, p.entities, schema.other);
        total += 1;
        correct += gt == pt;
        for (auto& [tag, c] : r.counts) {
          if (gt == tag && pt == tag) c.tp += 1;
          if (gt != tag && pt == tag) c.fp += 1;
          if (gt == tag && pt != tag) c.fn += 1;
        }
      }
    } else {
      for (auto& [tag, c] : r.counts) {
        std::vector<std::pair<std::size_t, std::size_t>> gs, ps;
        for (const auto& e : g.entities) {
          if (e.tag == tag) gs.emplace_back(e.start, e.end);
        }
        for (const auto& e : p.entities) {
          if (e.tag == tag) ps.emplace_back(e.start, e.end);
        }
        double hits = 0;
        std::vector<bool> used(ps.size(), false);
        for (const auto& x : gs) {
          for (std::size_t i = 0; i < ps.size(); ++i) {
            if (!used[i] && ps[i] == x) {
              used[i] = true;
              hits += 1;
              break;
            }
          }
        }
        c.tp += hits;
        c.fp += static_cast<double>(ps.size()) - hits;
        c.fn += static_cast<double>(gs.size()) - hits;
      }
    }
  }
  r.accuracy = oracle_div(correct, total);
  double stp = 0, sfp = 0, sfn = 0, sp = 0, sr = 0, support = 0;
  for (const auto& [tag, c] : r.counts) {
    OracleScores s;
    s.p = oracle_div(c.tp, c.tp + c.fp);
    s.r = oracle_div(c.tp, c.tp + c.fn);
    s.f1 = oracle_f1(s.p, s.r);
    r.per_tag[tag] = s;
    stp += c.tp;
    sfp += c.fp;
    sfn += c.fn;
    sp += s.p;
    sr += s.r;
    support += c.tp + c.fn;
  }
  r.micro.p = oracle_div(stp, stp + sfp);
  r.micro.r = oracle_div(stp, stp + sfn);
  r.micro.f1 = oracle_f1(r.micro.p, r.micro.r);
  const double n = static_cast<double>(r.counts.size());
  r.macro.p = oracle_div(sp, n);
  r.macro.r = oracle_div(sr, n);
  r.macro.f1 = oracle_f1(r.macro.p, r.macro.r);
  for (const auto& [tag, c] : r.counts) {
    const double w = oracle_div(c.tp + c.fn, support);
    r.weighted.p += w * r.per_tag[tag].p;
    r.weighted.r += w * r.per_tag[tag].r;
    r.weighted.f1 += w * r.per_tag[tag].f1;
  }
  return r;
}

}  // namespace deid::testing

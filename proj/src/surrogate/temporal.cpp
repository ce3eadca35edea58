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

#include "deid/surrogate/temporal.hpp"

#include <array>
#include <cctype>
#include <chrono>
#include <regex>

namespace deid::surrogate {
namespace {

namespace chr = std::chrono;

constexpr std::array<std::string_view, 12> kMonths{"january", "february", "march",     "april",   "may",      "june",
                                                   "july",    "august",   "september", "october", "november", "december"};

enum class DateForm { kDayFirstNumeric, kIso, kMonthName };
enum class LetterCase { kLower, kUpper, kTitle };

struct DateParts {
  DateForm form{};
  int day = 0, month = 0, year = 0;
  std::size_t day_width = 2, month_width = 2;
  std::string sep1, sep2;
  // month-name form
  bool full_name = false;
  bool trailing_dot = false;
  LetterCase letter_case = LetterCase::kTitle;
};

struct TimeParts {
  int hour = 0, minute = 0, second = 0;
  bool has_seconds = false;
  std::size_t hour_width = 2;
  bool twelve_hour = false;
  std::string marker_gap;  // text between the digits and AM/PM
  std::string marker;      // e.g. "PM", "a.m."
};

std::string pad(int value, std::size_t width) {
  std::string s = std::to_string(value);
  while (s.size() < width) s.insert(s.begin(), '0');
  return s;
}

int to_int(const std::string& s) { return std::stoi(s); }

bool valid_ymd(int y, int m, int d) {
  return chr::year_month_day{chr::year{y}, chr::month{static_cast<unsigned>(m)}, chr::day{static_cast<unsigned>(d)}}.ok();
}

LetterCase case_of(const std::string& word) {
  bool all_upper = true, all_lower = true;
  for (const char c : word) {
    if (std::isupper(static_cast<unsigned char>(c))) all_lower = false;
    if (std::islower(static_cast<unsigned char>(c))) all_upper = false;
  }
  if (all_upper && word.size() > 1) return LetterCase::kUpper;
  if (all_lower) return LetterCase::kLower;
  return LetterCase::kTitle;
}

std::string apply_case(std::string_view word, LetterCase c) {
  std::string out(word);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto ch = static_cast<unsigned char>(out[i]);
    const bool upper = c == LetterCase::kUpper || (c == LetterCase::kTitle && i == 0);
    out[i] = static_cast<char>(upper ? std::toupper(ch) : std::tolower(ch));
  }
  return out;
}

std::optional<DateParts> parse_date(const std::string& s) {
  static const std::regex numeric(R"(^(\d{1,2})([-/])(\d{1,2})\2(\d{4})$)");
  static const std::regex iso(R"(^(\d{4})-(\d{2})-(\d{2})$)");
  static const std::regex named(R"(^(\d{1,2})( +|-)([A-Za-z]+)(\.?)( +|-)(\d{4})$)");
  std::smatch m;
  DateParts p;
  if (std::regex_match(s, m, numeric)) {
    p.form = DateForm::kDayFirstNumeric;
    p.day = to_int(m[1]);
    p.month = to_int(m[3]);
    p.year = to_int(m[4]);
    p.day_width = m[1].length();
    p.month_width = m[3].length();
    p.sep1 = p.sep2 = m[2];
  } else if (std::regex_match(s, m, iso)) {
    p.form = DateForm::kIso;
    p.year = to_int(m[1]);
    p.month = to_int(m[2]);
    p.day = to_int(m[3]);
  } else if (std::regex_match(s, m, named)) {
    p.form = DateForm::kMonthName;
    p.day = to_int(m[1]);
    p.day_width = m[1].length();
    p.sep1 = m[2];
    p.sep2 = m[5];
    p.trailing_dot = m[4].length() > 0;
    p.year = to_int(m[6]);
    const std::string word = m[3];
    std::string lower;
    for (const char c : word) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (std::size_t i = 0; i < kMonths.size(); ++i) {
      if (lower == kMonths[i]) {
        p.month = static_cast<int>(i) + 1;
        p.full_name = true;
      } else if (lower.size() == 3 && kMonths[i].substr(0, 3) == lower) {
        p.month = static_cast<int>(i) + 1;
      }
    }
    if (p.month == 0) return std::nullopt;
    if (p.full_name && p.trailing_dot) return std::nullopt;
    // "May" is both forms; keep it as written
    p.letter_case = case_of(word);
  } else {
    return std::nullopt;
  }
  if (p.month < 1 || p.month > 12 || !valid_ymd(p.year, p.month, p.day)) return std::nullopt;
  return p;
}

std::optional<TimeParts> parse_time(const std::string& s) {
  static const std::regex re(R"(^(\d{1,2}):(\d{2})(?::(\d{2}))?(?:(\s*)([AaPp]\.?[Mm]\.?))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) return std::nullopt;
  TimeParts t;
  t.hour = to_int(m[1]);
  t.hour_width = m[1].length();
  t.minute = to_int(m[2]);
  if (m[3].matched) {
    t.has_seconds = true;
    t.second = to_int(m[3]);
  }
  if (m[5].matched) {
    t.twelve_hour = true;
    t.marker_gap = m[4];
    t.marker = m[5];
    if (t.hour < 1 || t.hour > 12) return std::nullopt;
    const bool pm = t.marker[0] == 'p' || t.marker[0] == 'P';
    t.hour = t.hour % 12 + (pm ? 12 : 0);
  } else if (t.hour > 23) {
    return std::nullopt;
  }
  if (t.minute > 59 || t.second > 59) return std::nullopt;
  return t;
}

std::optional<std::string> format_date(const DateParts& p, chr::sys_days when) {
  const chr::year_month_day ymd{when};
  const int y = static_cast<int>(ymd.year());
  const int m = static_cast<int>(static_cast<unsigned>(ymd.month()));
  const int d = static_cast<int>(static_cast<unsigned>(ymd.day()));
  if (y < 1000 || y > 9999) return std::nullopt;
  switch (p.form) {
    case DateForm::kDayFirstNumeric:
      return pad(d, p.day_width) + p.sep1 + pad(m, p.month_width) + p.sep2 + std::to_string(y);
    case DateForm::kIso:
      return std::to_string(y) + "-" + pad(m, 2) + "-" + pad(d, 2);
    case DateForm::kMonthName: {
      const auto name = kMonths[static_cast<std::size_t>(m - 1)];
      std::string word = apply_case(p.full_name ? name : name.substr(0, 3), p.letter_case);
      if (p.trailing_dot) word += '.';
      return pad(d, p.day_width) + p.sep1 + word + p.sep2 + std::to_string(y);
    }
  }
  return std::nullopt;
}

std::string format_time(const TimeParts& t, int minute_of_day, int second) {
  int h = minute_of_day / 60;
  const int mi = minute_of_day % 60;
  std::string marker;
  if (t.twelve_hour) {
    const bool pm = h >= 12;
    h = h % 12 == 0 ? 12 : h % 12;
    marker = t.marker;
    const char want = pm ? 'p' : 'a';
    marker[0] = std::isupper(static_cast<unsigned char>(marker[0])) ? static_cast<char>(std::toupper(want)) : want;
  }
  std::string out = pad(h, t.hour_width) + ":" + pad(mi, 2);
  if (t.has_seconds) out += ":" + pad(second, 2);
  if (t.twelve_hour) out += t.marker_gap + marker;
  return out;
}

chr::sys_days to_days(const DateParts& p) {
  return chr::sys_days{chr::year_month_day{chr::year{p.year}, chr::month{static_cast<unsigned>(p.month)},
                                           chr::day{static_cast<unsigned>(p.day)}}};
}

int floor_div(int a, int b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }
int floor_mod(int a, int b) { return a - floor_div(a, b) * b; }

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

std::optional<std::string> shift_temporal(std::string_view surface, int days, int minutes) {
  const std::string s(surface);
  if (const auto d = parse_date(s)) return format_date(*d, to_days(*d) + chr::days{days});
  if (const auto t = parse_time(s)) {
    const int tod = floor_mod(t->hour * 60 + t->minute + minutes, 1440);
    return format_time(*t, tod, t->second);
  }
  // date, whitespace, time
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!is_ws(s[i]) || is_ws(s[i - 1])) continue;
    std::size_t j = i;
    while (j < s.size() && is_ws(s[j])) ++j;
    const auto d = parse_date(s.substr(0, i));
    if (!d) continue;
    const auto t = parse_time(s.substr(j));
    if (!t) continue;
    const int total = t->hour * 60 + t->minute + minutes + days * 1440;
    const int carry = floor_div(total, 1440);
    const auto date = format_date(*d, to_days(*d) + chr::days{carry});
    if (!date) return std::nullopt;
    return *date + s.substr(i, j - i) + format_time(*t, floor_mod(total, 1440), t->second);
  }
  return std::nullopt;
}

}  // namespace deid::surrogate

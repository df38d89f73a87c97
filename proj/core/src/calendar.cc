// Copyright 2026 The WIG Authors.
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

#include "wig/calendar.h"

#include <cstdio>

#include "wig/error.h"

namespace wig {
namespace {

int ParseDigits(std::string_view text, std::size_t pos, std::size_t len,
                std::string_view whole) {
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::kParse,
                  "malformed date '" + std::string(whole) + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace

Date ParseDate(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorCode::kParse,
                "expected YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  const int y = ParseDigits(text, 0, 4, text);
  const int m = ParseDigits(text, 5, 2, text);
  const int d = ParseDigits(text, 8, 2, text);
  const Date date{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                  std::chrono::day{unsigned(d)}};
  if (!date.ok()) {
    throw Error(ErrorCode::kParse,
                "not a calendar day: '" + std::string(text) + "'");
  }
  return date;
}

std::string FormatDate(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(date.year()),
                unsigned(date.month()), unsigned(date.day()));
  return buf;
}

Month ParseMonth(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') {
    throw Error(ErrorCode::kParse,
                "expected YYYY-MM, got '" + std::string(text) + "'");
  }
  const int y = ParseDigits(text, 0, 4, text);
  const int m = ParseDigits(text, 5, 2, text);
  const Month month{std::chrono::year{y}, std::chrono::month{unsigned(m)}};
  if (!month.ok()) {
    throw Error(ErrorCode::kParse, "not a month: '" + std::string(text) + "'");
  }
  return month;
}

std::string FormatMonth(const Month& month) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u", int(month.year()),
                unsigned(month.month()));
  return buf;
}

}  // namespace wig

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

#ifndef WIG_CALENDAR_H_
#define WIG_CALENDAR_H_

#include <chrono>
#include <string>
#include <string_view>

namespace wig {

using Date = std::chrono::year_month_day;
using Month = std::chrono::year_month;

// Strict "YYYY-MM-DD". Throws Error(kParse) on malformed or invalid days.
Date ParseDate(std::string_view text);
std::string FormatDate(const Date& date);

// Strict "YYYY-MM".
Month ParseMonth(std::string_view text);
std::string FormatMonth(const Month& month);

inline Month MonthOf(const Date& date) { return {date.year(), date.month()}; }

}  // namespace wig

#endif  // WIG_CALENDAR_H_

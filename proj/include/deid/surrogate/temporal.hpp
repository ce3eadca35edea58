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

#include <optional>
#include <string>
#include <string_view>

namespace deid::surrogate {

// Shifts a date, a time, or a date followed by a time, keeping the surface
// layout: separators, zero padding, month-name spelling and case, 12/24-hour
// clock. Recognised dates are day-first:
//   DD-MM-YYYY  DD/MM/YYYY  YYYY-MM-DD  DD Mon YYYY (also DD-Mon-YYYY)
// and times HH:MM[:SS] with an optional AM/PM marker.
//
// Dates move by `days`; times by `minutes`; a combined date-time moves by
// both, carrying across midnight. Returns nullopt when the surface is not one
// of the recognised forms or is not a real calendar date.
std::optional<std::string> shift_temporal(std::string_view surface, int days, int minutes);

}  // namespace deid::surrogate

// Copyright 2026 The co2track Authors
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

namespace co2track {

/// Strict, locale-independent parse of a finite decimal number. Leading and
/// trailing ASCII spaces are ignored; anything else left over is an error.
std::optional<double> parse_double(std::string_view text);

std::optional<long long> parse_integer(std::string_view text);

/// Fixed-point text with `decimals` places, `.` separator, no grouping.
std::string format_fixed(double value, int decimals);

/// Shortest text that parses back to the same double.
std::string format_shortest(double value);

}  // namespace co2track

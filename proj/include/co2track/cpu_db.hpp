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

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace co2track {

/// Power assumed for a processor that is not in the database, watts.
inline constexpr double kFallbackTdpWatts = 100.0;

/// Minimum token overlap for a fuzzy model-name match.
inline constexpr double kTdpMatchThreshold = 0.8;

struct CpuSpec {
  std::string model_name;  // normalized
  double tdp_watts = 0.0;
};

struct TdpLookup {
  double tdp_watts = kFallbackTdpWatts;
  bool matched = false;
  std::string matched_model;  // empty when unmatched
};

/// Canonical form of a vendor model string: ASCII-lowercased, trademark marks
/// removed, "@ x.xxGHz" clock suffixes stripped, whitespace collapsed.
/// Idempotent.
std::string normalize_model(std::string_view raw_name);

/// Processor TDP table. Read-only after construction, so lookups may run
/// concurrently.
class CpuDatabase {
 public:
  /// Parses `model,tdp_watts` CSV. Throws ParseError on malformed rows,
  /// non-positive TDP, or two rows with the same normalized model name.
  static CpuDatabase from_csv(std::istream& in);
  static CpuDatabase load(const std::filesystem::path& path);

  /// The table compiled into the library.
  static std::shared_ptr<const CpuDatabase> builtin();

  /// Exact normalized match first; otherwise the best candidate whose token
  /// overlap reaches kTdpMatchThreshold and whose digit-bearing tokens are
  /// exactly those of the query; otherwise kFallbackTdpWatts, unmatched. Never throws.
  TdpLookup lookup_tdp(std::string_view raw_name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<CpuSpec>& entries() const noexcept { return entries_; }

 private:
  struct Indexed {
    std::vector<std::string> tokens;  // sorted, unique
  };

  std::vector<CpuSpec> entries_;  // sorted by model_name
  std::vector<Indexed> index_;
};

}  // namespace co2track

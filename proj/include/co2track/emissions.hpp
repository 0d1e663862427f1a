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

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "co2track/energy.hpp"

namespace co2track {

/// Global average emission intensity, kg CO2 per MWh.
inline constexpr double kGlobalAverageGammaKgPerMwh = 436.5;

/// Environment variable holding a region override, e.g. "FR" or "CA/Quebec".
inline constexpr const char* kCountryEnvVar = "CO2TRACK_COUNTRY";

struct EmissionCoefficient {
  std::string country_name;
  std::string iso_a2;
  std::string iso_a3;
  int un_m49 = 0;
  std::optional<std::string> region_name;
  double gamma_kg_per_mwh = 0.0;
};

enum class RegionSource { override_value, network_lookup, fallback };

struct ResolvedRegion {
  std::string iso_a2;  // upper case; empty for fallback
  std::optional<std::string> region_name;
  RegionSource source = RegionSource::fallback;

  bool operator==(const ResolvedRegion&) const = default;
};

/// Parses "XX" or "XX/Region name" into an override region. Returns nullopt
/// if the code is not two ASCII letters.
std::optional<ResolvedRegion> parse_region_code(std::string_view code);

/// Emission intensity table. Read-only after construction.
class EmissionDatabase {
 public:
  /// Parses `country_name,iso_a2,iso_a3,un_m49,region_name,kg_per_mwh`.
  /// An empty region_name marks the country-level row. Throws ParseError on a
  /// malformed row, a non-positive coefficient or a duplicate (iso_a2, region).
  static EmissionDatabase from_csv(std::istream& in);
  static EmissionDatabase load(const std::filesystem::path& path);
  static std::shared_ptr<const EmissionDatabase> builtin();

  /// (country, region) row, else the country row, else nullptr.
  const EmissionCoefficient* find(const ResolvedRegion& region) const;

  /// Coefficient in kg/MWh for `region`; the global average when the region
  /// is a fallback or is not in the table. Never throws.
  double lookup_gamma(const ResolvedRegion& region) const;

  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<EmissionCoefficient>& rows() const noexcept { return rows_; }

 private:
  std::vector<EmissionCoefficient> rows_;
};

/// Resolves the facility location from an IP geolocation service.
class GeoLocator {
 public:
  virtual ~GeoLocator() = default;
  /// Two-letter country code, or nullopt on any failure.
  virtual std::optional<std::string> locate() = 0;
};

/// Queries an HTTP geolocation endpoint returning JSON with a country code
/// field. Any failure (timeout, refused, bad payload) yields nullopt.
class HttpGeoLocator final : public GeoLocator {
 public:
  HttpGeoLocator(std::string host = "ip-api.com",
                 std::string path = "/json/?fields=countryCode",
                 std::string field = "countryCode",
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

  std::optional<std::string> locate() override;

 private:
  std::string host_;
  std::string path_;
  std::string field_;
  std::chrono::milliseconds timeout_;
};

/// An explicit override wins; otherwise `locator` is asked once; any failure
/// or a null locator gives the fallback region.
ResolvedRegion resolve_region(const std::optional<std::string>& override_code,
                              GeoLocator* locator);

/// kg CO2 = (gamma kg/MWh / 1000) * pue * total kWh.
/// Throws InvalidPue if pue < 1 or is not finite.
double carbon_footprint(const EnergyTotals& totals, double gamma_kg_per_mwh,
                        double pue);

/// Value for the report's country column.
std::string country_label(const ResolvedRegion& region,
                          const EmissionDatabase& db);

}  // namespace co2track

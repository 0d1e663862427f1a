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

#include "co2track/emissions.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "co2track/csv.hpp"
#include "co2track/errors.hpp"
#include "co2track/numeric.hpp"
#include "embedded_data.hpp"

namespace co2track {

namespace {

constexpr std::string_view kEmissionHeader =
    "country_name,iso_a2,iso_a3,un_m49,region_name,kg_per_mwh";

bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }

std::string upper(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

}  // namespace

std::optional<ResolvedRegion> parse_region_code(std::string_view code) {
  std::optional<std::string> region;
  if (const auto slash = code.find('/'); slash != std::string_view::npos) {
    region = std::string(code.substr(slash + 1));
    code = code.substr(0, slash);
    if (region->empty()) region.reset();
  }
  if (code.size() != 2 || !is_alpha(code[0]) || !is_alpha(code[1])) return std::nullopt;
  return ResolvedRegion{upper(code), std::move(region), RegionSource::override_value};
}

EmissionDatabase EmissionDatabase::from_csv(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto rows = csv::parse(text);
  if (rows.empty() || csv::format_row(rows.front().fields) != kEmissionHeader) {
    throw ParseError("emission database header must be '" + std::string(kEmissionHeader) + "'",
                     rows.empty() ? 0 : 1);
  }
  EmissionDatabase db;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::size_t at = rows[i].line;
    if (f.size() != 6) throw ParseError("expected 6 fields", at);
    EmissionCoefficient row;
    row.country_name = f[0];
    if (f[1].size() != 2 || !is_alpha(f[1][0]) || !is_alpha(f[1][1])) {
      throw ParseError("iso_a2 must be two letters", at);
    }
    row.iso_a2 = upper(f[1]);
    row.iso_a3 = upper(f[2]);
    const auto m49 = parse_integer(f[3]);
    if (!m49) throw ParseError("un_m49 must be an integer", at);
    row.un_m49 = static_cast<int>(*m49);
    if (!f[4].empty()) row.region_name = f[4];
    const auto gamma = parse_double(f[5]);
    if (!gamma || !(*gamma > 0.0)) throw ParseError("kg_per_mwh must be positive", at);
    row.gamma_kg_per_mwh = *gamma;
    for (const auto& existing : db.rows_) {
      if (existing.iso_a2 == row.iso_a2 && existing.region_name == row.region_name) {
        throw ParseError("duplicate entry for " + row.iso_a2 +
                             (row.region_name ? "/" + *row.region_name : ""),
                         at);
      }
    }
    db.rows_.push_back(std::move(row));
  }
  return db;
}

EmissionDatabase EmissionDatabase::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open emission database " + path.string());
  return from_csv(in);
}

std::shared_ptr<const EmissionDatabase> EmissionDatabase::builtin() {
  static const auto db = [] {
    std::istringstream in{std::string(detail::kBuiltinEmissionCsv)};
    return std::make_shared<const EmissionDatabase>(from_csv(in));
  }();
  return db;
}

const EmissionCoefficient* EmissionDatabase::find(const ResolvedRegion& region) const {
  if (region.source == RegionSource::fallback || region.iso_a2.empty()) return nullptr;
  const std::string code = upper(region.iso_a2);
  const EmissionCoefficient* country = nullptr;
  for (const auto& row : rows_) {
    if (row.iso_a2 != code) continue;
    if (region.region_name && row.region_name == region.region_name) return &row;
    if (!row.region_name) country = &row;
  }
  return country;
}

double EmissionDatabase::lookup_gamma(const ResolvedRegion& region) const {
  const EmissionCoefficient* row = find(region);
  return row ? row->gamma_kg_per_mwh : kGlobalAverageGammaKgPerMwh;
}

HttpGeoLocator::HttpGeoLocator(std::string host, std::string path, std::string field,
                               std::chrono::milliseconds timeout)
    : host_(std::move(host)), path_(std::move(path)), field_(std::move(field)),
      timeout_(timeout) {}

std::optional<std::string> HttpGeoLocator::locate() {
  try {
    httplib::Client client(host_);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    auto response = client.Get(path_);
    if (!response || response->status != 200) return std::nullopt;
    const auto body = nlohmann::json::parse(response->body, nullptr, false);
    if (body.is_discarded() || !body.contains(field_) || !body[field_].is_string()) {
      return std::nullopt;
    }
    auto code = body[field_].get<std::string>();
    if (!parse_region_code(code)) return std::nullopt;
    return code;
  } catch (...) {
    return std::nullopt;
  }
}

ResolvedRegion resolve_region(const std::optional<std::string>& override_code,
                              GeoLocator* locator) {
  if (override_code) {
    if (auto region = parse_region_code(*override_code)) return *region;
  }
  if (locator) {
    std::optional<std::string> located;
    try {
      located = locator->locate();
    } catch (...) {
    }
    if (located) {
      if (auto region = parse_region_code(*located)) {
        region->source = RegionSource::network_lookup;
        return *region;
      }
    }
  }
  return ResolvedRegion{};
}

double carbon_footprint(const EnergyTotals& totals, double gamma_kg_per_mwh, double pue) {
  if (!(pue >= 1.0) || !std::isfinite(pue)) {
    throw InvalidPue("PUE must be a finite value >= 1, got " + format_shortest(pue));
  }
  // The table stores kg/MWh; energy is in kWh.
  const double gamma_kg_per_kwh = gamma_kg_per_mwh / 1000.0;
  return gamma_kg_per_kwh * pue * totals.total_kwh;
}

std::string country_label(const ResolvedRegion& region, const EmissionDatabase& db) {
  if (region.source == RegionSource::fallback || region.iso_a2.empty()) return "N/A";
  if (const EmissionCoefficient* row = db.find(region)) {
    if (row->region_name) return row->country_name + "/" + *row->region_name;
    return row->country_name;
  }
  return region.region_name ? region.iso_a2 + "/" + *region.region_name : region.iso_a2;
}

}  // namespace co2track

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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace co2track {

class RecordCipher;

/// Header of the emission report, written once in plaintext.
inline constexpr std::string_view kReportHeader =
    "project_name,experiment_description,start_time,duration(s),"
    "power_consumption(kWh),CO2_emissions(kg),CPU_name,GPU_name,OS,country";

/// Decimal places kept for numeric report fields.
inline constexpr int kReportDecimals = 6;

/// One finished session. Numeric fields hold the values exactly as they are
/// written to the report (see quantize()).
struct EmissionRecord {
  std::string project_name;
  std::string experiment_description;
  std::string start_time;  // "yyyy-mm-dd hh:mm:ss", local time
  double duration_s = 0.0;
  double power_kwh = 0.0;
  double co2_kg = 0.0;
  std::string cpu_name;
  std::string gpu_name;
  std::string os_name;
  std::string country;

  bool operator==(const EmissionRecord&) const = default;
};

struct SummaryRow {
  std::string project_name;
  std::size_t session_count = 0;
  double total_duration_s = 0.0;
  double total_power_kwh = 0.0;
  double total_co2_kg = 0.0;
  std::optional<double> cost;

  bool operator==(const SummaryRow&) const = default;
};

/// Rounds to kReportDecimals places; the result parses back bit-identically
/// from its formatted text.
double quantize(double value);

/// Fixed-point text with kReportDecimals places, locale independent.
std::string format_decimal(double value);

std::vector<std::string> record_fields(const EmissionRecord& record);

/// Appends one record to the report at `path`, writing the header first if
/// the file is empty. The row is written with a single write(2) under an
/// exclusive flock(2), so concurrent writers never interleave rows.
///
/// With a cipher every cell is sealed and the file's salt is reused (a new
/// salt is drawn for the first row). Appending plaintext to an encrypted
/// report, or the reverse, is refused.
///
/// Throws IoFailure, EncryptionFailure, or ParseError if the existing file
/// does not start with kReportHeader.
void append_record(const std::filesystem::path& path, const EmissionRecord& record,
                   const RecordCipher* cipher = nullptr);

/// Reads every record. Sealed rows require a cipher; plaintext and sealed
/// rows may not be mixed. Throws IoFailure, ParseError (with row number) or
/// DecryptFailure.
std::vector<EmissionRecord> read_records(const std::filesystem::path& path,
                                         const RecordCipher* cipher = nullptr);

/// Groups records by project, sorted by project name. Sums are taken in
/// integer units of the report precision, so they are exact and independent
/// of record order. cost = total_power_kwh * kwh_price when a price is given.
std::vector<SummaryRow> summarize(std::span<const EmissionRecord> records,
                                  std::optional<double> kwh_price = std::nullopt);

std::vector<SummaryRow> summary(const std::filesystem::path& path,
                                std::optional<double> kwh_price = std::nullopt,
                                const RecordCipher* cipher = nullptr);

}  // namespace co2track

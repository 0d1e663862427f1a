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

#include "co2track/reporting.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "co2track/csv.hpp"
#include "co2track/errors.hpp"
#include "co2track/numeric.hpp"
#include "co2track/record_cipher.hpp"

namespace co2track {

namespace {

constexpr std::size_t kColumns = 10;
constexpr double kUnitsPerValue = 1e6;  // 10^kReportDecimals
static_assert(kReportDecimals == 6);

const std::vector<std::string>& column_names() {
  static const std::vector<std::string> names = [] {
    return csv::parse(kReportHeader).front().fields;
  }();
  return names;
}

std::string errno_text() { return std::strerror(errno); }

class FileLock {
 public:
  explicit FileLock(int fd) : fd_(fd) {
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) throw IoFailure("cannot lock report: " + errno_text());
    }
  }
  ~FileLock() { ::flock(fd_, LOCK_UN); }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_;
};

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoFailure("cannot write report: " + errno_text());
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// What an existing report looks like, judged from its first bytes.
struct ReportHead {
  bool has_rows = false;
  bool sealed = false;
  std::optional<Salt> salt;
  bool ends_with_newline = true;
};

ReportHead inspect(int fd, off_t size, const std::filesystem::path& path) {
  ReportHead head;
  std::string prefix(static_cast<std::size_t>(std::min<off_t>(size, 64 * 1024)), '\0');
  const ssize_t n = ::pread(fd, prefix.data(), prefix.size(), 0);
  if (n < 0) throw IoFailure("cannot read " + path.string() + ": " + errno_text());
  prefix.resize(static_cast<std::size_t>(n));

  const auto newline = prefix.find('\n');
  std::string header = prefix.substr(0, newline);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != kReportHeader) {
    throw ParseError(path.string() + " is not an emission report (unexpected header)", 1);
  }
  if (newline != std::string::npos && newline + 1 < prefix.size()) {
    const std::string_view rest = std::string_view(prefix).substr(newline + 1);
    const std::string_view first_cell = rest.substr(0, rest.find_first_of(",\r\n"));
    head.has_rows = !rest.empty();
    head.sealed = RecordCipher::is_sealed(first_cell);
    if (head.sealed) head.salt = RecordCipher::salt_of(first_cell);
  }
  char last = '\n';
  if (::pread(fd, &last, 1, size - 1) == 1) head.ends_with_newline = last == '\n';
  return head;
}

std::uint64_t to_units(double value) {
  return static_cast<std::uint64_t>(std::llround(value * kUnitsPerValue));
}

double require_number(const std::string& text, const char* column, std::size_t row) {
  const auto value = parse_double(text);
  if (!value || *value < 0.0) {
    throw ParseError(std::string("bad ") + column + " value '" + text + "'", row);
  }
  return *value;
}

}  // namespace

double quantize(double value) {
  return parse_double(format_decimal(value)).value_or(0.0);
}

std::string format_decimal(double value) { return format_fixed(value, kReportDecimals); }

std::vector<std::string> record_fields(const EmissionRecord& r) {
  return {r.project_name,
          r.experiment_description,
          r.start_time,
          format_decimal(r.duration_s),
          format_decimal(r.power_kwh),
          format_decimal(r.co2_kg),
          r.cpu_name,
          r.gpu_name,
          r.os_name,
          r.country};
}

void append_record(const std::filesystem::path& path, const EmissionRecord& record,
                   const RecordCipher* cipher) {
  Fd fd(::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644));
  if (fd.get() < 0) throw IoFailure("cannot open " + path.string() + ": " + errno_text());
  FileLock lock(fd.get());

  struct stat st {};
  if (::fstat(fd.get(), &st) != 0) throw IoFailure("cannot stat " + path.string());

  std::string out;
  std::optional<Salt> salt;
  if (st.st_size == 0) {
    out.append(kReportHeader).push_back('\n');
  } else {
    const ReportHead head = inspect(fd.get(), st.st_size, path);
    if (head.has_rows && head.sealed && !cipher) {
      throw EncryptionFailure(path.string() + " is encrypted; a passphrase is required");
    }
    if (head.has_rows && !head.sealed && cipher) {
      throw EncryptionFailure(path.string() + " holds plaintext rows; refusing to mix");
    }
    salt = head.salt;
    if (!head.ends_with_newline) out.push_back('\n');
  }

  auto fields = record_fields(record);
  if (cipher) {
    if (!salt) salt = RecordCipher::new_salt();
    const auto& names = column_names();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      fields[i] = cipher->seal(fields[i], names[i], *salt);
    }
  } else if (!fields.empty() && RecordCipher::is_sealed(fields.front())) {
    // A plaintext project name must not look like ciphertext.
    throw EncryptionFailure("project name collides with the encrypted-field marker");
  }
  out += csv::format_row(fields);
  out.push_back('\n');
  write_all(fd.get(), out);
}

std::vector<EmissionRecord> read_records(const std::filesystem::path& path,
                                         const RecordCipher* cipher) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoFailure("cannot read " + path.string());

  const auto rows = csv::parse(text);
  std::vector<EmissionRecord> records;
  if (rows.empty()) return records;
  if (csv::format_row(rows.front().fields) != kReportHeader) {
    throw ParseError("unexpected report header", rows.front().line);
  }

  const auto& names = column_names();
  std::optional<bool> file_sealed;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto fields = rows[i].fields;
    const std::size_t at = rows[i].line;
    if (fields.size() != kColumns) {
      throw ParseError("expected " + std::to_string(kColumns) + " fields, got " +
                           std::to_string(fields.size()),
                       at);
    }
    const bool sealed = RecordCipher::is_sealed(fields.front());
    for (const auto& field : fields) {
      if (RecordCipher::is_sealed(field) != sealed) {
        throw ParseError("row mixes plaintext and encrypted fields", at);
      }
    }
    if (file_sealed && *file_sealed != sealed) {
      throw ParseError("report mixes plaintext and encrypted rows", at);
    }
    file_sealed = sealed;

    if (sealed) {
      if (!cipher) throw DecryptFailure("report is encrypted; a passphrase is required");
      for (std::size_t c = 0; c < fields.size(); ++c) fields[c] = cipher->open(fields[c], names[c]);
    } else if (cipher) {
      throw DecryptFailure("report is not encrypted");
    }

    EmissionRecord r;
    r.project_name = std::move(fields[0]);
    r.experiment_description = std::move(fields[1]);
    r.start_time = std::move(fields[2]);
    r.duration_s = require_number(fields[3], "duration", at);
    r.power_kwh = require_number(fields[4], "power", at);
    r.co2_kg = require_number(fields[5], "CO2", at);
    r.cpu_name = std::move(fields[6]);
    r.gpu_name = std::move(fields[7]);
    r.os_name = std::move(fields[8]);
    r.country = std::move(fields[9]);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SummaryRow> summarize(std::span<const EmissionRecord> records,
                                  std::optional<double> kwh_price) {
  struct Totals {
    std::size_t count = 0;
    std::uint64_t duration = 0;
    std::uint64_t power = 0;
    std::uint64_t co2 = 0;
  };
  std::map<std::string, Totals> groups;
  for (const auto& r : records) {
    Totals& t = groups[r.project_name];
    ++t.count;
    t.duration += to_units(r.duration_s);
    t.power += to_units(r.power_kwh);
    t.co2 += to_units(r.co2_kg);
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (const auto& [project, t] : groups) {
    SummaryRow row;
    row.project_name = project;
    row.session_count = t.count;
    row.total_duration_s = static_cast<double>(t.duration) / kUnitsPerValue;
    row.total_power_kwh = static_cast<double>(t.power) / kUnitsPerValue;
    row.total_co2_kg = static_cast<double>(t.co2) / kUnitsPerValue;
    if (kwh_price) row.cost = row.total_power_kwh * *kwh_price;
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<SummaryRow> summary(const std::filesystem::path& path,
                                std::optional<double> kwh_price, const RecordCipher* cipher) {
  const auto records = read_records(path, cipher);
  return summarize(records, kwh_price);
}

}  // namespace co2track

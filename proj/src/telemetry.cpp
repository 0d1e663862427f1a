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

#include "co2track/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "co2track/csv.hpp"
#include "co2track/errors.hpp"
#include "co2track/numeric.hpp"

namespace co2track {

double cpu_utilization(const CpuObservation& cpu) {
  const double percent = cpu.process_cpu_percent;
  if (std::isnan(percent) || percent <= 0.0 || cpu.core_count < 1) return 0.0;
  const double fraction = percent / (100.0 * cpu.core_count);
  return std::min(fraction, 1.0);
}

PowerSample compose_sample(const CpuObservation& cpu, const GpuObservation& gpu,
                           const RamObservation& ram, double tdp_watts,
                           double timestamp_s, double ram_watts_per_gb) {
  if (!(tdp_watts > 0.0) || !std::isfinite(tdp_watts)) {
    throw std::invalid_argument("tdp_watts must be positive and finite");
  }
  if (!(timestamp_s >= 0.0) || !std::isfinite(timestamp_s)) {
    throw std::invalid_argument("timestamp_s must be non-negative and finite");
  }
  if (!(gpu.total_power_watts >= 0.0) || !std::isfinite(gpu.total_power_watts)) {
    throw std::invalid_argument("GPU power must be non-negative and finite");
  }
  if (!(ram.allocated_gb >= 0.0) || !std::isfinite(ram.allocated_gb)) {
    throw std::invalid_argument("allocated memory must be non-negative and finite");
  }
  PowerSample sample;
  sample.timestamp_s = timestamp_s;
  sample.cpu_watts = tdp_watts * cpu_utilization(cpu);
  sample.gpu_watts = gpu.device_count == 0 ? 0.0 : gpu.total_power_watts;
  sample.ram_watts = ram_watts_per_gb * ram.allocated_gb;
  return sample;
}

// --- TraceSpec --------------------------------------------------------------

void TraceSpec::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TraceRow& row = rows[i];
    const std::size_t line = i + 2;
    if (i == 0 && row.t_s != 0.0) throw ParseError("trace must start at t_s = 0", line);
    if (i > 0 && !(row.t_s > rows[i - 1].t_s)) {
      throw ParseError("timestamps must strictly increase", line);
    }
    if (!std::isfinite(row.t_s)) throw ParseError("non-finite timestamp", line);
    if (!(row.cpu_percent >= 0.0) || !std::isfinite(row.cpu_percent)) {
      throw ParseError("cpu_percent must be non-negative", line);
    }
    if (row.core_count < 1) throw ParseError("core_count must be at least 1", line);
    for (double w : row.gpu_watts) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ParseError("gpu_watts must be non-negative", line);
      }
    }
    if (!(row.ram_gb >= 0.0) || !std::isfinite(row.ram_gb)) {
      throw ParseError("ram_gb must be non-negative", line);
    }
  }
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    std::string part(text.substr(start, pos - start));
    // trim
    const auto first = part.find_first_not_of(' ');
    const auto last = part.find_last_not_of(' ');
    parts.push_back(first == std::string::npos ? std::string()
                                               : part.substr(first, last - first + 1));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double require_double(const std::string& text, const char* column, std::size_t line) {
  auto value = parse_double(text);
  if (!value) throw ParseError(std::string("bad ") + column + " value '" + text + "'", line);
  return *value;
}

}  // namespace

TraceSpec parse_trace(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  TraceSpec trace;
  // Metadata comments come before the header; strip them so the CSV parser
  // only sees data. Line numbers are preserved by blanking the lines.
  std::string body;
  body.reserve(text.size());
  std::istringstream lines(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen && !line.empty() && line.front() == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        auto key = split(line.substr(1, colon - 1), ',').front();
        auto value = line.substr(colon + 1);
        const auto first = value.find_first_not_of(' ');
        value = first == std::string::npos ? std::string() : value.substr(first);
        if (key == "cpu_model") {
          trace.cpu_model = value;
        } else if (key == "gpu_names") {
          for (auto& name : split(value, ';')) {
            if (!name.empty()) trace.gpu_names.push_back(name);
          }
        } else if (key == "start_time") {
          trace.start_time = value;
        } else if (key == "os") {
          trace.os_name = value;
        }
      }
      body.push_back('\n');
      continue;
    }
    if (!line.empty()) header_seen = true;
    body += line;
    body.push_back('\n');
  }

  const auto rows = csv::parse(body);
  if (rows.empty()) throw ParseError("missing trace header", 0);
  if (csv::format_row(rows.front().fields) != kTraceHeader) {
    throw ParseError(std::string("trace header must be '") + kTraceHeader + "'",
                     rows.front().line);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& fields = rows[i].fields;
    const std::size_t at = rows[i].line;
    if (fields.size() != 5) {
      throw ParseError("expected 5 fields, got " + std::to_string(fields.size()), at);
    }
    TraceRow row;
    row.t_s = require_double(fields[0], "t_s", at);
    row.cpu_percent = require_double(fields[1], "cpu_percent", at);
    auto cores = parse_integer(fields[2]);
    if (!cores || *cores < 1 || *cores > 1'000'000) {
      throw ParseError("bad core_count value '" + fields[2] + "'", at);
    }
    row.core_count = static_cast<int>(*cores);
    if (!fields[3].empty()) {
      for (const auto& part : split(fields[3], ';')) {
        row.gpu_watts.push_back(require_double(part, "gpu_watts", at));
      }
    }
    row.ram_gb = require_double(fields[4], "ram_gb", at);
    trace.rows.push_back(std::move(row));
  }
  trace.validate();
  return trace;
}

TraceSpec load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open trace file " + path.string());
  return parse_trace(in);
}

void write_trace(std::ostream& out, const TraceSpec& trace) {
  if (!trace.cpu_model.empty()) out << "# cpu_model: " << trace.cpu_model << '\n';
  if (!trace.gpu_names.empty()) {
    out << "# gpu_names: ";
    for (std::size_t i = 0; i < trace.gpu_names.size(); ++i) {
      out << (i ? ";" : "") << trace.gpu_names[i];
    }
    out << '\n';
  }
  if (trace.start_time) out << "# start_time: " << *trace.start_time << '\n';
  if (trace.os_name) out << "# os: " << *trace.os_name << '\n';
  out << kTraceHeader << '\n';
  for (const auto& row : trace.rows) {
    std::string gpu;
    for (std::size_t i = 0; i < row.gpu_watts.size(); ++i) {
      if (i) gpu.push_back(';');
      gpu += format_shortest(row.gpu_watts[i]);
    }
    out << format_shortest(row.t_s) << ',' << format_shortest(row.cpu_percent) << ','
        << row.core_count << ',' << gpu << ',' << format_shortest(row.ram_gb) << '\n';
  }
}

// --- ReplayProvider ---------------------------------------------------------

ReplayProvider::ReplayProvider(TraceSpec trace) : trace_(std::move(trace)) {
  trace_.validate();
}

void ReplayProvider::seek(double t_s) {
  if (!(t_s >= 0.0)) throw std::invalid_argument("replay time must be non-negative");
  if (trace_.rows.empty() || t_s > trace_.rows.back().t_s) {
    throw TraceExhausted("trace has no data at t = " + format_shortest(t_s) + " s");
  }
  auto it = std::upper_bound(trace_.rows.begin(), trace_.rows.end(), t_s,
                             [](double t, const TraceRow& row) { return t < row.t_s; });
  cursor_ = std::distance(trace_.rows.begin(), it) - 1;
}

const TraceRow& ReplayProvider::current() {
  if (cursor_ < 0) seek(0.0);
  return trace_.rows[static_cast<std::size_t>(cursor_)];
}

CpuObservation ReplayProvider::sample_cpu() {
  const TraceRow& row = current();
  return CpuObservation{row.cpu_percent, row.core_count, trace_.cpu_model};
}

GpuObservation ReplayProvider::sample_gpu() {
  const TraceRow& row = current();
  GpuObservation gpu;
  gpu.device_count = static_cast<int>(row.gpu_watts.size());
  for (double w : row.gpu_watts) gpu.total_power_watts += w;
  gpu.device_names = trace_.gpu_names;
  return gpu;
}

RamObservation ReplayProvider::sample_ram() { return RamObservation{current().ram_gb}; }

HardwareIdentity ReplayProvider::identity() const {
  return HardwareIdentity{trace_.cpu_model, trace_.gpu_names,
                          trace_.os_name.value_or("replay")};
}

std::optional<double> ReplayProvider::advance() {
  const auto next = cursor_ + 1;
  if (next >= static_cast<std::ptrdiff_t>(trace_.rows.size())) return std::nullopt;
  cursor_ = next;
  return trace_.rows[static_cast<std::size_t>(cursor_)].t_s;
}

std::optional<std::string> ReplayProvider::civil_start_time() const {
  return trace_.start_time.value_or("1970-01-01 00:00:00");
}

std::unique_ptr<TelemetryProvider> replay_provider(TraceSpec trace) {
  return std::make_unique<ReplayProvider>(std::move(trace));
}

}  // namespace co2track

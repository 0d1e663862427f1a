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

#include <cstddef>
#include <iosfwd>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace co2track {

/// Specific power draw of resident memory, watts per gigabyte (DDR3/DDR4).
inline constexpr double kRamWattsPerGb = 0.375;

/// One reading of the power attributed to the tracked workload.
/// `timestamp_s` is measured from session start.
struct PowerSample {
  double timestamp_s = 0.0;
  double cpu_watts = 0.0;
  double gpu_watts = 0.0;
  double ram_watts = 0.0;

  bool operator==(const PowerSample&) const = default;
};

struct CpuObservation {
  /// Percent of one core used by the tracked process tree; may exceed 100.
  double process_cpu_percent = 0.0;
  int core_count = 1;
  std::string cpu_model_name;
};

struct GpuObservation {
  int device_count = 0;
  double total_power_watts = 0.0;
  std::vector<std::string> device_names;
};

struct RamObservation {
  double allocated_gb = 0.0;
};

/// Static description of the machine a session ran on.
struct HardwareIdentity {
  std::string cpu_name;
  std::vector<std::string> gpu_names;
  std::string os_name;
};

/// Fraction of the whole CPU used by the process tree, clamped to [0, 1].
/// Non-finite or negative percentages are treated as idle, +inf as saturated.
double cpu_utilization(const CpuObservation& cpu);

/// Assembles the instantaneous power terms for one poll:
/// cpu = tdp * utilization, gpu = summed device power,
/// ram = `ram_watts_per_gb` * allocated gigabytes.
///
/// Throws std::invalid_argument if `tdp_watts` is not positive,
/// `timestamp_s` is negative, or a GPU/RAM reading is negative or non-finite.
PowerSample compose_sample(const CpuObservation& cpu, const GpuObservation& gpu,
                           const RamObservation& ram, double tdp_watts,
                           double timestamp_s,
                           double ram_watts_per_gb = kRamWattsPerGb);

/// Source of power observations for one tracked workload.
///
/// Providers are polled from a single sampler thread and need not be
/// thread-safe. Real providers report the state "now"; simulated providers
/// own their own timeline and are stepped with `advance()`.
class TelemetryProvider {
 public:
  virtual ~TelemetryProvider() = default;

  virtual CpuObservation sample_cpu() = 0;
  virtual GpuObservation sample_gpu() = 0;
  virtual RamObservation sample_ram() = 0;

  virtual HardwareIdentity identity() const = 0;

  virtual bool simulated() const noexcept { return false; }

  /// Steps a simulated provider to its next timestamp and returns it, or
  /// nullopt once the timeline is exhausted. Real providers return nullopt.
  virtual std::optional<double> advance() { return std::nullopt; }

  /// Civil start time to stamp on the record instead of the wall clock.
  virtual std::optional<std::string> civil_start_time() const {
    return std::nullopt;
  }
};

// --- Trace replay ---------------------------------------------------------

/// One row of a recorded telemetry trace. `gpu_watts` holds one entry per
/// device; an empty list means no accelerator is present.
struct TraceRow {
  double t_s = 0.0;
  double cpu_percent = 0.0;
  int core_count = 1;
  std::vector<double> gpu_watts;
  double ram_gb = 0.0;

  bool operator==(const TraceRow&) const = default;
};

struct TraceSpec {
  std::vector<TraceRow> rows;
  std::string cpu_model;
  std::vector<std::string> gpu_names;
  std::optional<std::string> start_time;
  std::optional<std::string> os_name;

  /// Throws ParseError when timestamps do not start at 0 and strictly
  /// increase, or when a row holds a negative or non-finite value.
  void validate() const;

  bool operator==(const TraceSpec&) const = default;
};

/// Header line of the trace CSV format.
inline constexpr const char* kTraceHeader =
    "t_s,cpu_percent,core_count,gpu_watts,ram_gb";

/// Parses a trace file. Metadata may precede the header as comment lines of
/// the form `# key: value` with keys cpu_model, gpu_names (`;`-separated),
/// start_time and os. Multiple GPUs are written as `250;150` in gpu_watts.
TraceSpec parse_trace(std::istream& in);
TraceSpec load_trace(const std::filesystem::path& path);
void write_trace(std::ostream& out, const TraceSpec& trace);

/// Deterministic provider that plays back a trace with step-function
/// semantics: a query at time t sees the last row with t_s <= t.
class ReplayProvider final : public TelemetryProvider {
 public:
  explicit ReplayProvider(TraceSpec trace);

  /// Positions the cursor at time `t_s`. Throws TraceExhausted if `t_s` lies
  /// past the last row, std::invalid_argument if it is negative.
  void seek(double t_s);

  CpuObservation sample_cpu() override;
  GpuObservation sample_gpu() override;
  RamObservation sample_ram() override;
  HardwareIdentity identity() const override;

  bool simulated() const noexcept override { return true; }
  std::optional<double> advance() override;
  std::optional<std::string> civil_start_time() const override;

  const TraceSpec& trace() const noexcept { return trace_; }

 private:
  const TraceRow& current();

  TraceSpec trace_;
  std::ptrdiff_t cursor_ = -1;
};

std::unique_ptr<TelemetryProvider> replay_provider(TraceSpec trace);

}  // namespace co2track

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
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "co2track/cpu_db.hpp"
#include "co2track/emissions.hpp"
#include "co2track/energy.hpp"
#include "co2track/reporting.hpp"
#include "co2track/telemetry.hpp"

namespace co2track {

struct SessionConfig {
  std::string project_name = "default";
  std::string experiment_description;
  double pue = 1.0;
  double sampling_period_s = 1.0;
  /// Report file; an empty path disables writing.
  std::filesystem::path output_path = "emission.csv";
  bool encrypt = false;
  /// Required when `encrypt` is set. Taken from the environment by the CLI
  /// and bindings, never from a command-line flag.
  std::optional<std::string> passphrase;
  std::optional<std::string> region_override;
  std::optional<double> cpu_tdp_override;
  std::optional<double> gamma_override;
  double ram_watts_per_gb = kRamWattsPerGb;

  /// Throws InvalidConfig describing the first violated constraint.
  void validate() const;
};

/// Collaborators a session needs. Null databases mean the built-in tables;
/// a null locator disables network lookups.
struct SessionServices {
  std::unique_ptr<TelemetryProvider> provider;
  std::shared_ptr<const CpuDatabase> cpu_db;
  std::shared_ptr<const EmissionDatabase> emission_db;
  std::shared_ptr<GeoLocator> locator;
};

enum class Phase { configured, running, stopped };

const char* to_string(Phase phase) noexcept;

/// One tracking session: configured -> running -> stopped.
///
/// start() resolves the region, looks up TDP and launches a sampler thread
/// that owns the provider. With a real provider the sampler polls every
/// `sampling_period_s`; with a simulated provider it walks the provider's
/// timeline to the end without sleeping, and stop() waits for it.
///
/// start() and stop() are serialized against each other; snapshot() may be
/// called from any thread at any time. A session can be moved only while it
/// is not running.
class Session {
 public:
  Session(SessionConfig config, SessionServices services);
  ~Session();

  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;

  /// Throws AlreadyRunning unless the phase is `configured`, InvalidConfig if
  /// the configuration is invalid or encryption cannot be set up.
  void start();

  /// Halts sampling, finalizes energy, computes CO2 and appends the record to
  /// the report. Throws NotRunning unless the phase is `running`. The session
  /// is stopped even if writing the report fails.
  EmissionRecord stop();

  Phase phase() const;
  EnergyLedger snapshot() const;
  const SessionConfig& config() const;

  /// Set once the session has started.
  std::optional<ResolvedRegion> region() const;
  std::optional<double> tdp_watts() const;
  std::optional<double> gamma_kg_per_mwh() const;

  /// Telemetry error that ended sampling early, if any (for example the
  /// tracked process exited).
  std::exception_ptr sampler_error() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Runs `workload` inside a fresh session. The record is written even when
/// the workload throws; the workload's exception is then rethrown.
template <typename Workload>
decltype(auto) wrap(SessionConfig config, SessionServices services,
                    Workload&& workload) {
  Session session(std::move(config), std::move(services));
  session.start();
  if constexpr (std::is_void_v<std::invoke_result_t<Workload&&>>) {
    try {
      std::forward<Workload>(workload)();
    } catch (...) {
      try {
        session.stop();
      } catch (...) {
      }
      throw;
    }
    session.stop();
  } else {
    std::invoke_result_t<Workload&&> result = [&]() -> decltype(auto) {
      try {
        return std::forward<Workload>(workload)();
      } catch (...) {
        try {
          session.stop();
        } catch (...) {
        }
        throw;
      }
    }();
    session.stop();
    return result;
  }
}

/// Formats a time point as local "yyyy-mm-dd hh:mm:ss".
std::string format_civil_time(std::chrono::system_clock::time_point tp);

/// "<name> x<count>" for each distinct device, joined by "; "; "N/A" if none.
std::string format_gpu_names(const std::vector<std::string>& names);

}  // namespace co2track

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

#include "co2track/session.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <mutex>
#include <stop_token>
#include <thread>

#include "co2track/errors.hpp"
#include "co2track/numeric.hpp"
#include "co2track/record_cipher.hpp"

namespace co2track {

namespace {

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

void SessionConfig::validate() const {
  if (!(pue >= 1.0) || !std::isfinite(pue)) {
    throw InvalidConfig("pue must be >= 1, got " + format_shortest(pue));
  }
  if (!positive_finite(sampling_period_s)) {
    throw InvalidConfig("sampling period must be positive, got " +
                        format_shortest(sampling_period_s));
  }
  if (cpu_tdp_override && !positive_finite(*cpu_tdp_override)) {
    throw InvalidConfig("TDP override must be positive");
  }
  if (gamma_override && !positive_finite(*gamma_override)) {
    throw InvalidConfig("emission coefficient override must be positive");
  }
  if (!(ram_watts_per_gb >= 0.0) || !std::isfinite(ram_watts_per_gb)) {
    throw InvalidConfig("RAM watts per GB must be non-negative");
  }
  if (region_override && !parse_region_code(*region_override)) {
    throw InvalidConfig("country override must be an ISO-Alpha-2 code, got '" +
                        *region_override + "'");
  }
  if (encrypt && (!passphrase || passphrase->empty())) {
    throw InvalidConfig(std::string("encryption requested but no passphrase given (set ") +
                        kPassphraseEnvVar + ")");
  }
}

const char* to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::configured:
      return "configured";
    case Phase::running:
      return "running";
    case Phase::stopped:
      return "stopped";
  }
  return "unknown";
}

std::string format_civil_time(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm local{};
  localtime_r(&t, &local);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M:%S", &local);
  return buf;
}

std::string format_gpu_names(const std::vector<std::string>& names) {
  if (names.empty()) return "N/A";
  std::vector<std::pair<std::string, int>> counts;
  for (const auto& name : names) {
    auto it = std::find_if(counts.begin(), counts.end(),
                           [&](const auto& entry) { return entry.first == name; });
    if (it == counts.end()) {
      counts.emplace_back(name, 1);
    } else {
      ++it->second;
    }
  }
  std::string out;
  for (const auto& [name, count] : counts) {
    if (!out.empty()) out += "; ";
    out += name + " x" + std::to_string(count);
  }
  return out;
}

struct Session::State {
  using Clock = std::chrono::steady_clock;

  SessionConfig config;
  SessionServices services;

  std::mutex control_mu;  // serializes start() and stop()
  mutable std::mutex mu;  // guards the fields below
  std::condition_variable_any wake;
  Phase phase = Phase::configured;
  EnergyLedger ledger;
  std::optional<ResolvedRegion> region;
  std::optional<double> tdp;
  std::optional<double> gamma;
  std::string country;
  std::exception_ptr sampler_error;
  HardwareIdentity identity;
  std::string civil_start;
  Clock::time_point t0;
  bool simulated = false;
  std::optional<double> last_poll;  // realtime only
  std::unique_ptr<RecordCipher> cipher;

  // Declared last so it is joined before anything it touches is destroyed.
  std::jthread sampler;

  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }

  // Called only from the thread that currently owns the provider.
  void take_sample(double t) {
    TelemetryProvider& provider = *services.provider;
    const CpuObservation cpu = provider.sample_cpu();
    const GpuObservation gpu = provider.sample_gpu();
    const RamObservation ram = provider.sample_ram();
    PowerSample sample = compose_sample(cpu, gpu, ram, *tdp, t, config.ram_watts_per_gb);
    std::lock_guard lock(mu);
    if (simulated) {
      if (ledger.sample_count() > 0 && !(t > ledger.last_timestamp_s())) return;
      ledger.accumulate(sample);
      return;
    }
    // Live CPU readings average the interval since the previous poll, so
    // each reading is held over that interval rather than the next one.
    if (last_poll && !(t > *last_poll)) return;
    if (last_poll) {
      sample.timestamp_s = *last_poll;
      ledger.accumulate(sample);
    }
    last_poll = t;
  }

  // Ends the live timeline at the last poll.
  void close_realtime() {
    std::lock_guard lock(mu);
    if (!last_poll || ledger.sample_count() == 0) return;
    PowerSample closing;
    closing.timestamp_s = *last_poll;
    ledger.accumulate(closing);
  }

  void record_error() {
    std::lock_guard lock(mu);
    sampler_error = std::current_exception();
  }

  void run_realtime(std::stop_token stop) {
    try {
      take_sample(0.0);
      const auto period = std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(config.sampling_period_s));
      auto next = t0 + period;
      while (true) {
        {
          std::unique_lock lock(mu);
          wake.wait_until(lock, stop, next, [] { return false; });
        }
        if (stop.stop_requested()) break;
        take_sample(elapsed());
        next += period;
        if (const auto now = Clock::now(); next <= now) next = now + period;
      }
    } catch (const Error&) {
      record_error();
    } catch (const std::exception&) {
      record_error();
    }
  }

  void run_simulated(std::stop_token stop) {
    try {
      TelemetryProvider& provider = *services.provider;
      while (!stop.stop_requested()) {
        const auto t = provider.advance();
        if (!t) break;
        take_sample(*t);
      }
    } catch (const std::exception&) {
      record_error();
    }
  }
};

Session::Session(SessionConfig config, SessionServices services)
    : state_(std::make_unique<State>()) {
  state_->config = std::move(config);
  state_->services = std::move(services);
}

Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

void Session::start() {
  State& st = *state_;
  std::lock_guard control(st.control_mu);
  {
    std::lock_guard lock(st.mu);
    if (st.phase == Phase::running) throw AlreadyRunning("session is already running");
    if (st.phase == Phase::stopped) throw AlreadyRunning("session has already finished");
  }
  st.config.validate();
  if (!st.services.provider) throw InvalidConfig("session has no telemetry provider");
  if (!st.services.cpu_db) st.services.cpu_db = CpuDatabase::builtin();
  if (!st.services.emission_db) st.services.emission_db = EmissionDatabase::builtin();

  std::unique_ptr<RecordCipher> cipher;
  if (st.config.encrypt) {
    try {
      cipher = std::make_unique<RecordCipher>(*st.config.passphrase);
    } catch (const EncryptionFailure& e) {
      throw InvalidConfig(e.what());
    }
  }

  TelemetryProvider& provider = *st.services.provider;
  const ResolvedRegion region =
      resolve_region(st.config.region_override, st.services.locator.get());
  const double gamma = st.config.gamma_override.value_or(
      st.services.emission_db->lookup_gamma(region));
  HardwareIdentity identity = provider.identity();
  const double tdp = st.config.cpu_tdp_override.value_or(
      st.services.cpu_db->lookup_tdp(identity.cpu_name).tdp_watts);
  std::string civil =
      provider.civil_start_time().value_or(format_civil_time(std::chrono::system_clock::now()));

  {
    std::lock_guard lock(st.mu);
    st.region = region;
    st.gamma = gamma;
    st.tdp = tdp;
    st.country = country_label(region, *st.services.emission_db);
    st.identity = std::move(identity);
    st.civil_start = std::move(civil);
    st.cipher = std::move(cipher);
    st.ledger = EnergyLedger{};
    st.sampler_error = nullptr;
    st.last_poll.reset();
    st.simulated = provider.simulated();
    st.t0 = State::Clock::now();
    st.phase = Phase::running;
  }
  State* raw = state_.get();
  if (st.simulated) {
    st.sampler = std::jthread([raw](std::stop_token stop) { raw->run_simulated(stop); });
  } else {
    st.sampler = std::jthread([raw](std::stop_token stop) { raw->run_realtime(stop); });
  }
}

EmissionRecord Session::stop() {
  State& st = *state_;
  std::lock_guard control(st.control_mu);
  {
    std::lock_guard lock(st.mu);
    if (st.phase != Phase::running) throw NotRunning("session is not running");
  }

  // A simulated timeline always runs to its end so results do not depend on
  // when stop() is called.
  if (!st.simulated) st.sampler.request_stop();
  if (st.sampler.joinable()) st.sampler.join();

  const double wall = st.elapsed();
  if (!st.simulated) {
    bool healthy = false;
    {
      std::lock_guard lock(st.mu);
      healthy = !st.sampler_error;
    }
    if (healthy) {
      try {
        st.take_sample(wall);
      } catch (const std::exception&) {
        st.record_error();
      }
    }
    st.close_realtime();
  }

  EmissionRecord record;
  {
    std::lock_guard lock(st.mu);
    st.phase = Phase::stopped;
    const EnergyTotals totals = st.ledger.finalize();
    record.project_name = st.config.project_name;
    record.experiment_description = st.config.experiment_description;
    record.start_time = st.civil_start;
    record.duration_s = quantize(st.simulated ? totals.duration_s : wall);
    record.power_kwh = quantize(totals.total_kwh);
    record.co2_kg = quantize(carbon_footprint(totals, *st.gamma, st.config.pue));
    record.cpu_name = st.identity.cpu_name.empty() ? "N/A" : st.identity.cpu_name;
    record.gpu_name = format_gpu_names(st.identity.gpu_names);
    record.os_name = st.identity.os_name;
    record.country = st.country;
  }
  if (!st.config.output_path.empty()) {
    append_record(st.config.output_path, record, st.cipher.get());
  }
  return record;
}

Phase Session::phase() const {
  std::lock_guard lock(state_->mu);
  return state_->phase;
}

EnergyLedger Session::snapshot() const {
  std::lock_guard lock(state_->mu);
  return state_->ledger;
}

const SessionConfig& Session::config() const { return state_->config; }

std::optional<ResolvedRegion> Session::region() const {
  std::lock_guard lock(state_->mu);
  return state_->region;
}

std::optional<double> Session::tdp_watts() const {
  std::lock_guard lock(state_->mu);
  return state_->tdp;
}

std::optional<double> Session::gamma_kg_per_mwh() const {
  std::lock_guard lock(state_->mu);
  return state_->gamma;
}

std::exception_ptr Session::sampler_error() const {
  std::lock_guard lock(state_->mu);
  return state_->sampler_error;
}

}  // namespace co2track

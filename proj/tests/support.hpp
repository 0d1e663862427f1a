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

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "co2track/session.hpp"
#include "co2track/telemetry.hpp"

namespace co2track::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern =
        (std::filesystem::temp_directory_path() / "co2track-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline TraceRow row(double t, double cpu_percent, int cores, std::vector<double> gpu,
                    double ram_gb) {
  return TraceRow{t, cpu_percent, cores, std::move(gpu), ram_gb};
}

// Single-device constant GPU trace with rows at 0 and `seconds`.
inline TraceSpec gpu_trace(double watts, double seconds) {
  TraceSpec trace;
  trace.rows = {row(0, 0, 1, {watts}, 0), row(seconds, 0, 1, {watts}, 0)};
  return trace;
}

// Random piecewise-constant trace with integer timestamps.
inline TraceSpec random_trace(std::mt19937_64& rng, int rows) {
  std::uniform_int_distribution<int> step(1, 120);
  std::uniform_real_distribution<double> percent(0, 400);
  std::uniform_int_distribution<int> cores(1, 64);
  std::uniform_real_distribution<double> watts(0, 400);
  std::uniform_real_distribution<double> ram(0, 64);
  std::uniform_int_distribution<int> devices(0, 3);
  TraceSpec trace;
  double t = 0;
  const int n_dev = devices(rng);
  for (int i = 0; i < rows; ++i) {
    std::vector<double> gpu;
    for (int d = 0; d < n_dev; ++d) gpu.push_back(watts(rng));
    trace.rows.push_back(row(t, percent(rng), cores(rng), gpu, ram(rng)));
    t += step(rng);
  }
  return trace;
}

// Config pinned for deterministic replay: no report file, fixed gamma.
inline SessionConfig replay_config(double gamma = 436.5, double pue = 1.0) {
  SessionConfig config;
  config.output_path.clear();
  config.gamma_override = gamma;
  config.pue = pue;
  return config;
}

inline SessionServices replay_services(TraceSpec trace) {
  SessionServices services;
  services.provider = replay_provider(std::move(trace));
  return services;
}

inline EmissionRecord replay(TraceSpec trace, SessionConfig config = replay_config()) {
  Session session(std::move(config), replay_services(std::move(trace)));
  session.start();
  return session.stop();
}

// Energy of a trace under zero-order hold, computed per segment in long
// double and independent of the library's ledger.
struct OracleTotals {
  long double cpu = 0, gpu = 0, ram = 0;
  long double total() const { return cpu + gpu + ram; }
};

inline OracleTotals oracle_energy(const TraceSpec& trace, double tdp,
                                  double ram_w_per_gb = 0.375) {
  OracleTotals out;
  for (std::size_t i = 0; i + 1 < trace.rows.size(); ++i) {
    const TraceRow& r = trace.rows[i];
    const long double hours =
        (static_cast<long double>(trace.rows[i + 1].t_s) - r.t_s) / 3600.0L;
    long double util = r.cpu_percent / (100.0L * r.core_count);
    if (util > 1) util = 1;
    long double gpu = 0;
    for (double w : r.gpu_watts) gpu += w;
    out.cpu += tdp * util * hours / 1000.0L;
    out.gpu += gpu * hours / 1000.0L;
    out.ram += ram_w_per_gb * r.ram_gb * hours / 1000.0L;
  }
  return out;
}

}  // namespace co2track::testing

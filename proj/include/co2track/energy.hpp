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

#include <cstdint>
#include <optional>

#include "co2track/telemetry.hpp"

namespace co2track {

struct EnergyTotals {
  double cpu_kwh = 0.0;
  double gpu_kwh = 0.0;
  double ram_kwh = 0.0;
  double total_kwh = 0.0;
  double duration_s = 0.0;
};

/// Running per-subsystem energy integrals of one session.
///
/// Integration is zero-order hold: the power of each sample is charged for
/// the interval until the next sample. A piecewise-constant trace whose
/// breakpoints fall on sample times is therefore integrated exactly.
class EnergyLedger {
 public:
  /// Adds the interval since the previous sample. The first sample only sets
  /// the origin. Throws NonMonotonicTimestamp unless the timestamp is strictly
  /// later than the previous one; the ledger is unchanged in that case.
  void accumulate(const PowerSample& sample);

  EnergyTotals finalize() const noexcept;

  double cpu_kwh() const noexcept { return cpu_kwh_; }
  double gpu_kwh() const noexcept { return gpu_kwh_; }
  double ram_kwh() const noexcept { return ram_kwh_; }
  double total_kwh() const noexcept { return cpu_kwh_ + gpu_kwh_ + ram_kwh_; }
  double last_timestamp_s() const noexcept {
    return previous_ ? previous_->timestamp_s : 0.0;
  }
  std::uint64_t sample_count() const noexcept { return sample_count_; }

 private:
  double cpu_kwh_ = 0.0;
  double gpu_kwh_ = 0.0;
  double ram_kwh_ = 0.0;
  std::uint64_t sample_count_ = 0;
  std::optional<PowerSample> previous_;
};

/// Energy in kWh of `watts` held for `seconds`.
double watt_seconds_to_kwh(double watts, double seconds) noexcept;

}  // namespace co2track

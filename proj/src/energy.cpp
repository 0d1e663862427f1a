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

#include "co2track/energy.hpp"

#include "co2track/errors.hpp"
#include "co2track/numeric.hpp"

namespace co2track {

double watt_seconds_to_kwh(double watts, double seconds) noexcept {
  return watts * (seconds / 3600.0) / 1000.0;
}

void EnergyLedger::accumulate(const PowerSample& sample) {
  if (previous_) {
    if (!(sample.timestamp_s > previous_->timestamp_s)) {
      throw NonMonotonicTimestamp("sample at " + format_shortest(sample.timestamp_s) +
                                  " s does not follow " +
                                  format_shortest(previous_->timestamp_s) + " s");
    }
    const double dt = sample.timestamp_s - previous_->timestamp_s;
    cpu_kwh_ += watt_seconds_to_kwh(previous_->cpu_watts, dt);
    gpu_kwh_ += watt_seconds_to_kwh(previous_->gpu_watts, dt);
    ram_kwh_ += watt_seconds_to_kwh(previous_->ram_watts, dt);
  }
  previous_ = sample;
  ++sample_count_;
}

EnergyTotals EnergyLedger::finalize() const noexcept {
  EnergyTotals totals;
  totals.cpu_kwh = cpu_kwh_;
  totals.gpu_kwh = gpu_kwh_;
  totals.ram_kwh = ram_kwh_;
  totals.total_kwh = cpu_kwh_ + gpu_kwh_ + ram_kwh_;
  totals.duration_s = last_timestamp_s();
  return totals;
}

}  // namespace co2track

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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "co2track/energy.hpp"
#include "co2track/errors.hpp"
#include "support.hpp"

namespace co2track {
namespace {

PowerSample at(double t, double cpu, double gpu, double ram) { return {t, cpu, gpu, ram}; }

EnergyLedger integrate(const TraceSpec& trace, double tdp = 100) {
  EnergyLedger ledger;
  ReplayProvider p(trace);
  while (const auto t = p.advance()) {
    ledger.accumulate(compose_sample(p.sample_cpu(), p.sample_gpu(), p.sample_ram(), tdp, *t));
  }
  return ledger;
}

TEST(EnergyLedger, EmptyIsZero) {
  const EnergyTotals t = EnergyLedger{}.finalize();
  EXPECT_EQ(t.cpu_kwh, 0);
  EXPECT_EQ(t.gpu_kwh, 0);
  EXPECT_EQ(t.ram_kwh, 0);
  EXPECT_EQ(t.total_kwh, 0);
  EXPECT_EQ(t.duration_s, 0);
}

TEST(EnergyLedger, FirstSampleOnlySetsOrigin) {
  EnergyLedger ledger;
  ledger.accumulate(at(0, 100, 250, 6));
  EXPECT_EQ(ledger.total_kwh(), 0);
  EXPECT_EQ(ledger.sample_count(), 1u);
  EXPECT_EQ(ledger.last_timestamp_s(), 0);
}

TEST(EnergyLedger, ConstantGpuFourHours) {
  EnergyLedger ledger;
  for (int t = 0; t <= 4 * 3600; t += 60) ledger.accumulate(at(t, 0, 250, 0));
  EXPECT_NEAR(ledger.gpu_kwh(), 1.0, 1e-12);
  EXPECT_EQ(ledger.finalize().duration_s, 14400);
}

TEST(EnergyLedger, TwoSampleConstantIsBitExact) {
  EnergyLedger ledger;
  ledger.accumulate(at(0, 0, 250, 0));
  ledger.accumulate(at(14400, 0, 250, 0));
  EXPECT_EQ(ledger.gpu_kwh(), 1.0);
}

TEST(EnergyLedger, CpuAndRamTwoHours) {
  EnergyLedger ledger;
  ledger.accumulate(at(0, 50, 0, 6));
  ledger.accumulate(at(7200, 50, 0, 6));
  EXPECT_EQ(ledger.cpu_kwh(), 0.1);
  EXPECT_EQ(ledger.ram_kwh(), 0.012);
}

TEST(EnergyLedger, UsesPreviousSamplePower) {
  EnergyLedger ledger;
  ledger.accumulate(at(0, 0, 100, 0));
  ledger.accumulate(at(3600, 0, 999, 0));  // this power is not charged yet
  EXPECT_EQ(ledger.gpu_kwh(), 0.1);
  ledger.accumulate(at(3601, 0, 0, 0));
  EXPECT_NEAR(ledger.gpu_kwh(), 0.1 + 999.0 / 3600 / 1000, 1e-15);
}

TEST(EnergyLedger, FinalizeSumsParts) {
  EnergyLedger ledger;
  ledger.accumulate(at(0, 50, 250, 6));
  ledger.accumulate(at(7200, 0, 0, 0));
  const EnergyTotals t = ledger.finalize();
  EXPECT_EQ(t.total_kwh, t.cpu_kwh + t.gpu_kwh + t.ram_kwh);
  EXPECT_EQ(t.total_kwh, ledger.total_kwh());
  EXPECT_NEAR(t.total_kwh, 0.1 + 0.5 + 0.012, 1e-15);
}

TEST(EnergyLedger, RejectsNonIncreasingTimestamps) {
  EnergyLedger ledger;
  ledger.accumulate(at(5, 10, 10, 10));
  ledger.accumulate(at(10, 10, 10, 10));
  const EnergyLedger before = ledger;
  EXPECT_THROW(ledger.accumulate(at(10, 1, 1, 1)), NonMonotonicTimestamp);
  EXPECT_THROW(ledger.accumulate(at(9, 1, 1, 1)), NonMonotonicTimestamp);
  EXPECT_EQ(ledger.total_kwh(), before.total_kwh());
  EXPECT_EQ(ledger.sample_count(), before.sample_count());
}

TEST(EnergyLedger, MonotoneOnRandomTraces) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const TraceSpec trace = testing::random_trace(rng, 200);
    EnergyLedger ledger;
    ReplayProvider p(trace);
    double cpu = 0, gpu = 0, ram = 0;
    while (const auto t = p.advance()) {
      ledger.accumulate(compose_sample(p.sample_cpu(), p.sample_gpu(), p.sample_ram(), 120, *t));
      ASSERT_GE(ledger.cpu_kwh(), cpu);
      ASSERT_GE(ledger.gpu_kwh(), gpu);
      ASSERT_GE(ledger.ram_kwh(), ram);
      cpu = ledger.cpu_kwh();
      gpu = ledger.gpu_kwh();
      ram = ledger.ram_kwh();
    }
  }
}

TEST(EnergyLedger, MatchesSegmentOracle) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const TraceSpec trace = testing::random_trace(rng, 100);
    const EnergyTotals got = integrate(trace, 120).finalize();
    const testing::OracleTotals want = testing::oracle_energy(trace, 120);
    const double tol = 1e-12 * std::max(1.0, static_cast<double>(want.total()));
    ASSERT_NEAR(got.cpu_kwh, static_cast<double>(want.cpu), tol);
    ASSERT_NEAR(got.gpu_kwh, static_cast<double>(want.gpu), tol);
    ASSERT_NEAR(got.ram_kwh, static_cast<double>(want.ram), tol);
  }
}

TEST(EnergyLedger, SplitAdditivity) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const TraceSpec whole = testing::random_trace(rng, 60);
    std::uniform_int_distribution<std::size_t> cut(1, whole.rows.size() - 2);
    const std::size_t k = cut(rng);
    TraceSpec left, right;
    left.rows.assign(whole.rows.begin(), whole.rows.begin() + static_cast<long>(k) + 1);
    const double shift = whole.rows[k].t_s;
    for (std::size_t i = k; i < whole.rows.size(); ++i) {
      TraceRow r = whole.rows[i];
      r.t_s -= shift;
      right.rows.push_back(r);
    }
    const double w = integrate(whole).total_kwh();
    const double parts = integrate(left).total_kwh() + integrate(right).total_kwh();
    ASSERT_LE(std::abs(w - parts), 1e-12 * std::max(w, 1e-300));
  }
}

TEST(EnergyLedger, ZeroPowerAnyDuration) {
  EnergyLedger ledger;
  for (double t = 0; t < 1e7; t += 12345.678) ledger.accumulate(at(t, 0, 0, 0));
  EXPECT_EQ(ledger.total_kwh(), 0.0);
}

TEST(WattSecondsToKwh, UnitConversion) {
  EXPECT_EQ(watt_seconds_to_kwh(1000, 3600), 1.0);
  EXPECT_EQ(watt_seconds_to_kwh(250, 14400), 1.0);
  EXPECT_EQ(watt_seconds_to_kwh(0, 1e9), 0.0);
}

}  // namespace
}  // namespace co2track

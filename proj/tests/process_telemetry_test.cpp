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

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <thread>

#include "co2track/errors.hpp"
#include "co2track/process_telemetry.hpp"

extern char** environ;

namespace co2track {
namespace {

pid_t spawn_shell(const std::string& script) {
  const char* argv[] = {"sh", "-c", script.c_str(), nullptr};
  pid_t pid = 0;
  if (posix_spawnp(&pid, "sh", nullptr, nullptr, const_cast<char**>(argv), environ) != 0) {
    return -1;
  }
  return pid;
}

void reap(pid_t pid) {
  ::kill(pid, SIGKILL);
  ::waitpid(pid, nullptr, 0);
}

TEST(ProcessTree, ReadsSelf) {
  const ProcessTreeUsage usage = read_process_tree(::getpid());
  EXPECT_GE(usage.process_count, 1u);
  EXPECT_GT(usage.rss_bytes, 0.0);
  EXPECT_GE(usage.cpu_seconds, 0.0);
}

TEST(ProcessTree, IncludesChildren) {
  const pid_t child = spawn_shell("sleep 5 & sleep 5 & wait");
  ASSERT_GT(child, 0);
  std::size_t count = 0;
  for (int i = 0; i < 50 && count < 3; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    count = read_process_tree(child).process_count;
  }
  EXPECT_EQ(count, 3u);
  reap(child);
}

TEST(ProcessTree, MissingProcessIsGone) {
  const pid_t child = spawn_shell("exit 0");
  ASSERT_GT(child, 0);
  ::waitpid(child, nullptr, 0);
  EXPECT_THROW(read_process_tree(child), ProcessGone);
  EXPECT_FALSE(process_running(child));
}

TEST(ProcessTree, ZombieKeepsFinalCpuTime) {
  const pid_t child = spawn_shell("i=0; while [ $i -lt 200000 ]; do i=$((i+1)); done");
  ASSERT_GT(child, 0);
  siginfo_t info{};
  ASSERT_EQ(::waitid(P_PID, static_cast<id_t>(child), &info, WEXITED | WNOWAIT), 0);
  EXPECT_FALSE(process_running(child));
  const ProcessTreeUsage usage = read_process_tree(child);
  EXPECT_GT(usage.cpu_seconds, 0.0);
  EXPECT_EQ(usage.rss_bytes, 0.0);
  ::waitpid(child, nullptr, 0);
}

TEST(ProcessTreeProvider, BusyChildShowsLoad) {
  const pid_t child = spawn_shell("while :; do :; done");
  ASSERT_GT(child, 0);
  ProcessTreeProvider provider(child, std::make_unique<NullGpuBackend>());
  std::this_thread::sleep_for(std::chrono::milliseconds(400));
  const CpuObservation cpu = provider.sample_cpu();
  const RamObservation ram = provider.sample_ram();
  reap(child);
  EXPECT_GT(cpu.process_cpu_percent, 30.0);
  EXPECT_GE(cpu.core_count, 1);
  EXPECT_GT(ram.allocated_gb, 0.0);
  EXPECT_LT(ram.allocated_gb, 1.0);
}

TEST(ProcessTreeProvider, IdleChildShowsLittleLoad) {
  const pid_t child = spawn_shell("sleep 5");
  ASSERT_GT(child, 0);
  ProcessTreeProvider provider(child, std::make_unique<NullGpuBackend>());
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  const CpuObservation cpu = provider.sample_cpu();
  reap(child);
  EXPECT_LT(cpu.process_cpu_percent, 10.0);
}

TEST(ProcessTreeProvider, GoneAfterExit) {
  const pid_t child = spawn_shell("exit 0");
  ASSERT_GT(child, 0);
  ProcessTreeProvider provider(child, std::make_unique<NullGpuBackend>());
  ::waitpid(child, nullptr, 0);
  EXPECT_THROW(provider.sample_cpu(), ProcessGone);
}

TEST(ProcessTreeProvider, NoGpuReadsZero) {
  ProcessTreeProvider provider(::getpid(), std::make_unique<NullGpuBackend>());
  const GpuObservation gpu = provider.sample_gpu();
  EXPECT_EQ(gpu.device_count, 0);
  EXPECT_EQ(gpu.total_power_watts, 0.0);
  EXPECT_TRUE(provider.identity().gpu_names.empty());
  EXPECT_FALSE(provider.simulated());
}

TEST(NvmlBackend, DegradesWithoutDriver) {
  // Holds on machines without an NVIDIA driver; with one, readings are sane.
  auto backend = make_nvml_backend();
  const GpuObservation gpu = backend->sample();
  EXPECT_GE(gpu.device_count, 0);
  EXPECT_GE(gpu.total_power_watts, 0.0);
  if (gpu.device_count == 0) EXPECT_EQ(gpu.total_power_watts, 0.0);
}

TEST(HostInfo, Basics) {
  EXPECT_GE(online_core_count(), 1);
  EXPECT_FALSE(read_os_name().empty());
  (void)read_cpu_model();
}

}  // namespace
}  // namespace co2track

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

#include <sys/types.h>

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "co2track/telemetry.hpp"

namespace co2track {

/// Accelerator power source. Implementations report the summed draw of all
/// detected devices and degrade to the zero observation when none exist.
class GpuBackend {
 public:
  virtual ~GpuBackend() = default;
  virtual GpuObservation sample() = 0;
  virtual std::vector<std::string> device_names() const = 0;
};

/// Backend that never sees a device.
class NullGpuBackend final : public GpuBackend {
 public:
  GpuObservation sample() override { return {}; }
  std::vector<std::string> device_names() const override { return {}; }
};

/// Loads the NVIDIA management library at runtime. If the library or driver
/// is missing the returned backend reports zero devices.
std::unique_ptr<GpuBackend> make_nvml_backend();

/// CPU time and resident memory of a process and all of its descendants.
struct ProcessTreeUsage {
  /// user + system time of live members plus time of reaped children, seconds
  double cpu_seconds = 0.0;
  double rss_bytes = 0.0;
  std::size_t process_count = 0;
};

/// Reads /proc for `root` and its descendants.
/// Throws ProcessGone if the root no longer exists and PermissionDenied if
/// its stats cannot be read. A zombie root yields its final CPU time and no
/// resident memory.
ProcessTreeUsage read_process_tree(pid_t root);

/// First "model name" entry of /proc/cpuinfo, or "" when unavailable.
std::string read_cpu_model();

/// "<sysname> <release>" from uname(2).
std::string read_os_name();

/// True while `pid` exists and is neither a zombie nor dead.
bool process_running(pid_t pid);

int online_core_count();

/// Live provider for a process tree on Linux.
///
/// CPU percent is the average since the previous poll (the first poll
/// averages since construction). Memory is resident set size in GiB.
class ProcessTreeProvider final : public TelemetryProvider {
 public:
  explicit ProcessTreeProvider(pid_t root,
                               std::unique_ptr<GpuBackend> gpu = make_nvml_backend());

  CpuObservation sample_cpu() override;
  GpuObservation sample_gpu() override;
  RamObservation sample_ram() override;
  HardwareIdentity identity() const override;

  pid_t root() const noexcept { return root_; }

 private:
  using Clock = std::chrono::steady_clock;

  pid_t root_;
  std::unique_ptr<GpuBackend> gpu_;
  std::string cpu_model_;
  std::string os_name_;
  int core_count_;
  double last_cpu_seconds_ = 0.0;
  Clock::time_point last_poll_;
  std::optional<ProcessTreeUsage> pending_usage_;
};

}  // namespace co2track

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

#include "co2track/process_telemetry.hpp"

#include <dirent.h>
#include <dlfcn.h>
#include <fcntl.h>
#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "co2track/errors.hpp"

namespace co2track {

namespace {

struct StatLine {
  pid_t ppid = 0;
  char state = '?';
  unsigned long long cpu_ticks = 0;  // utime + stime + cutime + cstime
};

enum class ReadStatus { ok, missing, denied };

ReadStatus read_file(const std::string& path, std::string& out) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) {
    return errno == EACCES || errno == EPERM ? ReadStatus::denied : ReadStatus::missing;
  }
  out.clear();
  char buf[4096];
  ssize_t n = 0;
  while ((n = ::read(fd, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const int read_errno = errno;
  ::close(fd);
  if (n < 0) {
    return read_errno == EACCES || read_errno == EPERM ? ReadStatus::denied
                                                       : ReadStatus::missing;
  }
  return ReadStatus::ok;
}

// The comm field may contain spaces and parentheses, so parse from the last ')'.
bool parse_stat(const std::string& text, StatLine& stat) {
  const auto close = text.rfind(')');
  if (close == std::string::npos || close + 2 >= text.size()) return false;
  std::istringstream in(text.substr(close + 2));
  in >> stat.state >> stat.ppid;
  std::string skip;
  // fields 5..13
  for (int i = 0; i < 9; ++i) in >> skip;
  unsigned long long utime = 0, stime = 0;
  long long cutime = 0, cstime = 0;
  in >> utime >> stime >> cutime >> cstime;
  if (!in) return false;
  stat.cpu_ticks = utime + stime + static_cast<unsigned long long>(cutime < 0 ? 0 : cutime) +
                   static_cast<unsigned long long>(cstime < 0 ? 0 : cstime);
  return true;
}

double rss_pages(pid_t pid) {
  std::string text;
  if (read_file("/proc/" + std::to_string(pid) + "/statm", text) != ReadStatus::ok) {
    return 0.0;
  }
  std::istringstream in(text);
  unsigned long long size = 0, resident = 0;
  in >> size >> resident;
  return in ? static_cast<double>(resident) : 0.0;
}

}  // namespace

ProcessTreeUsage read_process_tree(pid_t root) {
  const std::string root_path = "/proc/" + std::to_string(root) + "/stat";
  std::string text;
  switch (read_file(root_path, text)) {
    case ReadStatus::missing:
      throw ProcessGone("process " + std::to_string(root) + " has exited");
    case ReadStatus::denied:
      throw PermissionDenied("cannot read " + root_path);
    case ReadStatus::ok:
      break;
  }
  StatLine root_stat;
  if (!parse_stat(text, root_stat)) throw ProcessGone("cannot parse " + root_path);
  if (root_stat.state == 'X') {
    throw ProcessGone("process " + std::to_string(root) + " has exited");
  }
  // An unreaped zombie still reports its final CPU times, so the tail of a
  // run can be measured after the exit is observed with WNOWAIT.
  const bool root_zombie = root_stat.state == 'Z';

  // One pass over /proc to build the parent -> children map.
  std::unordered_map<pid_t, std::vector<std::pair<pid_t, StatLine>>> children;
  if (DIR* dir = opendir("/proc")) {
    while (dirent* entry = readdir(dir)) {
      char* end = nullptr;
      const long pid = std::strtol(entry->d_name, &end, 10);
      if (*end != '\0' || pid <= 0 || pid == root) continue;
      std::string child_text;
      if (read_file("/proc/" + std::string(entry->d_name) + "/stat", child_text) !=
          ReadStatus::ok) {
        continue;
      }
      StatLine stat;
      if (parse_stat(child_text, stat)) {
        children[stat.ppid].emplace_back(static_cast<pid_t>(pid), stat);
      }
    }
    closedir(dir);
  }

  static const double ticks_per_second = static_cast<double>(sysconf(_SC_CLK_TCK));
  static const double page_size = static_cast<double>(sysconf(_SC_PAGESIZE));

  ProcessTreeUsage usage;
  unsigned long long ticks = root_stat.cpu_ticks;
  double pages = root_zombie ? 0.0 : rss_pages(root);
  usage.process_count = root_zombie ? 0 : 1;

  std::vector<pid_t> frontier{root};
  while (!frontier.empty()) {
    const pid_t parent = frontier.back();
    frontier.pop_back();
    auto it = children.find(parent);
    if (it == children.end()) continue;
    for (const auto& [pid, stat] : it->second) {
      if (stat.state == 'X') continue;
      // Zombie times are not yet folded into the parent's cutime.
      ticks += stat.cpu_ticks;
      if (stat.state == 'Z') continue;
      pages += rss_pages(pid);
      ++usage.process_count;
      frontier.push_back(pid);
    }
  }
  usage.cpu_seconds = static_cast<double>(ticks) / ticks_per_second;
  usage.rss_bytes = pages * page_size;
  return usage;
}

bool process_running(pid_t pid) {
  std::string text;
  if (read_file("/proc/" + std::to_string(pid) + "/stat", text) != ReadStatus::ok) return false;
  StatLine stat;
  return parse_stat(text, stat) && stat.state != 'Z' && stat.state != 'X';
}

std::string read_cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const auto first = line.find_first_not_of(" \t", colon + 1);
      return first == std::string::npos ? std::string() : line.substr(first);
    }
  }
  return {};
}

std::string read_os_name() {
  utsname info{};
  if (uname(&info) != 0) return "unknown";
  return std::string(info.sysname) + " " + info.release;
}

int online_core_count() {
  const long n = sysconf(_SC_NPROCESSORS_ONLN);
  return n > 0 ? static_cast<int>(n) : 1;
}

// --- NVML -------------------------------------------------------------------

namespace {

// Subset of the NVML C API, resolved with dlsym so the library is optional.
using nvmlReturn_t = int;
using nvmlDevice_t = void*;
constexpr nvmlReturn_t kNvmlSuccess = 0;

class NvmlBackend final : public GpuBackend {
 public:
  NvmlBackend() {
    handle_ = dlopen("libnvidia-ml.so.1", RTLD_NOW | RTLD_LOCAL);
    if (!handle_) return;
    init_ = reinterpret_cast<nvmlReturn_t (*)()>(dlsym(handle_, "nvmlInit_v2"));
    shutdown_ = reinterpret_cast<nvmlReturn_t (*)()>(dlsym(handle_, "nvmlShutdown"));
    count_ = reinterpret_cast<nvmlReturn_t (*)(unsigned*)>(
        dlsym(handle_, "nvmlDeviceGetCount_v2"));
    by_index_ = reinterpret_cast<nvmlReturn_t (*)(unsigned, nvmlDevice_t*)>(
        dlsym(handle_, "nvmlDeviceGetHandleByIndex_v2"));
    power_ = reinterpret_cast<nvmlReturn_t (*)(nvmlDevice_t, unsigned*)>(
        dlsym(handle_, "nvmlDeviceGetPowerUsage"));
    name_ = reinterpret_cast<nvmlReturn_t (*)(nvmlDevice_t, char*, unsigned)>(
        dlsym(handle_, "nvmlDeviceGetName"));
    if (!init_ || !shutdown_ || !count_ || !by_index_ || !power_ || !name_ ||
        init_() != kNvmlSuccess) {
      return;
    }
    initialized_ = true;
    unsigned count = 0;
    if (count_(&count) != kNvmlSuccess) return;
    for (unsigned i = 0; i < count; ++i) {
      nvmlDevice_t device = nullptr;
      if (by_index_(i, &device) != kNvmlSuccess) continue;
      char name[96] = {};
      if (name_(device, name, sizeof name) != kNvmlSuccess) std::strcpy(name, "NVIDIA GPU");
      devices_.push_back(device);
      names_.emplace_back(name);
    }
  }

  ~NvmlBackend() override {
    if (initialized_) shutdown_();
    if (handle_) dlclose(handle_);
  }

  GpuObservation sample() override {
    GpuObservation obs;
    for (nvmlDevice_t device : devices_) {
      unsigned milliwatts = 0;
      if (power_(device, &milliwatts) != kNvmlSuccess) continue;
      obs.total_power_watts += milliwatts / 1000.0;
    }
    obs.device_count = static_cast<int>(devices_.size());
    if (obs.device_count == 0) obs.total_power_watts = 0.0;
    obs.device_names = names_;
    return obs;
  }

  std::vector<std::string> device_names() const override { return names_; }

 private:
  void* handle_ = nullptr;
  bool initialized_ = false;
  nvmlReturn_t (*init_)() = nullptr;
  nvmlReturn_t (*shutdown_)() = nullptr;
  nvmlReturn_t (*count_)(unsigned*) = nullptr;
  nvmlReturn_t (*by_index_)(unsigned, nvmlDevice_t*) = nullptr;
  nvmlReturn_t (*power_)(nvmlDevice_t, unsigned*) = nullptr;
  nvmlReturn_t (*name_)(nvmlDevice_t, char*, unsigned) = nullptr;
  std::vector<nvmlDevice_t> devices_;
  std::vector<std::string> names_;
};

}  // namespace

std::unique_ptr<GpuBackend> make_nvml_backend() { return std::make_unique<NvmlBackend>(); }

// --- ProcessTreeProvider ----------------------------------------------------

ProcessTreeProvider::ProcessTreeProvider(pid_t root, std::unique_ptr<GpuBackend> gpu)
    : root_(root),
      gpu_(gpu ? std::move(gpu) : std::make_unique<NullGpuBackend>()),
      cpu_model_(read_cpu_model()),
      os_name_(read_os_name()),
      core_count_(online_core_count()),
      last_poll_(Clock::now()) {
  // Baseline so the first poll reports the average since construction.
  try {
    last_cpu_seconds_ = read_process_tree(root_).cpu_seconds;
  } catch (const Error&) {
    last_cpu_seconds_ = 0.0;
  }
}

CpuObservation ProcessTreeProvider::sample_cpu() {
  const ProcessTreeUsage usage = read_process_tree(root_);
  const auto now = Clock::now();
  const double wall = std::chrono::duration<double>(now - last_poll_).count();
  // Reaping moves time between counters; never report negative work.
  const double busy = std::max(0.0, usage.cpu_seconds - last_cpu_seconds_);
  CpuObservation obs;
  obs.process_cpu_percent = wall > 0.0 ? 100.0 * busy / wall : 0.0;
  obs.core_count = core_count_;
  obs.cpu_model_name = cpu_model_;
  last_cpu_seconds_ = std::max(last_cpu_seconds_, usage.cpu_seconds);
  last_poll_ = now;
  pending_usage_ = usage;
  return obs;
}

GpuObservation ProcessTreeProvider::sample_gpu() { return gpu_->sample(); }

RamObservation ProcessTreeProvider::sample_ram() {
  // Reuse the tree walked by sample_cpu() in the same poll.
  const ProcessTreeUsage usage =
      pending_usage_ ? *pending_usage_ : read_process_tree(root_);
  pending_usage_.reset();
  return RamObservation{usage.rss_bytes / (1024.0 * 1024.0 * 1024.0)};
}

HardwareIdentity ProcessTreeProvider::identity() const {
  return HardwareIdentity{cpu_model_, gpu_->device_names(), os_name_};
}

}  // namespace co2track

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

// co2track: run commands under energy/CO2 tracking, replay recorded
// telemetry, and summarize emission reports.
//
// Exit codes: 0 success, the child's own status for `run`, 2 usage error,
// 3 I/O or parse error, 127 when the command cannot be started.

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "co2track/csv.hpp"
#include "co2track/errors.hpp"
#include "co2track/process_telemetry.hpp"
#include "co2track/record_cipher.hpp"
#include "co2track/reporting.hpp"
#include "co2track/session.hpp"

extern char** environ;

namespace {

using namespace co2track;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSpawn = 127;

struct TrackingOptions {
  std::string project = "default";
  std::string description;
  std::optional<std::string> output;
  double pue = 1.0;
  std::optional<std::string> country;
  double sampling_period = 1.0;
  bool encrypt = false;
  std::optional<double> gamma_override;
  std::optional<double> tdp_override;
  std::optional<std::string> cpu_db;
  std::optional<std::string> emission_db;
  bool json = false;
};

void add_tracking_options(CLI::App& cmd, TrackingOptions& o) {
  cmd.add_option("--project", o.project, "Project name")->envname("CO2TRACK_PROJECT");
  cmd.add_option("--description", o.description, "Experiment description")
      ->envname("CO2TRACK_DESCRIPTION");
  cmd.add_option("--output", o.output, "Emission report to append to")
      ->envname("CO2TRACK_OUTPUT");
  cmd.add_option("--pue", o.pue, "Power usage effectiveness (>= 1)")->envname("CO2TRACK_PUE");
  cmd.add_option("--country", o.country, "ISO-Alpha-2 code, optionally XX/Region")
      ->envname(kCountryEnvVar);
  cmd.add_option("--sampling-period", o.sampling_period, "Seconds between polls")
      ->envname("CO2TRACK_SAMPLING_PERIOD");
  cmd.add_flag("--encrypt", o.encrypt,
               std::string("Encrypt report rows with the passphrase in ") + kPassphraseEnvVar)
      ->envname("CO2TRACK_ENCRYPT");
  cmd.add_option("--gamma-override", o.gamma_override, "Emission intensity, kg CO2/MWh")
      ->envname("CO2TRACK_GAMMA_OVERRIDE");
  cmd.add_option("--tdp-override", o.tdp_override, "CPU TDP in watts")
      ->envname("CO2TRACK_TDP_OVERRIDE");
  cmd.add_option("--cpu-db", o.cpu_db, "CSV table model,tdp_watts replacing the built-in one")
      ->envname("CO2TRACK_CPU_DB");
  cmd.add_option("--emission-db", o.emission_db, "CSV emission table replacing the built-in one")
      ->envname("CO2TRACK_EMISSION_DB");
  cmd.add_flag("--json", o.json, "Print the record as JSON")->envname("CO2TRACK_JSON");
}

SessionConfig make_config(const TrackingOptions& o, std::filesystem::path default_output) {
  SessionConfig config;
  config.project_name = o.project;
  config.experiment_description = o.description;
  config.output_path = o.output ? std::filesystem::path(*o.output) : std::move(default_output);
  config.pue = o.pue;
  config.region_override = o.country;
  config.sampling_period_s = o.sampling_period;
  config.encrypt = o.encrypt;
  config.gamma_override = o.gamma_override;
  config.cpu_tdp_override = o.tdp_override;
  if (o.encrypt) {
    if (const char* pass = std::getenv(kPassphraseEnvVar)) config.passphrase = pass;
  }
  return config;
}

void load_databases(const TrackingOptions& o, SessionServices& services) {
  if (o.cpu_db) {
    services.cpu_db = std::make_shared<const CpuDatabase>(CpuDatabase::load(*o.cpu_db));
  }
  if (o.emission_db) {
    services.emission_db =
        std::make_shared<const EmissionDatabase>(EmissionDatabase::load(*o.emission_db));
  }
}

nlohmann::json to_json(const EmissionRecord& r) {
  return {{"project_name", r.project_name},
          {"experiment_description", r.experiment_description},
          {"start_time", r.start_time},
          {"duration_s", r.duration_s},
          {"power_kwh", r.power_kwh},
          {"co2_kg", r.co2_kg},
          {"cpu_name", r.cpu_name},
          {"gpu_name", r.gpu_name},
          {"os", r.os_name},
          {"country", r.country}};
}

void print_record(std::ostream& out, const EmissionRecord& record, bool json) {
  if (json) {
    out << to_json(record).dump(2) << '\n';
  } else {
    out << kReportHeader << '\n' << csv::format_row(record_fields(record)) << '\n';
  }
}

// --- run --------------------------------------------------------------------

int exit_status_of(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 1;
}

pid_t spawn(const std::vector<std::string>& command) {
  std::vector<char*> argv;
  for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);

  // The tracker ignores interrupts so it can write the record; the child
  // gets default dispositions back.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGINT);
  sigaddset(&defaults, SIGQUIT);
  sigaddset(&defaults, SIGTERM);
  posix_spawnattr_setsigdefault(&attr, &defaults);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETSIGDEF);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, argv[0], nullptr, &attr, argv.data(), environ);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    throw SpawnFailure("cannot run '" + command.front() + "': " + std::strerror(rc));
  }
  return pid;
}

int cmd_run(const TrackingOptions& o, const std::vector<std::string>& command) {
  if (command.empty()) {
    std::cerr << "co2track run: no command given (use: co2track run [options] -- cmd ...)\n";
    return kExitUsage;
  }
  SessionConfig config = make_config(o, "emission.csv");
  config.validate();

  SessionServices services;
  load_databases(o, services);
  if (!o.country) services.locator = std::make_shared<HttpGeoLocator>();

  signal(SIGINT, SIG_IGN);
  signal(SIGQUIT, SIG_IGN);
  signal(SIGTERM, SIG_IGN);

  const pid_t child = spawn(command);
  services.provider = std::make_unique<ProcessTreeProvider>(child);
  Session session(std::move(config), std::move(services));
  try {
    session.start();
  } catch (...) {
    kill(child, SIGTERM);
    waitpid(child, nullptr, 0);
    throw;
  }

  // Observe the exit without reaping so the final sample can still read the
  // child's CPU times.
  siginfo_t info{};
  while (waitid(P_PID, static_cast<id_t>(child), &info, WEXITED | WNOWAIT) < 0) {
    if (errno != EINTR) break;
  }
  const EmissionRecord record = session.stop();
  int status = 0;
  while (waitpid(child, &status, 0) < 0) {
    if (errno != EINTR) {
      status = 0;
      break;
    }
  }
  if (o.json) {
    std::cerr << to_json(record).dump(2) << '\n';
  } else {
    std::cerr << "co2track: " << record.project_name << ": " << format_decimal(record.duration_s)
              << " s, " << format_decimal(record.power_kwh) << " kWh, "
              << format_decimal(record.co2_kg) << " kg CO2\n";
  }
  return exit_status_of(status);
}

// --- attach ---------------------------------------------------------------

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_interrupt(int) { g_interrupted = 1; }

int cmd_attach(const TrackingOptions& o, pid_t pid) {
  SessionConfig config = make_config(o, "emission.csv");
  config.validate();
  if (pid <= 0 || !process_running(pid)) {
    std::cerr << "co2track attach: no such process " << pid << '\n';
    return kExitUsage;
  }
  SessionServices services;
  load_databases(o, services);
  if (!o.country) services.locator = std::make_shared<HttpGeoLocator>();
  services.provider = std::make_unique<ProcessTreeProvider>(pid);

  struct sigaction sa {};
  sa.sa_handler = on_interrupt;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);

  Session session(std::move(config), std::move(services));
  session.start();
  // Tracking ends when the process exits or on SIGINT/SIGTERM.
  while (!g_interrupted && process_running(pid) && !session.sampler_error()) {
    ::usleep(100 * 1000);
  }
  const EmissionRecord record = session.stop();
  print_record(std::cout, record, o.json);
  return 0;
}

// --- replay -----------------------------------------------------------------

int cmd_replay(const TrackingOptions& o, const std::string& trace_path) {
  SessionConfig config = make_config(o, std::filesystem::path());
  config.validate();
  SessionServices services;
  load_databases(o, services);
  // No geolocation: replay output must not depend on where it runs.
  services.provider = replay_provider(load_trace(trace_path));
  Session session(std::move(config), std::move(services));
  session.start();
  print_record(std::cout, session.stop(), o.json);
  return 0;
}

// --- summary / show ---------------------------------------------------------

std::unique_ptr<RecordCipher> cipher_if(bool decrypt) {
  if (!decrypt) return nullptr;
  const char* pass = std::getenv(kPassphraseEnvVar);
  if (!pass || !*pass) throw InvalidConfig(std::string(kPassphraseEnvVar) + " is not set");
  return std::make_unique<RecordCipher>(pass);
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += "  ";
      // project names left-aligned, numbers right-aligned
      const std::string pad(widths[i] - row[i].size(), ' ');
      line += i == 0 ? row[i] + pad : pad + row[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
}

int cmd_summary(const std::string& path, std::optional<double> kwh_price, bool decrypt,
                bool json) {
  const auto cipher = cipher_if(decrypt);
  const auto rows = summary(path, kwh_price, cipher.get());
  if (json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json item = {{"project_name", r.project_name},
                             {"sessions", r.session_count},
                             {"total_duration_s", r.total_duration_s},
                             {"total_power_kwh", r.total_power_kwh},
                             {"total_co2_kg", r.total_co2_kg}};
      if (r.cost) item["cost"] = *r.cost;
      out.push_back(std::move(item));
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"project_name", "sessions", "duration(s)",
                                     "power_consumption(kWh)", "CO2_emissions(kg)"};
  if (kwh_price) header.emplace_back("cost");
  table.push_back(header);
  for (const auto& r : rows) {
    std::vector<std::string> line = {r.project_name, std::to_string(r.session_count),
                                     format_decimal(r.total_duration_s),
                                     format_decimal(r.total_power_kwh),
                                     format_decimal(r.total_co2_kg)};
    if (r.cost) line.push_back(format_decimal(*r.cost));
    table.push_back(std::move(line));
  }
  print_table(std::cout, table);
  return 0;
}

int cmd_show(const std::string& path, bool decrypt, bool json) {
  const auto cipher = cipher_if(decrypt);
  const auto records = read_records(path, cipher.get());
  if (json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : records) out.push_back(to_json(r));
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::cout << kReportHeader << '\n';
  for (const auto& r : records) std::cout << csv::format_row(record_fields(r)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Track the energy use and CO2 emissions of a workload"};
  app.require_subcommand(1);

  TrackingOptions run_opts;
  std::vector<std::string> command;
  auto* run = app.add_subcommand("run", "Run a command and record its emissions");
  add_tracking_options(*run, run_opts);
  run->add_option("command", command, "Command to run, after --")->required();

  TrackingOptions attach_opts;
  pid_t attach_pid = 0;
  auto* attach = app.add_subcommand("attach", "Track a running process until it exits");
  add_tracking_options(*attach, attach_opts);
  attach->add_option("pid", attach_pid, "Process id of the tree root")->required();

  TrackingOptions replay_opts;
  std::string trace_path;
  auto* replay = app.add_subcommand("replay", "Compute a record from a telemetry trace");
  add_tracking_options(*replay, replay_opts);
  replay->add_option("trace", trace_path, "Trace CSV (t_s,cpu_percent,core_count,gpu_watts,ram_gb)")
      ->required();

  std::string summary_path = "emission.csv";
  std::optional<double> kwh_price;
  bool summary_decrypt = false;
  bool summary_json = false;
  auto* summ = app.add_subcommand("summary", "Aggregate a report by project");
  summ->add_option("report", summary_path, "Emission report")->capture_default_str();
  summ->add_option("--kwh-price", kwh_price, "Electricity price per kWh")
      ->envname("CO2TRACK_KWH_PRICE");
  summ->add_flag("--decrypt", summary_decrypt,
                 std::string("Decrypt with the passphrase in ") + kPassphraseEnvVar)
      ->envname("CO2TRACK_DECRYPT");
  summ->add_flag("--json", summary_json, "Machine-readable output")->envname("CO2TRACK_JSON");

  std::string show_path = "emission.csv";
  bool show_decrypt = false;
  bool show_json = false;
  auto* show = app.add_subcommand("show", "Print the records of a report");
  show->add_option("report", show_path, "Emission report")->capture_default_str();
  show->add_flag("--decrypt", show_decrypt,
                 std::string("Decrypt with the passphrase in ") + kPassphraseEnvVar)
      ->envname("CO2TRACK_DECRYPT");
  show->add_flag("--json", show_json, "Machine-readable output")->envname("CO2TRACK_JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts, command);
    if (attach->parsed()) return cmd_attach(attach_opts, attach_pid);
    if (replay->parsed()) return cmd_replay(replay_opts, trace_path);
    if (summ->parsed()) return cmd_summary(summary_path, kwh_price, summary_decrypt, summary_json);
    if (show->parsed()) return cmd_show(show_path, show_decrypt, show_json);
  } catch (const InvalidConfig& e) {
    std::cerr << "co2track: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SpawnFailure& e) {
    std::cerr << "co2track: " << e.what() << '\n';
    return kExitSpawn;
  } catch (const std::exception& e) {
    std::cerr << "co2track: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

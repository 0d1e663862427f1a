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

// Python extension over the native tracker. Every number crosses the
// boundary unchanged; no formula is evaluated on the Python side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <unistd.h>

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include "co2track/errors.hpp"
#include "co2track/process_telemetry.hpp"
#include "co2track/record_cipher.hpp"
#include "co2track/reporting.hpp"
#include "co2track/session.hpp"
#include "co2track/telemetry.hpp"

namespace py = pybind11;
using namespace co2track;

namespace {

py::dict record_dict(const EmissionRecord& r) {
  py::dict d;
  d["project_name"] = r.project_name;
  d["experiment_description"] = r.experiment_description;
  d["start_time"] = r.start_time;
  d["duration_s"] = r.duration_s;
  d["power_kwh"] = r.power_kwh;
  d["co2_kg"] = r.co2_kg;
  d["cpu_name"] = r.cpu_name;
  d["gpu_name"] = r.gpu_name;
  d["os"] = r.os_name;
  d["country"] = r.country;
  return d;
}

py::dict summary_dict(const SummaryRow& r) {
  py::dict d;
  d["project_name"] = r.project_name;
  d["sessions"] = r.session_count;
  d["duration_s"] = r.total_duration_s;
  d["power_kwh"] = r.total_power_kwh;
  d["co2_kg"] = r.total_co2_kg;
  d["cost"] = r.cost ? py::cast(*r.cost) : py::none();
  return d;
}

std::unique_ptr<RecordCipher> cipher_if(bool decrypt) {
  if (!decrypt) return nullptr;
  return std::unique_ptr<RecordCipher>(new RecordCipher(RecordCipher::from_env()));
}

// A session plus the services it was built from. The passphrase is read
// from the environment only.
std::unique_ptr<Session> make_session(std::string project_name,
                                      std::string experiment_description,
                                      std::filesystem::path file_name, double measure_period,
                                      double pue, bool encode,
                                      std::optional<std::string> alpha_2_code,
                                      std::optional<double> emission_level,
                                      std::optional<double> cpu_tdp,
                                      std::optional<std::filesystem::path> trace) {
  SessionConfig config;
  config.project_name = std::move(project_name);
  config.experiment_description = std::move(experiment_description);
  config.output_path = std::move(file_name);
  config.sampling_period_s = measure_period;
  config.pue = pue;
  config.encrypt = encode;
  config.region_override = std::move(alpha_2_code);
  config.gamma_override = emission_level;
  config.cpu_tdp_override = cpu_tdp;
  if (encode) {
    if (const char* pass = std::getenv(kPassphraseEnvVar)) config.passphrase = pass;
  }
  SessionServices services;
  if (trace) {
    services.provider = replay_provider(load_trace(*trace));
  } else {
    services.provider = std::make_unique<ProcessTreeProvider>(::getpid());
    if (!config.region_override) services.locator = std::make_shared<HttpGeoLocator>();
  }
  return std::make_unique<Session>(std::move(config), std::move(services));
}

py::object new_exception(py::module_& m, const char* name, py::handle base,
                         py::handle builtin) {
  const std::string qualified = std::string("co2track._core.") + name;
  py::tuple bases = builtin ? py::tuple(py::make_tuple(base, builtin))
                            : py::tuple(py::make_tuple(base));
  PyObject* type = PyErr_NewException(qualified.c_str(), bases.ptr(), nullptr);
  if (!type) throw py::error_already_set();
  py::object exc = py::reinterpret_steal<py::object>(type);
  m.attr(name) = exc;
  return exc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the co2track package";

  py::object base = new_exception(m, "Co2TrackError", PyExc_Exception, nullptr);
  static py::object config_error = new_exception(m, "ConfigError", base, PyExc_ValueError);
  static py::object state_error = new_exception(m, "StateError", base, PyExc_RuntimeError);
  static py::object report_io = new_exception(m, "ReportIOError", base, PyExc_OSError);
  static py::object parse_error = new_exception(m, "ReportParseError", base, PyExc_ValueError);
  static py::object crypto_error = new_exception(m, "CryptoError", base, nullptr);
  static py::object telemetry_error =
      new_exception(m, "TelemetryError", base, PyExc_RuntimeError);
  static py::object base_error = base;

  py::register_exception_translator([](std::exception_ptr p) {
    if (!p) return;
    try {
      std::rethrow_exception(p);
    } catch (const InvalidConfig& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const InvalidPue& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const AlreadyRunning& e) {
      PyErr_SetString(state_error.ptr(), e.what());
    } catch (const NotRunning& e) {
      PyErr_SetString(state_error.ptr(), e.what());
    } catch (const IoFailure& e) {
      PyErr_SetString(report_io.ptr(), e.what());
    } catch (const ParseError& e) {
      PyErr_SetString(parse_error.ptr(), e.what());
    } catch (const DecryptFailure& e) {
      PyErr_SetString(crypto_error.ptr(), e.what());
    } catch (const EncryptionFailure& e) {
      PyErr_SetString(crypto_error.ptr(), e.what());
    } catch (const ProcessGone& e) {
      PyErr_SetString(telemetry_error.ptr(), e.what());
    } catch (const PermissionDenied& e) {
      PyErr_SetString(telemetry_error.ptr(), e.what());
    } catch (const TraceExhausted& e) {
      PyErr_SetString(telemetry_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base_error.ptr(), e.what());
    }
  });

  py::class_<Session>(m, "Session")
      .def(py::init(&make_session), py::arg("project_name"),
           py::arg("experiment_description"), py::arg("file_name"),
           py::arg("measure_period"), py::arg("pue"), py::arg("encode"),
           py::arg("alpha_2_code") = py::none(), py::arg("emission_level") = py::none(),
           py::arg("cpu_tdp") = py::none(), py::arg("trace") = py::none())
      .def("start", &Session::start, py::call_guard<py::gil_scoped_release>())
      .def("stop",
           [](Session& s) {
             EmissionRecord record;
             {
               py::gil_scoped_release release;
               record = s.stop();
             }
             return record_dict(record);
           })
      .def_property_readonly("phase", [](const Session& s) { return to_string(s.phase()); })
      .def("energy", [](const Session& s) {
        const EnergyTotals t = s.snapshot().finalize();
        py::dict d;
        d["cpu_kwh"] = t.cpu_kwh;
        d["gpu_kwh"] = t.gpu_kwh;
        d["ram_kwh"] = t.ram_kwh;
        d["total_kwh"] = t.total_kwh;
        d["duration_s"] = t.duration_s;
        return d;
      });

  m.def(
      "summary",
      [](const std::filesystem::path& path, std::optional<double> kwh_price, bool decrypt) {
        std::vector<SummaryRow> rows;
        {
          py::gil_scoped_release release;
          const auto cipher = cipher_if(decrypt);
          rows = summary(path, kwh_price, cipher.get());
        }
        py::list out;
        for (const auto& r : rows) out.append(summary_dict(r));
        return out;
      },
      py::arg("path"), py::arg("kwh_price") = py::none(), py::arg("decrypt") = false);

  m.def(
      "read_records",
      [](const std::filesystem::path& path, bool decrypt) {
        std::vector<EmissionRecord> records;
        {
          py::gil_scoped_release release;
          const auto cipher = cipher_if(decrypt);
          records = read_records(path, cipher.get());
        }
        py::list out;
        for (const auto& r : records) out.append(record_dict(r));
        return out;
      },
      py::arg("path"), py::arg("decrypt") = false);

  m.attr("PASSPHRASE_ENV") = kPassphraseEnvVar;
  m.attr("COUNTRY_ENV") = kCountryEnvVar;
}

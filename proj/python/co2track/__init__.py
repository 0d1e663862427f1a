# Copyright 2026 The co2track Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Process-level energy and CO2 tracking.

The Tracker frames a session with start() and stop() and appends one row to
the emission report when the session stops. All measurement and arithmetic
happen in the native extension.
"""

import functools
import os

from . import _core
from ._core import (
    Co2TrackError,
    ConfigError,
    CryptoError,
    ReportIOError,
    ReportParseError,
    StateError,
    TelemetryError,
)

__all__ = [
    "Tracker",
    "track",
    "summary",
    "read_records",
    "Co2TrackError",
    "ConfigError",
    "CryptoError",
    "ReportIOError",
    "ReportParseError",
    "StateError",
    "TelemetryError",
]


class Tracker:
    """Tracks the energy of the current process tree between start() and stop().

    encode=True encrypts every cell with the passphrase taken from the
    CO2TRACK_PASSPHRASE environment variable. alpha_2_code defaults to
    CO2TRACK_COUNTRY, then to an IP lookup. trace replays a telemetry CSV
    instead of measuring the live process.
    """

    def __init__(
        self,
        project_name="default",
        experiment_description="",
        file_name="emission.csv",
        measure_period=1.0,
        pue=1.0,
        encode=False,
        alpha_2_code=None,
        emission_level=None,
        cpu_tdp=None,
        trace=None,
    ):
        if alpha_2_code is None:
            alpha_2_code = os.environ.get(_core.COUNTRY_ENV) or None
        self._session = _core.Session(
            project_name=project_name,
            experiment_description=experiment_description,
            file_name=os.fspath(file_name),
            measure_period=float(measure_period),
            pue=float(pue),
            encode=bool(encode),
            alpha_2_code=alpha_2_code,
            emission_level=emission_level,
            cpu_tdp=cpu_tdp,
            trace=None if trace is None else os.fspath(trace),
        )

    def start(self):
        self._session.start()

    def stop(self):
        """Stops tracking, writes the report row and returns it as a dict."""
        return self._session.stop()

    @property
    def phase(self):
        return self._session.phase

    def energy(self):
        """Energy integrated so far, in kWh per subsystem."""
        return self._session.energy()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc, tb):
        try:
            self.stop()
        except Co2TrackError:
            if exc_type is None:
                raise
        return False


def track(func=None, **tracker_kwargs):
    """Decorator writing one report row per call, also when the call raises.

    Usable bare (@track) or with Tracker arguments (@track(file_name=...)).
    """

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            kw = dict(tracker_kwargs)
            kw.setdefault("project_name", fn.__name__)
            tracker = Tracker(**kw)
            tracker.start()
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                try:
                    tracker.stop()
                except Co2TrackError:
                    pass
                raise
            tracker.stop()
            return result

        return wrapper

    if func is not None:
        return decorate(func)
    return decorate


def summary(file_name="emission.csv", kwh_price=None, decrypt=False):
    """Per-project totals as a list of dicts, sorted by project name."""
    return _core.summary(os.fspath(file_name), kwh_price, decrypt)


def read_records(file_name="emission.csv", decrypt=False):
    """All report rows as a list of dicts."""
    return _core.read_records(os.fspath(file_name), decrypt)

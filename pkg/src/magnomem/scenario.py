"""Scenario files: TOML ingestion, validation and JSON metadata echo.

A scenario file has sections [params], [schedule], [initial_state],
[solver] and [grid].  Quantities are accepted either in SI (key suffixes
``_hz`` for ordinary frequencies, ``_s`` for seconds, ``_k`` for kelvin) or
directly in internal units (suffix ``_wb``): rates in units of omega_b,
times in mechanical periods.  The fully resolved dimensionless scenario is
echoed as JSON metadata next to every result.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .pulses import PulseSchedule, REFERENCE_SCHEDULE, ScheduleError
from .units import (PhysicalParams, UnitsError, bath_occupations,
                    to_internal_units)

SOLVERS = ("schrodinger", "lindblad", "moments")
STATE_KINDS = ("fock", "coherent", "cat", "squeezed")


class ScenarioError(ValueError):
    """Scenario file failed validation; message names the offending key."""


@dataclass(frozen=True)
class InitialState:
    kind: str
    alpha: complex = 0.0
    r: float = 0.0
    fock: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ScenarioError(
                f"initial_state.type must be one of {STATE_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class Scenario:
    """Fully validated, immutable simulation scenario (internal units)."""

    params: PhysicalParams              # SI
    schedule: PulseSchedule             # internal units
    initial_state: InitialState
    cutoffs: tuple[int, int, int]
    solver: str
    t_start: float
    t_end: float
    n_output: int = 241
    rwa: bool = True
    rtol: float = 1e-9
    atol: float = 1e-11
    truncation_threshold: float = 1e-6
    label: str = "scenario"

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ScenarioError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not self.t_start < self.t_end:
            raise ScenarioError(
                f"grid: need t_start < t_end, got {self.t_start}, {self.t_end}")
        if self.solver in ("schrodinger", "lindblad"):
            if any(c < 2 for c in self.cutoffs):
                raise ScenarioError(
                    f"cutoffs must be >= 2 per mode for {self.solver}, got {self.cutoffs}")
        s = self.schedule
        if self.t_start > s.t_c1 or self.t_end < s.t_c2 + s.delta_t:
            raise ScenarioError(
                "grid must cover both pulse centers plus the retrieval delay: "
                f"[{self.t_start}, {self.t_end}] vs centers "
                f"{s.t_c1}, {s.t_c2 + s.delta_t}")
        if self.n_output < 2:
            raise ScenarioError(f"grid.n_output must be >= 2, got {self.n_output}")

    def with_delay(self, delta_t: float) -> "Scenario":
        s = self.schedule.with_delay(delta_t)
        return replace(self, schedule=s, t_end=self.t_end + delta_t)

    def internal_kappas(self) -> tuple[float, float, float]:
        ip = to_internal_units(self.params)
        return ip.kappa_a, ip.kappa_m, ip.kappa_b

    def bath_occupations(self):
        return bath_occupations(self.params)

    def output_times(self):
        import numpy as np
        return np.linspace(self.t_start, self.t_end, self.n_output)

    def resolved_dict(self) -> dict[str, Any]:
        """Dimensionless resolved scenario for JSON metadata."""
        ip = to_internal_units(self.params)
        nb = self.bath_occupations()
        s = self.schedule
        return {
            "label": self.label,
            "solver": self.solver,
            "rwa": self.rwa,
            "params_internal": {
                "omega_a": ip.omega_a, "omega_m": ip.omega_m, "omega_b": 1.0,
                "kappa_a": ip.kappa_a, "kappa_m": ip.kappa_m, "kappa_b": ip.kappa_b,
                "g_ma": ip.g_ma, "g_mb": ip.g_mb,
                "T_bath_k": self.params.T_bath,
                "omega_b_si_rad_per_s": self.params.omega_b,
            },
            "bath_occupations": {"n_a": nb.n_a, "n_m": nb.n_m, "n_b": nb.n_b},
            "schedule": {
                "Omega0": s.Omega0, "T_width": s.T_width,
                "t_c1": s.t_c1, "t_c2": s.t_c2,
                "tau": s.tau, "tau_ch": s.tau_ch,
                "kappa_delta": s.kappa_delta, "h_delta": s.h_delta,
                "delta_t": s.delta_t, "g_ma": s.g_ma,
            },
            "initial_state": {
                "type": self.initial_state.kind,
                "alpha": [self.initial_state.alpha.real if isinstance(self.initial_state.alpha, complex) else float(self.initial_state.alpha),
                          self.initial_state.alpha.imag if isinstance(self.initial_state.alpha, complex) else 0.0],
                "r": self.initial_state.r,
                "fock": list(self.initial_state.fock),
            },
            "cutoffs": list(self.cutoffs),
            "grid": {"t_start": self.t_start, "t_end": self.t_end,
                     "n_output": self.n_output},
            "tolerances": {"rtol": self.rtol, "atol": self.atol,
                           "truncation_threshold": self.truncation_threshold},
        }

    def dump_metadata(self, path: Path, extra: dict | None = None):
        meta = self.resolved_dict()
        if extra:
            meta.update(extra)
        Path(path).write_text(json.dumps(meta, indent=2))


class _Section:
    """Key reader that tracks consumption so unknown keys are reported."""

    def __init__(self, name: str, data: dict):
        self.name = name
        self.data = dict(data)
        self.seen: set[str] = set()

    def _take(self, key: str):
        self.seen.add(key)
        return self.data.get(key)

    def plain(self, key: str, default=None):
        v = self._take(key)
        return default if v is None else v

    def rate(self, base: str, omega_b: float, default=None):
        """Rate in internal units from `<base>_wb` or `<base>_hz`."""
        wb = self._take(base + "_wb")
        hz = self._take(base + "_hz")
        if wb is not None and hz is not None:
            raise ScenarioError(f"[{self.name}] give only one of {base}_wb / {base}_hz")
        if wb is not None:
            return float(wb)
        if hz is not None:
            return 2 * math.pi * float(hz) / omega_b
        return default

    def time(self, base: str, omega_b: float, default=None):
        """Time in internal units from `<base>_wb` or `<base>_s`."""
        wb = self._take(base + "_wb")
        s = self._take(base + "_s")
        if wb is not None and s is not None:
            raise ScenarioError(f"[{self.name}] give only one of {base}_wb / {base}_s")
        if wb is not None:
            return float(wb)
        if s is not None:
            return float(s) * omega_b / (2 * math.pi)
        return default

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            raise ScenarioError(
                f"[{self.name}] unknown key(s): {', '.join(sorted(unknown))}")


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a TOML scenario file.

    Every failure raises ScenarioError naming the offending section/key;
    no partially constructed scenario escapes.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"TOML parse error in {path}: {e}")

    known_sections = {"params", "schedule", "initial_state", "solver", "grid"}
    unknown = set(raw) - known_sections - {"label"}
    if unknown:
        raise ScenarioError(f"unknown section(s): {', '.join(sorted(unknown))}")

    psec = _Section("params", raw.get("params", {}))
    omega_b = 2 * math.pi * float(psec.plain("omega_b_hz", 10e6))
    psec.seen.add("omega_b_hz")
    try:
        params = PhysicalParams(
            omega_a=2 * math.pi * float(psec.plain("omega_a_hz", 10e9)),
            omega_m=2 * math.pi * float(psec.plain("omega_m_hz", 10e9)),
            omega_b=omega_b,
            g_ma=psec.rate("g_ma", omega_b, 0.0) * omega_b,
            g_mb=psec.rate("g_mb", omega_b, 0.0) * omega_b,
            kappa_a=psec.rate("kappa_a", omega_b, 0.0) * omega_b,
            kappa_m=psec.rate("kappa_m", omega_b, 0.0) * omega_b,
            kappa_b=psec.rate("kappa_b", omega_b, 0.0) * omega_b,
            T_bath=float(psec.plain("T_bath_k", 0.0)),
        )
    except UnitsError as e:
        raise ScenarioError(f"[params] {e}")
    psec.finish()

    ssec = _Section("schedule", raw.get("schedule", {}))
    ref = REFERENCE_SCHEDULE
    try:
        schedule = PulseSchedule(
            Omega0=ssec.rate("Omega0", omega_b, ref.Omega0),
            T_width=ssec.time("T_width", omega_b, ref.T_width),
            t_c1=ssec.time("t_c1", omega_b, ref.t_c1),
            t_c2=ssec.time("t_c2", omega_b, ref.t_c2),
            tau=ssec.time("tau", omega_b, ref.tau),
            tau_ch=ssec.time("tau_ch", omega_b, ref.tau_ch),
            kappa_delta=float(ssec.plain("kappa_delta", ref.kappa_delta)),
            h_delta=float(ssec.plain("h_delta", ref.h_delta)),
            delta_t=ssec.time("delta_t", omega_b, 0.0),
        )
        compression = float(ssec.plain("time_compression", 1.0))
        if compression != 1.0:
            if compression <= 0:
                raise ScheduleError(f"time_compression must be > 0, got {compression}")
            schedule = schedule.compressed(compression)
    except ScheduleError as e:
        raise ScenarioError(f"[schedule] {e}")
    ssec.finish()

    isec = _Section("initial_state", raw.get("initial_state", {}))
    kind = isec.plain("type", "fock")
    alpha_raw = isec.plain("alpha", 0.0)
    init = InitialState(
        kind=kind,
        alpha=complex(alpha_raw) if not isinstance(alpha_raw, str) else complex(alpha_raw),
        r=float(isec.plain("r", 0.0)),
        fock=(int(isec.plain("n_a", 1)), int(isec.plain("n_m", 0)),
              int(isec.plain("n_b", 0))),
    )
    isec.finish()

    osec = _Section("solver", raw.get("solver", {}))
    solver = osec.plain("method", "lindblad")
    cutoffs = (int(osec.plain("cutoff_a", 10)), int(osec.plain("cutoff_m", 6)),
               int(osec.plain("cutoff_b", 10)))
    rwa = bool(osec.plain("rwa", True))
    rtol = float(osec.plain("rtol", 1e-9))
    atol = float(osec.plain("atol", 1e-11))
    trunc = float(osec.plain("truncation_threshold", 1e-6))
    osec.finish()

    gsec = _Section("grid", raw.get("grid", {}))
    t_start = gsec.time("t_start", omega_b, -1800.0)
    t_end = gsec.time("t_end", omega_b, 1800.0)
    n_output = int(gsec.plain("n_output", 241))
    gsec.finish()

    return Scenario(
        params=params, schedule=schedule, initial_state=init,
        cutoffs=cutoffs, solver=solver, t_start=t_start, t_end=t_end,
        n_output=n_output, rwa=rwa, rtol=rtol, atol=atol,
        truncation_threshold=trunc, label=str(raw.get("label", path.stem)),
    )

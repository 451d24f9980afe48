"""Parameter sweeps, storage-lifetime fitting and figure-data emission.

Sweeps run the solver once per swept value (optionally across a thread
pool), collect one scalar outcome per value and keep per-run metadata so
a CSV plus JSON pair can reproduce any figure of merit deterministically.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .dynamics import Trajectory, run_scenario
from .pulses import PulseSchedule, REFERENCE_SCHEDULE, detunings, pump_coupling, stokes_detuning
from .eigen import eigen_trace
from .scenario import InitialState, Scenario, ScenarioError
from .states import wigner
from .units import PhysicalParams, time_from_internal


@dataclass
class DecayFit:
    """Exponential decay fit F_r(t_s) = A exp(-t_s / t_half) + A0."""

    A: float
    t_half: float
    A0: float
    residual: float         # root-mean-square misfit per point
    covariance: np.ndarray | None = None

    def __call__(self, t_s):
        return self.A * np.exp(-np.asarray(t_s) / self.t_half) + self.A0


@dataclass
class SweepResult:
    """One scalar outcome per swept parameter value."""

    parameter: str
    values: np.ndarray
    outcomes: np.ndarray
    meta: list[dict] = field(default_factory=list)

    def write_csv(self, path: Path, outcome_name: str = "outcome"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([self.parameter, outcome_name])
            for v, o in zip(self.values, self.outcomes):
                w.writerow([f"{v:.12g}", f"{o:.12g}"])


def fit_exponential(t_s, F_r) -> DecayFit:
    """Least-squares fit of A exp(-t_s/t_half) + A0 to fidelity data.

    Degenerate (constant) data collapses to A = 0 with a warning instead
    of an ill-conditioned fit.
    """
    t_s = np.asarray(t_s, dtype=float)
    F_r = np.asarray(F_r, dtype=float)
    if t_s.size < 4:
        raise ValueError(f"need at least 4 points to fit, got {t_s.size}")
    if np.any(np.diff(t_s) <= 0):
        raise ValueError("t_s must be strictly increasing")
    spread = F_r.max() - F_r.min()
    if spread < 1e-12:
        warnings.warn("constant fidelity series; returning A = 0 fit")
        return DecayFit(A=0.0, t_half=t_s[-1] - t_s[0], A0=float(F_r[0]),
                        residual=0.0)

    def resid(p):
        A, th, A0 = p
        return A * np.exp(-t_s / th) + A0 - F_r

    p0 = np.array([spread, (t_s[-1] - t_s[0]) / 3.0, F_r.min()])
    sol = least_squares(resid, p0, method="lm", xtol=1e-14, ftol=1e-14,
                        gtol=1e-12)
    if not sol.success:
        raise RuntimeError(f"decay fit did not converge: {sol.message}; "
                           f"last iterate {sol.x}")
    r = resid(sol.x)
    # covariance from the Jacobian at the solution, standard LSQ estimate
    dof = max(t_s.size - 3, 1)
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * (r @ r) / dof
    except np.linalg.LinAlgError:
        cov = None
    A, th, A0 = sol.x
    return DecayFit(A=float(A), t_half=float(th), A0=float(A0),
                    residual=float(np.sqrt(np.mean(r ** 2))), covariance=cov)


def _run_one(scenario: Scenario):
    return run_scenario(scenario)


def _map_runs(scenarios, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_one, scenarios))
    return [_run_one(s) for s in scenarios]


def storage_scan(base: Scenario, delays, threads: int = 1) -> SweepResult:
    """Retrieved fidelity versus storage time over a ladder of delays.

    Each delay shifts the retrieval pulse by delta_t and extends the time
    grid to match; the outcome is the maximum fidelity after the delayed
    retrieval pulse.  Storage times are reported in internal units,
    t_s = t_c2 + delta_t - t_c1.
    """
    delays = np.asarray(delays, dtype=float)
    if np.any(delays < 0):
        raise ValueError("delays must be nonnegative")
    scenarios = [base.with_delay(dt) for dt in delays]
    trajs = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_one, sc) for sc in scenarios]
            for dt, fut in zip(delays, futures):
                try:
                    trajs.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(
                        f"storage_scan failed at delta_t = {dt}: {exc}") from exc
    else:
        for dt, sc in zip(delays, scenarios):
            try:
                trajs.append(_run_one(sc))
            except Exception as exc:
                raise RuntimeError(
                    f"storage_scan failed at delta_t = {dt}: {exc}") from exc
    s = base.schedule
    t_s = s.t_c2 + delays - s.t_c1
    F_r = np.empty(delays.size)
    meta = []
    for i, (dt, tr) in enumerate(zip(delays, trajs)):
        F_r[i] = tr.retrieved_fidelity(after=s.t_c2 + dt)
        meta.append({"delta_t": float(dt), **tr.meta})
    return SweepResult(parameter="t_s", values=t_s, outcomes=F_r, meta=meta)


def damping_scan(base: Scenario, kappa_m_values, threads: int = 1) -> SweepResult:
    """Final retrieved cavity occupation versus magnon damping rate.

    kappa_m values are SI angular rates; runs use the moment solver.
    """
    kappa_m_values = np.asarray(kappa_m_values, dtype=float)
    if np.any(kappa_m_values <= 0):
        raise ValueError("kappa_m values must be positive")
    scenarios = [replace(base, params=replace(base.params, kappa_m=km),
                         solver="moments")
                 for km in kappa_m_values]
    try:
        trajs = _map_runs(scenarios, threads)
    except Exception as exc:
        raise RuntimeError("damping_scan solver failure") from exc
    final_na = np.array([tr.N_a[-1] for tr in trajs])
    meta = [{"kappa_m": float(km), **tr.meta}
            for km, tr in zip(kappa_m_values, trajs)]
    return SweepResult(parameter="kappa_m", values=kappa_m_values,
                       outcomes=final_na, meta=meta)


# ---------------------------------------------------------------------------
# figure presets

def reference_params(T_bath: float = 1e-3, kappa_a: float = 0.0,
                     kappa_m: float = 2 * math.pi * 10e3,
                     kappa_b: float = 2 * math.pi * 100.0) -> PhysicalParams:
    """Damped-protocol operating point: 10 GHz cavity/magnon, 10 MHz phonon."""
    return PhysicalParams(omega_a=2 * math.pi * 10e9,
                          omega_m=2 * math.pi * 10e9,
                          omega_b=2 * math.pi * 10e6,
                          kappa_a=kappa_a, kappa_m=kappa_m, kappa_b=kappa_b,
                          T_bath=T_bath)


def reference_scenario(initial: InitialState, solver: str,
                       params: PhysicalParams | None = None,
                       schedule: PulseSchedule | None = None,
                       cutoffs: tuple[int, int, int] = (10, 6, 10),
                       t_start: float = -1800.0, t_end: float = 1300.0,
                       **kw) -> Scenario:
    """Full transfer-store-retrieve protocol scenario with defaults."""
    return Scenario(params=params or reference_params(),
                    schedule=schedule or REFERENCE_SCHEDULE,
                    initial_state=initial, cutoffs=cutoffs, solver=solver,
                    t_start=t_start, t_end=t_end, **kw)


def _write_columns(path: Path, header: list[str], columns):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([f"{v:.12g}" for v in row])


def _write_trajectory(path: Path, tr: Trajectory):
    header = ["t", "N_a", "N_m", "N_b"]
    cols = [tr.times, tr.N_a, tr.N_m, tr.N_b]
    if tr.fidelity is not None:
        header.append("fidelity")
        cols.append(tr.fidelity)
    _write_columns(path, header, cols)


def _write_wigner(path: Path, grid):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "p", "W"])
        for i, xv in enumerate(grid.x):
            for j, pv in enumerate(grid.p):
                w.writerow([f"{xv:.12g}", f"{pv:.12g}",
                            f"{grid.values[j, i]:.12g}"])


def _fig_pulses(out: Path):
    s = REFERENCE_SCHEDULE
    t = np.linspace(-1800.0, 1300.0, 2001)
    da, dm = detunings(t, s)
    _write_columns(out / "pulses.csv",
                   ["t", "pump_coupling", "delta_a", "delta_m", "delta_s"],
                   [t, pump_coupling(t, s), da, dm, stokes_detuning(t, s)])
    return [out / "pulses.csv"]


def _fig_eigen_transfer(out: Path):
    s = REFERENCE_SCHEDULE
    t = np.linspace(-1800.0, 1300.0, 1201)
    trace = eigen_trace(s, t)
    _write_columns(out / "eigenvalues.csv",
                   ["t", "S0", "S_plus", "S_minus",
                    "lambda0", "lambda1", "lambda2"],
                   [t, trace.stokes[:, 0], trace.stokes[:, 1],
                    trace.stokes[:, 2], trace.instantaneous[:, 0],
                    trace.instantaneous[:, 1], trace.instantaneous[:, 2]])
    sc = reference_scenario(InitialState(kind="fock", fock=(1, 0, 0)),
                            "schrodinger", cutoffs=(2, 2, 2))
    _write_trajectory(out / "fock_transfer.csv", run_scenario(sc))
    sc2 = reference_scenario(InitialState(kind="coherent", alpha=0.5),
                             "schrodinger", cutoffs=(8, 5, 8))
    _write_trajectory(out / "coherent_transfer.csv", run_scenario(sc2))
    return [out / "eigenvalues.csv", out / "fock_transfer.csv",
            out / "coherent_transfer.csv"]


def _fig_coherent_open(out: Path):
    files = []
    s = REFERENCE_SCHEDULE
    for alpha in (0.5, 0.75, 1.0):
        sc = reference_scenario(InitialState(kind="coherent", alpha=alpha),
                                "lindblad", rtol=1e-7, atol=1e-9,
                                n_output=63, label=f"coherent_{alpha}")
        tr = run_scenario(sc, store_at={"before": s.t_c1 - 400.0,
                                        "after": sc.t_end})
        stem = f"coherent_alpha_{alpha:g}"
        _write_trajectory(out / f"{stem}.csv", tr)
        files.append(out / f"{stem}.csv")
        for tag in ("before", "after"):
            grid = wigner(tr.stored_states[tag])
            _write_wigner(out / f"{stem}_wigner_{tag}.csv", grid)
            files.append(out / f"{stem}_wigner_{tag}.csv")
    return files


def _fig_cat(out: Path):
    files = []
    s = REFERENCE_SCHEDULE
    for alpha in (0.5, 0.75, 1.0):
        sc = reference_scenario(InitialState(kind="cat", alpha=alpha),
                                "schrodinger", label=f"cat_{alpha}")
        tr = run_scenario(sc, store_at={"before": s.t_c1 - 400.0,
                                        "after": sc.t_end})
        stem = f"cat_alpha_{alpha:g}"
        _write_trajectory(out / f"{stem}.csv", tr)
        files.append(out / f"{stem}.csv")
        for tag in ("before", "after"):
            grid = wigner(tr.stored_states[tag])
            _write_wigner(out / f"{stem}_wigner_{tag}.csv", grid)
            files.append(out / f"{stem}_wigner_{tag}.csv")
    return files


def _fig_storage(out: Path):
    files = []
    for r in (0.5, 0.75, 1.0):
        sc = reference_scenario(InitialState(kind="squeezed", r=r),
                                "schrodinger", cutoffs=(16, 9, 16),
                                label=f"squeezed_{r}")
        _write_trajectory(out / f"squeezed_r_{r:g}.csv", run_scenario(sc))
        files.append(out / f"squeezed_r_{r:g}.csv")
    base = reference_scenario(InitialState(kind="coherent", alpha=1.0),
                              "moments", cutoffs=(0, 0, 0))
    ladder = np.array([2, 6, 14, 30, 66, 100, 135, 165, 200, 250],
                      dtype=float) * base.schedule.t_c2
    sweep = storage_scan(base, ladder)
    t_s_ms = np.array([time_from_internal(v, base.params.omega_b) * 1e3
                       for v in sweep.values])
    fit = fit_exponential(t_s_ms, sweep.outcomes)
    _write_columns(out / "storage_decay.csv", ["t_s_ms", "F_r", "fit"],
                   [t_s_ms, sweep.outcomes, fit(t_s_ms)])
    (out / "storage_fit.json").write_text(json.dumps(
        {"A": fit.A, "t_half_ms": fit.t_half, "A0": fit.A0,
         "residual": fit.residual}, indent=2))
    files += [out / "storage_decay.csv", out / "storage_fit.json"]
    return files


def _fig_damping(out: Path):
    params = reference_params(T_bath=10e-3)
    schedule = replace(REFERENCE_SCHEDULE, Omega0=0.5,
                       g_ma=0.25).compressed(5.0)
    base = Scenario(params=params, schedule=schedule,
                    initial_state=InitialState(kind="coherent", alpha=1.0),
                    cutoffs=(0, 0, 0), solver="moments",
                    t_start=-300.0, t_end=260.0, rtol=1e-8, atol=1e-10,
                    label="damping_scan")
    kappas = 2 * math.pi * np.logspace(2, 5, 10)   # 100 Hz .. 100 kHz
    sweep = damping_scan(base, kappas)
    _write_columns(out / "damping_scan.csv", ["kappa_m_hz", "N_a_final"],
                   [kappas / (2 * math.pi), sweep.outcomes])
    return [out / "damping_scan.csv"]


_FIGURES = {
    "fig1b": _fig_pulses,
    "fig2": _fig_eigen_transfer,
    "fig3": _fig_coherent_open,
    "fig4": _fig_cat,
    "fig5": _fig_storage,
    "fig6": _fig_damping,
}


def run_figure(preset: str, out: str | Path) -> int:
    """Emit all CSV/JSON data needed to re-plot one preset figure."""
    if preset not in _FIGURES:
        raise ScenarioError(
            f"unknown figure preset {preset!r}; choose from {sorted(_FIGURES)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = _FIGURES[preset](out)
    (out / "manifest.json").write_text(json.dumps(
        {"preset": preset, "files": [f.name for f in files]}, indent=2))
    return 0

"""Command-line interface.

Subcommands cover single runs (simulate, wigner), schedule inspection
(pulses, eigen), parameter sweeps (scan-storage, scan-damping) and whole
figure-data presets (figure).  Every run echoes the fully resolved
dimensionless scenario as JSON metadata next to its CSV output.

Exit codes: 0 success, 2 scenario/usage validation error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (damping_scan, fit_exponential, run_figure,
                       storage_scan, _write_columns, _write_trajectory,
                       _write_wigner)
from .dynamics import IntegrationError, run_scenario
from .eigen import eigen_trace, find_crossings
from .hamiltonian import ConvergenceError
from .pulses import ScheduleError, detunings, pump_coupling, stokes_detuning
from .scenario import Scenario, ScenarioError, load_scenario
from .states import TruncationError, wigner
from .units import UnitsError, time_from_internal

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

VALIDATION_ERRORS = (ScenarioError, ScheduleError, UnitsError,
                     TruncationError, FileNotFoundError)
SOLVER_ERRORS = (IntegrationError, ConvergenceError, RuntimeError)

DELAY_LADDER = (2, 6, 14, 30, 66, 100, 135, 165, 200, 250)


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if args.tol is not None:
        sc = replace(sc, rtol=args.tol, atol=args.tol * 1e-2)
    return sc


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    traj = run_scenario(sc)
    _write_trajectory(out / "trajectory.csv", traj)
    sc.dump_metadata(out / "meta.json", extra={"result": traj.meta})
    return EXIT_OK


def cmd_pulses(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    s = sc.schedule
    t = np.linspace(sc.t_start, sc.t_end, args.n)
    da, dm = detunings(t, s)
    _write_columns(out / "pulses.csv",
                   ["t", "pump_coupling", "delta_a", "delta_m", "delta_s"],
                   [t, pump_coupling(t, s), da, dm, stokes_detuning(t, s)])
    sc.dump_metadata(out / "meta.json")
    return EXIT_OK


def cmd_eigen(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    s = sc.schedule
    t = np.linspace(sc.t_start, sc.t_end, args.n)
    trace = eigen_trace(s, t)
    _write_columns(out / "eigenvalues.csv",
                   ["t", "S0", "S_plus", "S_minus",
                    "lambda0", "lambda1", "lambda2"],
                   [t, trace.stokes[:, 0], trace.stokes[:, 1],
                    trace.stokes[:, 2], trace.instantaneous[:, 0],
                    trace.instantaneous[:, 1], trace.instantaneous[:, 2]])
    crossings = find_crossings(s, (sc.t_start, sc.t_end))
    sc.dump_metadata(out / "meta.json",
                     extra={"crossings": list(map(float, crossings))})
    return EXIT_OK


def cmd_wigner(args) -> int:
    sc = _load(args)
    if sc.solver == "moments":
        raise ScenarioError("wigner needs a state solver (schrodinger/lindblad)")
    out = _outdir(args)
    marks = {"before": sc.t_start, "after": sc.t_end}
    traj = run_scenario(sc, store_at=marks)
    for tag, rho_a in traj.stored_states.items():
        _write_wigner(out / f"wigner_{tag}.csv", wigner(rho_a))
    _write_trajectory(out / "trajectory.csv", traj)
    sc.dump_metadata(out / "meta.json", extra={"result": traj.meta})
    return EXIT_OK


def cmd_scan_storage(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    if args.delays:
        multiples = [float(x) for x in args.delays.split(",")]
    else:
        multiples = list(DELAY_LADDER)
    delays = np.array(multiples) * sc.schedule.t_c2
    sweep = storage_scan(sc, delays, threads=args.threads)
    t_s_ms = np.array([time_from_internal(v, sc.params.omega_b) * 1e3
                       for v in sweep.values])
    fit = fit_exponential(t_s_ms, sweep.outcomes)
    _write_columns(out / "storage_decay.csv", ["t_s_wb", "t_s_ms", "F_r"],
                   [sweep.values, t_s_ms, sweep.outcomes])
    sc.dump_metadata(out / "meta.json", extra={
        "fit": {"A": fit.A, "t_half_ms": fit.t_half, "A0": fit.A0,
                "residual": fit.residual}})
    return EXIT_OK


def cmd_scan_damping(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    if args.kappas:
        kappas_hz = np.array([float(x) for x in args.kappas.split(",")])
    else:
        kappas_hz = np.logspace(2, 5, args.n_kappas)
    kappas = 2 * np.pi * kappas_hz
    sweep = damping_scan(sc, kappas, threads=args.threads)
    _write_columns(out / "damping_scan.csv", ["kappa_m_hz", "N_a_final"],
                   [kappas_hz, sweep.outcomes])
    sc.dump_metadata(out / "meta.json")
    return EXIT_OK


def cmd_figure(args) -> int:
    return run_figure(args.preset, args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="magnomem",
        description="Cavity magnomechanical quantum memory simulator: "
                    "pulsed state transfer between a microwave cavity and "
                    "a phonon mode via a magnon intermediary.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True,
                           help="TOML scenario file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="parallel runs for sweeps")
        p.add_argument("--tol", type=float, default=None,
                       help="override solver rtol (atol follows at x0.01)")

    p = sub.add_parser("simulate",
                       help="run one scenario; writes trajectory.csv "
                            "(t,N_a,N_m,N_b[,fidelity]) and meta.json")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pulses",
                       help="tabulate pump coupling and detuning ramps; "
                            "pulses.csv (t,pump_coupling,delta_a,delta_m,delta_s)")
    common(p)
    p.add_argument("--n", type=int, default=2001, help="samples in time")
    p.set_defaults(func=cmd_pulses)

    p = sub.add_parser("eigen",
                       help="analytic and numeric eigenvalue traces; "
                            "eigenvalues.csv (t,S0,S_plus,S_minus,lambda0..2)")
    common(p)
    p.add_argument("--n", type=int, default=1201, help="samples in time")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("wigner",
                       help="run a state-solver scenario and write Wigner "
                            "grids of the reduced cavity state at start/end; "
                            "wigner_*.csv (x,p,W)")
    common(p)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("scan-storage",
                       help="retrieval fidelity vs storage time plus decay "
                            "fit; storage_decay.csv (t_s_wb,t_s_ms,F_r)")
    common(p)
    p.add_argument("--delays", default=None,
                   help="comma list of delay multiples of t_c2 "
                        "(default: the reference ladder)")
    p.set_defaults(func=cmd_scan_storage)

    p = sub.add_parser("scan-damping",
                       help="final cavity occupation vs magnon damping; "
                            "damping_scan.csv (kappa_m_hz,N_a_final)")
    common(p)
    p.add_argument("--kappas", default=None,
                   help="comma list of kappa_m values in Hz")
    p.add_argument("--n-kappas", type=int, default=10,
                   help="points in the default logarithmic ladder")
    p.set_defaults(func=cmd_scan_damping)

    p = sub.add_parser("figure",
                       help="emit all data files for one preset figure")
    p.add_argument("--preset", required=True,
                   help="one of fig1b, fig2, fig3, fig4, fig5, fig6")
    common(p, scenario=False)
    p.set_defaults(func=cmd_figure)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Stokes and instantaneous eigenvalues along the pulse schedule.

The Stokes Hamiltonian (pump coupling off) has closed-form eigenvalues
S0 = 0, S+- = (da+dm)/2 +- sqrt((da-dm)^2 + Omega_0^2)/2.  Its S+- branches
cross S0 = 0 near the two pulse centers; the pump coupling lifts those
degeneracies into avoided crossings that drive the transfer.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import brentq

from .hamiltonian import single_excitation_matrix
from .pulses import PulseSchedule, detunings


@dataclass
class EigenTrace:
    """Per-time Stokes and continuity-ordered instantaneous eigenvalues."""

    times: np.ndarray
    stokes: np.ndarray          # shape (n, 3): S0, S+, S-
    instantaneous: np.ndarray   # shape (n, 3): continuity-ordered branches


def stokes_eigenvalues(delta_a, delta_m, Omega0):
    """(S0, S+, S-); accepts scalars or arrays."""
    delta_a = np.asarray(delta_a, dtype=float)
    delta_m = np.asarray(delta_m, dtype=float)
    mean = (delta_a + delta_m) / 2.0
    half_gap = np.sqrt((delta_a - delta_m) ** 2 + Omega0 ** 2) / 2.0
    s0 = np.zeros_like(mean)
    out = (s0, mean + half_gap, mean - half_gap)
    if mean.ndim:
        return out
    return tuple(float(x) for x in out)


def instantaneous_eigenvalues(t: float, s: PulseSchedule) -> np.ndarray:
    """Sorted real eigenvalues of the 3x3 single-excitation Hamiltonian."""
    return np.linalg.eigvalsh(single_excitation_matrix(t, s))


def eigen_trace(s: PulseSchedule, times: np.ndarray) -> EigenTrace:
    """Stokes and instantaneous eigenvalues on a grid.

    Instantaneous branches are matched between adjacent grid points by
    minimal total jump (continuity ordering), so branches stay smooth
    through the avoided crossings instead of swapping by sort order.
    """
    times = np.asarray(times, dtype=float)
    da, dm = detunings(times, s)
    s0, sp, sm = stokes_eigenvalues(da, dm, s.Omega0)
    stokes = np.column_stack([s0, sp, sm])

    inst = np.empty((times.size, 3))
    prev = None
    for i, t in enumerate(times):
        vals = instantaneous_eigenvalues(t, s)
        if prev is None:
            inst[i] = vals
        else:
            # pick the permutation of vals closest (in total |jump|) to prev
            best = min(permutations(range(3)),
                       key=lambda p: sum(abs(vals[p[k]] - prev[k]) for k in range(3)))
            inst[i] = vals[list(best)]
        prev = inst[i]
    return EigenTrace(times=times, stokes=stokes, instantaneous=inst)


def find_crossings(s: PulseSchedule, window: tuple[float, float],
                   n_scan: int = 4000) -> list[float]:
    """Times where a Stokes branch S+ or S- crosses S0 = 0.

    Sign-change scan followed by bisection to 1e-8 of the window length.
    Returns an empty list when no branch reaches zero.
    """
    t0, t1 = window
    if not t0 < t1:
        raise ValueError(f"empty window {window}")
    ts = np.linspace(t0, t1, n_scan)
    da, dm = detunings(ts, s)
    _, sp, sm = stokes_eigenvalues(da, dm, s.Omega0)
    xtol = 1e-8 * (t1 - t0)
    crossings: list[float] = []
    for branch in (sp, sm):
        sign = np.sign(branch)
        for i in np.flatnonzero(np.diff(sign) != 0):
            def f(t):
                a, m = detunings(float(t), s)
                _, bp, bm = stokes_eigenvalues(a, m, s.Omega0)
                return bp if branch is sp else bm
            crossings.append(float(brentq(f, ts[i], ts[i + 1], xtol=xtol)))
    return sorted(crossings)

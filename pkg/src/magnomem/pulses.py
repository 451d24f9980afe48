"""Pump-pulse and detuning-ramp shapes as pure functions of time.

All quantities are in internal units (see units.py).  The protocol keeps
the cavity-magnon (Stokes) coupling constant at g_ma = Omega_0/2 and
modulates the magnomechanical (pump) coupling G_mb(t) = Omega_p(t)/2 with
two Gaussians; the detunings follow tanh ramps.  A retrieval delay
delta_t shifts only the second Gaussian and only the late tanh term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class ScheduleError(ValueError):
    """Invalid pulse-schedule parameter."""


@dataclass(frozen=True)
class PulseSchedule:
    """Parameters of the coupling pulses and detuning ramps.

    Rates in units of omega_b, times in internal time units.  kappa_delta
    and h_delta are dimensionless ramp amplitudes.  g_ma is fixed to
    Omega0/2 (the protocol's defining constraint) unless given explicitly.
    """

    Omega0: float
    T_width: float
    t_c1: float
    t_c2: float
    tau: float
    tau_ch: float
    kappa_delta: float
    h_delta: float
    delta_t: float = 0.0
    g_ma: float | None = None

    def __post_init__(self):
        if self.T_width <= 0:
            raise ScheduleError(f"T_width must be > 0, got {self.T_width}")
        if self.tau_ch <= 0:
            raise ScheduleError(f"tau_ch must be > 0, got {self.tau_ch}")
        if not self.t_c1 < self.t_c2:
            raise ScheduleError(
                f"need t_c1 < t_c2, got {self.t_c1}, {self.t_c2}")
        if self.delta_t < 0:
            raise ScheduleError(f"delta_t must be >= 0, got {self.delta_t}")
        if self.g_ma is None:
            object.__setattr__(self, "g_ma", self.Omega0 / 2.0)

    def with_delay(self, delta_t: float) -> "PulseSchedule":
        return replace(self, delta_t=delta_t)

    def compressed(self, m: float) -> "PulseSchedule":
        """Divide all time scales by m (pulse-compression knob)."""
        return replace(self, T_width=self.T_width / m, t_c1=self.t_c1 / m,
                       t_c2=self.t_c2 / m, tau=self.tau / m,
                       tau_ch=self.tau_ch / m)


def pump_coupling(t, s: PulseSchedule):
    """Omega_p(t): two Gaussians at t_c1 and t_c2 + delta_t, width T_width.

    Accepts scalar or array t.  The magnomechanical coupling driven in the
    dynamics is G_mb(t) = Omega_p(t)/2.
    """
    t = np.asarray(t, dtype=float)
    w = s.Omega0 * (np.exp(-(((t - s.t_c1) / s.T_width) ** 2))
                    + np.exp(-(((t - (s.t_c2 + s.delta_t)) / s.T_width) ** 2)))
    return w if w.ndim else float(w)


def _ramp_bracket(t, s: PulseSchedule):
    """tanh((t - (tau+delta_t))/tau_ch) + tanh((t + tau)/tau_ch)."""
    t = np.asarray(t, dtype=float)
    return (np.tanh((t - (s.tau + s.delta_t)) / s.tau_ch)
            + np.tanh((t + s.tau) / s.tau_ch))


def detunings(t, s: PulseSchedule):
    """(delta_a, delta_m) at time t.

    delta_m = -kappa_delta * h_delta * (Omega0/2) * bracket and
    delta_a = -(kappa_delta - 1) * h_delta * (Omega0/2) * bracket, so the
    two-photon detuning delta_m - delta_a = -h_delta*(Omega0/2)*bracket
    holds exactly.
    """
    br = _ramp_bracket(t, s)
    base = s.h_delta * s.Omega0 / 2.0 * br
    delta_m = -s.kappa_delta * base
    delta_a = -(s.kappa_delta - 1.0) * base
    if np.ndim(delta_m):
        return delta_a, delta_m
    return float(delta_a), float(delta_m)


def stokes_detuning(t, s: PulseSchedule):
    """delta_s(t) = delta_m(t) - delta_a(t)."""
    br = _ramp_bracket(t, s)
    out = -s.h_delta * s.Omega0 / 2.0 * br
    return out if np.ndim(out) else float(out)


def _log_cosh(x):
    """log(cosh(x)), overflow-safe."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def detuning_phases(t, s: PulseSchedule, t0: float):
    """(phi_a, phi_m) = integrals of the detunings from t0 to t.

    Closed form via int tanh((t-c)/w) dt = w*log(cosh((t-c)/w)); used by
    the solvers to move into the frame that removes the detuning terms.
    """
    t = np.asarray(t, dtype=float)

    def bracket_integral(u):
        return (s.tau_ch * _log_cosh((u - (s.tau + s.delta_t)) / s.tau_ch)
                + s.tau_ch * _log_cosh((u + s.tau) / s.tau_ch))

    integ = bracket_integral(t) - bracket_integral(np.asarray(t0, dtype=float))
    base = s.h_delta * s.Omega0 / 2.0 * integ
    phi_m = -s.kappa_delta * base
    phi_a = -(s.kappa_delta - 1.0) * base
    if np.ndim(phi_m):
        return phi_a, phi_m
    return float(phi_a), float(phi_m)


# Reference pulse set: the dimensionless caption values of the protocol
# figures, ingested verbatim (Omega_0 = 0.1 in units of omega_b).
REFERENCE_SCHEDULE = PulseSchedule(
    Omega0=0.1,
    T_width=108.7,
    t_c1=-612.2,
    t_c2=612.2,
    tau=1101.6,
    tau_ch=164.9,
    kappa_delta=14.05,
    h_delta=13.94,
)

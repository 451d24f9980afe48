"""Physical parameters, unit conversions and thermal-bath formulas.

Internal unit convention
------------------------
Everything downstream works in dimensionless "mechanical" units: rates are
measured in units of the mechanical frequency (the ratio kappa/omega_b is
the same whether both are angular or both ordinary), and times in units of
its inverse.  The protocol captions quote pulse times t_c and rates Omega_0
in this convention (e.g. Omega_0 = 0.1, t_c2 = 612.2 for the reference
pulse set), so those numbers are ingested verbatim.  The corresponding SI
time is t_SI = t_internal / f_b with f_b = omega_b / 2pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import hbar, k as k_B

# YIG material constants
GAMMA_GYRO = 2 * math.pi * 28e9    # gyromagnetic ratio, rad/s/T
SPIN_DENSITY = 4.22e27             # spins per m^3


class UnitsError(ValueError):
    """Non-physical parameter value."""


@dataclass(frozen=True)
class PhysicalParams:
    """Mode frequencies, couplings, damping rates and bath temperature (SI).

    All frequencies and rates are angular (rad/s); T_bath in kelvin.
    """

    omega_a: float
    omega_m: float
    omega_b: float
    g_ma: float = 0.0
    g_mb: float = 0.0
    kappa_a: float = 0.0
    kappa_m: float = 0.0
    kappa_b: float = 0.0
    T_bath: float = 0.0

    def __post_init__(self):
        for name in ("omega_a", "omega_m", "omega_b", "g_ma", "g_mb",
                     "kappa_a", "kappa_m", "kappa_b", "T_bath"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise UnitsError(f"{name} must be finite and >= 0, got {v}")
        if self.omega_b <= 0:
            raise UnitsError(f"omega_b must be > 0, got {self.omega_b}")


@dataclass(frozen=True)
class BathOccupations:
    """Mean thermal quanta per mode (dimensionless)."""

    n_a: float
    n_m: float
    n_b: float


@dataclass(frozen=True)
class InternalParams:
    """PhysicalParams scaled so that omega_b == 1."""

    omega_a: float
    omega_m: float
    omega_b: float   # always exactly 1.0
    g_ma: float
    g_mb: float
    kappa_a: float
    kappa_m: float
    kappa_b: float
    T_bath: float    # kelvin, untouched by rescaling
    omega_b_si: float  # rad/s, retained so the scaling can be undone


def thermal_occupation(omega: float, T: float) -> float:
    """Bose-Einstein occupation 1/(exp(hbar*omega/kB*T) - 1).

    omega is angular (rad/s), T in kelvin.  Returns exactly 0 at T = 0 and
    underflows cleanly to 0 for hbar*omega >> kB*T.
    """
    if omega <= 0:
        raise UnitsError(f"thermal_occupation requires omega > 0, got {omega}")
    if T < 0:
        raise UnitsError(f"thermal_occupation requires T >= 0, got {T}")
    if T == 0:
        return 0.0
    x = hbar * omega / (k_B * T)
    if x > 745:  # exp overflow; occupation < 1e-323
        return 0.0
    return 1.0 / math.expm1(x)


def bath_occupations(p: PhysicalParams) -> BathOccupations:
    """Thermal occupations of the three modes at the bath temperature."""
    if p.T_bath == 0:
        return BathOccupations(0.0, 0.0, 0.0)
    return BathOccupations(
        n_a=thermal_occupation(p.omega_a, p.T_bath) if p.omega_a > 0 else 0.0,
        n_m=thermal_occupation(p.omega_m, p.T_bath) if p.omega_m > 0 else 0.0,
        n_b=thermal_occupation(p.omega_b, p.T_bath),
    )


def to_internal_units(p: PhysicalParams) -> InternalParams:
    """Divide every rate by omega_b so that omega_b maps to exactly 1."""
    wb = p.omega_b
    return InternalParams(
        omega_a=p.omega_a / wb,
        omega_m=p.omega_m / wb,
        omega_b=1.0,
        g_ma=p.g_ma / wb,
        g_mb=p.g_mb / wb,
        kappa_a=p.kappa_a / wb,
        kappa_m=p.kappa_m / wb,
        kappa_b=p.kappa_b / wb,
        T_bath=p.T_bath,
        omega_b_si=wb,
    )


def time_to_internal(t_si: float, omega_b: float) -> float:
    """Seconds -> internal time units (t * omega_b / 2pi).

    One internal time unit is one mechanical period; this is the scaling
    under which the reference pulse captions (t_c2 = 612.2 together with
    Omega_0 = 0.1) are mutually consistent and reproduce the protocol.
    """
    return t_si * omega_b / (2 * math.pi)


def time_from_internal(t_int: float, omega_b: float) -> float:
    """Internal time units -> seconds."""
    return t_int * 2 * math.pi / omega_b


def from_internal_units(ip: InternalParams) -> PhysicalParams:
    """Undo to_internal_units using the retained SI mechanical frequency."""
    wb = ip.omega_b_si
    return PhysicalParams(
        omega_a=ip.omega_a * wb,
        omega_m=ip.omega_m * wb,
        omega_b=ip.omega_b * wb,
        g_ma=ip.g_ma * wb,
        g_mb=ip.g_mb * wb,
        kappa_a=ip.kappa_a * wb,
        kappa_m=ip.kappa_m * wb,
        kappa_b=ip.kappa_b * wb,
        T_bath=ip.T_bath,
    )

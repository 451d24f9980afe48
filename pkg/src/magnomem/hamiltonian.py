"""Interaction-picture Hamiltonian assembly and linearization quantities.

The driven protocol Hamiltonian (internal units, omega_b = 1) is

    H(t) = delta_a(t) a'a + delta_m(t) m'm
           + G_mb(t) (m'b + m b') + g_ma (m'a + m a')

with G_mb(t) = Omega_p(t)/2 and constant g_ma = Omega_0/2.  Without the
rotating-wave approximation the magnomechanical term additionally carries
the counter-rotating pair exp(-2i*w_b*t) m b + exp(+2i*w_b*t) m'b'.  In
internal time units one mechanical period is 1, so w_b enters these phase
factors as 2*pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import FockSpace, mode_operator
from .pulses import PulseSchedule, detunings, pump_coupling
from .units import GAMMA_GYRO, SPIN_DENSITY, PhysicalParams, UnitsError

# omega_b expressed in internal (periods-based) time units, for the
# counter-rotating phase factors exp(+-2i*omega_b*t)
OMEGA_B_PHASE = 2 * math.pi


@dataclass(frozen=True)
class MeanFields:
    """Classical mean fields of the driven system and derived quantities."""

    alpha: complex
    beta: complex
    eta: complex
    G_mb: complex          # eta * g_mb
    Delta_m_tilde: float   # Delta_m + g_mb*(beta + beta*)


class ConvergenceError(RuntimeError):
    """Fixed-point iteration failed to converge."""


def drive_rabi_frequency(B0: float, V: float) -> float:
    """Rabi frequency (rad/s) of the magnon drive field.

    eps_p = (sqrt(5)/4) * gamma * sqrt(N) * B0 with N = rho*V the number of
    YIG spins in the sphere.
    """
    if V <= 0:
        raise UnitsError(f"volume must be > 0, got {V}")
    if B0 < 0:
        raise UnitsError(f"B0 must be >= 0, got {B0}")
    return math.sqrt(5.0) / 4.0 * GAMMA_GYRO * math.sqrt(SPIN_DENSITY * V) * B0


def steady_mean_fields(p: PhysicalParams, Delta_a: float, Delta_m: float,
                       eps_p: complex, tol: float = 1e-12,
                       max_iter: int = 10_000) -> MeanFields:
    """Self-consistent (beta, eta) of the driven steady state.

    eta = eps_p*(i*Delta_a + kappa_a) / (g_ma^2 + i*(Dm~ + -i*kappa_m)...)
    depends on the effective detuning Dm~ = Delta_m + g_mb*(beta + beta*),
    which itself depends on beta = -i*g_mb*|eta|^2/(i*omega_b + kappa_b);
    solved by fixed-point iteration from beta = 0.
    """

    def eta_closed(Dm_tilde: float) -> complex:
        # steady state of the linear magnon-cavity pair at fixed Dm~
        za = 1j * Delta_a + p.kappa_a
        return eps_p * za / (p.g_ma ** 2 + 1j * (Dm_tilde - 1j * p.kappa_m) * za)

    def cavity_of(eta: complex) -> complex:
        if Delta_a == 0 and p.kappa_a == 0:
            return 0j
        return -1j * p.g_ma * eta / (1j * Delta_a + p.kappa_a)

    if eps_p == 0:
        return MeanFields(0j, 0j, 0j, 0j, Delta_m)
    eta = eta_closed(Delta_m)
    if p.g_mb == 0:
        return MeanFields(cavity_of(eta), 0j, eta, 0j, Delta_m)
    beta = 0.0 + 0.0j
    for _ in range(max_iter):
        Dm_tilde = Delta_m + p.g_mb * (beta + beta.conjugate()).real
        eta_new = eta_closed(Dm_tilde)
        beta_new = -1j * p.g_mb * abs(eta_new) ** 2 / (1j * p.omega_b + p.kappa_b)
        resid = abs(eta_new - eta) + abs(beta_new - beta)
        eta, beta = eta_new, beta_new
        if resid < tol:
            Dm_tilde = Delta_m + p.g_mb * (beta + beta.conjugate()).real
            return MeanFields(cavity_of(eta), beta, eta, eta * p.g_mb, Dm_tilde)
    raise ConvergenceError(
        f"mean-field iteration did not converge; last residual {resid:.3e}")


class HamiltonianBuilder:
    """Caches the constant sparse operator pieces of H(t) on one space."""

    def __init__(self, space: FockSpace):
        self.space = space
        a = mode_operator(space, "a", "lower")
        m = mode_operator(space, "m", "lower")
        b = mode_operator(space, "b", "lower")
        self.num_a = mode_operator(space, "a", "number")
        self.num_m = mode_operator(space, "m", "number")
        self.num_b = mode_operator(space, "b", "number")
        self.mdag_b = (m.conj().T @ b).tocsr()       # m'b
        self.mdag_a = (m.conj().T @ a).tocsr()       # m'a
        self.m_b = (m @ b).tocsr()                   # m b (counter-rotating)

    def build(self, t: float, s: PulseSchedule, rwa: bool = True) -> sp.csr_matrix:
        da, dm = detunings(t, s)
        G = pump_coupling(t, s) / 2.0
        H = (da * self.num_a + dm * self.num_m
             + G * (self.mdag_b + self.mdag_b.conj().T)
             + s.g_ma * (self.mdag_a + self.mdag_a.conj().T))
        if not rwa:
            phase = np.exp(-2j * OMEGA_B_PHASE * t)
            cr = G * phase * self.m_b
            H = H + cr + cr.conj().T
        return H.tocsr()


def build_hamiltonian(t: float, space: FockSpace, s: PulseSchedule,
                      rwa: bool = True) -> sp.csr_matrix:
    """Hamiltonian at time t on the truncated space (sparse, Hermitian)."""
    return HamiltonianBuilder(space).build(t, s, rwa=rwa)


def single_excitation_matrix(t: float, s: PulseSchedule) -> np.ndarray:
    """3x3 RWA Hamiltonian in the single-excitation basis (b, m, a).

    Matches the restriction of the full RWA operator to the span of
    |0,0,1>, |0,1,0>, |1,0,0>.
    """
    da, dm = detunings(t, s)
    Op = pump_coupling(t, s)
    return np.array([
        [0.0, Op / 2.0, 0.0],
        [Op / 2.0, dm, s.g_ma],
        [0.0, s.g_ma, da],
    ], dtype=complex)

"""Input-state preparation, fidelity, occupations and Wigner functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .fock import MODES, FockSpace, QuantumState, partial_trace


class TruncationError(ValueError):
    """State support does not fit in the requested cutoff."""


def _truncate_normalize(amps: np.ndarray, max_correction: float) -> np.ndarray:
    norm2 = float(np.vdot(amps, amps).real)
    correction = abs(1.0 - norm2)
    if correction > max_correction:
        raise TruncationError(
            f"truncation correction {correction:.3e} exceeds {max_correction:.1e}; "
            "increase the cutoff")
    return amps / math.sqrt(norm2)


def coherent_amplitudes(alpha: complex, cutoff: int,
                        max_correction: float = 1e-4) -> np.ndarray:
    """c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!), renormalized."""
    n = np.arange(cutoff)
    if alpha == 0:
        amps = np.zeros(cutoff, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return _truncate_normalize(amps, max_correction)


def cat_amplitudes(alpha: complex, cutoff: int,
                   max_correction: float = 1e-4) -> np.ndarray:
    """Even cat N(|alpha> + |-alpha>); odd Fock amplitudes exactly zero."""
    if alpha == 0:
        return coherent_amplitudes(0, cutoff)
    amps = coherent_amplitudes(alpha, cutoff, max_correction=np.inf).copy()
    amps[1::2] = 0.0   # |alpha> + |-alpha> cancels odd levels exactly
    amps[0::2] *= 2.0
    # untruncated norm of |a> + |-a> is sqrt(2(1 + exp(-2|a|^2)))
    amps /= math.sqrt(2.0 * (1.0 + math.exp(-2.0 * abs(alpha) ** 2)))
    return _truncate_normalize(amps, max_correction)


def squeezed_amplitudes(r: float, cutoff: int,
                        max_correction: float = 1e-2) -> np.ndarray:
    """Squeezed vacuum: only even levels, two-photon expansion.

    c_{2k} = (-tanh r)^k sqrt((2k)!)/(2^k k!) / sqrt(cosh r).  The default
    truncation tolerance is looser than for coherent states because the
    even-level tail decays slowly (relative correction ~3e-3 at r = 1,
    cutoff 16).
    """
    amps = np.zeros(cutoff, dtype=complex)
    if r == 0:
        amps[0] = 1.0
        return amps
    th = math.tanh(abs(r))
    sign = 1.0 if r >= 0 else -1.0
    ks = np.arange((cutoff + 1) // 2)
    log_mag = (0.5 * gammaln(2 * ks + 1) - ks * math.log(2.0) - gammaln(ks + 1)
               + ks * math.log(th) - 0.5 * math.log(math.cosh(abs(r))))
    amps[0::2] = ((-sign) ** ks) * np.exp(log_mag)
    return _truncate_normalize(amps, max_correction)


def embed_cavity_state(amps: np.ndarray, space: FockSpace) -> QuantumState:
    """Cavity-mode amplitudes tensored with magnon and phonon vacuum."""
    na, nm, nb = space.cutoffs
    if len(amps) != na:
        raise ValueError(f"cavity amplitudes length {len(amps)} != cutoff {na}")
    psi = np.zeros(space.dim, dtype=complex)
    for n in range(na):
        psi[space.index(n, 0, 0)] = amps[n]
    return QuantumState(space, vector=psi)


def coherent_state(alpha: complex, cutoff: int, **kw) -> QuantumState:
    space = FockSpace((cutoff, 1, 1))
    return QuantumState(space, vector=coherent_amplitudes(alpha, cutoff, **kw))


def cat_state(alpha: complex, cutoff: int, **kw) -> QuantumState:
    space = FockSpace((cutoff, 1, 1))
    return QuantumState(space, vector=cat_amplitudes(alpha, cutoff, **kw))


def squeezed_vacuum(r: float, cutoff: int, **kw) -> QuantumState:
    space = FockSpace((cutoff, 1, 1))
    return QuantumState(space, vector=squeezed_amplitudes(r, cutoff, **kw))


def fidelity(rho_a: np.ndarray, psi_ref: np.ndarray) -> float:
    """F = sqrt(<psi|rho|psi>): the square-root (amplitude) convention.

    Note this is the protocol's figure-of-merit convention, not the Uhlmann
    pure-vs-mixed fidelity (which would be the square of this for pure
    references).
    """
    val = float(np.real(np.vdot(psi_ref, rho_a @ psi_ref)))
    return math.sqrt(min(max(val, 0.0), 1.0))


def phase_aligned_fidelity(rho_a: np.ndarray, psi_ref: np.ndarray,
                           n_grid: int = 4096):
    """Fidelity maximized over a free cavity phase rotation.

    Between discrete output samples the undriven cavity only rotates in
    phase, so the running maximum of the fidelity over a continuous time
    window equals, per sample, max over theta of
    F(e^{i theta n} rho e^{-i theta n}).  F(theta)^2 is a short Fourier
    series in theta whose coefficients are the diagonal sums of
    conj(psi)_n rho_{nm} psi_m, evaluated densely and refined by parabolic
    interpolation.  Returns (fidelity, theta_opt).
    """
    M = np.conj(psi_ref)[:, None] * rho_a * psi_ref[None, :]
    N = M.shape[0]
    ks = np.arange(-(N - 1), N)
    q = np.array([np.trace(M, offset=int(k)) for k in ks])
    theta = np.linspace(0.0, 2 * math.pi, n_grid, endpoint=False)
    vals = (np.exp(-1j * np.outer(theta, ks)) @ q).real
    j = int(np.argmax(vals))
    # one parabolic refinement step around the best grid point
    ym, y0, yp = vals[(j - 1) % n_grid], vals[j], vals[(j + 1) % n_grid]
    denom = ym - 2 * y0 + yp
    shift = 0.5 * (ym - yp) / denom if abs(denom) > 1e-300 else 0.0
    shift = min(max(shift, -0.5), 0.5)
    th = theta[j] + shift * (theta[1] - theta[0])
    best = float((np.exp(-1j * th * ks) @ q).real)
    return math.sqrt(min(max(best, 0.0), 1.0)), float(th)


def rotate_phase(rho_a: np.ndarray, theta: float) -> np.ndarray:
    """Apply the cavity phase rotation e^{i theta n} rho e^{-i theta n}."""
    ph = np.exp(1j * theta * np.arange(rho_a.shape[0]))
    return ph[:, None] * rho_a * ph.conj()[None, :]


def occupations(state: QuantumState, space: FockSpace) -> tuple[float, float, float]:
    """Expectations of the three number operators (N_a, N_m, N_b)."""
    out = []
    for mode in MODES:
        red = partial_trace(state, mode)
        out.append(float(np.sum(np.arange(red.shape[0]) * np.diag(red).real)))
    return tuple(out)


@dataclass
class WignerGrid:
    """Wigner function sampled on an (x, p) grid.

    Quadrature convention x = (a + a')/sqrt(2), p = (a - a')/(i sqrt(2));
    values normalized so the (x, p) integral of a unit-trace state is 1
    (vacuum peak 1/pi).
    """

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray = field(default=None)

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(np.sum(self.values) * dx * dp)


def wigner(rho: np.ndarray, x: np.ndarray | None = None,
           p: np.ndarray | None = None) -> WignerGrid:
    """Wigner function via the stable Laguerre-polynomial recurrence.

    Builds Tr[rho D(beta) P D(beta)^dag] from the recurrence for the
    Wigner functions of |m><n|, which stays accurate out to large beta
    where a matrix-exponential displacement on the truncated space would
    not.  beta = (x + i p)/sqrt(2).
    """
    if x is None:
        x = np.linspace(-4.5, 4.5, 101)
    if p is None:
        p = np.linspace(-4.5, 4.5, 101)
    n = rho.shape[0]
    X, P = np.meshgrid(x, p)
    A = (X + 1j * P) / math.sqrt(2.0)
    # row 0: W_{0n}, then raise the left index in place
    row = [None] * n
    row[0] = np.exp(-2.0 * np.abs(A) ** 2) / math.pi
    vals = rho[0, 0].real * row[0].real
    for k in range(1, n):
        row[k] = (2.0 * A * row[k - 1]) / math.sqrt(k)
        vals = vals + 2.0 * (rho[0, k] * row[k]).real
    for m in range(1, n):
        prev = row[m].copy()
        row[m] = (2.0 * np.conj(A) * prev - math.sqrt(m) * row[m - 1]) / math.sqrt(m)
        vals = vals + (rho[m, m] * row[m]).real
        for k in range(m + 1, n):
            nxt = (2.0 * A * row[k - 1] - math.sqrt(m) * prev) / math.sqrt(k)
            prev = row[k]
            row[k] = nxt
            vals = vals + 2.0 * (rho[m, k] * row[k]).real
    return WignerGrid(x=x, p=p, values=vals)

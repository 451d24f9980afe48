"""Truncated three-mode tensor-product Hilbert space and mode operators.

Mode ordering is (cavity a, magnon m, phonon b), row-major: the basis index
of |n_a, n_m, n_b> is (n_a * N_m + n_m) * N_b + n_b.  Operators are stored
sparse (CSR); single-mode operators are embedded with identity factors on
the other modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

MODES = ("a", "m", "b")


@dataclass(frozen=True)
class FockSpace:
    """Truncated Fock space with per-mode cutoffs (number of levels)."""

    cutoffs: tuple[int, int, int]

    def __post_init__(self):
        if len(self.cutoffs) != 3 or any(int(c) < 1 for c in self.cutoffs):
            raise ValueError(f"cutoffs must be 3 positive ints, got {self.cutoffs}")
        object.__setattr__(self, "cutoffs", tuple(int(c) for c in self.cutoffs))

    @property
    def dim(self) -> int:
        na, nm, nb = self.cutoffs
        return na * nm * nb

    def index(self, n_a: int, n_m: int, n_b: int) -> int:
        na, nm, nb = self.cutoffs
        if not (0 <= n_a < na and 0 <= n_m < nm and 0 <= n_b < nb):
            raise IndexError(f"occupation ({n_a},{n_m},{n_b}) outside cutoffs {self.cutoffs}")
        return (n_a * nm + n_m) * nb + n_b

    def occupations_of(self, idx: int) -> tuple[int, int, int]:
        na, nm, nb = self.cutoffs
        n_b = idx % nb
        rest = idx // nb
        return rest // nm, rest % nm, n_b

    def basis_state(self, n_a: int, n_m: int, n_b: int) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(n_a, n_m, n_b)] = 1.0
        return psi


def destroy(n: int) -> sp.csr_matrix:
    """Single-mode annihilation operator: <k-1|a|k> = sqrt(k)."""
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr").astype(complex)


def mode_operator(space: FockSpace, mode: str, kind: str = "lower") -> sp.csr_matrix:
    """Embedded operator for one mode; kind in {lower, raise, number}."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    n = space.cutoffs[MODES.index(mode)]
    a = destroy(n)
    if kind == "lower":
        op = a
    elif kind == "raise":
        op = a.conj().T.tocsr()
    elif kind == "number":
        op = (a.conj().T @ a).tocsr()
    else:
        raise ValueError(f"kind must be lower/raise/number, got {kind!r}")
    factors = [sp.identity(c, format="csr", dtype=complex) for c in space.cutoffs]
    factors[MODES.index(mode)] = op
    return sp.kron(sp.kron(factors[0], factors[1]), factors[2]).tocsr()


@dataclass
class QuantumState:
    """Pure state (amplitude vector) or density matrix on a FockSpace."""

    space: FockSpace
    vector: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        if (self.vector is None) == (self.density is None):
            raise ValueError("provide exactly one of vector/density")
        if self.vector is not None:
            self.vector = np.asarray(self.vector, dtype=complex)
            if self.vector.shape != (self.space.dim,):
                raise ValueError("state vector has wrong dimension")
        else:
            self.density = np.asarray(self.density, dtype=complex)
            if self.density.shape != (self.space.dim, self.space.dim):
                raise ValueError("density matrix has wrong dimension")

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def as_density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.vector, self.vector.conj())
        return self.density

    def validate(self, tol: float = 1e-9):
        if self.is_pure:
            norm = np.linalg.norm(self.vector)
            if abs(norm - 1.0) > tol:
                raise ValueError(f"pure state norm deviates by {abs(norm-1):.2e}")
        else:
            rho = self.density
            if np.abs(rho - rho.conj().T).max() > tol:
                raise ValueError("density matrix is not Hermitian")
            tr = np.trace(rho).real
            if abs(tr - 1.0) > tol:
                raise ValueError(f"density trace deviates by {abs(tr-1):.2e}")
            w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
            if w.min() < -tol:
                raise ValueError(f"density matrix min eigenvalue {w.min():.2e}")
        return self


def partial_trace(state: QuantumState, keep: str) -> np.ndarray:
    """Reduced single-mode density matrix, tracing out the other two modes."""
    if keep not in MODES:
        raise ValueError(f"keep must be one of {MODES}, got {keep!r}")
    na, nm, nb = state.space.cutoffs
    axis = MODES.index(keep)
    if state.is_pure:
        psi = state.vector.reshape(na, nm, nb)
        psi = np.moveaxis(psi, axis, 0).reshape(state.space.cutoffs[axis], -1)
        return psi @ psi.conj().T
    rho = state.density.reshape(na, nm, nb, na, nm, nb)
    spec = {"a": "ixyjxy->ij", "m": "xiyxjy->ij", "b": "xyixyj->ij"}[keep]
    return np.einsum(spec, rho)


def top_level_population(state: QuantumState) -> tuple[float, float, float]:
    """Population of each mode's highest retained Fock level.

    Used as the truncation-adequacy monitor: a run is flagged when any of
    these exceeds the configured threshold.
    """
    out = []
    for mode in MODES:
        red = partial_trace(state, mode)
        out.append(float(red[-1, -1].real))
    return tuple(out)

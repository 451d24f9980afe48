import numpy as np
import pytest
from dataclasses import replace

from magnomem.eigen import (eigen_trace, find_crossings,
                            instantaneous_eigenvalues, stokes_eigenvalues)
from magnomem.pulses import REFERENCE_SCHEDULE

S = REFERENCE_SCHEDULE


class TestStokesEigenvalues:
    def test_zero_detuning(self):
        s0, sp, sm = stokes_eigenvalues(0.0, 0.0, 0.1)
        assert s0 == 0.0
        assert sp == pytest.approx(0.05) and sm == pytest.approx(-0.05)

    def test_equal_detunings(self):
        s0, sp, sm = stokes_eigenvalues(0.3, 0.3, 0.1)
        assert sp == pytest.approx(0.3 + 0.05)
        assert sm == pytest.approx(0.3 - 0.05)

    def test_gap_lower_bound(self):
        rng = np.random.default_rng(2)
        da, dm = rng.normal(size=(2, 200))
        _, sp, sm = stokes_eigenvalues(da, dm, 0.1)
        assert np.all(sp - sm >= 0.1 - 1e-14)

    def test_matches_matrix_eigenvalues(self):
        # Omega_p = 0 three-level matrix: diag(0, dm, da) + Stokes coupling
        rng = np.random.default_rng(4)
        for _ in range(1000):
            da, dm = rng.normal(scale=2.0, size=2)
            om = rng.uniform(0.01, 1.0)
            M = np.array([[da, om / 2, 0], [om / 2, dm, 0], [0, 0, 0]])
            numeric = np.sort(np.linalg.eigvalsh(M))
            s0, sp, sm = stokes_eigenvalues(da, dm, om)
            np.testing.assert_allclose(np.sort([s0, sp, sm]), numeric,
                                       atol=1e-12)


class TestInstantaneousEigenvalues:
    def test_matches_stokes_outside_pulses(self):
        from magnomem.pulses import detunings
        vals = instantaneous_eigenvalues(-1700.0, S)
        da, dm = detunings(-1700.0, S)
        s = stokes_eigenvalues(da, dm, S.Omega0)
        np.testing.assert_allclose(np.sort(vals), np.sort(s), atol=1e-10)

    def test_gap_lifted_at_first_crossing(self):
        vals = np.sort(instantaneous_eigenvalues(S.t_c1, S))
        assert vals[1] - vals[0] > 1e-3

    def test_midpoint(self):
        vals = np.sort(instantaneous_eigenvalues(0.0, S))
        np.testing.assert_allclose(vals, [-S.Omega0 / 2, 0.0, S.Omega0 / 2],
                                   atol=1e-6)


class TestEigenTrace:
    def test_branch_continuity(self):
        t = np.linspace(-1800, 1300, 6000)
        trace = eigen_trace(S, t)
        jumps = np.max(np.abs(np.diff(trace.instantaneous, axis=0)))
        assert jumps < 0.1

    def test_stokes_columns(self):
        t = np.linspace(-1800, 1300, 100)
        trace = eigen_trace(S, t)
        assert np.all(trace.stokes[:, 0] == 0.0)
        assert np.all(trace.stokes[:, 1] >= trace.stokes[:, 2])


class TestFindCrossings:
    def test_exactly_two(self):
        crossings = find_crossings(S, (-1800.0, 1800.0))
        assert len(crossings) == 2
        assert crossings[0] == pytest.approx(S.t_c1, abs=5 * S.T_width)
        assert crossings[1] == pytest.approx(S.t_c2, abs=5 * S.T_width)

    def test_delay_shifts_second_crossing(self):
        base = find_crossings(S, (-1800.0, 1800.0))
        delayed = find_crossings(S.with_delay(400.0), (-1800.0, 2200.0))
        assert len(delayed) == 2
        assert delayed[0] == pytest.approx(base[0], abs=1.0)
        assert delayed[1] == pytest.approx(base[1] + 400.0, abs=20.0)

    def test_flat_detunings_no_crossings(self):
        flat = replace(S, h_delta=0.0)
        assert find_crossings(flat, (-1800.0, 1800.0)) == []

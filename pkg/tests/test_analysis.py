import json
import math

import numpy as np
import pytest

from magnomem.analysis import (DecayFit, SweepResult, damping_scan,
                               fit_exponential, reference_scenario,
                               run_figure, storage_scan)
from magnomem.pulses import REFERENCE_SCHEDULE
from magnomem.scenario import InitialState, ScenarioError
from magnomem.units import PhysicalParams

OMEGA_B = 2 * math.pi * 10e6


class TestFitExponential:
    def test_recovers_parameters(self):
        t = np.linspace(0, 30, 40)
        y = 0.4 * np.exp(-t / 6.0) + 0.6
        fit = fit_exponential(t, y)
        assert fit.A == pytest.approx(0.4, abs=1e-6)
        assert fit.t_half == pytest.approx(6.0, abs=1e-6)
        assert fit.A0 == pytest.approx(0.6, abs=1e-6)
        assert fit.residual < 1e-10

    def test_noisy_recovery(self):
        rng = np.random.default_rng(7)
        t = np.linspace(0, 40, 120)
        y = 0.5 * np.exp(-t / 8.0) + 0.45 + rng.normal(scale=2e-3, size=t.size)
        fit = fit_exponential(t, y)
        assert fit.t_half == pytest.approx(8.0, rel=0.05)
        assert fit.covariance is not None
        assert fit.covariance.shape == (3, 3)

    def test_time_scale_equivariance(self):
        t = np.linspace(0, 20, 50)
        y = 0.3 * np.exp(-t / 5.0) + 0.2
        a = fit_exponential(t, y)
        b = fit_exponential(1e-3 * t, y)
        assert b.t_half == pytest.approx(1e-3 * a.t_half, rel=1e-6)

    def test_callable(self):
        fit = DecayFit(A=0.5, t_half=2.0, A0=0.1, residual=0.0)
        assert fit(0.0) == pytest.approx(0.6)
        assert fit(1e9) == pytest.approx(0.1)

    def test_constant_series_warns(self):
        t = np.linspace(0, 10, 8)
        with pytest.warns(UserWarning, match="constant"):
            fit = fit_exponential(t, np.full(8, 0.7))
        assert fit.A == 0.0 and fit.A0 == pytest.approx(0.7)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="4"):
            fit_exponential([0, 1, 2], [1, 0.5, 0.3])

    def test_non_monotone_times(self):
        with pytest.raises(ValueError, match="increasing"):
            fit_exponential([0, 2, 1, 3], [1, 0.5, 0.6, 0.3])


def moment_base(**kw):
    params = PhysicalParams(
        omega_a=2 * math.pi * 10e9, omega_m=2 * math.pi * 10e9,
        omega_b=OMEGA_B, kappa_a=0.0, kappa_m=1e-3 * OMEGA_B,
        kappa_b=1e-5 * OMEGA_B, T_bath=1e-3)
    kw.setdefault("params", params)
    kw.setdefault("schedule", REFERENCE_SCHEDULE.compressed(5.0))
    kw.setdefault("t_start", -300.0)
    kw.setdefault("t_end", 260.0)
    kw.setdefault("n_output", 201)
    kw.setdefault("rtol", 1e-9)
    kw.setdefault("atol", 1e-11)
    return reference_scenario(InitialState(kind="coherent", alpha=1.0),
                              "moments", **kw)


class TestStorageScan:
    def test_zero_delay_matches_base_run(self):
        base = moment_base()
        res = storage_scan(base, [0.0])
        from magnomem.dynamics import run_scenario
        tr = run_scenario(base)
        assert res.outcomes[0] == pytest.approx(
            tr.retrieved_fidelity(after=base.schedule.t_c2), abs=1e-12)

    def test_fidelity_decreases_with_storage(self):
        base = moment_base()
        t_c2 = base.schedule.t_c2
        res = storage_scan(base, [0.0, 20 * t_c2, 60 * t_c2])
        assert res.outcomes[0] > res.outcomes[1] > res.outcomes[2]

    def test_threaded_matches_sequential(self):
        base = moment_base()
        delays = [0.0, 10 * base.schedule.t_c2]
        seq = storage_scan(base, delays, threads=1)
        par = storage_scan(base, delays, threads=2)
        np.testing.assert_allclose(par.outcomes, seq.outcomes, rtol=1e-10)

    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            storage_scan(moment_base(), [-1.0])

    def test_storage_times_reported(self):
        base = moment_base()
        s = base.schedule
        res = storage_scan(base, [0.0, 100.0])
        np.testing.assert_allclose(res.values,
                                   [s.t_c2 - s.t_c1, s.t_c2 + 100.0 - s.t_c1])


class TestDampingScan:
    def test_single_value(self):
        res = damping_scan(moment_base(), [2 * math.pi * 10e3])
        assert res.outcomes.shape == (1,)
        assert 0.0 < res.outcomes[0] <= 1.5

    def test_less_damping_retrieves_more(self):
        res = damping_scan(moment_base(),
                           2 * math.pi * np.array([1e3, 1e5]))
        assert res.outcomes[0] > res.outcomes[1]

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            damping_scan(moment_base(), [0.0])


class TestSweepResult:
    def test_write_csv(self, tmp_path):
        res = SweepResult(parameter="x", values=np.array([1.0, 2.0]),
                          outcomes=np.array([0.5, 0.25]))
        out = tmp_path / "sweep.csv"
        res.write_csv(out, outcome_name="y")
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x,y"
        assert lines[1].startswith("1,")


class TestRunFigure:
    def test_unknown_preset(self, tmp_path):
        with pytest.raises(ScenarioError, match="preset"):
            run_figure("fig99", tmp_path)

    def test_pulse_preset_writes_files(self, tmp_path):
        run_figure("fig1b", tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        for name in manifest["files"]:
            assert (tmp_path / name).exists()

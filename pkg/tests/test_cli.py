import json

import numpy as np
import pytest

from magnomem.cli import EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, main

FAST_MOMENTS = """
[params]
kappa_m_wb = 1e-3
kappa_b_wb = 1e-5
T_bath_k = 1e-3

[schedule]
time_compression = 5.0

[initial_state]
type = "coherent"
alpha = 1.0

[solver]
method = "moments"
rtol = 1e-9
atol = 1e-11

[grid]
t_start_wb = -300.0
t_end_wb = 260.0
n_output = 201
"""

FAST_SCHRODINGER = """
[schedule]
time_compression = 5.0

[initial_state]
type = "fock"
n_a = 1

[solver]
method = "schrodinger"
cutoff_a = 2
cutoff_m = 2
cutoff_b = 2

[grid]
t_start_wb = -300.0
t_end_wb = 260.0
n_output = 41
"""


@pytest.fixture
def moments_toml(tmp_path):
    p = tmp_path / "moments.toml"
    p.write_text(FAST_MOMENTS)
    return p


@pytest.fixture
def schrodinger_toml(tmp_path):
    p = tmp_path / "schrodinger.toml"
    p.write_text(FAST_SCHRODINGER)
    return p


class TestSimulate:
    def test_success_and_outputs(self, tmp_path, moments_toml):
        out = tmp_path / "run"
        code = main(["simulate", "--scenario", str(moments_toml),
                     "--out", str(out)])
        assert code == EXIT_OK
        header = (out / "trajectory.csv").read_text().splitlines()[0]
        assert header.startswith("t,N_a,N_m,N_b")
        meta = json.loads((out / "meta.json").read_text())
        assert meta["solver"] == "moments"
        assert meta["grid"]["n_output"] == 201

    def test_validation_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[solver]\nmethod = 'lindblad'\nnot_a_key = 1\n")
        code = main(["simulate", "--scenario", str(bad),
                     "--out", str(tmp_path / "x")])
        assert code == EXIT_VALIDATION

    def test_missing_scenario_file(self, tmp_path):
        code = main(["simulate", "--scenario", str(tmp_path / "nope.toml"),
                     "--out", str(tmp_path / "x")])
        assert code == EXIT_VALIDATION

    def test_tol_override_recorded(self, tmp_path, moments_toml):
        out = tmp_path / "run"
        code = main(["simulate", "--scenario", str(moments_toml),
                     "--out", str(out), "--tol", "1e-8"])
        assert code == EXIT_OK
        meta = json.loads((out / "meta.json").read_text())
        assert meta["tolerances"]["rtol"] == pytest.approx(1e-8)


class TestPulsesEigen:
    def test_pulses_csv(self, tmp_path, moments_toml):
        out = tmp_path / "p"
        assert main(["pulses", "--scenario", str(moments_toml),
                     "--out", str(out), "--n", "101"]) == EXIT_OK
        lines = (out / "pulses.csv").read_text().splitlines()
        assert lines[0] == "t,pump_coupling,delta_a,delta_m,delta_s"
        assert len(lines) == 102

    def test_eigen_crossings_in_meta(self, tmp_path, moments_toml):
        out = tmp_path / "e"
        assert main(["eigen", "--scenario", str(moments_toml),
                     "--out", str(out), "--n", "301"]) == EXIT_OK
        meta = json.loads((out / "meta.json").read_text())
        assert len(meta["crossings"]) == 2


class TestWigner:
    def test_rejects_moment_solver(self, tmp_path, moments_toml):
        code = main(["wigner", "--scenario", str(moments_toml),
                     "--out", str(tmp_path / "w")])
        assert code == EXIT_VALIDATION

    def test_writes_grids(self, tmp_path, schrodinger_toml):
        out = tmp_path / "w"
        assert main(["wigner", "--scenario", str(schrodinger_toml),
                     "--out", str(out)]) == EXIT_OK
        for tag in ("before", "after"):
            lines = (out / f"wigner_{tag}.csv").read_text().splitlines()
            assert lines[0] == "x,p,W"


class TestScans:
    def test_scan_storage(self, tmp_path, moments_toml):
        out = tmp_path / "s"
        code = main(["scan-storage", "--scenario", str(moments_toml),
                     "--out", str(out), "--delays", "0,10,30,60,100"])
        assert code == EXIT_OK
        lines = (out / "storage_decay.csv").read_text().splitlines()
        assert lines[0] == "t_s_wb,t_s_ms,F_r"
        assert len(lines) == 6
        meta = json.loads((out / "meta.json").read_text())
        assert meta["fit"]["t_half_ms"] > 0

    def test_scan_damping(self, tmp_path, moments_toml):
        out = tmp_path / "d"
        code = main(["scan-damping", "--scenario", str(moments_toml),
                     "--out", str(out), "--kappas", "1e3,1e4"])
        assert code == EXIT_OK
        rows = (out / "damping_scan.csv").read_text().splitlines()
        assert rows[0] == "kappa_m_hz,N_a_final"
        na = [float(r.split(",")[1]) for r in rows[1:]]
        assert na[0] > na[1]


class TestSolverFailureExit:
    def test_integration_error_maps_to_exit_3(self, tmp_path, moments_toml,
                                              monkeypatch):
        from magnomem import cli
        from magnomem.dynamics import IntegrationError

        def boom(*a, **kw):
            raise IntegrationError("step size underflow at t = 0")

        monkeypatch.setattr(cli, "run_scenario", boom)
        code = main(["simulate", "--scenario", str(moments_toml),
                     "--out", str(tmp_path / "x")])
        assert code == EXIT_SOLVER


class TestFigure:
    def test_unknown_preset(self, tmp_path):
        code = main(["figure", "--preset", "fig42", "--out", str(tmp_path)])
        assert code == EXIT_VALIDATION

    def test_fig1b_smoke(self, tmp_path):
        out = tmp_path / "f"
        assert main(["figure", "--preset", "fig1b", "--out", str(out)]) == EXIT_OK
        assert (out / "manifest.json").exists()


class TestVersion:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.strip()

import json
import math

import pytest

from magnomem.scenario import Scenario, ScenarioError, load_scenario

GOOD = """
label = "demo"

[params]
kappa_m_wb = 1e-3
kappa_b_wb = 1e-5
T_bath_k = 1e-3

[initial_state]
type = "coherent"
alpha = 1.0

[solver]
method = "lindblad"
cutoff_a = 6
cutoff_m = 4
cutoff_b = 6
rtol = 1e-7

[grid]
t_start_wb = -1800.0
t_end_wb = 1300.0
n_output = 61
"""


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadScenario:
    def test_good_file(self, tmp_path):
        sc = load_scenario(write(tmp_path, GOOD))
        assert sc.label == "demo"
        assert sc.solver == "lindblad"
        assert sc.cutoffs == (6, 4, 6)
        assert sc.initial_state.kind == "coherent"
        assert sc.initial_state.alpha == 1.0
        assert sc.params.T_bath == 1e-3
        assert sc.rwa is True
        assert sc.n_output == 61

    def test_internal_units_rate(self, tmp_path):
        sc = load_scenario(write(tmp_path, GOOD))
        assert sc.resolved_dict()["params_internal"]["kappa_m"] == pytest.approx(1e-3, rel=1e-12)

    def test_hz_rate_equivalent(self, tmp_path):
        hz = GOOD.replace("kappa_m_wb = 1e-3", "kappa_m_hz = 10e3")
        sc = load_scenario(write(tmp_path, hz))
        assert sc.resolved_dict()["params_internal"]["kappa_m"] == pytest.approx(1e-3, rel=1e-12)

    def test_seconds_time_equivalent(self, tmp_path):
        s = GOOD.replace("t_end_wb = 1300.0", "t_end_s = 1.3e-4")
        sc = load_scenario(write(tmp_path, s))
        assert sc.t_end == pytest.approx(1300.0, rel=1e-12)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="not found"):
            load_scenario(tmp_path / "nope.toml")

    def test_bad_toml(self, tmp_path):
        with pytest.raises(ScenarioError, match="parse error"):
            load_scenario(write(tmp_path, "[params\n"))

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ScenarioError, match="pulse_shapes"):
            load_scenario(write(tmp_path, GOOD + "\n[pulse_shapes]\nx = 1\n"))

    def test_unknown_key_named(self, tmp_path):
        bad = GOOD.replace("kappa_m_wb = 1e-3",
                           "kappa_m_wb = 1e-3\nkapa_b_wb = 1e-5")
        with pytest.raises(ScenarioError, match="kapa_b_wb"):
            load_scenario(write(tmp_path, bad))

    def test_conflicting_suffixes(self, tmp_path):
        bad = GOOD.replace("kappa_m_wb = 1e-3",
                           "kappa_m_wb = 1e-3\nkappa_m_hz = 10e3")
        with pytest.raises(ScenarioError, match="kappa_m"):
            load_scenario(write(tmp_path, bad))

    def test_negative_rate_names_key(self, tmp_path):
        bad = GOOD.replace("kappa_b_wb = 1e-5", "kappa_b_wb = -1e-5")
        with pytest.raises(ScenarioError, match="kappa_b"):
            load_scenario(write(tmp_path, bad))

    def test_grid_must_cover_pulses(self, tmp_path):
        bad = GOOD.replace("t_start_wb = -1800.0", "t_start_wb = 0.0")
        with pytest.raises(ScenarioError, match="grid"):
            load_scenario(write(tmp_path, bad))

    def test_defaults(self, tmp_path):
        sc = load_scenario(write(tmp_path, "[grid]\nt_start_wb = -1800.0\n"
                                           "t_end_wb = 1800.0\n"))
        assert sc.solver == "lindblad"
        assert sc.initial_state.kind == "fock"
        assert sc.schedule.Omega0 == pytest.approx(0.1)
        assert sc.schedule.t_c2 == pytest.approx(612.2)


class TestResolvedMetadata:
    def test_round_trips_through_json(self, tmp_path):
        sc = load_scenario(write(tmp_path, GOOD))
        out = tmp_path / "meta.json"
        sc.dump_metadata(out, extra={"exit": "ok"})
        meta = json.loads(out.read_text())
        assert meta["label"] == "demo"
        assert meta["exit"] == "ok"
        assert meta["params_internal"]["kappa_m"] == pytest.approx(1e-3)
        assert meta["schedule"]["t_c1"] == pytest.approx(-612.2)
        assert meta["grid"]["n_output"] == 61

    def test_bath_occupation_echoed(self, tmp_path):
        sc = load_scenario(write(tmp_path, GOOD))
        meta = sc.resolved_dict()
        assert meta["bath_occupations"]["n_b"] == pytest.approx(
            1.6235029143858473, rel=1e-10)


class TestWithDelay:
    def test_shifts_second_pulse_and_grid(self, tmp_path):
        sc = load_scenario(write(tmp_path, GOOD))
        shifted = sc.with_delay(500.0)
        assert shifted.schedule.delta_t == pytest.approx(500.0)
        assert shifted.t_end == pytest.approx(sc.t_end + 500.0)
        # original untouched
        assert sc.schedule.delta_t == 0.0

import math

import numpy as np
import pytest

from magnomem.units import (GAMMA_GYRO, PhysicalParams, UnitsError,
                            bath_occupations, from_internal_units,
                            thermal_occupation, time_from_internal,
                            time_to_internal, to_internal_units)

HBAR = 6.62607015e-34 / (2 * math.pi)
KB = 1.380649e-23


def make_params(**kw):
    base = dict(omega_a=2 * math.pi * 10e9, omega_m=2 * math.pi * 10e9,
                omega_b=2 * math.pi * 10e6, kappa_a=0.0,
                kappa_m=2 * math.pi * 10e3, kappa_b=2 * math.pi * 100.0,
                T_bath=1e-3)
    base.update(kw)
    return PhysicalParams(**base)


class TestThermalOccupation:
    def test_phonon_at_millikelvin(self):
        # 10 MHz mode at 1 mK sits near 1.6 thermal quanta
        assert thermal_occupation(2 * math.pi * 10e6, 1e-3) == pytest.approx(
            1.6235029143858473, rel=1e-12)

    def test_gigahertz_mode_is_frozen_out(self):
        # hbar*omega/kT ~ 480, so the occupation is ~1.6e-209
        assert thermal_occupation(2 * math.pi * 10e9, 1e-3) < 1e-200

    def test_zero_temperature(self):
        assert thermal_occupation(1.0, 0.0) == 0.0

    def test_nonpositive_frequency_rejected(self):
        with pytest.raises(ValueError):
            thermal_occupation(0.0, 1e-3)
        with pytest.raises(ValueError):
            thermal_occupation(-1.0, 1e-3)

    def test_against_independent_evaluation(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            omega = 10 ** rng.uniform(5, 11)
            T = 10 ** rng.uniform(-4, 0)
            exact = 1.0 / math.expm1(HBAR * omega / (KB * T))
            assert thermal_occupation(omega, T) == pytest.approx(exact,
                                                                 rel=1e-10)

    def test_monotone_in_frequency(self):
        occs = bath_occupations(make_params())
        assert occs.n_a <= occs.n_b and occs.n_m <= occs.n_b


class TestInternalUnits:
    def test_kappa_m_ratio(self):
        ip = to_internal_units(make_params())
        assert ip.kappa_m == pytest.approx(1e-3, rel=1e-12)
        assert ip.kappa_b == pytest.approx(1e-5, rel=1e-12)

    def test_omega_b_maps_to_one(self):
        ip = to_internal_units(make_params())
        assert ip.omega_b == 1.0

    def test_round_trip(self):
        p = make_params(g_ma=2 * math.pi * 1e6, g_mb=2 * math.pi * 30.0)
        back = from_internal_units(to_internal_units(p))
        for name in ("omega_a", "omega_m", "omega_b", "g_ma", "g_mb",
                     "kappa_a", "kappa_m", "kappa_b"):
            assert getattr(back, name) == pytest.approx(getattr(p, name),
                                                        rel=1e-12)

    def test_time_conversion(self):
        wb = 2 * math.pi * 10e6
        # one mechanical period <-> one internal time unit
        assert time_to_internal(1e-7, wb) == pytest.approx(1.0, rel=1e-12)
        assert time_from_internal(612.2, wb) == pytest.approx(6.122e-5,
                                                              rel=1e-12)

    def test_validation(self):
        with pytest.raises(UnitsError):
            make_params(omega_b=0.0)
        with pytest.raises(UnitsError):
            make_params(kappa_b=-1.0)
        with pytest.raises(UnitsError):
            make_params(T_bath=-0.1)


def test_gyromagnetic_constant():
    assert GAMMA_GYRO == pytest.approx(2 * math.pi * 28e9)

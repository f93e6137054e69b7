import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levicool.analytics import (
    cooling_limit,
    cooling_power,
    energy_trajectory,
    stationary_mean_occupation,
)
from levicool.constants import HBAR, KB


def test_cooling_power_basic():
    assert cooling_power(0.0, 1e11, 1e-18) == 0.0
    p1 = cooling_power(1e-24, 1e11, 1e-18)
    assert cooling_power(2e-24, 1e11, 1e-18) == pytest.approx(4 * p1)
    with pytest.raises(ValueError):
        cooling_power(-1.0, 1e11, 1e-18)


def test_cooling_power_oracle(diamond_48_53):
    # 40-digit substitution with E = kB * 0.1 K, eta = 1e11 s/m^2
    assert cooling_power(KB * 0.1, 1e11, diamond_48_53.mass) == pytest.approx(-5.323798036007177e-20, rel=1e-12)


def test_cooling_limit_oracle(diamond_48_53):
    c = diamond_48_53
    sol = cooling_limit(c.Edot_T, 1e12, c.mass, c.omega_x)
    assert sol.n_limit == pytest.approx(21.222176936567438, rel=1e-12)
    assert sol.relaxation_rate == pytest.approx(1783.8160222668180, rel=1e-12)
    assert sol.E_limit == pytest.approx(HBAR * c.omega_x * sol.n_limit)


def test_cooling_limit_scaling():
    a = cooling_limit(1e-23, 1e12, 1e-18, 1e6)
    b = cooling_limit(1e-23, 4e12, 1e-18, 1e6)
    assert b.n_limit == pytest.approx(a.n_limit / 2)
    c = cooling_limit(4e-23, 1e12, 1e-18, 2e6)
    # sqrt(Edot / omega^2) is unchanged
    assert c.n_limit == pytest.approx(a.n_limit)
    # E_limit is the fixed point of the energy balance
    assert a.edot - a.eta * a.E_limit ** 2 / (2 * a.m) == pytest.approx(0.0, abs=1e-12 * a.edot)


@pytest.mark.parametrize("bad", [(0, 1, 1, 1), (1, 0, 1, 1), (1, 1, -1, 1), (1, 1, 1, 0)])
def test_cooling_limit_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        cooling_limit(*bad)


def test_stationary_mean():
    sol = cooling_limit(1e-23, 1e12, 1e-18, 1e6)
    assert stationary_mean_occupation(1e-23, 1e12, 1e-18, 1e6) == pytest.approx(math.sqrt(2 / math.pi) * sol.n_limit)


def test_B_singular():
    sol = cooling_limit(1e-23, 1e12, 1e-18, 1e6)
    with pytest.raises(ZeroDivisionError):
        sol.B(math.sqrt(2 * sol.m * sol.edot / sol.eta))
    assert sol.B(10 * sol.E_limit) > 1
    assert sol.B(0.1 * sol.E_limit) < 0


def _rhs(e, edot, eta, m):
    return edot - eta * e ** 2 / (2 * m)


@pytest.mark.parametrize("ratio", [50.0, 3.0, 0.3, 0.0])
def test_energy_trajectory_solves_ode(diamond_48_53, ratio):
    c = diamond_48_53
    edot, eta, m = c.Edot_T, 1e12, c.mass
    sol = cooling_limit(edot, eta, m, c.omega_x)
    ei = ratio * sol.E_limit
    rate = sol.relaxation_rate
    t = np.linspace(0.0, 5.0 / rate, 1000) + 1e-2 / rate
    e = energy_trajectory(ei, t, edot, eta, m)
    # step on the local time scale E / |dE/dt|, five-point central difference
    h = 1e-3 * np.minimum(1.0 / rate, e / np.abs(_rhs(e, edot, eta, m)).clip(1e-300))
    d = (-energy_trajectory(ei, t + 2 * h, edot, eta, m) + 8 * energy_trajectory(ei, t + h, edot, eta, m)
         - 8 * energy_trajectory(ei, t - h, edot, eta, m) + energy_trajectory(ei, t - 2 * h, edot, eta, m)) / (12 * h)
    rhs = _rhs(energy_trajectory(ei, t, edot, eta, m), edot, eta, m)
    scale = np.maximum(np.abs(rhs), edot)
    assert np.max(np.abs(d - rhs) / scale) < 1e-8


def test_energy_trajectory_endpoints(diamond_48_53):
    c = diamond_48_53
    ei = KB * 0.1
    assert energy_trajectory(ei, 0.0, c.Edot_T, 1e12, c.mass) == pytest.approx(ei, rel=1e-13)
    sol = cooling_limit(c.Edot_T, 1e12, c.mass, c.omega_x)
    assert energy_trajectory(ei, 1.0, c.Edot_T, 1e12, c.mass) == pytest.approx(sol.E_limit, rel=1e-12)
    assert energy_trajectory(sol.E_limit * (1 + 1e-16), 0.5, c.Edot_T, 1e12, c.mass) == pytest.approx(sol.E_limit)


def test_energy_trajectory_initial_slope(diamond_48_53):
    c = diamond_48_53
    ei = KB * 0.1
    h = 1e-9
    d = (energy_trajectory(ei, h, c.Edot_T, 1e12, c.mass) - energy_trajectory(ei, 0.0, c.Edot_T, 1e12, c.mass)) / h
    assert d == pytest.approx(_rhs(ei, c.Edot_T, 1e12, c.mass), rel=1e-4)


def test_energy_trajectory_fixed_point_constant():
    edot, eta, m = 1e-23, 1e12, 1e-18
    el = math.sqrt(2 * m * edot / eta)
    t = np.linspace(0, 1, 5)
    assert np.all(energy_trajectory(el, t, edot, eta, m) == el)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 100.0).filter(lambda r: abs(r - 1) > 1e-6))
def test_energy_trajectory_monotone(ratio):
    edot, eta, m = 1e-23, 1e12, 1e-18
    el = math.sqrt(2 * m * edot / eta)
    rate = math.sqrt(eta * edot / (2 * m))
    t = np.linspace(0, 20 / rate, 400)
    e = energy_trajectory(ratio * el, t, edot, eta, m)
    diffs = np.diff(e)
    if ratio > 1:
        assert np.all(diffs <= 1e-15 * el)
        assert np.all(e >= el * (1 - 1e-12))
    else:
        assert np.all(diffs >= -1e-15 * el)
        assert np.all(e <= el * (1 + 1e-12))


def test_energy_trajectory_rejects_negative():
    with pytest.raises(ValueError):
        energy_trajectory(-1.0, 0.0, 1, 1, 1)

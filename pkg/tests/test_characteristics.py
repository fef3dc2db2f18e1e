import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogarch_symbol import (AtomicMeasure, CogarchParams, LevyTriplet, SamplePath, StatePoint,
                            compensator_rate, differential_characteristics, drift_coefficients,
                            empirical_characteristics_check, evolve_volatility_between_jumps,
                            integrate_characteristics, integrated_variance, simulate_path)
from cogarch_symbol.characteristics import _integrated_compensator, _validate_rect
from conftest import atom_params, brownian_params, quiet_params
from test_symbol import density_params


def test_no_jump_coefficients():
    p = brownian_params(drift=0.4)
    ch = differential_characteristics(StatePoint(0, 0.5), p)
    assert ch.drift[0] == pytest.approx(0.4 * math.exp(0.25), rel=1e-15)
    assert ch.drift[1] == pytest.approx(math.exp(-0.5) + math.log(0.5), rel=1e-15)
    assert ch.diffusion[0, 0] == pytest.approx(math.exp(0.5))
    assert ch.diffusion[0, 1] == ch.diffusion[1, 0] == ch.diffusion[1, 1] == 0.0


def test_boundary_atom_excluded():
    p = CogarchParams(1.0, 0.5, 0.25, LevyTriplet(0, 0, AtomicMeasure(((1.0, 1.0),))))
    ch = differential_characteristics(StatePoint(0, 0), p)
    assert ch.drift[1] == 1.0 + math.log(0.5)
    assert ch.drift[0] == 0.0


@pytest.mark.parametrize("make", [brownian_params, atom_params, density_params])
def test_g_independence_and_rank(make):
    p = make()
    a = differential_characteristics(StatePoint(-7.0, 0.3), p)
    b = differential_characteristics(StatePoint(4.0, 0.3), p)
    assert np.array_equal(a.drift, b.drift) and np.array_equal(a.diffusion, b.diffusion)
    assert np.linalg.matrix_rank(a.diffusion) <= 1 and np.all(np.linalg.eigvalsh(a.diffusion) >= 0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2))
def test_shared_code_path_with_symbol(v):
    p = atom_params()
    b1, b2, _ = drift_coefficients(v, p)
    ch = differential_characteristics(StatePoint(0, v), p)
    assert abs(ch.drift[0] - b1) <= 1e-12 and abs(ch.drift[1] - b2) <= 1e-12


def test_zero_duration_path():
    path = SamplePath(StatePoint(0, 0), np.array([0.0]), np.zeros(1), np.zeros(1), np.zeros(1, bool),
                      np.zeros(1), (), None)
    ch = integrate_characteristics(path, brownian_params())
    assert ch.B1.tolist() == ch.B2.tolist() == ch.C11.tolist() == [0.0]


def test_deterministic_b2_is_v_increment():
    p = quiet_params(beta=1.0, delta=0.5, lam=0.25)
    path = simulate_path(StatePoint(0, -0.7), p, 2.0, 0.05, None, seed=0)
    ch = integrate_characteristics(path, p)
    assert np.max(np.abs(ch.B2 - (path.v - path.v[0]))) <= 1e-8
    assert np.all(ch.B1 == 0) and np.all(ch.C11 == 0)


def test_brownian_c11_closed_form():
    p = brownian_params(lam=0.0)
    path = simulate_path(StatePoint(0, 0.4), p, 1.0, 0.1, None, seed=3)
    ch = integrate_characteristics(path, p)
    assert ch.C11[-1] == pytest.approx(integrated_variance(0.4, 1.0, p), rel=1e-12)


def test_compensator_rate_atom():
    p = atom_params()
    # atom 0.5 maps to (0.5 e^{v/2}, log 1.125) ~ (0.5, 0.118) at v=0
    assert compensator_rate(0.0, (0.45, 0.6, 0.1, 0.15), p) == 2.0
    assert compensator_rate(1.0, (0.45, 0.6, 0.1, 0.15), p) == 0.0


def test_integrated_compensator_occupation():
    p = atom_params()
    # start v=0.3 decays toward v_eq; count time with e^{v/2} * 0.5 in [0.5, 0.6]
    v0, dt = 0.3, 0.5
    exact = _integrated_compensator(np.array([v0]), np.array([dt]), (0.5, 0.6, 0.1, 0.15), p)[0]
    s = np.linspace(0, dt, 200_001)
    v = evolve_volatility_between_jumps(v0, s, p)
    inside = (0.5 * np.exp(v / 2) >= 0.5) & (0.5 * np.exp(v / 2) <= 0.6)
    assert exact == pytest.approx(2.0 * inside.mean() * dt, abs=1e-4)


def test_density_compensator_rate_vs_mass():
    p = density_params()
    rate = compensator_rate(0.0, (0.5, 5.0, -0.5, 5.0), p)
    m = p.driver.measure
    ref, _ = m.integrate(lambda y: ((y >= 0.5) & (y <= 5.0)).astype(float), breakpoints=(0.5, 5.0))
    assert float(rate) == pytest.approx(ref, rel=1e-7)


def test_rectangle_validation():
    with pytest.raises(ValueError):
        _validate_rect((-0.1, 0.1, -0.1, 0.1))
    with pytest.raises(ValueError):
        _validate_rect((0.5, 1.0 + 1e-7, 0.1, 0.2))
    with pytest.raises(ValueError):
        _validate_rect((0.6, 0.5, 0.1, 0.2))


def test_empirical_check_no_jumps():
    rep = empirical_characteristics_check(brownian_params(), StatePoint(0, 0), 0.5, 4096, 0,
                                          [(0.2, 0.5, 0.0, 0.5)])
    jumps = [c for c in rep.checks if c["name"].startswith("jumps")][0]
    assert jumps["mean_count"] == 0 and jumps["mean_compensator"] == 0
    assert rep.passed


def test_empirical_check_deterministic():
    p = quiet_params(beta=1.0, delta=0.5, lam=0.25)
    rep = empirical_characteristics_check(p, StatePoint(0, 0.2), 1.0, 64, 0, chunk_size=64)
    for c in rep.checks:
        assert abs(c["mean_difference"]) <= 1e-8 and c["ok"]


def test_empirical_check_atom():
    rects = [(0.45, 0.6, 0.1, 0.15), (0.5, 0.53, 0.1, 0.15), (-0.6, -0.4, 0.1, 0.15)]
    rep = empirical_characteristics_check(atom_params(), StatePoint(0, 0), 0.5, 10_000, 1, rects)
    assert rep.passed, rep.checks
    assert rep.checks[-1]["mean_count"] == 0

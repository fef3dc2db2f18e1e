import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogarch_symbol import (CogarchParams, LevyTriplet, StatePoint, cogarch_symbol, compare,
                            estimate_symbol, r_independence_check, sde_symbol, characteristic_exponent)
from cogarch_symbol.cogarch import simulate_chunk
from cogarch_symbol.mc import _fit_channel, _symbol_samples
from conftest import atom_params, brownian_params, quiet_params


def test_zero_driver_limit_and_zero_variance():
    p = quiet_params(beta=1.0, delta=0.5, lam=0.25)
    x = StatePoint(0, 0.3)
    r = estimate_symbol(x, (0.7, 1.2), p, n_paths=64, chunk_size=32)
    assert r.stderr == (0.0, 0.0)
    for _, _, se in r.t_ladder:
        assert se == (0.0, 0.0)
    ref = cogarch_symbol(x, (0.7, 1.2), p).value
    assert abs(r.estimate - ref) < 1e-6


def test_zero_frequency():
    r = estimate_symbol(StatePoint(0, 0), (0.0, 0.0), brownian_params(), n_paths=256)
    assert r.estimate == 0 and r.stderr == (0.0, 0.0)


def test_brownian_unit_frequency(brownian, origin):
    r = estimate_symbol(origin, (1.0, 0.0), brownian, n_paths=100_000, seed=2)
    cmp = compare(r.estimate, r.stderr, cogarch_symbol(origin, (1.0, 0.0), brownian).value)
    assert cmp["ok"], cmp
    assert r.extrapolated and r.antithetic and len(r.t_ladder) == 3


def test_frozen_regression_value(atom, origin):
    r = estimate_symbol(origin, (1.0, -0.5), atom, n_paths=8192, seed=123)
    assert r.estimate.real == pytest.approx(0.15902507675260688, abs=1e-12)
    assert r.estimate.imag == pytest.approx(0.42798814392812873, abs=1e-12)
    assert r.stderr[0] == pytest.approx(0.03999873572138832, rel=1e-9)


def test_seed_determinism(atom, origin):
    a = estimate_symbol(origin, (1.5, 0.5), atom, n_paths=4096, seed=9)
    b = estimate_symbol(origin, (1.5, 0.5), atom, n_paths=4096, seed=9)
    assert a == b
    c = estimate_symbol(origin, (1.5, 0.5), atom, n_paths=4096, seed=10)
    assert c.estimate != a.estimate


def test_stderr_scales_like_inverse_root_n(atom, origin):
    s1 = estimate_symbol(origin, (1.0, 1.0), atom, n_paths=20_000, seed=1).t_ladder[0][2][0]
    s2 = estimate_symbol(origin, (1.0, 1.0), atom, n_paths=40_000, seed=2).t_ladder[0][2][0]
    assert s2 / s1 == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_single_ladder_time_is_raw_mean(atom, origin):
    r = estimate_symbol(origin, (1.0, 0.0), atom, t_ladder=(0.01,), n_paths=2048)
    assert not r.extrapolated and r.estimate == r.t_ladder[0][1]


def test_r_independence_deterministic_exact():
    p = quiet_params(beta=1.0, delta=0.5, lam=0.25)
    rep = r_independence_check(StatePoint(0, 0), (0.5, 1.0), p, [1.0, 2.0, 5.0], n_paths=32, chunk_size=32)
    ests = {r.estimate for r in rep.results.values()}
    assert len(ests) == 1 and rep.passed


def test_brownian_r_independence(brownian, origin):
    rep = r_independence_check(origin, (1.0, 1.0), brownian, [1.0, 5.0], n_paths=40_000, seed=4)
    assert rep.passed, rep.pairs


def test_small_radius_still_consistent_in_limit(brownian, origin):
    # R=0.05 bites at the coarse ladder times; the extrapolated limit is unaffected.
    ladder = (0.0008, 0.0004, 0.0002)
    r = estimate_symbol(origin, (1.0, 0.0), brownian, R=0.05, t_ladder=ladder, n_paths=100_000, seed=8)
    big = estimate_symbol(origin, (1.0, 0.0), brownian, R=0.05, n_paths=20_000, seed=8)
    assert compare(r.estimate, r.stderr, 0.5)["ok"]
    assert big.t_ladder[0][1].real < 0.45   # raw values at t=0.02 are visibly damped


def test_degenerate_case_matches_sde_symbol():
    p = brownian_params(lam=0.0)
    x = StatePoint(0.0, p.stationary_log_variance)
    r = estimate_symbol(x, (1.2, 0.0), p, n_paths=60_000, seed=3)
    ref = sde_symbol(lambda s: np.array([[math.exp(s[1] / 2)], [0.0]]),
                     lambda a: characteristic_exponent(p.driver, a), list(x), [1.2, 0.0])
    assert compare(r.estimate, r.stderr, ref)["ok"]


def test_raw_sample_bound_asserted(brownian):
    b = simulate_chunk(StatePoint(0, 0), brownian, 0.02, 0.005, 100, 0, obs_times=(0.02,))
    vals = _symbol_samples((3.0, 2.0), 0.0)(b, 0.02)
    assert np.all(np.hypot(*vals) <= 2 / 0.02 * (1 + 1e-12))


def test_compare_semantics():
    assert compare(1.0 + 1j, (0.1, 0.1), 1.25 + 1j)["ok"]
    assert not compare(1.0 + 1j, (0.1, 0.1), 1.35 + 1j)["ok"]
    out = compare(1.0 + 0j, (0.0, 0.0), 1.0 + 5e-7j)
    assert out["ok"] and out["z"][0] == 0.0 and out["z"][1] <= 3
    bad = compare(1.0, (0.0, 0.0), 1.1)
    assert not bad["ok"] and bad["z"][0] > 3
    assert math.isinf(compare(1.0, (0.0, 0.0), 1.1, atol=0.0)["z"][0])


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_quadratic_fit_recovers_intercept(c0, c1, c2):
    t = np.array([0.02, 0.01, 0.005])
    m = c0 + c1 * t + c2 * t * t
    n = 100
    fit = _fit_channel(t, m * n, np.outer(m, m) * n, n, order=2)
    assert fit.estimate == pytest.approx(c0, abs=1e-9)
    assert fit.stderr == 0.0

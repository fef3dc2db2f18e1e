import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogarch_symbol import (StatePoint, TestFunction, apply_generator, cogarch_symbol, combine, compare,
                            constant, cutoff_plane_wave, drift_coefficients, gaussian_bump,
                            martingale_residual, semigroup_derivative)
from cogarch_symbol.generator import check_derivatives
from conftest import atom_params, brownian_params, quiet_params
from test_symbol import density_params

LINEAR_G = TestFunction(lambda g, v: g + 0 * v, lambda g, v: (np.ones_like(g + v), np.zeros_like(g + v)),
                        lambda g, v: np.zeros_like(g + v), name="g")
SIN_G = TestFunction(lambda g, v: np.sin(g) + 0 * v, lambda g, v: (np.cos(g) + 0 * v, 0 * (g + v)),
                     lambda g, v: -np.sin(g) + 0 * v, name="sin g")


@pytest.mark.parametrize("make", [brownian_params, atom_params, density_params, quiet_params])
def test_constant_is_annihilated(make):
    assert apply_generator(constant(3.0), StatePoint(0.4, -0.2), make()) == 0.0


def test_linear_in_g():
    assert apply_generator(LINEAR_G, StatePoint(1.0, 0.6), brownian_params()) == 0.0
    val = apply_generator(LINEAR_G, StatePoint(1.0, 0.6), brownian_params(drift=0.3))
    assert val == pytest.approx(0.3 * math.exp(0.3), rel=1e-15)


def test_sin_g_at_origin():
    assert apply_generator(SIN_G, StatePoint(0, 0), brownian_params(drift=0.7)) == pytest.approx(0.7, abs=1e-15)


@pytest.mark.parametrize("f", [gaussian_bump((0.3, -0.2), 0.8, 2.0),
                               cutoff_plane_wave((1.1, -0.7), (0.2, 0.1), 1.0, 2.5, "cos"),
                               cutoff_plane_wave((0.4, 1.3), (0.0, 0.0), 0.5, 1.5, "sin")])
def test_analytic_derivatives(f):
    pts = [[0.1, 0.2], [1.2, -0.4], [-0.9, 1.1], [0.3, -0.2], [1.8, 0.5]]
    assert check_derivatives(f, pts) < 1e-5


@pytest.mark.parametrize("make", [brownian_params, atom_params, density_params])
def test_positive_maximum_principle(make):
    x0 = (0.2, -0.3)
    f = gaussian_bump(x0, 0.6)
    assert apply_generator(f, StatePoint(*x0), make()) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-1, 1), st.floats(-1, 1))
def test_linearity(a, b, g, v):
    p = atom_params()
    f, h = gaussian_bump((0, 0), 0.7), cutoff_plane_wave((1.0, 0.5), (0, 0), 1.0, 2.0)
    x = StatePoint(g, v)
    lhs = apply_generator(combine(a, f, b, h), x, p)
    rhs = a * apply_generator(f, x, p) + b * apply_generator(h, x, p)
    assert lhs == pytest.approx(rhs, abs=1e-10)


@pytest.mark.parametrize("make", [brownian_params, atom_params])
def test_plane_wave_reproduces_symbol(make):
    p = make()
    for x0 in ((0.0, 0.0), (0.4, -0.3)):
        for xi in ((1.0, 0.5), (-1.5, 1.0)):
            x = StatePoint(*x0)
            target = -cogarch_symbol(x, xi, p).value * cmath.exp(1j * (xi[0] * x0[0] + xi[1] * x0[1]))
            cos_u = cutoff_plane_wave(xi, x0, 3.0, 6.0, "cos")
            sin_u = cutoff_plane_wave(xi, x0, 3.0, 6.0, "sin")
            assert apply_generator(cos_u, x, p) == pytest.approx(target.real, abs=1e-10)
            assert apply_generator(sin_u, x, p) == pytest.approx(target.imag, abs=1e-10)


def test_semigroup_constant_exact(brownian, origin):
    r = semigroup_derivative(constant(2.0), origin, brownian, n_paths=256)
    assert r.estimate == 0 and r.stderr == (0.0, 0.0)


def test_semigroup_deterministic_chain_rule():
    p = quiet_params(beta=1.0, delta=0.5, lam=0.25)
    f = gaussian_bump((0.0, 0.5), 1.0)
    x = StatePoint(0.2, -0.1)
    _, b2, _ = drift_coefficients(x.v, p)
    d1, d2 = f.grad(np.float64(x.g), np.float64(x.v))
    r = semigroup_derivative(f, x, p, n_paths=32, chunk_size=32)
    assert r.estimate.real == pytest.approx(float(b2 * d2), abs=1e-6)


def test_semigroup_brownian_matches_generator(brownian):
    f = gaussian_bump((0.3, 0.0), 1.0)
    x = StatePoint(0.0, 0.0)
    r = semigroup_derivative(f, x, brownian, n_paths=100_000, seed=5)
    assert compare(r.estimate, r.stderr, complex(apply_generator(f, x, brownian)))["ok"]


def test_martingale_residual_constant_exact(atom, origin):
    assert martingale_residual(constant(1.0), origin, atom, 0.5, n_paths=512) == (0.0, 0.0)


def test_martingale_residual_deterministic():
    p = quiet_params(beta=1.0, delta=0.5, lam=0.25)
    mean, se = martingale_residual(gaussian_bump((0.0, 0.4), 0.8), StatePoint(0, -0.5), p, 0.5,
                                   n_paths=16, chunk_size=16, step=0.0005)
    assert abs(mean) <= 1e-8 and se == 0.0


def test_martingale_residual_brownian(brownian):
    mean, se = martingale_residual(gaussian_bump((0.0, 0.0), 1.0), StatePoint(0, 0), brownian, 0.5,
                                   n_paths=100_000, seed=1)
    assert abs(mean) <= 3 * se


def test_martingale_residual_rejects_nonpositive_t(brownian, origin):
    with pytest.raises(ValueError):
        martingale_residual(constant(), origin, brownian, 0.0)

import cmath
import json
import math
from pathlib import Path

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogarch_symbol import (AtomicMeasure, CogarchParams, DensityMeasure, LevyTriplet, StatePoint,
                            characteristic_exponent, cogarch_symbol, differential_characteristics,
                            drift_coefficients, f_v, image_measure, integrate_against_image,
                            positive_definiteness_margin, sde_symbol)
from cogarch_symbol.config import tempered_stable_density
from cogarch_symbol.symbol import jump_part
from conftest import atom_params, brownian_params

ORACLE = json.loads((Path(__file__).parent / "oracles" / "cp_symbol.json").read_text())


def test_f_v_examples():
    p = CogarchParams(1.0, 0.5, 0.25)
    assert tuple(map(float, f_v(0.0, 0.3, p))) == (0.0, 0.0)
    z1, z2 = f_v(1.0, 0.0, p)
    assert float(z1) == 1.0 and float(z2) == pytest.approx(math.log(1.5), abs=1e-16)
    assert f_v(-0.7, 0.2, p)[1] == f_v(0.7, 0.2, p)[1]


def test_pullback_single_atom():
    p = CogarchParams(1.0, 0.5, 0.25, LevyTriplet(0, 0, AtomicMeasure(((1.0, 2.0),))))
    spec = image_measure(StatePoint(0, 0), p)
    assert integrate_against_image(lambda z1, z2: z1, spec)[0] == 2.0
    assert integrate_against_image(lambda z1, z2: 0.0 * z1, spec)[0] == 0.0


def test_pullback_equals_direct_sum_over_mapped_atoms():
    atoms = ((0.3, 1.5), (-1.2, 0.7), (2.5, 0.2))
    p = CogarchParams(1.0, 0.4, 0.3, LevyTriplet(0, 0, AtomicMeasure(atoms)))
    v = 0.37
    h = lambda z1, z2: (z1 ** 2 - 3 * z2) * (np.abs(z1) < 1.0)
    direct = 0.0
    for y, r in atoms:
        z1, z2 = math.exp(v / 2) * y, math.log1p(p.kappa * y * y)
        direct += r * (z1 ** 2 - 3 * z2) * (abs(z1) < 1.0)
    assert integrate_against_image(h, image_measure(StatePoint(0, v), p))[0] == pytest.approx(direct, abs=1e-15)


def test_brownian_closed_form(brownian):
    for v in (-1.0, 0.0, 0.8):
        for xi in ((1.0, 0.0), (-2.0, 1.5), (0.5, -1.0)):
            p = cogarch_symbol(StatePoint(0, v), xi, brownian).value
            ref = 0.5 * xi[0] ** 2 * math.exp(v) - 1j * xi[1] * (math.exp(-v) + math.log(0.5))
            assert p == pytest.approx(ref, abs=1e-15)


def test_boundary_atom_hand_value():
    p = CogarchParams(1.0, 0.5, 0.25, LevyTriplet(0, 0, AtomicMeasure(((1.0, 1.0),))))
    val = cogarch_symbol(StatePoint(0, 0), (1.0, 1.0), p).value
    ref = -1j * (1.0 + math.log(0.5)) - (cmath.exp(1j * (1.0 + math.log(1.5))) - 1.0)
    assert val == pytest.approx(ref, abs=1e-15)


def test_compound_poisson_oracle_table(atom):
    for v, a, b, re, im in ORACLE["rows"]:
        val = cogarch_symbol(StatePoint(0, v), (a, b), atom).value
        assert val.real == pytest.approx(re, abs=1e-13)
        assert val.imag == pytest.approx(im, abs=1e-13)


def test_zero_frequency_and_g_independence(atom, brownian):
    for prm in (atom, brownian):
        assert cogarch_symbol(StatePoint(3, 0.2), (0, 0), prm).value == 0
        vals = {cogarch_symbol(StatePoint(g, 0.4), (1.3, -0.6), prm).value for g in (-10.0, 0.0, 10.0)}
        assert len(vals) == 1


def density_params(alpha=0.8):
    m = DensityMeasure(tempered_stable_density(alpha, 1.0, 0.7, 1.5, 1.0), alpha, (-30.0, 30.0))
    return CogarchParams(1.0, 0.6, 0.3, LevyTriplet(0.1, 0.2, m))


def test_density_jump_part_vs_mpmath():
    p = density_params()
    v, xi1, xi2 = 0.3, 0.7, -0.4
    kap = p.kappa
    alpha = 0.8

    def n(y):
        return (mpmath.exp(-1.5 * y) if y > 0 else 0.7 * mpmath.exp(y)) * abs(y) ** (-1 - alpha)

    def h(y):
        z1 = mpmath.exp(v / 2) * y
        z2 = mpmath.log(1 + kap * y * y)
        th = xi1 * z1 + xi2 * z2
        comp = th if (abs(z1) < 1 and abs(z2) < 1) else 0
        return (mpmath.expj(th) - 1 - 1j * comp) * n(y)

    b = [1.0, math.exp(-v / 2), math.sqrt(math.expm1(1.0) / kap)]
    pts = sorted({0.0, *b, *(-x for x in b), -30.0, 30.0})
    mpmath.mp.dps = 20
    ref = complex(mpmath.quad(h, pts))
    val, err = jump_part(v, (xi1, xi2), p)
    assert val == pytest.approx(ref, abs=1e-8)


def test_symbol_matches_characteristics_triplet(atom, brownian):
    for prm in (atom, brownian, density_params()):
        x = StatePoint(0.0, 0.25)
        ch = differential_characteristics(x, prm)
        b1, b2, _ = drift_coefficients(x.v, prm)
        assert (ch.drift[0], ch.drift[1]) == (float(b1), float(b2))
        xi = (0.9, -1.1)
        p = cogarch_symbol(x, xi, prm).value
        jump, _ = jump_part(x.v, xi, prm)
        rebuilt = (-1j * (xi[0] * ch.drift[0] + xi[1] * ch.drift[1])
                   + 0.5 * xi[0] ** 2 * ch.diffusion[0, 0] - jump)
        assert p == pytest.approx(rebuilt, abs=1e-12)


def test_sde_symbol_examples():
    tr = LevyTriplet(0.2, 1.0, AtomicMeasure(((0.5, 1.0),)))
    psi = lambda a: characteristic_exponent(tr, a)
    assert sde_symbol(lambda x: np.eye(1), psi, [0.3], [1.7]) == psi(1.7)
    assert sde_symbol(lambda x: np.eye(1), psi, [0.3], [0.0]) == 0
    bm = lambda a: characteristic_exponent(LevyTriplet(0, 1.0), a)
    phi = lambda x: np.array([[math.exp(x[1] / 2)], [0.0]])
    val = sde_symbol(phi, bm, [0.0, 0.6], [1.3, 0.0])
    assert val == pytest.approx(0.5 * math.exp(0.6) * 1.3 ** 2, rel=1e-14)
    q_term = cogarch_symbol(StatePoint(0, 0.6), (1.3, 0.0), brownian_params(lam=0.0)).value.real
    assert val == pytest.approx(q_term, rel=1e-14)
    with pytest.raises(ValueError):
        sde_symbol(lambda x: np.eye(2), psi, [0.0, 0.0], [1.0])


frequencies = st.tuples(st.floats(-4, 4), st.floats(-4, 4))


@settings(max_examples=40, deadline=None)
@given(frequencies, st.floats(-2, 2), st.floats(0.05, 3), st.floats(0.01, 5), st.floats(0.0, 1.0))
def test_hermitian_symmetry_and_real_part(xi, v, size, rate, lam):
    p = CogarchParams(1.0, 0.5, lam, LevyTriplet(0.3, 0.5, AtomicMeasure(((size, rate), (-size / 2, rate)))))
    a = cogarch_symbol(StatePoint(0, v), xi, p).value
    b = cogarch_symbol(StatePoint(0, v), (-xi[0], -xi[1]), p).value
    assert b == pytest.approx(a.conjugate(), abs=1e-12)
    assert a.real >= -1e-12


@pytest.mark.parametrize("make", [brownian_params, atom_params, density_params])
def test_negative_definiteness(make):
    pts = np.array([[0, 0], [0.5, -0.3], [-1.0, 0.8], [1.5, 1.0], [-0.4, -1.2]])
    for v in (-0.5, 0.5):
        assert positive_definiteness_margin(StatePoint(0, v), pts, make(), t=0.1) >= -1e-8

"""Extended generator of the COGARCH pair on bounded C^2 test functions, and its MC checks.

The generator is applied in the form

    Gu(x) = b1(v) d1u + b2(v) d2u + 1/2 e^v Q d11u
            + int (u(x + z) - u(x) - z . grad u(x) 1{|z1|<1} 1{|z2|<1}) Ntilde(x, dz)

with ``b1, b2`` shared with :mod:`cogarch_symbol.symbol`, so that
``G exp(i x.xi) = -p(x, xi) exp(i x.xi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cogarch import CogarchParams, StatePoint, simulate_chunk
from .levy import AtomicMeasure
from .mc import DEFAULT_LADDER, EstimatorResult, run_ladder
from .quadrature import ABS_TOL, REL_TOL
from .rng import DEFAULT_CHUNK, fsum_arrays, map_chunks
from .symbol import ImageMeasureSpec, _inner_indicator, drift_coefficients, f_v

Fn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """A bounded C^2 function of ``(g, v)`` with analytic first and d11 derivatives.

    ``grad(g, v)`` returns the pair ``(d1u, d2u)``; all callables are
    vectorised over arrays of ``g`` and ``v``.
    """

    u: Fn
    grad: Callable
    hess11: Fn
    support_radius: float = math.inf
    name: str = "u"

    __test__ = False  # not a pytest class

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return combine(1.0, self, 1.0, other)


def combine(a: float, f: TestFunction, b: float, h: TestFunction) -> TestFunction:
    """The test function ``a f + b h``."""
    def grad(g, v):
        f1, f2 = f.grad(g, v)
        h1, h2 = h.grad(g, v)
        return a * f1 + b * h1, a * f2 + b * h2

    return TestFunction(lambda g, v: a * f.u(g, v) + b * h.u(g, v), grad,
                        lambda g, v: a * f.hess11(g, v) + b * h.hess11(g, v),
                        max(f.support_radius, h.support_radius), f"{a}*{f.name}+{b}*{h.name}")


def constant(c: float = 1.0) -> TestFunction:
    zero = lambda g, v: np.zeros(np.broadcast(g, v).shape)
    return TestFunction(lambda g, v: c + zero(g, v), lambda g, v: (zero(g, v), zero(g, v)), zero,
                        name=f"const({c})")


def gaussian_bump(center=(0.0, 0.0), width: float = 1.0, amplitude: float = 1.0) -> TestFunction:
    """``amplitude * exp(-|x - center|^2 / (2 width^2))``."""
    c1, c2 = map(float, center)
    s2 = float(width) ** 2

    def u(g, v):
        return amplitude * np.exp(-((g - c1) ** 2 + (v - c2) ** 2) / (2.0 * s2))

    def grad(g, v):
        e = u(g, v)
        return -(g - c1) / s2 * e, -(v - c2) / s2 * e

    def hess11(g, v):
        return ((g - c1) ** 2 / s2 - 1.0) / s2 * u(g, v)

    return TestFunction(u, grad, hess11, 6.0 * width, f"bump({c1},{c2};{width})")


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s), 30.0 * s * s * (1.0 - s) ** 2, \
        60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)


def cutoff_plane_wave(xi, center=(0.0, 0.0), r_in: float = 2.0, r_out: float = 4.0,
                      kind: str = "cos") -> TestFunction:
    """``cos(x.xi)`` or ``sin(x.xi)`` times a C^2 cutoff equal to 1 on ``|x - center| <= r_in``."""
    if kind not in ("cos", "sin"):
        raise ValueError("kind must be 'cos' or 'sin'")
    if not 0.0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")
    x1, x2 = map(float, xi)
    c1, c2 = map(float, center)
    width = r_out - r_in

    def wave(g, v):
        th = x1 * g + x2 * v
        if kind == "cos":
            return np.cos(th), -np.sin(th)
        return np.sin(th), np.cos(th)

    def chi(g, v):
        d1, d2 = g - c1, v - c2
        r = np.hypot(d1, d2)
        s0, s1, s2 = _smoothstep((r - r_in) / width)
        val = 1.0 - s0
        dr = -s1 / width
        ddr = -s2 / width ** 2
        # chi is flat on r <= r_in, which also keeps 1/r away from 0.
        ramp = r > r_in
        safe = np.where(ramp, r, 1.0)
        c_1 = np.where(ramp, dr * d1 / safe, 0.0)
        c_2 = np.where(ramp, dr * d2 / safe, 0.0)
        c_11 = np.where(ramp, ddr * d1 ** 2 / safe ** 2 + dr * (1.0 / safe - d1 ** 2 / safe ** 3), 0.0)
        return val, c_1, c_2, c_11

    def u(g, v):
        return chi(g, v)[0] * wave(g, v)[0]

    def grad(g, v):
        w, dw = wave(g, v)
        c, c1_, c2_, _ = chi(g, v)
        return c * x1 * dw + w * c1_, c * x2 * dw + w * c2_

    def hess11(g, v):
        w, dw = wave(g, v)
        c, c1_, _, c11 = chi(g, v)
        return c * (-x1 * x1 * w) + 2.0 * c1_ * x1 * dw + w * c11

    return TestFunction(u, grad, hess11, r_out, f"{kind}(x.{tuple(xi)})")


def check_derivatives(f: TestFunction, points, rtol: float = 1e-5, h: float = 1e-4) -> float:
    """Largest relative mismatch between analytic and central-difference derivatives."""
    worst = 0.0
    for g, v in np.atleast_2d(points):
        d1, d2 = (float(a) for a in f.grad(np.float64(g), np.float64(v)))
        n1 = (f.u(g + h, v) - f.u(g - h, v)) / (2 * h)
        n2 = (f.u(g, v + h) - f.u(g, v - h)) / (2 * h)
        n11 = (f.u(g + h, v) - 2 * f.u(g, v) + f.u(g - h, v)) / h ** 2
        a11 = float(f.hess11(np.float64(g), np.float64(v)))
        scale = max(1.0, abs(d1), abs(d2), abs(a11))
        worst = max(worst, abs(d1 - n1) / scale, abs(d2 - n2) / scale, abs(a11 - n11) / scale)
    return worst


def _jump_term_atomic(f: TestFunction, g, v, params: CogarchParams, d1, d2, u0):
    m = params.driver.measure
    total = np.zeros(np.broadcast(g, v).shape)
    for y, r in m.atoms:
        z1, z2 = f_v(y, v, params)
        inner = _inner_indicator(z1, z2)
        total = total + r * (f.u(g + z1, v + z2) - u0 - np.where(inner, z1 * d1 + z2 * d2, 0.0))
    return total


def generator_values(f: TestFunction, g, v, params: CogarchParams, abs_tol: float = ABS_TOL,
                     rel_tol: float = REL_TOL) -> np.ndarray:
    """``Gu`` at arrays of states; vectorised for atomic driver measures."""
    g = np.asarray(g, dtype=float)
    v = np.asarray(v, dtype=float)
    m = params.driver.measure
    if not isinstance(m, AtomicMeasure) and (g.ndim or v.ndim):
        gg, vv = np.broadcast_arrays(g, v)
        out = [generator_values(f, a, b, params, abs_tol, rel_tol) for a, b in zip(gg.ravel(), vv.ravel())]
        return np.array(out).reshape(gg.shape)
    d1, d2 = f.grad(g, v)
    u0 = f.u(g, v)
    b1, b2, _ = drift_coefficients(v, params, abs_tol, rel_tol)
    out = b1 * d1 + b2 * d2 + 0.5 * np.exp(v) * params.driver.gaussian * f.hess11(g, v)
    if isinstance(m, AtomicMeasure):
        if not m.is_zero:
            out = out + _jump_term_atomic(f, g, v, params, d1, d2, u0)
        return out
    spec = ImageMeasureSpec(m, float(v), params)

    def h(y):
        z1, z2 = f_v(y, v, params)
        comp = np.where(_inner_indicator(z1, z2), z1 * d1 + z2 * d2, 0.0)
        return f.u(g + z1, v + z2) - u0 - comp

    jump, _ = m.integrate(h, breakpoints=spec.breakpoints(), abs_tol=abs_tol, rel_tol=rel_tol)
    return out + float(np.real(jump))


def apply_generator(f: TestFunction, x: StatePoint, params: CogarchParams, abs_tol: float = ABS_TOL,
                    rel_tol: float = REL_TOL) -> float:
    """``Gu(x)`` for a single state."""
    return float(generator_values(f, np.float64(x.g), np.float64(x.v), params, abs_tol, rel_tol))


def semigroup_derivative(f: TestFunction, x: StatePoint, params: CogarchParams,
                         h_ladder: Sequence[float] = DEFAULT_LADDER, n_paths: int = 100_000,
                         seed: int = 0, *, step: float | None = None, eps: float | None = None,
                         antithetic: bool = True, order: int = 2, workers: int | None = None,
                         chunk_size: int = DEFAULT_CHUNK) -> EstimatorResult:
    """MC estimate of ``lim_{h->0} (E^x u(X_h) - u(x)) / h`` by ladder extrapolation."""
    antithetic = antithetic and params.driver.gaussian > 0
    u0 = float(f.u(np.float64(x.g), np.float64(x.v)))

    def sample(batch, h):
        dg, v = batch.at_time(h)
        return ((f.u(x.g + dg, v) - u0) / h)[None, :]

    run = run_ladder(x, params, h_ladder, sample, 1, n_paths=n_paths, seed=seed, step=step, eps=eps,
                     antithetic=antithetic, workers=workers, chunk_size=chunk_size)
    fit = run.fit(0, order)
    ladder = tuple((float(h), complex(fit.means[i]), (float(fit.stderrs[i]), 0.0))
                   for i, h in enumerate(run.t))
    return EstimatorResult(complex(fit.estimate), (fit.stderr, 0.0), ladder, None, n_paths,
                           len(run.t) > 1, complex(fit.slope), (fit.residual, 0.0), antithetic,
                           min(order, len(run.t) - 1))


def martingale_residual(f: TestFunction, start: StatePoint, params: CogarchParams, t: float,
                        n_paths: int = 100_000, seed: int = 0, *, step: float | None = None,
                        eps: float | None = None, antithetic: bool = True,
                        workers: int | None = None, chunk_size: int = DEFAULT_CHUNK):
    """Mean and stderr of ``C_t = u(X_t) - u(x) - int_0^t Gu(X_s) ds``.

    The time integral is the trapezoid rule on each path's event grid, using
    the value after an event and the left limit before the next one.
    Non-atomic drivers evaluate one quadrature per visited state (slow).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    antithetic = antithetic and params.driver.gaussian > 0
    step = t / 100.0 if step is None else step
    u_start = float(f.u(np.float64(start.g), np.float64(start.v)))

    def work(k, m):
        b = simulate_chunk(start, params, t, step, m, seed, chunk=k, eps=eps, antithetic=antithetic)
        g_post, g_pre = start.g + b.dg_post, start.g + b.dg_pre
        gu_post = generator_values(f, g_post[:, :-1], b.v_post[:, :-1], params)
        gu_pre = generator_values(f, g_pre[:, 1:], b.v_pre[:, 1:], params)
        dt = np.diff(b.times, axis=1)
        integral = (0.5 * dt * (gu_post + gu_pre)).sum(axis=1)
        c = f.u(g_post[:, -1], b.v_post[:, -1]) - u_start - integral
        if antithetic:
            c = 0.5 * (c[0::2] + c[1::2])
        return np.array([c.sum(), (c * c).sum(), len(c)])

    s, s2, n = fsum_arrays(map_chunks(work, n_paths, chunk_size, workers))
    mean = s / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return float(mean), math.sqrt(var / n)

"""Semimartingale characteristics ``(B, C, nu)`` of the COGARCH pair and a path-level check.

The differential characteristics depend on the state only through ``v``:
drift ``(b1(v), b2(v))`` (shared with the symbol), diffusion
``diag(e^v Q, 0)`` and jump kernel ``Ntilde(v, .)``, the image of the driver's
Lévy measure under ``f_v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .cogarch import CogarchParams, SamplePath, StatePoint, simulate_chunk
from .levy import AtomicMeasure
from .rng import DEFAULT_CHUNK, fsum_arrays, map_chunks
from .symbol import ImageMeasureSpec, drift_coefficients, f_v, image_measure

BOUNDARY_MARGIN = 1e-6


@dataclass(frozen=True)
class DifferentialCharacteristics:
    drift: np.ndarray
    diffusion: np.ndarray
    jump_measure: ImageMeasureSpec


def differential_characteristics(x: StatePoint, params: CogarchParams) -> DifferentialCharacteristics:
    b1, b2, _ = drift_coefficients(x.v, params)
    q11 = math.exp(x.v) * params.driver.gaussian
    return DifferentialCharacteristics(np.array([float(b1), float(b2)]),
                                       np.array([[q11, 0.0], [0.0, 0.0]]),
                                       image_measure(x, params))


def _interval_integrals(v_start, dt, params: CogarchParams):
    """Per-interval ``(int b1, int b2, int e^v Q)`` along the jump-free flow.

    ``beta e^{-v} + log(delta)`` is the flow's own velocity, so that part of
    ``int b2`` is the V increment.  For atomic drivers the remaining part of
    ``b2`` is piecewise constant in v and integrates exactly via occupation
    times; otherwise, and for ``b1``, Simpson with exact flow values at the
    midpoint and the left limit.  The diffusion integral is closed form.
    """
    ld, veq = params.log_delta, params.stationary_log_variance
    v_start = np.asarray(v_start, dtype=float)
    vm = _kernels.flow_v(v_start, 0.5 * dt, ld, veq)
    ve = _kernels.flow_v(v_start, dt, ld, veq)
    b1s, b2s, _ = drift_coefficients(v_start, params)
    b1m, b2m, _ = drift_coefficients(vm, params)
    b1e, b2e, _ = drift_coefficients(ve, params)
    i1 = dt / 6.0 * (b1s + 4.0 * b1m + b1e)
    m = params.driver.measure
    i2 = ve - v_start
    if isinstance(m, AtomicMeasure):
        for y, r in m.atoms:
            z2 = math.log1p(params.kappa * y * y)
            if z2 < 1.0:
                # e^{v/2} |y| < 1  <=>  v < -2 log|y|
                i2 = i2 + r * z2 * _occupation(v_start, dt, -np.inf, -2.0 * math.log(abs(y)), params)
    else:
        base = lambda v: params.beta * np.exp(-v) + ld
        i2 = i2 + dt / 6.0 * (b2s - base(v_start) + 4.0 * (b2m - base(vm)) + b2e - base(ve))
    c11 = params.driver.gaussian * _kernels.int_var(v_start, dt, ld, veq)
    return i1, i2, c11


@dataclass(frozen=True)
class CharacteristicsPath:
    times: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C11: np.ndarray


def integrate_characteristics(path: SamplePath, params: CogarchParams) -> CharacteristicsPath:
    """``B_t`` and ``C_t`` along ``path`` at its event times.

    A stopped path stops accumulating at its exit time.
    """
    t = path.grid_times
    if len(t) < 2:
        z = np.zeros(len(t))
        return CharacteristicsPath(t, z, z.copy(), z.copy())
    dt = np.diff(t)
    if path.stopped_at is not None:
        dt = np.where(t[1:] <= path.stopped_at[0], dt, 0.0)
    i1, i2, c = _interval_integrals(path.v[:-1], dt, params)
    zero = np.zeros(1)
    return CharacteristicsPath(t, np.concatenate([zero, np.cumsum(i1)]),
                               np.concatenate([zero, np.cumsum(i2)]),
                               np.concatenate([zero, np.cumsum(c)]))


def _validate_rect(rect) -> tuple[float, float, float, float]:
    a1, b1, a2, b2 = map(float, rect)
    if not (a1 < b1 and a2 < b2):
        raise ValueError(f"rectangle {rect} must have lo < hi in both coordinates")
    if a1 <= 0.0 <= b1 and a2 <= 0.0 <= b2:
        raise ValueError(f"rectangle {rect} must stay at positive distance from the origin")
    for e in (a1, b1, a2, b2):
        if abs(abs(e) - 1.0) < BOUNDARY_MARGIN:
            raise ValueError(f"rectangle edge {e} is within {BOUNDARY_MARGIN} of the truncation boundary")
    return a1, b1, a2, b2


def _occupation(v_start, dt, lo, hi, params: CogarchParams):
    """Time in ``[0, dt]`` during which the flow from ``v_start`` stays in ``[lo, hi]``."""
    ld, veq = params.log_delta, params.stationary_log_variance
    ve = _kernels.flow_v(v_start, dt, ld, veq)
    vmin, vmax = np.minimum(v_start, ve), np.maximum(v_start, ve)
    a = np.clip(lo, vmin, vmax)
    b = np.clip(hi, vmin, vmax)
    flat = vmax - vmin <= 1e-15 * np.maximum(1.0, np.abs(vmax))
    c = math.exp(veq)
    with np.errstate(divide="ignore", invalid="ignore"):
        # sigma^2 + beta/log(delta) decays like exp(s log(delta)).
        ratio = (np.exp(b) - c) / (np.exp(a) - c)
        moving = np.abs(np.log(ratio)) / abs(ld)
    inside = (v_start >= lo) & (v_start <= hi)
    return np.where(flat, np.where(inside, dt, 0.0),
                    np.where(b > a, np.nan_to_num(moving, nan=0.0, posinf=0.0), 0.0))


def compensator_rate(v, rect, params: CogarchParams) -> np.ndarray:
    """``Ntilde(v, A)`` for a rectangle ``A = [a1, b1] x [a2, b2]``."""
    a1, b1, a2, b2 = rect
    m = params.driver.measure
    v = np.asarray(v, dtype=float)
    if isinstance(m, AtomicMeasure):
        out = np.zeros(v.shape)
        for y, r in m.atoms:
            z1, z2 = f_v(y, v, params)
            out = out + r * ((z1 >= a1) & (z1 <= b1) & (z2 >= a2) & (z2 <= b2))
        return out

    def one(vi):
        def h(y):
            z1, z2 = f_v(y, vi, params)
            return ((z1 >= a1) & (z1 <= b1) & (z2 >= a2) & (z2 <= b2)).astype(float)
        edges = [abs(e) * math.exp(-0.5 * vi) for e in (a1, b1)]
        if params.kappa > 0:
            edges += [math.sqrt(math.expm1(max(e, 0.0)) / params.kappa) for e in (a2, b2) if e > 0]
        return float(m.integrate(h, breakpoints=[e for e in edges if e > 0])[0])

    return np.vectorize(one)(v)


def _integrated_compensator(v_start, dt, rect, params: CogarchParams):
    a1, b1, a2, b2 = rect
    m = params.driver.measure
    if isinstance(m, AtomicMeasure):
        total = np.zeros(np.shape(v_start))
        for y, r in m.atoms:
            z2 = math.log1p(params.kappa * y * y)
            if not a2 <= z2 <= b2:
                continue
            # e^{v/2} y in [a1, b1]  <=>  e^{v/2} in [lo, hi]
            lo, hi = sorted((a1 / y, b1 / y))
            if hi <= 0:
                continue
            v_lo = 2.0 * math.log(lo) if lo > 0 else -np.inf
            total = total + r * _occupation(v_start, dt, v_lo, 2.0 * math.log(hi), params)
        return total
    ld, veq = params.log_delta, params.stationary_log_variance
    vm = _kernels.flow_v(v_start, 0.5 * dt, ld, veq)
    ve = _kernels.flow_v(v_start, dt, ld, veq)
    return dt / 6.0 * (compensator_rate(v_start, rect, params) + 4.0 * compensator_rate(vm, rect, params)
                       + compensator_rate(ve, rect, params))


@dataclass(frozen=True)
class CharacteristicsReport:
    checks: list
    passed: bool

    def as_dict(self) -> dict:
        return {"checks": self.checks, "passed": self.passed}


def empirical_characteristics_check(params: CogarchParams, start: StatePoint, t: float,
                                    n_paths: int = 10_000, seed: int = 0,
                                    test_sets: Sequence = (), *, step: float | None = None,
                                    eps: float | None = None, k: float = 4.0,
                                    workers: int | None = None,
                                    chunk_size: int = DEFAULT_CHUNK) -> CharacteristicsReport:
    """Compare simulated paths with the integrated characteristics.

    (i) ``X_t - x`` minus big jumps (outside the unit truncation square)
    against ``B_t``; (ii) the summed squared continuous Gaussian increments
    of G against ``C_t^{11}``; (iii) jump counts in each rectangle against
    ``int_0^t Ntilde(X_s, A) ds``.  Each uses its own per-path difference
    and passes within ``k`` standard errors; the counts use the Poisson
    standard error ``sqrt(mean compensator / n)``.
    """
    rects = [_validate_rect(r) for r in test_sets]
    step = t / 200.0 if step is None else step
    n_rect = len(rects)

    def work(kk, m):
        b = simulate_chunk(start, params, t, step, m, seed, chunk=kk, eps=eps)
        dt = np.diff(b.times, axis=1)
        vs = b.v_post[:, :-1]
        i1, i2, c11 = _interval_integrals(vs, dt, params)
        big = ~((np.abs(b.jdg) < 1.0) & (np.abs(b.jdv) < 1.0)) & (b.dz != 0)
        x1 = b.dg_post[:, -1] - np.where(big, b.jdg, 0.0).sum(axis=1)
        x2 = b.v_post[:, -1] - start.v - np.where(big, b.jdv, 0.0).sum(axis=1)
        d = [x1 - i1.sum(axis=1), x2 - i2.sum(axis=1), (b.gauss ** 2).sum(axis=1) - c11.sum(axis=1)]
        counts, comps = [], []
        jump = b.dz != 0
        for a1, b1, a2, b2 in rects:
            inside = jump & (b.jdg >= a1) & (b.jdg <= b1) & (b.jdv >= a2) & (b.jdv <= b2)
            counts.append(inside.sum(axis=1).astype(float))
            comps.append(_integrated_compensator(vs, dt, (a1, b1, a2, b2), params).sum(axis=1))
        rows = d + [c - q for c, q in zip(counts, comps)]
        stats = [[r.sum(), (r * r).sum()] for r in rows]
        stats += [[c.sum(), q.sum()] for c, q in zip(counts, comps)]
        stats.append([m, 0.0])
        return np.array(stats)

    tot = fsum_arrays(map_chunks(work, n_paths, chunk_size, workers))
    n = tot[-1, 0]
    checks = []
    names = ["drift_G", "drift_V", "continuous_qv_G"]
    for i, name in enumerate(names):
        s, s2 = tot[i]
        mean = s / n
        se = math.sqrt(max(s2 / n - mean * mean, 0.0) / (n - 1))
        ok = abs(mean) <= k * se + 1e-9
        checks.append({"name": name, "mean_difference": mean, "stderr": se, "ok": bool(ok)})
    for j, rect in enumerate(rects):
        cnt, comp = tot[3 + n_rect + j] / n
        se = math.sqrt(max(comp, 0.0) / n)
        ok = abs(cnt - comp) <= k * se + 1e-12
        checks.append({"name": f"jumps_in_{list(rect)}", "mean_count": cnt, "mean_compensator": comp,
                       "poisson_stderr": se, "ok": bool(ok)})
    return CharacteristicsReport(checks, all(c["ok"] for c in checks))

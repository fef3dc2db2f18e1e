"""Closed-form symbols: the COGARCH pair, Lévy-driven SDEs, and the transformed jump measure.

All integrals against the state-dependent jump measure are pulled back to
the driver's Lévy measure through ``f_v(w) = (exp(v/2) w, log(1 + kappa w^2))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cogarch import CogarchParams, StatePoint
from .levy import AtomicMeasure, DensityMeasure
from .quadrature import ABS_TOL, REL_TOL


@dataclass(frozen=True)
class SymbolValue:
    value: complex
    quadrature_error: float = 0.0


def f_v(w, v, params: CogarchParams):
    """Map a driver jump ``w`` to the jump ``(dG, dV)`` of the pair at log-variance ``v``."""
    w = np.asarray(w, dtype=float)
    return np.exp(0.5 * np.asarray(v)) * w, np.log1p(params.kappa * w * w)


def _inner_indicator(z1, z2):
    return (np.abs(z1) < 1.0) & (np.abs(z2) < 1.0)


@dataclass(frozen=True)
class ImageMeasureSpec:
    """Pushforward of ``base`` under ``f_v``; only ever integrated by pullback."""

    base: AtomicMeasure | DensityMeasure
    v: float
    params: CogarchParams

    def breakpoints(self) -> tuple[float, ...]:
        """Magnitudes ``|y|`` where the truncation indicators switch."""
        pts = [1.0, math.exp(-0.5 * self.v)]
        if self.params.kappa > 0:
            pts.append(math.sqrt(math.expm1(1.0) / self.params.kappa))
        return tuple(pts)

    def pullback(self, h):
        """``w -> h(f_v(w))`` for vectorised ``h(z1, z2)``."""
        return lambda w: h(*f_v(w, self.v, self.params))


def image_measure(x: StatePoint, params: CogarchParams) -> ImageMeasureSpec:
    return ImageMeasureSpec(params.driver.measure, x.v, params)


def integrate_against_image(h, spec: ImageMeasureSpec, abs_tol: float = ABS_TOL,
                            rel_tol: float = REL_TOL):
    """``(int h(z) Ntilde(dz), error estimate)`` computed as ``int h(f_v(w)) N(dw)``.

    ``h(z1, z2)`` must be bounded and ``O(|z|^2)`` near the origin for
    measures with infinitely many small jumps.
    """
    return spec.base.integrate(spec.pullback(h), breakpoints=spec.breakpoints(),
                               abs_tol=abs_tol, rel_tol=rel_tol)


def drift_coefficients(v, params: CogarchParams, abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL):
    """First-order coefficients ``(b1, b2)`` of the pair and their quadrature error.

    ``b1 = ell e^{v/2} + e^{v/2} int y (1{|e^{v/2}y|<1} 1{log(1+kappa y^2)<1} - 1{|y|<1}) N(dy)``
    ``b2 = beta e^{-v} + log(delta) + int log(1+kappa y^2) 1{...} 1{...} N(dy)``

    ``v`` may be an array when the driver measure is atomic.
    """
    drv = params.driver
    m = drv.measure
    v_arr = np.asarray(v, dtype=float)
    s = np.exp(0.5 * v_arr)
    b1 = drv.drift * s
    b2 = params.beta * np.exp(-v_arr) + params.log_delta
    if isinstance(m, AtomicMeasure):
        if m.is_zero:
            return b1, b2, 0.0
        y, r = m.sizes, m.rates
        z1 = s[..., None] * y
        z2 = np.log1p(params.kappa * y * y)
        inner = _inner_indicator(z1, z2)
        b1 = b1 + s * (((inner.astype(float) - (np.abs(y) < 1.0)) * y) @ r)
        b2 = b2 + (inner * z2) @ r
        return b1, b2, 0.0
    if v_arr.ndim:
        res = [drift_coefficients(float(vi), params, abs_tol, rel_tol) for vi in v_arr.ravel()]
        return (np.array([r[0] for r in res]).reshape(v_arr.shape),
                np.array([r[1] for r in res]).reshape(v_arr.shape), max(r[2] for r in res))
    spec = ImageMeasureSpec(m, float(v_arr), params)
    brk = spec.breakpoints()
    kappa = params.kappa

    def h1(y):
        z1, z2 = f_v(y, v_arr, params)
        return y * (_inner_indicator(z1, z2).astype(float) - (np.abs(y) < 1.0))

    def h2(y):
        z1, z2 = f_v(y, v_arr, params)
        return np.where(_inner_indicator(z1, z2), np.log1p(kappa * y * y), 0.0)

    i1, e1 = m.integrate(h1, breakpoints=brk, abs_tol=abs_tol, rel_tol=rel_tol)
    i2, e2 = m.integrate(h2, breakpoints=brk, abs_tol=abs_tol, rel_tol=rel_tol)
    return float(b1 + s * i1), float(b2 + i2), float(s * e1 + e2)


def jump_part(v: float, xi, params: CogarchParams, abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL):
    """``int (e^{i z.xi} - 1 - i z.xi 1{|z1|<1} 1{|z2|<1}) Ntilde(dz)`` and its error."""
    xi1, xi2 = float(xi[0]), float(xi[1])

    def h(z1, z2):
        th = xi1 * z1 + xi2 * z2
        comp = np.where(_inner_indicator(z1, z2), th, 0.0)
        return -2.0 * np.sin(0.5 * th) ** 2 + 1j * (np.sin(th) - comp)

    spec = ImageMeasureSpec(params.driver.measure, float(v), params)
    val, err = integrate_against_image(h, spec, abs_tol, rel_tol)
    return complex(val), float(err)


def cogarch_symbol(x: StatePoint, xi, params: CogarchParams, abs_tol: float = ABS_TOL,
                   rel_tol: float = REL_TOL) -> SymbolValue:
    """Symbol ``p(x, xi)`` of ``(G, log sigma^2)``; independent of ``x.g``."""
    xi1, xi2 = float(xi[0]), float(xi[1])
    if xi1 == 0.0 and xi2 == 0.0:
        return SymbolValue(0j, 0.0)
    v = float(x.v)
    b1, b2, e_drift = drift_coefficients(v, params, abs_tol, rel_tol)
    jump, e_jump = jump_part(v, (xi1, xi2), params, abs_tol, rel_tol)
    value = (-1j * xi1 * float(b1) - 1j * xi2 * float(b2)
             + 0.5 * xi1 * xi1 * math.exp(v) * params.driver.gaussian - jump)
    err = (abs(xi1) + abs(xi2)) * e_drift + e_jump
    return SymbolValue(complex(value), float(err))


def sde_symbol(phi: Callable, psi: Callable, x, xi) -> complex:
    """Symbol ``psi(Phi(x)' xi)`` of ``dX = Phi(X-) dZ`` for a Lévy driver with exponent ``psi``."""
    mat = np.atleast_2d(np.asarray(phi(np.asarray(x, dtype=float)), dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if mat.shape[0] != xi.shape[0]:
        raise ValueError(f"Phi(x) has {mat.shape[0]} rows but xi has length {xi.shape[0]}")
    arg = mat.T @ xi
    return complex(psi(arg[0] if arg.shape[0] == 1 else arg))


def positive_definiteness_margin(x: StatePoint, xis, params: CogarchParams, t: float) -> float:
    """Smallest eigenvalue of ``[exp(-t p(x, xi_j - xi_k))]_{jk}``.

    Nonnegative for every finite point set exactly when ``p(x, .)`` is
    negative definite (Schoenberg).
    """
    xis = np.asarray(xis, dtype=float)
    n = len(xis)
    mat = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            mat[j, k] = np.exp(-t * cogarch_symbol(x, xis[j] - xis[k], params).value)
    return float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)).min())

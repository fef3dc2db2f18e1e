"""Scalar Lévy processes: triplets, characteristic exponents and jump skeletons.

The truncation function is the indicator of the open interval ``(-1, 1)``
everywhere in this package.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import ABS_TOL, REL_TOL, QuadratureError, gauss_kronrod, _rule
from .rng import chunk_generator

# Panels near the origin are integrated in log|y| down to this many e-folds
# of decay of a y**2-type integrand below the first breakpoint.
_FLOOR_EFOLDS = 37.0
_U_MIN = -700.0
_SAMPLER_CELLS = 2048
_MAX_EXPECTED_JUMPS = 1e7


def _segments(breaks: Sequence[float], top: float) -> list[tuple[float, float]]:
    pts = sorted({b for b in breaks if 0.0 < b < top})
    edges = [0.0, *pts, top]
    return list(zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite Lévy measure ``sum_j rate_j * delta_{size_j}``."""

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        atoms = tuple((float(s), float(r)) for s, r in self.atoms)
        for s, r in atoms:
            if not (np.isfinite(s) and np.isfinite(r)):
                raise ValueError("atom sizes and rates must be finite")
            if s == 0.0:
                raise ValueError("atom sizes must be nonzero")
            if r <= 0.0:
                raise ValueError(f"atom rates must be strictly positive, got {r}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s for s, _ in self.atoms], dtype=float)

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for _, r in self.atoms], dtype=float)

    @property
    def is_zero(self) -> bool:
        return not self.atoms

    def integrate(self, h, breakpoints=(), abs_tol=ABS_TOL, rel_tol=REL_TOL):
        """Return ``(sum_j rate_j * h(size_j), 0.0)``; exact up to rounding."""
        if self.is_zero:
            return 0.0, 0.0
        vals = np.asarray(h(self.sizes))
        return vals @ self.rates, 0.0

    def total_mass(self, eps: float = 0.0) -> float:
        sizes, rates = self.sizes, self.rates
        return float(rates[np.abs(sizes) >= eps].sum()) if self.atoms else 0.0

    def sampler(self, eps: float | None = None) -> "JumpSampler":
        return _AtomicSampler(self.sizes, self.rates)


@dataclass(frozen=True)
class DensityMeasure:
    """Lévy measure with a density behaving like ``|y|**(-1-alpha)`` at 0.

    ``density`` must be vectorised (array in, array out).  Outside
    ``support_cutoffs`` the density is treated as zero.
    """

    density: Callable[[np.ndarray], np.ndarray]
    small_jump_exponent: float
    support_cutoffs: tuple[float, float]
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        a = float(self.small_jump_exponent)
        if not 0.0 <= a < 2.0:
            raise ValueError("small_jump_exponent must lie in [0, 2)")
        lo, hi = map(float, self.support_cutoffs)
        if not (lo < 0.0 < hi):
            raise ValueError("support_cutoffs must satisfy y_min < 0 < y_max")
        object.__setattr__(self, "small_jump_exponent", a)
        object.__setattr__(self, "support_cutoffs", (lo, hi))
        probe = np.concatenate([-np.geomspace(1e-6, -lo, 200), np.geomspace(1e-6, hi, 200)])
        vals = np.asarray(self.density(probe), dtype=float)
        if vals.shape != probe.shape:
            raise ValueError("density must be vectorised")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0.0):
            raise ValueError("density must be finite and nonnegative away from 0")
        try:
            self.integrate(lambda y: np.minimum(1.0, y * y), breakpoints=(1.0,))
        except QuadratureError as exc:
            raise ValueError(f"integral of (1 ^ y^2) N(dy) did not converge: {exc}") from exc

    is_zero = False

    def _half_line(self, h, sign: float, breaks, eps: float, abs_tol, rel_tol):
        top = self.support_cutoffs[1] if sign > 0 else -self.support_cutoffs[0]
        alpha = self.small_jump_exponent
        total, err = 0.0, 0.0
        for a, b in _segments([*breaks, eps], top):
            if b <= eps:
                continue

            def g(u, _s=sign):
                y = _s * np.exp(u)
                return np.asarray(h(y)) * self.density(y) * np.abs(y)

            if a == 0.0:
                # The floor also keeps |y|^(-1-alpha) below exp(-_U_MIN).
                u_lo = max(_U_MIN / (1.0 + alpha), np.log(b) - _FLOOR_EFOLDS / (2.0 - alpha))
                # Tail below the floor behaves like exp((2-alpha) u).
                err += float(np.abs(g(np.array([u_lo]))[0])) / (2.0 - alpha)
            else:
                u_lo = np.log(a)
            res = gauss_kronrod(g, u_lo, np.log(b), abs_tol=abs_tol, rel_tol=rel_tol)
            total = total + res.value
            err += res.error
        return total, err

    def integrate(self, h, breakpoints=(), abs_tol=ABS_TOL, rel_tol=REL_TOL, eps: float = 0.0):
        """Integrate ``h`` against the measure over ``{|y| >= eps}``.

        ``breakpoints`` are magnitudes ``|y|`` where ``h`` may jump; they are
        mirrored to both half-lines.  Near the origin ``h`` must be
        ``O(y**2)`` unless ``eps > 0``.
        """
        breaks = [abs(float(b)) for b in breakpoints]
        pos, e1 = self._half_line(h, 1.0, breaks, eps, abs_tol, rel_tol)
        neg, e2 = self._half_line(h, -1.0, breaks, eps, abs_tol, rel_tol)
        return pos + neg, e1 + e2

    def total_mass(self, eps: float) -> float:
        if eps <= 0.0:
            return np.inf
        return float(self.integrate(lambda y: np.ones_like(y), eps=eps)[0])

    def sampler(self, eps: float | None) -> "JumpSampler":
        if eps is None or not eps > 0.0:
            raise ValueError("density measures need a truncation threshold eps > 0")
        key = float(eps)
        if key not in self._cache:
            self._cache[key] = _DensitySampler(self, key)
        return self._cache[key]


LevyMeasure = AtomicMeasure | DensityMeasure
ZERO_MEASURE = AtomicMeasure(())


@dataclass(frozen=True)
class LevyTriplet:
    """``(drift, gaussian, measure)`` with truncation ``1{|y| < 1}``."""

    drift: float = 0.0
    gaussian: float = 0.0
    measure: AtomicMeasure | DensityMeasure = ZERO_MEASURE

    def __post_init__(self):
        if not np.isfinite(self.drift):
            raise ValueError("drift must be finite")
        if not (np.isfinite(self.gaussian) and self.gaussian >= 0.0):
            raise ValueError("gaussian coefficient must be finite and >= 0")

    def small_jump_compensator(self, eps: float | None = None) -> float:
        """``int_{eps <= |y| < 1} y N(dy)``, the drift removed by compensation."""
        m = self.measure
        if isinstance(m, AtomicMeasure):
            if m.is_zero:
                return 0.0
            s, r = m.sizes, m.rates
            return float(r[np.abs(s) < 1.0] @ s[np.abs(s) < 1.0])
        val, _ = m.integrate(lambda y: np.where(np.abs(y) < 1.0, y, 0.0), breakpoints=(1.0,),
                             eps=float(eps))
        return float(val)

    def simulation_drift(self, eps: float | None = None) -> float:
        """Drift of the continuous part once jumps of size >= eps are simulated."""
        return self.drift - self.small_jump_compensator(eps)


class JumpSampler:
    rate: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError


class _AtomicSampler(JumpSampler):
    def __init__(self, sizes, rates):
        self.sizes = sizes
        self.rate = float(rates.sum()) if len(rates) else 0.0
        self.probs = rates / self.rate if self.rate > 0 else rates

    def sample(self, rng, n):
        if len(self.sizes) == 1:
            return np.full(n, self.sizes[0])
        return self.sizes[rng.choice(len(self.sizes), size=n, p=self.probs)]


class _DensitySampler(JumpSampler):
    """Inverse-CDF sampler on a log|y| grid with exact per-cell masses.

    Within a cell the density in ``u = log|y|`` is taken piecewise linear,
    an O(cell width**2) approximation.
    """

    def __init__(self, measure: DensityMeasure, eps: float):
        lo, hi = measure.support_cutoffs
        cells, masses, ends = [], [], []
        for sign, top in ((1.0, hi), (-1.0, -lo)):
            if top <= eps:
                continue
            u = np.linspace(np.log(eps), np.log(top), _SAMPLER_CELLS + 1)

            def g(x, _s=sign):
                y = _s * np.exp(x)
                return measure.density(y) * np.abs(y)

            m, _ = _rule(g, u[:-1], u[1:])
            cells.append(np.column_stack([np.full(_SAMPLER_CELLS, sign), u[:-1], u[1:]]))
            masses.append(np.maximum(m, 0.0))
            ends.append(np.column_stack([g(u[:-1]), g(u[1:])]))
        if not cells:
            raise ValueError("eps exceeds the support of the density")
        self.cells = np.vstack(cells)
        self.ends = np.vstack(ends)
        mass = np.concatenate(masses)
        self.rate = float(mass.sum())
        if not np.isfinite(self.rate):
            raise ValueError("infinite jump rate after truncation; increase eps")
        self.cdf = np.cumsum(mass) / self.rate

    def sample(self, rng, n):
        k = np.searchsorted(self.cdf, rng.uniform(size=n), side="right")
        k = np.minimum(k, len(self.cdf) - 1)
        sign, u0, u1 = self.cells[k].T
        f0, f1 = self.ends[k].T
        w = rng.uniform(size=n)
        # Invert the CDF of the linear density f0 + (f1 - f0) s on s in [0, 1].
        d = f1 - f0
        tot = 0.5 * (f0 + f1)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(np.abs(d) > 1e-12 * np.maximum(f0, f1),
                         (np.sqrt(f0 * f0 + 2.0 * d * w * tot) - f0) / d, w)
        s = np.clip(s, 0.0, 1.0)
        return sign * np.exp(u0 + s * (u1 - u0))


@dataclass(frozen=True)
class PathSkeleton:
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    t_max: float
    seed: int


def draw_jumps(sampler: JumpSampler, rng: np.random.Generator, n_paths: int, t_max: float):
    """Jump counts, times and sizes for ``n_paths`` independent paths.

    Returns ``(counts, times, sizes)`` with times and sizes flattened path by
    path and each path's times ascending in ``(0, t_max]``.
    """
    mean = sampler.rate * t_max
    if mean > _MAX_EXPECTED_JUMPS:
        raise ValueError(f"expected {mean:.3g} jumps per path; truncation threshold too small")
    if mean == 0.0:
        return np.zeros(n_paths, dtype=np.int64), np.empty(0), np.empty(0)
    counts = rng.poisson(mean, size=n_paths).astype(np.int64)
    total = int(counts.sum())
    times = t_max * (1.0 - rng.uniform(size=total))
    sizes = sampler.sample(rng, total)
    owner = np.repeat(np.arange(n_paths), counts)
    order = np.lexsort((times, owner))
    return counts, times[order], sizes[order]


def sample_skeleton(triplet: LevyTriplet, t_max: float, eps: float | None, seed: int) -> PathSkeleton:
    """Jumps of one path of ``triplet`` on ``(0, t_max]``, truncated below ``eps``."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    sampler = triplet.measure.sampler(eps)
    _, times, sizes = draw_jumps(sampler, chunk_generator(seed, 0), 1, t_max)
    return PathSkeleton(times, sizes, float(t_max), int(seed))


def sample_increments(triplet: LevyTriplet, t: float, n: int, seed: int, eps: float | None = None) -> np.ndarray:
    """``n`` independent draws of ``Z_t`` (small jumps below ``eps`` dropped)."""
    rng = chunk_generator(seed, 0)
    sampler = triplet.measure.sampler(eps)
    counts, _, sizes = draw_jumps(sampler, rng, n, t)
    jumps = np.zeros(n)
    np.add.at(jumps, np.repeat(np.arange(n), counts), sizes)
    gauss = np.sqrt(triplet.gaussian * t) * rng.standard_normal(n)
    return triplet.simulation_drift(eps) * t + gauss + jumps


def _psi_integrand(xi: float):
    def h(y):
        x = y * xi
        re = -2.0 * np.sin(0.5 * x) ** 2
        im = np.sin(x) - np.where(np.abs(y) < 1.0, x, 0.0)
        return re + 1j * im
    return h


def characteristic_exponent(triplet: LevyTriplet, xi: float, abs_tol: float = ABS_TOL,
                            rel_tol: float = REL_TOL) -> complex:
    """Lévy-Khintchine exponent ``psi`` with ``E exp(i xi Z_t) = exp(-t psi(xi))``."""
    xi = float(xi)
    base = -1j * triplet.drift * xi + 0.5 * triplet.gaussian * xi * xi
    if xi == 0.0:
        return 0j
    integral, _ = triplet.measure.integrate(_psi_integrand(xi), breakpoints=(1.0,),
                                            abs_tol=abs_tol, rel_tol=rel_tol)
    return complex(base - integral)


def levy_symbol(triplet: LevyTriplet, x, xi: float) -> complex:
    """Symbol of the Lévy process at ``(x, xi)``; it does not depend on ``x``."""
    return characteristic_exponent(triplet, xi)

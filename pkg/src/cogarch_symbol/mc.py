"""Monte-Carlo estimation of the probabilistic symbol with a t -> 0 extrapolation.

For each ladder time ``t`` the estimator averages
``-(exp(i (X_{T ^ t} - x) . xi) - 1) / t`` over simulated paths stopped on
leaving the max-norm ball of radius ``R``; one path serves every ladder time.
The reported estimate is the ``t = 0`` value of a weighted least-squares
polynomial through the ladder means (quadratic by default, i.e. Richardson
through three ladder points), with a standard error that accounts for the
correlation between ladder means induced by the shared paths.  A linear fit
is always made as well; its slope and residual are the diagnostics of the
O(t) bias model.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cogarch import CogarchParams, PathBatch, StatePoint, simulate_chunk
from .rng import DEFAULT_CHUNK, fsum_arrays, map_chunks

DEFAULT_LADDER = (0.02, 0.01, 0.005)


@dataclass(frozen=True)
class LadderFit:
    estimate: float
    stderr: float
    means: np.ndarray
    stderrs: np.ndarray
    slope: float
    residual: float


@dataclass(frozen=True)
class EstimatorResult:
    estimate: complex
    stderr: tuple[float, float]
    t_ladder: tuple[tuple[float, complex, tuple[float, float]], ...]
    R: float | None
    n_paths: int
    extrapolated: bool
    slope: complex = 0j
    residual: tuple[float, float] = (0.0, 0.0)
    antithetic: bool = False
    order: int = 0

    @property
    def bias_floor(self) -> float:
        """Size of the bias left after extrapolation, ``t_max ** (order + 1)``.

        Used as the absolute tolerance when comparing estimates whose
        stderr is near zero (deterministic or almost deterministic components).
        """
        t_max = max(t for t, _, _ in self.t_ladder) if self.t_ladder else 0.0
        return t_max ** (self.order + 1)

    def as_dict(self) -> dict:
        return {
            "estimate": [self.estimate.real, self.estimate.imag],
            "stderr": list(self.stderr),
            "t_ladder": [{"t": t, "mean": [m.real, m.imag], "stderr": list(se)}
                         for t, m, se in self.t_ladder],
            "R": self.R,
            "n_paths": self.n_paths,
            "extrapolated": self.extrapolated,
            "extrapolation": {"slope": [self.slope.real, self.slope.imag],
                              "residual": list(self.residual)},
            "antithetic": self.antithetic,
            "order": self.order,
            "bias_floor": self.bias_floor,
        }


def _fit_channel(t: np.ndarray, s1: np.ndarray, s2: np.ndarray, n: int, order: int) -> LadderFit:
    means = s1 / n
    cov = (s2 / n - np.outer(means, means)) * (n / (n - 1))
    cov = 0.5 * (cov + cov.T)
    # Identical samples leave only cancellation noise in s2/n - m^2.
    cov[np.abs(cov) <= 1e-12 * np.abs(np.outer(means, means))] = 0.0
    cov_means = cov / n
    var = np.clip(np.diag(cov_means), 0.0, None)
    se = np.sqrt(var)
    if len(t) == 1:
        return LadderFit(float(means[0]), float(se[0]), means, se, 0.0, 0.0)
    top = var.max()
    w = np.ones_like(var) if top == 0.0 else 1.0 / np.maximum(var, 1e-12 * top)

    scale = t.max()
    tau = t / scale

    def wls(deg):
        X = np.vander(tau, deg + 1, increasing=True)
        if deg == len(t) - 1:
            A = np.linalg.inv(X)
        else:
            A = np.linalg.solve(X.T @ (w[:, None] * X), X.T * w)
        return X, A, A @ means

    # The linear fit always supplies the diagnostics; its residual tests the O(t) model.
    X1, _, lin = wls(1)
    resid = means - X1 @ lin
    dof = len(t) - 2
    residual = float(np.sqrt(np.sum(w * resid ** 2) / dof)) if dof > 0 else 0.0
    _, A, coef = wls(min(order, len(t) - 1))
    est_var = float(A[0] @ cov_means @ A[0])
    return LadderFit(float(coef[0]), math.sqrt(max(est_var, 0.0)), means, se,
                     float(lin[1] / scale), residual)


@dataclass
class LadderRun:
    """Merged sufficient statistics of a ladder experiment."""

    t: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    n: int
    extra: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def fit(self, channel: int, order: int = 2) -> LadderFit:
        if self.n < 2:
            raise ValueError("need at least two independent samples")
        return _fit_channel(self.t, self.s1[channel], self.s2[channel], self.n, order)


def run_ladder(start: StatePoint, params: CogarchParams, t_ladder: Sequence[float],
               sample_fn: Callable[[PathBatch, float], np.ndarray], n_channels: int, *,
               n_paths: int, seed: int, R: float | None = None, step: float | None = None,
               eps: float | None = None, antithetic: bool = False, workers: int | None = None,
               chunk_size: int = DEFAULT_CHUNK, extra_fn=None, backend: str | None = None) -> LadderRun:
    """Simulate in chunks and accumulate per-channel sums over the ladder.

    ``sample_fn(batch, t)`` returns an ``(n_channels, n_paths_in_chunk)``
    array of per-path values at time ``t``.  Antithetic partners are averaged
    before accumulation, so ``n`` counts independent units.
    """
    ts = np.array(sorted({float(t) for t in t_ladder}, reverse=True))
    if len(ts) == 0 or np.any(ts <= 0):
        raise ValueError("ladder times must be positive")
    if n_paths < 2:
        raise ValueError("n_paths must be at least 2")
    if antithetic and (n_paths % 2 or chunk_size % 2):
        raise ValueError("antithetic sampling needs even n_paths and chunk_size")
    step = float(ts.min() / 4.0 if step is None else step)

    def work(k: int, m: int):
        batch = simulate_chunk(start, params, float(ts.max()), step, m, seed, chunk=k, R=R,
                               obs_times=ts, eps=eps, antithetic=antithetic, backend=backend)
        vals = np.stack([np.asarray(sample_fn(batch, t), dtype=float).reshape(n_channels, m)
                         for t in ts], axis=1)
        if antithetic:
            vals = 0.5 * (vals[:, :, 0::2] + vals[:, :, 1::2])
        s1 = vals.sum(axis=2)
        s2 = np.einsum("cim,cjm->cij", vals, vals)
        ex = extra_fn(batch) if extra_fn else np.zeros(0)
        return s1, s2, vals.shape[2], np.asarray(ex, dtype=float)

    parts = map_chunks(work, n_paths, chunk_size, workers)
    s1 = fsum_arrays([p[0] for p in parts])
    s2 = fsum_arrays([p[1] for p in parts])
    extra = fsum_arrays([p[3] for p in parts]) if extra_fn else np.zeros(0)
    return LadderRun(ts, s1, s2, sum(p[2] for p in parts), extra)


def _symbol_samples(xi, v0: float):
    xi1, xi2 = float(xi[0]), float(xi[1])

    def fn(batch: PathBatch, t: float) -> np.ndarray:
        dg, v = batch.at_time(t)
        th = xi1 * dg + xi2 * (v - v0)
        re = 2.0 * np.sin(0.5 * th) ** 2 / t
        im = -np.sin(th) / t
        if np.any(np.hypot(re, im) > 2.0 / t * (1.0 + 1e-12)):
            raise AssertionError("raw symbol sample exceeds 2/t")
        return np.stack([re, im])
    return fn


def estimate_symbol(x: StatePoint, xi, params: CogarchParams, R: float | None = 1.0,
                    t_ladder: Sequence[float] = DEFAULT_LADDER, n_paths: int = 100_000,
                    seed: int = 0, *, step: float | None = None, eps: float | None = None,
                    antithetic: bool = True, order: int = 2, workers: int | None = None,
                    chunk_size: int = DEFAULT_CHUNK, backend: str | None = None) -> EstimatorResult:
    """Monte-Carlo estimate of the symbol ``p(x, xi)``.

    With a single ladder time the raw mean is returned and
    ``extrapolated`` is False.  ``antithetic`` pairs Gaussian draws with
    their negatives (jumps shared within a pair); it is switched off for
    drivers without a Gaussian part, where it would only duplicate paths.
    """
    antithetic = antithetic and params.driver.gaussian > 0
    if R is not None and not R > 0:
        raise ValueError("R must be positive")
    run = run_ladder(x, params, t_ladder, _symbol_samples(xi, x.v), 2, n_paths=n_paths, seed=seed,
                     R=R, step=step, eps=eps, antithetic=antithetic, workers=workers,
                     chunk_size=chunk_size, backend=backend)
    re, im = run.fit(0, order), run.fit(1, order)
    ladder = tuple((float(t), complex(re.means[i], im.means[i]),
                    (float(re.stderrs[i]), float(im.stderrs[i]))) for i, t in enumerate(run.t))
    return EstimatorResult(
        estimate=complex(re.estimate, im.estimate),
        stderr=(re.stderr, im.stderr),
        t_ladder=ladder,
        R=R,
        n_paths=n_paths,
        extrapolated=len(run.t) > 1,
        slope=complex(re.slope, im.slope),
        residual=(re.residual, im.residual),
        antithetic=antithetic,
        order=min(order, len(run.t) - 1),
    )


DETERMINISTIC_ATOL = 1e-6


def compare(a: complex, se_a, b: complex, se_b=(0.0, 0.0), k: float = 3.0,
            atol: float = DETERMINISTIC_ATOL) -> dict:
    """Component-wise ``|a - b| <= k * pooled stderr + atol``, with z-scores.

    ``atol`` only matters for (near) zero-variance components, where the
    residual extrapolation error is all that separates the estimate from the
    limit; pass :attr:`EstimatorResult.bias_floor` for ladder estimates.
    """
    pooled = (math.hypot(se_a[0], se_b[0]), math.hypot(se_a[1], se_b[1]))
    diff = a - b
    # z counts the floor as atol/k extra stderr, so z <= k exactly when ok.
    z = tuple(abs(d) / (s + atol / k) if s + atol > 0 else (0.0 if d == 0 else math.inf)
              for d, s in zip((diff.real, diff.imag), pooled))
    ok = all(abs(d) <= k * s + atol for d, s in zip((diff.real, diff.imag), pooled))
    return {"diff": [diff.real, diff.imag], "pooled_stderr": list(pooled), "z": list(z), "ok": ok}


@dataclass(frozen=True)
class RIndependenceReport:
    results: dict
    pairs: list
    passed: bool


def r_independence_check(x: StatePoint, xi, params: CogarchParams, R_list: Sequence[float],
                         k: float = 3.0, **kwargs) -> RIndependenceReport:
    """Estimate the symbol for each radius and compare all pairs.

    Every radius reuses the same seed, so the comparison with the
    independent-samples pooled stderr is conservative.
    """
    radii = list(R_list)
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    results = {R: estimate_symbol(x, xi, params, R=R, **kwargs) for R in radii}
    pairs = []
    for ra, rb in itertools.combinations(radii, 2):
        a, b = results[ra], results[rb]
        cmp = compare(a.estimate, a.stderr, b.estimate, b.stderr, k, max(a.bias_floor, b.bias_floor))
        pairs.append({"R": [ra, rb], **cmp})
    return RIndependenceReport(results, pairs, all(p["ok"] for p in pairs))

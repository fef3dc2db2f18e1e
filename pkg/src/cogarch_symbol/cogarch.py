"""COGARCH(1,1) pair ``(G, V) = (G, log sigma^2)``: parameters, exact flows and path simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .levy import LevyTriplet, draw_jumps
from .rng import chunk_generator


@dataclass(frozen=True)
class CogarchParams:
    beta: float
    delta: float
    lam: float
    driver: LevyTriplet = field(default_factory=LevyTriplet)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must satisfy 0 < delta < 1, got {self.delta}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must satisfy beta > 0, got {self.beta}")
        if not self.lam >= 0.0:
            raise ValueError(f"lam must satisfy lambda >= 0, got {self.lam}")

    @property
    def log_delta(self) -> float:
        return math.log(self.delta)

    @property
    def kappa(self) -> float:
        """Volatility feedback ``lambda / delta``."""
        return self.lam / self.delta

    @property
    def stationary_log_variance(self) -> float:
        """Fixed point ``log(-beta / log(delta))`` of the between-jump flow."""
        return math.log(-self.beta / self.log_delta)


@dataclass(frozen=True)
class StatePoint:
    g: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.g) and math.isfinite(self.v)):
            raise ValueError("state must be finite")

    def __iter__(self):
        yield self.g
        yield self.v


def evolve_volatility_between_jumps(v, dt, params: CogarchParams):
    """Log-variance after ``dt`` units of jump-free time (exact ODE solution)."""
    if np.any(np.asarray(dt) < 0):
        raise ValueError("dt must be nonnegative")
    return _kernels.flow_v_backend(v, dt, params.log_delta, params.stationary_log_variance)


def integrated_variance(v, dt, params: CogarchParams):
    """``int_0^dt sigma_s^2 ds`` along the jump-free flow from log-variance ``v``."""
    return _kernels.int_var(v, dt, params.log_delta, params.stationary_log_variance)


def apply_jump(state: StatePoint, dz: float, params: CogarchParams) -> StatePoint:
    """State right after a driver jump ``dz`` (volatility only ever jumps up)."""
    if dz == 0.0:
        raise ValueError("jump size must be nonzero")
    return StatePoint(state.g + math.exp(0.5 * state.v) * dz,
                      state.v + math.log1p(params.kappa * dz * dz))


def make_grid(t_max: float, step: float, obs_times: Iterable[float] = ()) -> np.ndarray:
    """Event grid ``0, step, 2 step, ...`` merged with ``obs_times`` and ``t_max``.

    Step points closer than ``1e-9 * step`` to an observation time are
    dropped so that observation times appear verbatim.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    obs = np.asarray(sorted(set(float(t) for t in obs_times) | {float(t_max)}))
    if obs[0] <= 0 or obs[-1] > t_max:
        raise ValueError("observation times must lie in (0, t_max]")
    n = int(math.floor(t_max / step + 1e-9))
    steps = np.arange(n + 1) * step
    if len(obs):
        near = np.abs(steps[:, None] - obs[None, :]).min(axis=1) <= 1e-9 * step
        steps = steps[~near | (steps == 0.0)]
    steps = steps[steps < t_max]
    return np.union1d(steps, obs)


@dataclass
class PathBatch:
    """One chunk of simulated paths on per-path event slots.

    ``times[i, k]`` is the k-th event of path ``i`` (slot 0 is time 0; trailing
    padding slots repeat ``t_max`` and carry no jump).  ``*_pre`` arrays hold
    the left limits at each event, ``*_post`` the values after it.
    """

    start: StatePoint
    times: np.ndarray
    dz: np.ndarray
    dg_pre: np.ndarray
    v_pre: np.ndarray
    jdg: np.ndarray
    jdv: np.ndarray
    dg_post: np.ndarray
    v_post: np.ndarray
    gauss: np.ndarray
    stop_slot: np.ndarray
    grid: np.ndarray
    grid_pos: np.ndarray
    radius: float

    @property
    def n_paths(self) -> int:
        return self.times.shape[0]

    @property
    def stop_times(self) -> np.ndarray:
        """Exit time per path, ``inf`` where the path never left the ball."""
        rows = np.arange(self.n_paths)
        t = self.times[rows, np.maximum(self.stop_slot, 0)]
        return np.where(self.stop_slot >= 0, t, np.inf)

    def at_grid(self):
        """``(dg, v)`` arrays of shape ``(n_paths, len(grid))`` at the grid times."""
        rows = np.arange(self.n_paths)[:, None]
        return self.dg_post[rows, self.grid_pos], self.v_post[rows, self.grid_pos]

    def at_time(self, t: float):
        j = int(np.flatnonzero(self.grid == t)[0])
        dg, v = self.at_grid()
        return dg[:, j], v[:, j]


def simulate_chunk(start: StatePoint, params: CogarchParams, t_max: float, step: float,
                   n_paths: int, seed: int, chunk: int = 0, R: float | None = None,
                   obs_times: Sequence[float] = (), eps: float | None = None,
                   antithetic: bool = False, backend: str | None = None) -> PathBatch:
    """Simulate ``n_paths`` paths from ``start`` with the random stream of ``(seed, chunk)``.

    With ``antithetic=True`` rows ``2j`` and ``2j + 1`` share their jumps and
    use opposite Gaussian draws.
    """
    if R is not None and not R > 0:
        raise ValueError("R must be positive")
    if antithetic and n_paths % 2:
        raise ValueError("antithetic sampling needs an even number of paths")
    grid = make_grid(t_max, step, obs_times)
    drv = params.driver
    rng = chunk_generator(seed, chunk)
    sampler = drv.measure.sampler(eps)
    n_draw = n_paths // 2 if antithetic else n_paths
    counts, jt, js = draw_jumps(sampler, rng, n_draw, t_max)
    n_grid = len(grid)
    k_max = n_grid + (int(counts.max()) if n_draw else 0)

    times = np.empty((n_draw, k_max))
    times[:, :n_grid] = grid
    times[:, n_grid:] = t_max
    dz = np.zeros((n_draw, k_max))
    if len(jt):
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        rows = np.repeat(np.arange(n_draw), counts)
        cols = n_grid + np.arange(len(jt)) - np.repeat(offsets, counts)
        times[rows, cols] = jt
        dz[rows, cols] = js
    order = np.argsort(times, axis=1, kind="stable")
    times = np.take_along_axis(times, order, axis=1)
    dz = np.take_along_axis(dz, order, axis=1)
    inv = np.empty_like(order)
    np.put_along_axis(inv, order, np.arange(k_max)[None, :].repeat(n_draw, axis=0), axis=1)
    grid_pos = inv[:, :n_grid]

    if drv.gaussian > 0:
        normals = rng.standard_normal((n_draw, k_max))
    else:
        normals = np.zeros((n_draw, k_max))
    if antithetic:
        times = np.repeat(times, 2, axis=0)
        dz = np.repeat(dz, 2, axis=0)
        grid_pos = np.repeat(grid_pos, 2, axis=0)
        normals = np.stack([normals, -normals], axis=1).reshape(n_paths, k_max)

    radius = np.inf if R is None else float(R)
    out = _kernels.simulate_events(times, dz, normals, start.v, params.log_delta,
                                   params.stationary_log_variance, params.kappa,
                                   drv.simulation_drift(eps), math.sqrt(drv.gaussian), radius,
                                   backend=backend)
    return PathBatch(start=start, times=times, dz=dz, grid=grid, grid_pos=grid_pos,
                     radius=radius, **out)


@dataclass(frozen=True)
class SamplePath:
    """A single simulated path on its event times (grid points and jumps).

    ``g`` and ``v`` are the values after each event; ``displacement`` is
    ``g - g0`` as computed, which is what the simulation actually evolves.
    """

    start: StatePoint
    grid_times: np.ndarray
    displacement: np.ndarray
    v: np.ndarray
    is_jump: np.ndarray
    dz: np.ndarray
    jump_records: tuple[tuple[float, float, float, float], ...]
    stopped_at: tuple[float, str] | None

    @property
    def g(self) -> np.ndarray:
        return self.start.g + self.displacement

    @property
    def states(self) -> list[StatePoint]:
        return [StatePoint(float(a), float(b)) for a, b in zip(self.g, self.v)]


def path_from_batch(batch: PathBatch, row: int) -> SamplePath:
    t = batch.times[row]
    k_end = len(t)
    # Padding slots sit at t_max with no jump after the last real event.
    real = np.ones(k_end, dtype=bool)
    real[1:] = (np.diff(t) > 0) | (batch.dz[row, 1:] != 0)
    keep = np.flatnonzero(real)
    jumps = batch.dz[row] != 0
    recs = tuple((float(t[k]), float(batch.dz[row, k]), float(batch.jdg[row, k]),
                  float(batch.jdv[row, k])) for k in np.flatnonzero(jumps))
    s = int(batch.stop_slot[row])
    stopped = (float(t[s]), "exit-radius") if s >= 0 else None
    return SamplePath(start=batch.start, grid_times=t[keep], displacement=batch.dg_post[row, keep],
                      v=batch.v_post[row, keep], is_jump=jumps[keep], dz=batch.dz[row, keep],
                      jump_records=recs, stopped_at=stopped)


def simulate_path(start: StatePoint, params: CogarchParams, t_max: float, step: float,
                  R: float | None, seed: int, eps: float | None = None) -> SamplePath:
    """Jump-adapted simulation of one path of ``(G, V)`` from ``start``.

    Between jumps V follows its exact flow and the G increment is
    ``ell * int sigma + sqrt(Q) * N(0, int sigma^2)``; with ``R`` the path is
    stopped (frozen) at the first event where ``max(|dg|, |dv|) > R``.
    """
    batch = simulate_chunk(start, params, t_max, step, 1, seed, R=R, eps=eps)
    path = path_from_batch(batch, 0)
    if not (np.all(np.isfinite(path.displacement)) and np.all(np.isfinite(path.v))):
        raise AssertionError("non-finite state in simulated path")
    return path


@dataclass(frozen=True)
class ExitSummary:
    times: np.ndarray
    stopped_fraction: np.ndarray
    n_paths: int


def exit_time_statistics(paths, times: Sequence[float]) -> ExitSummary:
    """Fraction of paths stopped at or before each time in ``times``.

    ``paths`` is a :class:`PathBatch`, an iterable of batches or of
    :class:`SamplePath`, or an array of exit times (``inf`` = never).
    """
    if isinstance(paths, PathBatch):
        stop = paths.stop_times
    elif isinstance(paths, np.ndarray):
        stop = paths
    else:
        parts = []
        for p in paths:
            if isinstance(p, PathBatch):
                parts.append(p.stop_times)
            else:
                parts.append(np.array([p.stopped_at[0] if p.stopped_at else np.inf]))
        stop = np.concatenate(parts)
    times = np.asarray(times, dtype=float)
    frac = (stop[None, :] <= times[:, None]).mean(axis=1)
    return ExitSummary(times, frac, len(stop))

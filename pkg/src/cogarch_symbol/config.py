"""Experiment configuration: a YAML document validated into typed settings.

Every validation error carries the line of the offending key.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .cogarch import CogarchParams, StatePoint
from .levy import AtomicMeasure, DensityMeasure, LevyTriplet, ZERO_MEASURE


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line else ""
        what = f"{key}: " if key else ""
        super().__init__(f"{where}{what}{message}")
        self.line = line
        self.key = key


def _plain(node, lines: dict, path: str):
    """Convert a composed YAML node into Python data, recording key lines."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            if key in out:
                raise ConfigError("duplicate key", k.start_mark.line + 1, f"{path}.{key}".lstrip("."))
            out[key] = _plain(v, lines, f"{path}.{key}".lstrip("."))
            lines[f"{path}.{key}".lstrip(".")] = k.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, lines, f"{path}[{i}]") for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node)) if node.value != "" else None


def tempered_stable_density(alpha: float, c_pos: float = 1.0, c_neg: float = 1.0,
                            decay_pos: float = 1.0, decay_neg: float = 1.0):
    """``c_+/- exp(-decay_+/- |y|) |y|^(-1-alpha)`` on each half-line."""
    def density(y):
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            core = np.where(ay > 0, ay ** (-1.0 - alpha), 0.0)
        return np.where(y > 0, c_pos * np.exp(-decay_pos * ay), c_neg * np.exp(-decay_neg * ay)) * core
    return density


@dataclass(frozen=True)
class MCSettings:
    n_paths: int = 100_000
    seed: int = 0
    t_ladder: tuple[float, ...] = (0.02, 0.01, 0.005)
    R_list: tuple[float, ...] = (1.0,)
    workers: int | None = None
    step: float | None = None
    eps: float | None = None
    antithetic: bool = True
    order: int = 2
    chunk_size: int = 4096
    compare: bool = False


@dataclass(frozen=True)
class QuadSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8


@dataclass(frozen=True)
class SimulateSettings:
    t_max: float = 1.0
    step: float = 0.01
    R: float | None = None
    n_paths: int = 1


@dataclass(frozen=True)
class GeneratorSettings:
    t: float = 0.5
    n_paths: int = 100_000
    step: float | None = None
    h_ladder: tuple[float, ...] = (0.02, 0.01, 0.005)
    test_functions: tuple[dict, ...] = ({"kind": "bump", "center": [0.0, 0.0], "width": 1.0},)


@dataclass(frozen=True)
class CharacteristicsSettings:
    t: float = 0.5
    n_paths: int = 10_000
    step: float | None = None
    rectangles: tuple[tuple[float, float, float, float], ...] = ()


@dataclass(frozen=True)
class OutputSettings:
    dir: str = "out"
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentConfig:
    model: CogarchParams
    starts: tuple[StatePoint, ...] = (StatePoint(0.0, 0.0),)
    xis: tuple[tuple[float, float], ...] = ((1.0, 0.0),)
    mc: MCSettings = MCSettings()
    quadrature: QuadSettings = QuadSettings()
    simulate: SimulateSettings = SimulateSettings()
    generator: GeneratorSettings = GeneratorSettings()
    characteristics: CharacteristicsSettings = CharacteristicsSettings()
    outputs: OutputSettings = OutputSettings()
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class _Reader:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path: str, msg: str):
        raise ConfigError(msg, self.lines.get(path), path)

    def section(self, data: dict, path: str, allowed: set[str]) -> dict:
        if data is None:
            return {}
        if not isinstance(data, dict):
            self.fail(path, "expected a mapping")
        for key in data:
            if key not in allowed:
                self.fail(f"{path}.{key}".lstrip("."), f"unknown key (allowed: {', '.join(sorted(allowed))})")
        return data

    def number(self, data, key, path, default=None, *, positive=False, nonneg=False, integer=False,
               optional=False):
        full = f"{path}.{key}"
        if key not in data or data[key] is None:
            if default is None and not optional:
                self.fail(full, "required")
            return default
        val = data[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(full, f"expected a number, got {val!r}")
        if integer and (not float(val).is_integer()):
            self.fail(full, "expected an integer")
        if not math.isfinite(val):
            self.fail(full, "must be finite")
        if positive and not val > 0:
            self.fail(full, "must be > 0")
        if nonneg and not val >= 0:
            self.fail(full, "must be >= 0")
        return int(val) if integer else float(val)

    def numbers(self, data, key, path, default, length=None, positive=False):
        full = f"{path}.{key}"
        if key not in data:
            return default
        val = data[key]
        if not isinstance(val, list) or not val:
            self.fail(full, "expected a non-empty list")
        out = []
        for i, item in enumerate(val):
            if length is not None:
                if not isinstance(item, list) or len(item) != length:
                    self.fail(f"{full}[{i}]", f"expected a list of {length} numbers")
                for j, x in enumerate(item):
                    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                        self.fail(f"{full}[{i}]", "entries must be finite numbers")
                out.append(tuple(float(x) for x in item))
            else:
                if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
                    self.fail(f"{full}[{i}]", "entries must be finite numbers")
                if positive and not item > 0:
                    self.fail(f"{full}[{i}]", "must be > 0")
                out.append(float(item))
        return tuple(out)


def _measure(r: _Reader, data, path: str):
    if data is None:
        return ZERO_MEASURE
    data = r.section(data, path, {"atoms", "tempered_stable"})
    if len(data) > 1:
        r.fail(path, "give exactly one of 'atoms' or 'tempered_stable'")
    if "atoms" in data:
        atoms = r.numbers(data, "atoms", path, (), length=2)
        for i, (s, rate) in enumerate(atoms):
            if s == 0:
                r.fail(f"{path}.atoms[{i}]", "atom size must be nonzero")
            if not rate > 0:
                r.fail(f"{path}.atoms[{i}]", "atom rate must be > 0")
        return AtomicMeasure(atoms)
    if "tempered_stable" in data:
        p = f"{path}.tempered_stable"
        ts = r.section(data["tempered_stable"], p,
                       {"alpha", "c_pos", "c_neg", "decay_pos", "decay_neg", "cutoffs"})
        alpha = r.number(ts, "alpha", p)
        if not 0 <= alpha < 2:
            r.fail(f"{p}.alpha", "must satisfy 0 <= alpha < 2")
        kw = {k: r.number(ts, k, p, 1.0, nonneg=True) for k in ("c_pos", "c_neg", "decay_pos", "decay_neg")}
        cut = r.numbers(ts, "cutoffs", p, (-50.0, 50.0))
        if len(cut) != 2 or not cut[0] < 0 < cut[1]:
            r.fail(f"{p}.cutoffs", "expected [y_min < 0, y_max > 0]")
        return DensityMeasure(tempered_stable_density(alpha, **kw), alpha, (cut[0], cut[1]))
    return ZERO_MEASURE


def _model(r: _Reader, data) -> CogarchParams:
    if data is None:
        r.fail("model", "required section")
    data = r.section(data, "model", {"beta", "delta", "lam", "driver"})
    beta = r.number(data, "beta", "model")
    delta = r.number(data, "delta", "model")
    lam = r.number(data, "lam", "model", 0.0)
    if not 0 < delta < 1:
        r.fail("model.delta", f"violates constraint 0<δ<1 (0 < delta < 1), got {delta}")
    if not beta > 0:
        r.fail("model.beta", f"violates constraint β>0 (beta > 0), got {beta}")
    if not lam >= 0:
        r.fail("model.lam", f"violates constraint λ≥0 (lam >= 0), got {lam}")
    drv = r.section(data.get("driver"), "model.driver", {"drift", "gaussian", "measure"})
    triplet = LevyTriplet(r.number(drv, "drift", "model.driver", 0.0),
                          r.number(drv, "gaussian", "model.driver", 0.0, nonneg=True),
                          _measure(r, drv.get("measure"), "model.driver.measure"))
    return CogarchParams(beta, delta, lam, triplet)


def parse_config(text: str) -> ExperimentConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from exc
    if node is None:
        raise ConfigError("empty configuration")
    lines: dict = {}
    raw = _plain(node, lines, "")
    r = _Reader(lines)
    raw = r.section(raw, "", {"model", "grids", "mc", "quadrature", "simulate", "generator",
                              "characteristics", "outputs"})
    model = _model(r, raw.get("model"))

    g = r.section(raw.get("grids"), "grids", {"starts", "xi", "xi_grid"})
    starts = tuple(StatePoint(a, b) for a, b in r.numbers(g, "starts", "grids", ((0.0, 0.0),), length=2))
    if "xi" in g and "xi_grid" in g:
        r.fail("grids", "give either 'xi' or 'xi_grid'")
    xis = r.numbers(g, "xi", "grids", ((1.0, 0.0),), length=2)
    if "xi_grid" in g:
        xg = r.section(g["xi_grid"], "grids.xi_grid", {"lo", "hi", "n"})
        lo = r.number(xg, "lo", "grids.xi_grid")
        hi = r.number(xg, "hi", "grids.xi_grid")
        n = r.number(xg, "n", "grids.xi_grid", integer=True, positive=True)
        axis = np.linspace(lo, hi, n)
        xis = tuple((float(a), float(b)) for a in axis for b in axis)

    m = r.section(raw.get("mc"), "mc", set(MCSettings.__dataclass_fields__))
    d = MCSettings()
    mc = MCSettings(
        n_paths=r.number(m, "n_paths", "mc", d.n_paths, positive=True, integer=True),
        seed=r.number(m, "seed", "mc", d.seed, integer=True) if "seed" in m else d.seed,
        t_ladder=r.numbers(m, "t_ladder", "mc", d.t_ladder, positive=True),
        R_list=r.numbers(m, "R_list", "mc", d.R_list, positive=True),
        workers=r.number(m, "workers", "mc", None, positive=True, integer=True, optional=True),
        step=r.number(m, "step", "mc", None, positive=True, optional=True),
        eps=r.number(m, "eps", "mc", None, positive=True, optional=True),
        antithetic=bool(m.get("antithetic", d.antithetic)),
        order=r.number(m, "order", "mc", d.order, positive=True, integer=True),
        chunk_size=r.number(m, "chunk_size", "mc", d.chunk_size, positive=True, integer=True),
        compare=bool(m.get("compare", d.compare)),
    )
    if mc.n_paths < 2:
        r.fail("mc.n_paths", "must be >= 2")
    if mc.antithetic and (mc.n_paths % 2 or mc.chunk_size % 2):
        r.fail("mc.n_paths", "antithetic sampling needs even n_paths and chunk_size")
    if isinstance(model.driver.measure, DensityMeasure) and mc.eps is None:
        r.fail("mc", "density drivers need 'eps' (small-jump truncation) for simulation")

    q = r.section(raw.get("quadrature"), "quadrature", {"abs_tol", "rel_tol"})
    quad = QuadSettings(r.number(q, "abs_tol", "quadrature", 1e-10, positive=True),
                        r.number(q, "rel_tol", "quadrature", 1e-8, positive=True))

    s = r.section(raw.get("simulate"), "simulate", {"t_max", "step", "R", "n_paths"})
    sim = SimulateSettings(r.number(s, "t_max", "simulate", 1.0, positive=True),
                           r.number(s, "step", "simulate", 0.01, positive=True),
                           r.number(s, "R", "simulate", None, positive=True, optional=True),
                           r.number(s, "n_paths", "simulate", 1, positive=True, integer=True))

    gs = r.section(raw.get("generator"), "generator", {"t", "n_paths", "step", "h_ladder", "test_functions"})
    gd = GeneratorSettings()
    tfs = gs.get("test_functions", list(gd.test_functions))
    if not isinstance(tfs, list) or not tfs:
        r.fail("generator.test_functions", "expected a non-empty list")
    for i, tf in enumerate(tfs):
        p = f"generator.test_functions[{i}]"
        tf = r.section(tf, p, {"kind", "center", "width", "amplitude", "xi", "r_in", "r_out"})
        if tf.get("kind") not in ("bump", "cos", "sin"):
            r.fail(p, "kind must be one of bump, cos, sin")
    gen = GeneratorSettings(
        t=r.number(gs, "t", "generator", gd.t, positive=True),
        n_paths=r.number(gs, "n_paths", "generator", gd.n_paths, positive=True, integer=True),
        step=r.number(gs, "step", "generator", None, positive=True, optional=True),
        h_ladder=r.numbers(gs, "h_ladder", "generator", gd.h_ladder, positive=True),
        test_functions=tuple(tfs),
    )

    cs = r.section(raw.get("characteristics"), "characteristics", {"t", "n_paths", "step", "rectangles"})
    ch = CharacteristicsSettings(
        t=r.number(cs, "t", "characteristics", 0.5, positive=True),
        n_paths=r.number(cs, "n_paths", "characteristics", 10_000, positive=True, integer=True),
        step=r.number(cs, "step", "characteristics", None, positive=True, optional=True),
        rectangles=r.numbers(cs, "rectangles", "characteristics", (), length=4),
    )

    o = r.section(raw.get("outputs"), "outputs", {"dir", "format"})
    fmt = o.get("format", "csv")
    if fmt not in ("csv", "json"):
        r.fail("outputs.format", "must be 'csv' or 'json'")
    out = OutputSettings(str(o.get("dir", "out")), fmt)

    return ExperimentConfig(model, starts, xis, mc, quad, sim, gen, ch, out, raw)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))

"""Command-line front end: ``cogarch-symbol <subcommand> --config run.yaml``.

Each run writes ``<subcommand>_report.json`` and, with ``--format csv``,
plot-ready CSV tables next to it.  The exit code is 0 exactly when every
verdict in the report passes.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import BACKEND
from .characteristics import empirical_characteristics_check, integrate_characteristics
from .cogarch import StatePoint, path_from_batch, simulate_chunk
from .config import ConfigError, ExperimentConfig, load_config
from .generator import (apply_generator, cutoff_plane_wave, gaussian_bump, martingale_residual,
                        semigroup_derivative)
from .mc import compare, estimate_symbol
from .quadrature import QuadratureError
from .symbol import cogarch_symbol

SUBCOMMANDS = ("simulate", "symbol", "mc-symbol", "verify-symbol", "generator-check",
               "characteristics-check")
OUT_DIR_ENV = "COGARCH_OUT_DIR"

PATH_COLUMNS = ("t", "g", "v", "is_jump", "dz")
SYMBOL_COLUMNS = ("g", "v", "xi1", "xi2", "re_p", "im_p", "quad_err")
MC_COLUMNS = ("g", "v", "xi1", "xi2", "R", "re_est", "im_est", "se_re", "se_im",
              "re_closed", "im_closed", "z_re", "z_im", "ok")
GENERATOR_COLUMNS = ("test_function", "g", "v", "Gu", "semigroup_est", "semigroup_se",
                     "residual_mean", "residual_se", "ok")
CHARACTERISTICS_COLUMNS = ("t", "B1", "B2", "C11")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class Run:
    """Collects tables and verdicts for one subcommand invocation."""

    def __init__(self, cfg: ExperimentConfig, seed: int, workers: int | None):
        self.cfg = cfg
        self.seed = seed
        self.workers = workers
        self.tables: dict[str, tuple] = {}
        self.results: dict = {}
        self.verdicts: list[dict] = []

    def table(self, name, columns, rows):
        self.tables[name] = (tuple(columns), [tuple(r) for r in rows])

    def verdict(self, name: str, ok: bool, **detail):
        self.verdicts.append({"name": name, "ok": bool(ok), **detail})

    @property
    def passed(self) -> bool:
        return all(v["ok"] for v in self.verdicts)


def _mc_kwargs(run: Run) -> dict:
    mc = run.cfg.mc
    return dict(seed=run.seed, step=mc.step, eps=mc.eps, antithetic=mc.antithetic,
                workers=run.workers, chunk_size=mc.chunk_size)


def cmd_simulate(run: Run):
    cfg, sim = run.cfg, run.cfg.simulate
    summary = []
    for i, x in enumerate(cfg.starts):
        batch = simulate_chunk(x, cfg.model, sim.t_max, sim.step, sim.n_paths, run.seed, R=sim.R,
                               eps=cfg.mc.eps)
        for j in range(sim.n_paths):
            p = path_from_batch(batch, j)
            rows = zip(p.grid_times, p.g, p.v, p.is_jump, p.dz)
            run.table(f"path_s{i}_p{j}", PATH_COLUMNS, rows)
            finite = bool(np.all(np.isfinite(p.g)) and np.all(np.isfinite(p.v)))
            run.verdict(f"finite_path_s{i}_p{j}", finite)
            summary.append({"start": list(x), "path": j, "final": [float(p.g[-1]), float(p.v[-1])],
                            "n_jumps": len(p.jump_records), "stopped_at": p.stopped_at})
    run.results["paths"] = summary


def cmd_symbol(run: Run):
    cfg, q = run.cfg, run.cfg.quadrature
    rows = []
    for x in cfg.starts:
        for xi in cfg.xis:
            s = cogarch_symbol(x, xi, cfg.model, q.abs_tol, q.rel_tol)
            rows.append((x.g, x.v, xi[0], xi[1], s.value.real, s.value.imag, s.quadrature_error))
    run.table("symbol", SYMBOL_COLUMNS, rows)
    run.results["n_points"] = len(rows)
    run.verdict("symbol_finite", all(math.isfinite(r[4]) and math.isfinite(r[5]) for r in rows))


def _mc_grid(run: Run, with_compare: bool):
    cfg, mc, q = run.cfg, run.cfg.mc, run.cfg.quadrature
    rows, reports = [], []
    max_z = 0.0
    for x in cfg.starts:
        for xi in cfg.xis:
            closed = cogarch_symbol(x, xi, cfg.model, q.abs_tol, q.rel_tol).value
            by_r = {}
            for R in mc.R_list:
                est = estimate_symbol(x, xi, cfg.model, R=R, t_ladder=mc.t_ladder, n_paths=mc.n_paths,
                                      order=mc.order, **_mc_kwargs(run))
                by_r[R] = est
                entry = {"x": list(x), "xi": list(xi), **est.as_dict()}
                row = [x.g, x.v, xi[0], xi[1], R, est.estimate.real, est.estimate.imag, *est.stderr]
                if with_compare:
                    cmp = compare(est.estimate, est.stderr, closed, atol=est.bias_floor)
                    entry["closed_form"] = [closed.real, closed.imag]
                    entry["comparison"] = cmp
                    max_z = max(max_z, *cmp["z"])
                    run.verdict(f"closed_form x={list(x)} xi={list(xi)} R={R}", cmp["ok"], z=cmp["z"])
                    row += [closed.real, closed.imag, *cmp["z"], cmp["ok"]]
                else:
                    row += [closed.real, closed.imag, "", "", ""]
                rows.append(row)
                reports.append(entry)
            if with_compare and len(by_r) > 1:
                radii = list(by_r)
                for a in range(len(radii)):
                    for b in range(a + 1, len(radii)):
                        ea, eb = by_r[radii[a]], by_r[radii[b]]
                        cmp = compare(ea.estimate, ea.stderr, eb.estimate, eb.stderr,
                                      atol=max(ea.bias_floor, eb.bias_floor))
                        max_z = max(max_z, *cmp["z"])
                        run.verdict(f"R_independence x={list(x)} xi={list(xi)} R={[radii[a], radii[b]]}",
                                    cmp["ok"], z=cmp["z"])
    run.table("mc_symbol", MC_COLUMNS, rows)
    run.results["estimates"] = reports
    if with_compare:
        run.results["max_abs_diff_over_stderr"] = max_z


def cmd_mc_symbol(run: Run):
    _mc_grid(run, run.cfg.mc.compare)


def cmd_verify_symbol(run: Run):
    _mc_grid(run, True)


def _test_function(spec: dict):
    kind = spec["kind"]
    center = spec.get("center", [0.0, 0.0])
    if kind == "bump":
        return gaussian_bump(center, spec.get("width", 1.0), spec.get("amplitude", 1.0))
    return cutoff_plane_wave(spec.get("xi", [1.0, 0.0]), center, spec.get("r_in", 2.0),
                             spec.get("r_out", 4.0), kind)


def cmd_generator_check(run: Run):
    cfg, gs, q = run.cfg, run.cfg.generator, run.cfg.quadrature
    rows, reports = [], []
    kw = _mc_kwargs(run)
    for spec in gs.test_functions:
        f = _test_function(spec)
        for x in cfg.starts:
            gu = apply_generator(f, x, cfg.model, q.abs_tol, q.rel_tol)
            sg = semigroup_derivative(f, x, cfg.model, gs.h_ladder, gs.n_paths, order=cfg.mc.order,
                                      **{**kw, "step": gs.step})
            cmp = compare(sg.estimate, sg.stderr, complex(gu), atol=sg.bias_floor)
            res_mean, res_se = martingale_residual(f, x, cfg.model, gs.t, gs.n_paths,
                                                   **{**kw, "step": gs.step})
            res_ok = abs(res_mean) <= 3.0 * res_se + 1e-8
            ok = cmp["ok"] and res_ok
            run.verdict(f"semigroup {f.name} x={list(x)}", cmp["ok"], z=cmp["z"][0])
            run.verdict(f"martingale {f.name} x={list(x)}", res_ok, mean=res_mean, stderr=res_se)
            rows.append((f.name, x.g, x.v, gu, sg.estimate.real, sg.stderr[0], res_mean, res_se, ok))
            reports.append({"test_function": f.name, "x": list(x), "Gu": gu,
                            "semigroup": sg.as_dict(), "residual": [res_mean, res_se], "ok": ok})
    run.table("generator_check", GENERATOR_COLUMNS, rows)
    run.results["checks"] = reports


def cmd_characteristics_check(run: Run):
    cfg, cs = run.cfg, run.cfg.characteristics
    step = cs.step if cs.step is not None else cs.t / 200.0
    reports = []
    for i, x in enumerate(cfg.starts):
        batch = simulate_chunk(x, cfg.model, cs.t, step, 1, run.seed, eps=cfg.mc.eps)
        path = path_from_batch(batch, 0)
        ch = integrate_characteristics(path, cfg.model)
        run.table(f"characteristics_s{i}", CHARACTERISTICS_COLUMNS, zip(ch.times, ch.B1, ch.B2, ch.C11))
        rep = empirical_characteristics_check(cfg.model, x, cs.t, cs.n_paths, run.seed, cs.rectangles,
                                              step=step, eps=cfg.mc.eps, workers=run.workers,
                                              chunk_size=cfg.mc.chunk_size)
        for c in rep.checks:
            run.verdict(f"{c['name']} x={list(x)}", c["ok"])
        reports.append({"x": list(x), **rep.as_dict()})
    run.results["checks"] = reports


COMMANDS = {
    "simulate": cmd_simulate,
    "symbol": cmd_symbol,
    "mc-symbol": cmd_mc_symbol,
    "verify-symbol": cmd_verify_symbol,
    "generator-check": cmd_generator_check,
    "characteristics-check": cmd_characteristics_check,
}


def output_dir(cli_out: str | None, cfg: ExperimentConfig) -> Path:
    """``--out`` beats ``$COGARCH_OUT_DIR`` beats ``outputs.dir``."""
    return Path(cli_out or os.environ.get(OUT_DIR_ENV) or cfg.outputs.dir)


def write_outputs(run: Run, subcommand: str, out: Path, fmt: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "subcommand": subcommand,
        "version": __version__,
        "backend": BACKEND,
        "config_hash": run.cfg.hash,
        "seed": run.seed,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "results": run.results,
        "verdicts": run.verdicts,
        "passed": run.passed,
    }
    if fmt == "csv":
        files = []
        for name, (cols, rows) in run.tables.items():
            path = out / f"{name}.csv"
            path.write_bytes(csv_text(cols, rows).encode("utf-8"))
            files.append(path.name)
        report["tables"] = files
    else:
        report["tables"] = {name: {"columns": list(cols), "rows": [list(r) for r in rows]}
                            for name, (cols, rows) in run.tables.items()}
    path = out / f"{subcommand.replace('-', '_')}_report.json"
    path.write_text(json.dumps(_jsonable(report), indent=2) + "\n", encoding="utf-8", newline="\n")
    return path


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cogarch-symbol", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--seed", type=int, default=None, help="overrides mc.seed")
    p.add_argument("--workers", type=int, default=None, help="parallel path batches (default: cores)")
    p.add_argument("--out", default=None, help=f"output directory (overrides ${OUT_DIR_ENV})")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.workers is not None and args.workers < 1:
        print("config error: --workers must be >= 1", file=sys.stderr)
        return 2
    seed = cfg.mc.seed if args.seed is None else args.seed
    run = Run(cfg, seed, args.workers if args.workers is not None else cfg.mc.workers)
    try:
        COMMANDS[args.subcommand](run)
    except (QuadratureError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure in {args.subcommand}: {exc}", file=sys.stderr)
        return 3
    path = write_outputs(run, args.subcommand, output_dir(args.out, cfg), args.format or cfg.outputs.format)
    n_ok = sum(v["ok"] for v in run.verdicts)
    print(f"{args.subcommand}: {n_ok}/{len(run.verdicts)} verdicts passed; report at {path}")
    return 0 if run.passed else 1


if __name__ == "__main__":
    sys.exit(main())

"""Time the path kernel under both backends on identical random inputs.

    python3 benchmarks/bench_kernels.py --paths 20000 --repeat 5
"""
import argparse
import time

import numpy as np

from cogarch_symbol import AtomicMeasure, CogarchParams, LevyTriplet, StatePoint, simulate_chunk
from cogarch_symbol import _kernels
from cogarch_symbol._accel import HAS_NUMBA

CASES = {
    "brownian": LevyTriplet(0.0, 1.0),
    "atom": LevyTriplet(0.0, 0.0, AtomicMeasure(((0.5, 2.0),))),
    "mixed": LevyTriplet(0.1, 0.5, AtomicMeasure(((0.5, 2.0), (-1.2, 1.0)))),
}


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--t-max", type=float, default=0.5)
    ap.add_argument("--step", type=float, default=0.005)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAS_NUMBA:
        raise SystemExit("numba backend unavailable (unset COGARCH_BACKEND=numpy or install numba)")

    print(f"{'case':10s} {'stage':8s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, drv in CASES.items():
        p = CogarchParams(1.0, 0.5, 0.25, drv)

        def run(backend):
            return simulate_chunk(StatePoint(0.0, 0.0), p, args.t_max, args.step, args.paths, 0,
                                  R=args.radius, backend=backend)

        run("numba")  # compile outside the timing
        t_nb, a = best_time(lambda: run("numba"), args.repeat)
        t_np, b = best_time(lambda: run("numpy"), args.repeat)
        diff = max(float(np.max(np.abs(a.v_post - b.v_post))), float(np.max(np.abs(a.dg_post - b.dg_post))))
        print(f"{name:10s} {'chunk':8s} {t_nb:9.3f} {t_np:9.3f} {t_np / t_nb:7.1f}x {diff:11.1e}")

        # Kernel alone on the chunk's event slots and a fixed normal array.
        normals = np.random.default_rng(1).standard_normal(a.times.shape)
        kw = dict(v0=0.0, log_delta=p.log_delta, v_eq=p.stationary_log_variance, kappa=p.kappa,
                  ell=drv.simulation_drift(), sqrt_q=float(np.sqrt(drv.gaussian)), radius=args.radius)
        k_nb, x = best_time(lambda: _kernels.simulate_events(a.times, a.dz, normals, backend="numba", **kw),
                            args.repeat)
        k_np, y = best_time(lambda: _kernels.simulate_events(a.times, a.dz, normals, backend="numpy", **kw),
                            args.repeat)
        diff = float(np.max(np.abs(x["v_post"] - y["v_post"])))
        print(f"{name:10s} {'kernel':8s} {k_nb:9.3f} {k_np:9.3f} {k_np / k_nb:7.1f}x {diff:11.1e}")


if __name__ == "__main__":
    main()

"""Hot loops of the jump-adapted COGARCH scheme.

Each kernel exists twice: ``*_numba`` loops path by path under ``@njit``,
``*_numpy`` loops over event slots with whole-chunk array operations.  Both
consume the same pre-drawn random arrays and share the scalar formulas
below, so they agree to rounding.

State is carried as ``(dg, v)`` where ``dg = g - g0``; between V-jumps the
log-variance is always recomputed from the last V-jump (the anchor), which
keeps the V-path bitwise independent of where grid and G-only events fall.
"""
import numpy as np

from ._accel import BACKEND, njit


def flow_v(v, dt, log_delta, v_eq):
    """Exact log-variance flow of ``s' = beta + s log(delta)`` over ``dt``."""
    return v + np.log1p(-np.expm1(v_eq - v) * np.expm1(dt * log_delta))


def int_var(v, dt, log_delta, v_eq):
    """``int_0^dt sigma^2`` along the flow started at log-variance ``v``."""
    return (np.exp(v) * -np.expm1(v_eq - v) * np.expm1(dt * log_delta) / log_delta
            + np.exp(v_eq) * dt)


def int_vol(v0, vm, v1, dt):
    """Simpson rule for ``int sigma`` from log-variances at ends and midpoint."""
    return dt / 6.0 * (np.exp(0.5 * v0) + 4.0 * np.exp(0.5 * vm) + np.exp(0.5 * v1))


_flow_v_nb = njit(cache=True)(flow_v)
_int_var_nb = njit(cache=True)(int_var)
_int_vol_nb = njit(cache=True)(int_vol)


@njit(cache=True)
def _flow_v_loop(v, dt, log_delta, v_eq, out):
    for i in range(v.shape[0]):
        out[i] = _flow_v_nb(v[i], dt[i], log_delta, v_eq)


def flow_v_backend(v, dt, log_delta, v_eq, backend=None):
    """``flow_v`` evaluated with the same arithmetic as the selected path kernel."""
    if (backend or BACKEND) != "numba":
        return flow_v(v, dt, log_delta, v_eq)
    vb, db = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(dt, dtype=float))
    out = np.empty(vb.size)
    _flow_v_loop(np.ascontiguousarray(vb).ravel(), np.ascontiguousarray(db).ravel(),
                 float(log_delta), float(v_eq), out)
    return out.reshape(vb.shape) if vb.ndim else float(out[0])


@njit(cache=True, nogil=True)
def _simulate_numba(times, dz, normals, v0, log_delta, v_eq, kappa, ell, sqrt_q, radius,
                    dg_pre, v_pre, jdg, jdv, dg_post, v_post, gauss, stop_slot):
    n, k_max = times.shape
    for i in range(n):
        dg = 0.0
        v = v0
        t_a = 0.0
        v_a = v0
        stopped = False
        stop_slot[i] = -1
        dg_pre[i, 0] = 0.0
        v_pre[i, 0] = v0
        dg_post[i, 0] = 0.0
        v_post[i, 0] = v0
        jdg[i, 0] = 0.0
        jdv[i, 0] = 0.0
        gauss[i, 0] = 0.0
        for k in range(1, k_max):
            if stopped:
                dg_pre[i, k] = dg
                v_pre[i, k] = v
                dg_post[i, k] = dg
                v_post[i, k] = v
                jdg[i, k] = 0.0
                jdv[i, k] = 0.0
                gauss[i, k] = 0.0
                continue
            t0 = times[i, k - 1]
            t1 = times[i, k]
            dt = t1 - t0
            vm = _flow_v_nb(v_a, 0.5 * (t0 + t1) - t_a, log_delta, v_eq)
            v1 = _flow_v_nb(v_a, t1 - t_a, log_delta, v_eq)
            i1 = _int_vol_nb(v, vm, v1, dt)
            i2 = _int_var_nb(v, dt, log_delta, v_eq)
            gi = sqrt_q * np.sqrt(i2) * normals[i, k]
            dg = dg + ell * i1 + gi
            v = v1
            gauss[i, k] = gi
            dg_pre[i, k] = dg
            v_pre[i, k] = v
            z = dz[i, k]
            a = 0.0
            b = 0.0
            if z != 0.0:
                a = np.exp(0.5 * v) * z
                b = np.log1p(kappa * z * z)
                dg = dg + a
                if b != 0.0:
                    v = v + b
                    t_a = t1
                    v_a = v
            jdg[i, k] = a
            jdv[i, k] = b
            dg_post[i, k] = dg
            v_post[i, k] = v
            if max(abs(dg), abs(v - v0)) > radius:
                stopped = True
                stop_slot[i] = k


def _simulate_numpy(times, dz, normals, v0, log_delta, v_eq, kappa, ell, sqrt_q, radius,
                    dg_pre, v_pre, jdg, jdv, dg_post, v_post, gauss, stop_slot):
    n, k_max = times.shape
    dg = np.zeros(n)
    v = np.full(n, v0)
    t_a = np.zeros(n)
    v_a = np.full(n, v0)
    live = np.ones(n, dtype=bool)
    stop_slot[:] = -1
    for arr, val in ((dg_pre, 0.0), (v_pre, v0), (dg_post, 0.0), (v_post, v0), (jdg, 0.0),
                     (jdv, 0.0), (gauss, 0.0)):
        arr[:, 0] = val
    for k in range(1, k_max):
        t0 = times[:, k - 1]
        t1 = times[:, k]
        dt = t1 - t0
        vm = flow_v(v_a, 0.5 * (t0 + t1) - t_a, log_delta, v_eq)
        v1 = flow_v(v_a, t1 - t_a, log_delta, v_eq)
        i1 = int_vol(v, vm, v1, dt)
        i2 = int_var(v, dt, log_delta, v_eq)
        gi = np.where(live, sqrt_q * np.sqrt(i2) * normals[:, k], 0.0)
        dg = np.where(live, dg + ell * i1 + gi, dg)
        v = np.where(live, v1, v)
        gauss[:, k] = gi
        dg_pre[:, k] = dg
        v_pre[:, k] = v
        z = dz[:, k]
        jump = live & (z != 0.0)
        a = np.where(jump, np.exp(0.5 * v) * z, 0.0)
        b = np.where(jump, np.log1p(kappa * z * z), 0.0)
        dg = np.where(jump, dg + a, dg)
        moved = b != 0.0
        v = np.where(moved, v + b, v)
        t_a = np.where(moved, t1, t_a)
        v_a = np.where(moved, v, v_a)
        jdg[:, k] = a
        jdv[:, k] = b
        dg_post[:, k] = dg
        v_post[:, k] = v
        exited = live & (np.maximum(np.abs(dg), np.abs(v - v0)) > radius)
        stop_slot[exited] = k
        live &= ~exited


def simulate_events(times, dz, normals, v0, log_delta, v_eq, kappa, ell, sqrt_q, radius,
                    backend=None):
    """Run the event-slot scheme; returns a dict of ``(n, K)`` arrays."""
    n, k_max = times.shape
    out = {name: np.empty((n, k_max)) for name in
           ("dg_pre", "v_pre", "jdg", "jdv", "dg_post", "v_post", "gauss")}
    stop_slot = np.empty(n, dtype=np.int64)
    backend = backend or BACKEND
    fn = _simulate_numba if backend == "numba" else _simulate_numpy
    fn(np.ascontiguousarray(times), np.ascontiguousarray(dz), np.ascontiguousarray(normals),
       float(v0), float(log_delta), float(v_eq), float(kappa), float(ell), float(sqrt_q),
       float(radius), out["dg_pre"], out["v_pre"], out["jdg"], out["jdv"], out["dg_post"],
       out["v_post"], out["gauss"], stop_slot)
    out["stop_slot"] = stop_slot
    return out

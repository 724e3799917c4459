"""Compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the conical ODE table integration and one march segment with each
backend and checks that the two agree.
"""

from __future__ import annotations

import argparse
import time
import warnings

import numpy as np

from conic_shock import _fallback
from conic_shock.background import cluster_nodes, post_shock_state, shoot_attached_shock
from conic_shock.gas import Freestream, GasModel
from conic_shock.perturb import MarchConfig, MarchContext, init_data

try:
    from conic_shock import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_ode(mod, bg, repeat):
    gas = bg.gas
    post = post_shock_state(bg.s0, gas, bg.fs)
    g0 = bg.s0 * post.u_z - post.u_r
    x = bg.delta * cluster_nodes(2000)[::-1]
    return best_of(lambda: mod.rk4_conical(x, (post.rho, post.u_z, g0), gas.A, gas.gamma, base=bg.b0), repeat)


def bench_march(mod, ctx, repeat, z_end):
    def run():
        f = init_data(ctx)
        W, V, P, PHI = (np.ascontiguousarray(a.copy()) for a in (f.w, f.v, f.p, f.phi))
        XI, DCHI = f.xi.copy(), f.dchi.copy()
        acc = np.zeros(_fallback.N_ACC)
        acc[6] = -1.0
        status, z, steps, _ = mod.march_segment(ctx.tab, ctx.prm, ctx.iprm, W, V, P, PHI, XI, DCHI, acc, 1.0, z_end, 0)
        return steps, W, acc

    return best_of(run, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--z-end", type=float, default=1.5)
    args = ap.parse_args(argv)
    warnings.simplefilter("ignore")
    gas = GasModel(1.0, 1.4)
    bg = shoot_attached_shock(0.1, gas, Freestream(gas, 50.0))
    rows = []

    t_py, (out_py, *_) = bench_ode(_fallback, bg, args.repeat)
    if _kernels is not None:
        t_cy, (out_cy, *_) = bench_ode(_kernels, bg, args.repeat)
        diff = float(np.max(np.abs(out_py - out_cy) / np.abs(out_py)))
        rows.append(("rk4_conical, 2000 nodes", t_py, t_cy, diff))

    for nth in (1, 8):
        ctx = MarchContext(bg, MarchConfig(epsilon=1e-4, n_sigma=32, n_theta=nth))
        t_py, (steps, W_py, acc_py) = bench_march(_fallback, ctx, max(1, args.repeat // 3), args.z_end)
        if _kernels is not None:
            t_cy, (_, W_cy, acc_cy) = bench_march(_kernels, ctx, args.repeat, args.z_end)
            diff = float(abs(acc_py[0] - acc_cy[0]) / abs(acc_py[0]))
            rows.append((f"march_segment, 32x{nth}, {steps} steps", t_py, t_cy, diff))

    if _kernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':40s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'rel diff':>9s}")
    for name, tp, tc, d in rows:
        print(f"{name:40s} {tp:11.4f} {tc:11.5f} {tp / tc:8.1f} {d:9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

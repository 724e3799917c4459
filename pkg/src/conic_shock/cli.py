"""Command-line front end.

Exit codes: 0 pass, 2 verdict failure, 1 input or solver error.  Every
subcommand writes its artifacts to ``--out`` (CSV and/or JSON, see
``--format``) and prints a one-line summary.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .asymptotics import QUANTITIES, fit_remainder_rate, report_csv, report_json
from .background import apple_curve, shoot_attached_shock
from .errors import ConicShockError, InputError
from .gas import Freestream, GasModel
from .perturb import MarchConfig, energy_diagnostics, run_march
from .stability import DEFAULT_MU, hardy_check, multiplier_eval, power_sample, trig_samples

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _write(out: str, name: str, text: str) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _wants(args, kind: str) -> bool:
    return args.format in (kind, "both")


def _flow(args):
    gas = GasModel(args.A, args.gamma)
    fs = Freestream(gas, args.q0, args.rho0)
    return gas, fs


def _background(args):
    gas, fs = _flow(args)
    if not args.b0 > 0:
        raise InputError("b0 must be positive")
    return shoot_attached_shock(args.b0, gas, fs, n_nodes=args.nodes)


# ---------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    bg = _background(args)
    if _wants(args, "json"):
        _write(args.out, "background.json", bg.to_json())
    if _wants(args, "csv"):
        _write(args.out, "background.csv", bg.to_csv())
    print(f"s0 = {bg.s0!r}  delta = {bg.delta:.6e}  alpha = {bg.fit.alpha:.6f}  tangency = {bg.tangency:.2e}")
    return EXIT_PASS


def cmd_polar(args) -> int:
    gas, fs = _flow(args)
    rows = apple_curve(gas, fs, n=args.n)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s0", "cone_slope", "u_z", "u_r"])
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    _write(args.out, "polar.csv", buf.getvalue())
    if _wants(args, "json"):
        _write(args.out, "polar.json", json.dumps([dict(zip(("s0", "cone_slope", "u_z", "u_r"), r)) for r in rows], indent=1))
    best = max(rows, key=lambda r: r[1]) if rows else None
    print(f"{len(rows)} points; largest cone slope {best[1]:.6g} at s0={best[0]:.6g}" if best else "no points")
    return EXIT_PASS


def _q0_sweep(args) -> list[float]:
    if args.q0_list:
        return sorted(float(q) for q in args.q0_list)
    m = np.geomspace(args.b0q0_min, args.b0q0_max, args.n_q0)
    return [float(x) / args.b0 for x in m]


def cmd_asymptotics(args) -> int:
    gas = GasModel(args.A, args.gamma)
    names = args.quantities or ["s0", "u_r", "u_z", "rho", "uz2_minus_c2", "denominator"]
    unknown = [n for n in names if n not in QUANTITIES]
    if unknown:
        raise InputError(f"unknown quantity {unknown[0]!r}; choose from {sorted(QUANTITIES)}")
    q0s = _q0_sweep(args)
    fits = [fit_remainder_rate(n, args.b0, gas, q0s, rho0=args.rho0, n_nodes=args.nodes) for n in names]
    if _wants(args, "json"):
        _write(args.out, "asymptotics.json", report_json(fits))
    if _wants(args, "csv"):
        _write(args.out, "asymptotics.csv", report_csv(fits))
    for f in fits:
        print(f"{f.quantity:14s} slope {f.exponent_fitted:+.3f} expected {f.exponent_expected:+.3f} "
              f"r2 {f.r_squared:.4f} {'PASS' if f.passed else 'FAIL'}")
    return EXIT_PASS if all(f.passed for f in fits) else EXIT_FAIL


def cmd_stability(args) -> int:
    bg = _background(args)
    rep = multiplier_eval(bg, mu=args.mu, b_tilde=args.b_tilde)
    if _wants(args, "json"):
        _write(args.out, "multiplier.json", rep.to_json())
    if _wants(args, "csv"):
        _write(args.out, "multiplier.csv", rep.to_csv())
    failed = [k for k, v in rep.checks.items() if not v]
    print(f"verdict {'PASS' if rep.verdict else 'FAIL'}  Q0={rep.Q0:.6g}"
          + (f"  failed: {', '.join(failed)}" if failed else ""))
    return EXIT_PASS if rep.verdict else EXIT_FAIL


def cmd_hardy(args) -> int:
    samples = trig_samples(args.n, T=args.T, degree=args.degree, seed=args.seed)
    samples += [power_sample(0.0), power_sample(0.75)]
    worst = hardy_check(samples, mu=args.mu, T=args.T)
    ok = worst <= 1.0 + 1e-10
    _write(args.out, "hardy.json", json.dumps({"n": len(samples), "mu": args.mu, "T": args.T, "worst_ratio": worst, "passed": ok}, indent=1))
    print(f"{len(samples)} samples, worst ratio {worst:.6f} {'PASS' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_FAIL


_MARCH_FLAGS = ("epsilon", "z_end", "n_sigma", "n_theta", "cfl", "mu", "seed", "support_l", "xi_amp")


def cmd_march(args) -> int:
    bg = _background(args)
    opts = {k: getattr(args, k) for k in _MARCH_FLAGS if getattr(args, k) is not None}
    opts.update(args.march_extra or {})
    cfg = MarchConfig.from_dict(opts)
    dump = None
    if args.dump:
        dump = os.path.join(args.out, "stations")
        os.makedirs(dump, exist_ok=True)
    rep = run_march(bg, cfg, dump_dir=dump)
    diag = energy_diagnostics(rep)
    if _wants(args, "csv"):
        _write(args.out, "march.csv", rep.to_csv())
    if _wants(args, "json"):
        d = rep.to_dict()
        d["diagnostics"] = diag
        _write(args.out, "march.json", json.dumps(d, indent=1))
    print(f"z_end={rep.z[-1]:g} sup|grad|={rep.sup_grad[-1]:.3e} m0={rep.m0:.3f} (r2 {rep.m0_r2:.4f}) "
          f"verdict {'PASS' if diag['verdict'] else 'FAIL'}")
    return EXIT_PASS if diag["verdict"] else EXIT_FAIL


def _sweep_point(task):
    gamma, b0, b0q0, mu, A, rho0, nodes = task
    gas = GasModel(A, gamma)
    try:
        bg = shoot_attached_shock(b0, gas, Freestream(gas, b0q0 / b0, rho0), n_nodes=nodes)
        rep = multiplier_eval(bg, mu=mu)
        return (gamma, b0, b0q0, rep.Q0, rep.identity_residual, rep.identity_budget,
                rep.cone_cancellation_residual, bool(rep.verdict), "")
    except ConicShockError as exc:
        return (gamma, b0, b0q0, math.nan, math.nan, math.nan, math.nan, False, type(exc).__name__)


def _threads() -> int:
    raw = os.environ.get("CONIC_SHOCK_THREADS", "")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise InputError(f"CONIC_SHOCK_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return max(1, min(8, os.cpu_count() or 1))


def cmd_sweep(args) -> int:
    tasks = [
        (float(g), float(b), float(m), args.mu, args.A, args.rho0, args.nodes)
        for g in args.gammas
        for b in np.linspace(args.b0_min, args.b0_max, args.n_b0)
        for m in np.geomspace(args.b0q0_min, args.b0q0_max, args.n_q0)
    ]
    n = _threads()
    if n == 1:
        rows = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as ex:
            rows = list(ex.map(_sweep_point, tasks))
    rows.sort(key=lambda r: r[:3])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "b0", "b0q0", "Q0", "identity_residual", "identity_budget", "cone_residual", "verdict", "error"])
    for r in rows:
        w.writerow([repr(float(v)) for v in r[:7]] + [int(r[7]), r[8]])
    _write(args.out, "sweep.csv", buf.getvalue())
    npass = sum(r[7] for r in rows)
    print(f"{npass}/{len(rows)} grid points pass")
    return EXIT_PASS if npass == len(rows) else EXIT_FAIL


# ------------------------------------------------------------------ parser


def _flow_args(p, b0=True):
    p.add_argument("--gamma", type=float, default=1.4)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--q0", type=float, default=50.0)
    p.add_argument("--rho0", type=float, default=1.0)
    if b0:
        p.add_argument("--b0", type=float, default=0.1)
    p.add_argument("--nodes", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conic-shock", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="artifact directory")
    common.add_argument("--format", choices=("json", "csv", "both"), default="both")
    common.add_argument("--config", help="JSON file whose keys override the flags")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="background conical flow")
    _flow_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("polar", parents=[common], help="cone states over shock slopes")
    _flow_args(p, b0=False)
    p.add_argument("--n", type=int, default=64)
    p.set_defaults(func=cmd_polar)

    p = sub.add_parser("asymptotics", parents=[common], help="remainder-rate fits over a q0 sweep")
    _flow_args(p)
    p.add_argument("--quantities", nargs="*")
    p.add_argument("--q0-list", nargs="*", type=float)
    p.add_argument("--b0q0-min", type=float, default=25.0)
    p.add_argument("--b0q0-max", type=float, default=400.0)
    p.add_argument("--n-q0", type=int, default=6)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("stability", parents=[common], help="multiplier verdict")
    _flow_args(p)
    p.add_argument("--mu", type=float, default=DEFAULT_MU)
    p.add_argument("--b-tilde", type=float, default=1.0)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("hardy", parents=[common], help="weighted Hardy inequality samples")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--mu", type=float, default=DEFAULT_MU)
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_hardy)

    p = sub.add_parser("march", parents=[common], help="perturbation march")
    _flow_args(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--z-end", dest="z_end", type=float)
    p.add_argument("--n-sigma", dest="n_sigma", type=int)
    p.add_argument("--n-theta", dest="n_theta", type=int)
    p.add_argument("--cfl", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--support-l", dest="support_l", type=float)
    p.add_argument("--xi-amp", dest="xi_amp", type=float)
    p.add_argument("--dump", action="store_true", help="write binary station dumps")
    p.set_defaults(func=cmd_march)

    p = sub.add_parser("sweep", parents=[common], help="multiplier verdict over a parameter grid")
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--rho0", type=float, default=1.0)
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--gammas", nargs="+", type=float, default=[1.2, 1.4, 2.0])
    p.add_argument("--b0-min", type=float, default=0.05)
    p.add_argument("--b0-max", type=float, default=0.3)
    p.add_argument("--n-b0", type=int, default=6)
    p.add_argument("--b0q0-min", type=float, default=25.0)
    p.add_argument("--b0q0-max", type=float, default=400.0)
    p.add_argument("--n-q0", type=int, default=5)
    p.add_argument("--mu", type=float, default=DEFAULT_MU)
    p.set_defaults(func=cmd_sweep)
    return ap


def _apply_config(args, parser) -> None:
    with open(args.config) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    extra = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest) and dest not in ("func", "command", "config"):
            setattr(args, dest, val)
        elif args.command == "march" and dest in MarchConfig.__dataclass_fields__:
            extra[dest] = val
        else:
            raise InputError(f"unknown config field {key!r}")
    args.march_extra = extra


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.march_extra = {}
    try:
        if args.config:
            _apply_config(args, parser)
        return args.func(args)
    except (ConicShockError, OSError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

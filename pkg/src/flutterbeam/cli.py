"""Command line entry point: ``flutterbeam <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import energy_trace
from .errors import FlutterBeamError
from .fdm import DEFAULT_ATOL, DEFAULT_RTOL
from .modes import build_mode_basis, sample_modes
from .output import fmt, to_jsonable, write_columns, write_csv
from .params import BeamParams, BoundaryConfig, InitialData
from .scenarios import preset_names, run_scenario, scenario_from_name_or_path
from .stability import SWEEP_AXES, classify, modal_spectrum, sweep_ucrit

OUT_ENV = "FLUTTERBEAM_OUT"


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "flutterbeam-out")


def _emit(path_or_none, header, rows):
    if path_or_none is None:
        print(",".join(header))
        for r in rows:
            print(",".join(fmt(v) for v in r))
    else:
        write_csv(path_or_none, header, rows)
        print(path_or_none)


def _params(args) -> BeamParams:
    return BeamParams(D=args.D, L=args.L, beta=args.beta, U=args.U, k0=args.k0, b1=args.b1, b2=args.b2)


def _add_params(p):
    g = p.add_argument_group("model parameters")
    g.add_argument("--config", default="C", help="C, H, CF or CF-linear")
    g.add_argument("--D", type=float, default=1.0)
    g.add_argument("--L", type=float, default=1.0)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--U", type=float, default=0.0)
    g.add_argument("--k0", type=float, default=0.0)
    g.add_argument("--b1", type=float, default=0.0)
    g.add_argument("--b2", type=float, default=0.0)


def _parse_ic(text: str) -> InitialData:
    """mode:N | polynomial | elementary[:scale] | sine:eps | zero"""
    name, _, arg = text.partition(":")
    if name == "mode":
        return InitialData.mode(int(arg or 1))
    if name == "polynomial":
        return InitialData.polynomial()
    if name == "elementary":
        return InitialData.elementary(float(arg or 1.0))
    if name == "sine":
        return InitialData.sine(float(arg or 0.0))
    if name == "zero":
        return InitialData.zero()
    raise argparse.ArgumentTypeError(f"unknown initial data {text!r}")


def cmd_modes(args):
    cfg = BoundaryConfig.parse(args.config)
    basis = build_mode_basis(cfg, BeamParams(D=args.D, L=args.L), args.n)
    rows = [(e.n, e.kappa_L, e.Cn, e.cn, e.omega) for e in basis.entries]
    target = None if args.out is None and not os.environ.get(OUT_ENV) else _out_dir(args)
    _emit(None if target is None else target / f"modes-{cfg.label}.csv",
          ["n", "kappaL", "Cn", "cn", "omega"], rows)
    if args.shapes:
        x = np.linspace(0.0, basis.L, args.points)
        S = sample_modes(basis, x)
        cols = {"x": x, **{f"s_{n}": S[n - 1] for n in range(1, basis.N + 1)}}
        path = (target or Path(".")) / f"shapes-{cfg.label}.csv"
        write_columns(path, cols)
        print(path)
    return 0


def cmd_stability(args):
    cfg = BoundaryConfig.parse(args.config)
    sp = modal_spectrum(cfg, _params(args), args.modes)
    v = classify(sp)
    if args.format == "json":
        print(json.dumps(to_jsonable({
            "config": cfg.label, "params": _params(args).to_dict(),
            "lambda": [[float(l.real), float(l.imag)] for l in sp.lambdas],
            "omega": [[float(o.real), float(o.imag)] for o in sp.omegas],
            "verdict": v.verdict.value, "max_growth": v.growth, "frequency": v.frequency}), indent=2))
    else:
        print("re_lambda,im_lambda,re_omega,im_omega")
        for l, o in zip(sp.lambdas, sp.omegas):
            print(",".join(fmt(float(a)) for a in (l.real, l.imag, o.real, o.imag)))
        print(f"# verdict={v.verdict.value} max_growth={fmt(v.growth)} frequency={fmt(v.frequency)}")
    return 0


def _values(args):
    if args.values:
        return [float(s) for s in args.values.split(",")]
    if args.log:
        return np.geomspace(args.start, args.stop, args.num).tolist()
    return np.linspace(args.start, args.stop, args.num).tolist()


def cmd_ucrit_sweep(args):
    cfg = BoundaryConfig.parse(args.config)
    vals = _values(args)
    curve = sweep_ucrit(cfg, _params(args), args.axis, vals, (args.u_min, args.u_max),
                        tol=args.tol, N=args.modes, parallelism=args.parallel)
    rows = []
    for p in curve.points:
        r = p.result
        if r is None:
            rows.append((p.value, float("nan"), float("nan"), float("nan"), float("nan")))
        else:
            rows.append((p.value, r.u_crit, r.omega_crit, r.bracket[0], r.bracket[1]))
    target = None if args.out is None and not os.environ.get(OUT_ENV) else \
        _out_dir(args) / f"ucrit-{cfg.label}-{args.axis}.csv"
    _emit(target, ["axis_value", "u_crit", "omega_crit", "bracket_lo", "bracket_hi"], rows)
    for p in curve.points:
        if p.error:
            print(f"# {args.axis}={p.value!r}: {p.error}", file=sys.stderr)
    return 0 if any(p.result is not None for p in curve.points) else 1


def cmd_simulate(args):
    from .fdm import simulate
    cfg = BoundaryConfig.parse(args.config)
    params = _params(args)
    traj = simulate(cfg, params, args.ic, args.horizon, M=args.resolution, rtol=args.rtol,
                    atol=args.atol, sample_dt=args.sample_dt)
    tr = energy_trace(traj)
    out = _out_dir(args)
    stem = args.name or f"simulate-{cfg.label}"
    write_columns(out / f"{stem}.csv", {"t": traj.t, "observable": traj.observable, "E": tr.E,
                                       "Pi": tr.Pi, "scriptE": tr.scriptE})
    print(out / f"{stem}.csv")
    if args.snapshots:
        times = [float(s) for s in args.snapshots.split(",")]
        idx = sorted({int(np.argmin(np.abs(traj.t - ts))) for ts in times})
        rows = [(traj.t[i], x, w) for i in idx for x, w in zip(traj.grid.x, traj.w[i])]
        write_csv(out / f"{stem}-snapshots.csv", ["t", "x", "w"], rows)
        print(out / f"{stem}-snapshots.csv")
    if traj.diverged:
        print(f"# diverged: {traj.message}", file=sys.stderr)
    return 0


def cmd_run(args):
    if args.list:
        for n in preset_names():
            print(n)
        return 0
    if not args.scenario:
        print("run: scenario file or preset name required", file=sys.stderr)
        return 2
    s = scenario_from_name_or_path(args.scenario)
    over = {}
    if args.resolution is not None:
        over["resolution"] = args.resolution
    if args.rtol is not None:
        over["rtol"] = args.rtol
    if args.atol is not None:
        over["atol"] = args.atol
    if args.horizon is not None:
        over["horizon"] = args.horizon
    if over:
        from dataclasses import replace
        s = replace(s, **over)
    out = _out_dir(args) / s.name if args.out is None else _out_dir(args)
    man = run_scenario(s, out, parallelism=args.parallel)
    print(out / "manifest.json")
    for r in man.runs:
        if r.status != "ok":
            print(f"# {r.run_id}: {r.error}", file=sys.stderr)
    return 1 if man.all_failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flutterbeam", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sim=False):
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./flutterbeam-out)")
        p.add_argument("--parallel", type=int, default=1)
        if sim:
            p.add_argument("--resolution", type=int, default=None, help="grid nodes M")
            p.add_argument("--rtol", type=float, default=None)
            p.add_argument("--atol", type=float, default=None)
            p.add_argument("--horizon", type=float, default=None)

    p = sub.add_parser("modes", help="characteristic roots and normalized mode shapes")
    p.add_argument("--config", default="C")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--D", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--shapes", action="store_true", help="also write sampled shapes")
    p.add_argument("--points", type=int, default=201)
    common(p)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("stability", help="modal spectrum and stability verdict")
    _add_params(p)
    p.add_argument("--modes", type=int, default=6)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("ucrit-sweep", help="critical flow speed along one parameter axis")
    _add_params(p)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", default=None, help="comma separated axis values")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--num", type=int, default=21)
    p.add_argument("--log", action="store_true", help="geometric spacing")
    p.add_argument("--u-min", type=float, default=0.0)
    p.add_argument("--u-max", type=float, default=2000.0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--modes", type=int, default=6)
    common(p)
    p.set_defaults(func=cmd_ucrit_sweep)

    p = sub.add_parser("simulate", help="finite-difference time integration")
    _add_params(p)
    p.add_argument("--ic", type=_parse_ic, default=InitialData.polynomial(),
                   help="mode:N, polynomial, elementary[:c], sine:eps or zero")
    p.add_argument("--sample-dt", type=float, default=0.01)
    p.add_argument("--snapshots", default=None, help="comma separated snapshot times")
    p.add_argument("--name", default=None, help="file stem for outputs")
    common(p, sim=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run a scenario file or a named preset")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--list", action="store_true", help="list presets")
    common(p, sim=True)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "simulate":
        args.horizon = 1.0 if args.horizon is None else args.horizon
        args.rtol = DEFAULT_RTOL if args.rtol is None else args.rtol
        args.atol = DEFAULT_ATOL if args.atol is None else args.atol
    if args.command == "ucrit-sweep" and not args.values and (args.start is None or args.stop is None):
        print("ucrit-sweep: give --values or --start/--stop", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except FlutterBeamError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

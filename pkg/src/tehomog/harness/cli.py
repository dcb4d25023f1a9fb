"""Command-line entry point.

Every subcommand prints one JSON document on stdout. Exit codes: 0 success,
1 threshold failure, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..bvp4 import constant_coefficient_solution
from ..cell_problems import NAMES, solve_cell_functions
from ..correctors import build_expansion, solve_theta_eps
from ..eigen_correction import THETA_EPS, THETA_STAR, correction
from ..errors import ConfigError, DomainError, SolverError, TehomogError
from ..numerics import Grid, inner
from ..periodic_media import PeriodicIndex, cell_split, homogenized_coefficient, named_profile
from ..spectrum import STEPS_PER_CELL, extract_eigenpair, homogenized_eigenvalues, medium_eigenvalue_near
from .config import EXPERIMENTS, load_config
from .experiments import grid_for, run_experiment

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _profile(text: str) -> PeriodicIndex:
    """A named profile or an inline JSON profile table."""
    if text.lstrip().startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--profile is not valid JSON: {exc}") from exc
        return PeriodicIndex.from_spec(spec)
    return named_profile(text)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _emit(payload) -> None:
    json.dump(_clean(payload), sys.stdout, indent=2)
    sys.stdout.write("\n")


def _nth_root(n_bar: float, window, index: int, step: float | None = None) -> float:
    roots = homogenized_eigenvalues(n_bar, tuple(window), **({"step": step} if step else {}))
    if len(roots) <= index:
        raise DomainError(f"only {len(roots)} homogenized eigenvalues in {tuple(window)}")
    return roots[index].tau


# ---------------------------------------------------------------- subcommands


def cmd_cell(args) -> int:
    idx = _profile(args.profile)
    cells = solve_cell_functions(idx)
    y = np.linspace(0.0, 1.0, args.samples)
    _emit({
        "profile": idx.to_spec(),
        "n_bar": idx.n_bar,
        "a_hom": homogenized_coefficient(idx),
        "y": y.tolist(),
        "values": {name: cells.evaluate(name, y).tolist() for name in NAMES},
        "slopes": {name: cells.evaluate(name, y, 1).tolist() for name in NAMES},
    })
    return EXIT_OK


def cmd_homog_eig(args) -> int:
    kwargs = {"step": args.step} if args.step else {}
    roots = homogenized_eigenvalues(args.nbar, tuple(args.window), **kwargs)
    _emit([{"tau": r.tau, "simple": r.simple, "slope": r.slope} for r in roots])
    return EXIT_OK


def cmd_direct_eig(args) -> int:
    idx = _profile(args.profile)
    guess = args.guess if args.guess is not None else _nth_root(idx.n_bar, args.window, args.index)
    root = medium_eigenvalue_near(idx, args.eps, guess, half_width=args.half_width,
                                  step=args.step, steps_per_cell=args.steps_per_cell)
    n, delta = cell_split(args.eps)
    _emit({"eps": args.eps, "N": n, "delta": delta, "guess": guess,
           "tau": root.tau, "simple": root.simple, "slope": root.slope})
    return EXIT_OK


def cmd_corrector(args) -> int:
    idx = _profile(args.profile)
    cells = solve_cell_functions(idx)
    g = grid_for(args.eps, args.points_per_period)
    u0 = constant_coefficient_solution(idx.n_bar - 1.0, args.tau, (0.0, 0.0, 0.0, 0.0), (1.0, math.pi))
    terms = build_expansion(u0, cells, args.eps, args.tau, g, idx)
    theta = solve_theta_eps(args.order, idx, args.eps, args.tau, terms, g)
    traces = terms.traces2 if args.order == 2 else terms.traces3
    _emit({
        "eps": args.eps, "tau": args.tau, "order": args.order, "m": g.m, "delta": terms.cut.delta,
        "cauchy_data": list(traces.as_cauchy(args.eps)),
        "l2_norm": math.sqrt(max(inner(theta.u, theta.u, g), 0.0)),
        "max_abs": float(np.max(np.abs(theta.u))),
    })
    return EXIT_OK


def cmd_correction(args) -> int:
    idx = _profile(args.profile)
    tau0 = _nth_root(idx.n_bar, args.window, args.index)
    g = Grid(args.m)
    pair = extract_eigenpair(idx.n_bar, tau0, g)
    rep = correction(idx, idx.n_bar, tau0, pair, args.delta, g, mode=args.mode, eps=args.eps)
    _emit({"profile": idx.to_spec(), **rep.to_dict()})
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_config(args.config, args.id)
    if args.output_dir is not None:
        cfg = _with_output(cfg, args.output_dir)
    res = run_experiment(cfg)
    _emit({**res.rates(), "output_dir": str(Path(cfg.output_dir) / cfg.experiment)})
    return EXIT_OK if res.passed else EXIT_THRESHOLD


def cmd_suite(args) -> int:
    summary = {}
    ok = True
    for exp in args.only or EXPERIMENTS:
        cfg = load_config(args.config, exp)
        if args.output_dir is not None:
            cfg = _with_output(cfg, args.output_dir)
        res = run_experiment(cfg)
        summary[exp] = {"pass": res.passed, "null_case": res.null_case,
                        "checks": {k: c.to_dict() for k, c in res.checks.items()}}
        ok &= res.passed
    _emit({"pass": ok, "experiments": summary})
    return EXIT_OK if ok else EXIT_THRESHOLD


def _with_output(cfg, out):
    return replace(cfg, output_dir=Path(out))


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tehomog", description="Homogenized transmission eigenvalues in 1D.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cell", help="cell functions of a profile")
    c.add_argument("--profile", default="piecewise24", help="profile name or inline JSON table")
    c.add_argument("--samples", type=int, default=9)
    c.set_defaults(func=cmd_cell)

    h = sub.add_parser("homog-eig", help="homogenized eigenvalues in a window")
    h.add_argument("--nbar", type=float, required=True)
    h.add_argument("--window", type=float, nargs=2, default=(1.0, 200.0), metavar=("LO", "HI"))
    h.add_argument("--step", type=float, default=None)
    h.set_defaults(func=cmd_homog_eig)

    d = sub.add_parser("direct-eig", help="eigenvalue of the oscillatory medium near a guess")
    d.add_argument("--profile", default="piecewise24")
    d.add_argument("--eps", type=float, required=True)
    d.add_argument("--guess", type=float, default=None, help="default: the homogenized eigenvalue --index")
    d.add_argument("--index", type=int, default=0)
    d.add_argument("--window", type=float, nargs=2, default=(1.0, 200.0), metavar=("LO", "HI"))
    d.add_argument("--half-width", type=float, default=10.0)
    d.add_argument("--step", type=float, default=1e-2)
    d.add_argument("--steps-per-cell", type=int, default=STEPS_PER_CELL)
    d.set_defaults(func=cmd_direct_eig)

    b = sub.add_parser("corrector", help="boundary corrector for h = sin(pi x)")
    b.add_argument("--profile", default="piecewise24")
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--tau", type=float, default=10.0)
    b.add_argument("--order", type=int, choices=(2, 3), default=2)
    b.add_argument("--points-per-period", type=int, default=32)
    b.set_defaults(func=cmd_corrector)

    r = sub.add_parser("correction", help="first-order eigenvalue correction tau1")
    r.add_argument("--profile", default="piecewise24")
    r.add_argument("--delta", type=float, default=0.5)
    r.add_argument("--mode", choices=(THETA_STAR, THETA_EPS), default=THETA_STAR)
    r.add_argument("--eps", type=float, default=None)
    r.add_argument("--m", type=int, default=2001)
    r.add_argument("--index", type=int, default=0)
    r.add_argument("--window", type=float, nargs=2, default=(1.0, 200.0), metavar=("LO", "HI"))
    r.set_defaults(func=cmd_correction)

    e = sub.add_parser("experiment", help="run one experiment E1-E8")
    e.add_argument("id", choices=EXPERIMENTS)
    e.add_argument("--config", required=True)
    e.add_argument("--output-dir", default=None)
    e.set_defaults(func=cmd_experiment)

    s = sub.add_parser("suite", help="run every experiment from one config")
    s.add_argument("--config", required=True)
    s.add_argument("--output-dir", default=None)
    s.add_argument("--only", nargs="+", choices=EXPERIMENTS, default=None)
    s.set_defaults(func=cmd_suite)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, TehomogError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

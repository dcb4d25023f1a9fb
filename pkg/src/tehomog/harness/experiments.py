"""Experiments E1-E8: eps sweeps, rate fits and their artifacts.

Every sweep point is an independent solve, so points run on a thread pool
(size from ``TEHOMOG_THREADS``) and are collated in config order before any
reduction; reruns are therefore bit-identical.

CSV columns per experiment (``eps`` is the swept parameter, which for E6 is
the mesh spacing and for E7 the finite-difference step):

* E1: err = H^2 error of u_eps - (u0 + eps^2 u2 + eps theta2); aux1 = ||u_eps''||
* E2: err = ||u_eps - u0||; aux1 = ||u_eps - u0 - eps theta2||
* E3: err = H^2 error with the third-order terms added
* E4: err = ||theta2||
* E5: err = |tau_eps - tau0 - eps tau1|; aux1 = tau_eps; aux2 = (tau_eps - tau0)/eps; aux3 = ||theta_eps - theta*||
* E6: err = relative gap of the denominator identity; aux1 = adjoint gap; aux2 = gap of the reference expression;
  aux3 = reference value; aux4 = denominator
* E7: err = ||T0(tau+h) phi - T0(tau) phi - h DT0 phi||
* E8: err = |<(T0 - T_eps) phi, phi> + eps <theta_eps, phi>|; aux1 = <(T0 - T_eps) phi, phi>
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from ..bvp4 import Coefficient, constant_coefficient_solution, element_quadrature, solve_clamped
from ..cell_problems import solve_cell_functions
from ..correctors import build_expansion, solve_theta_eps
from ..eigen_correction import (
    apply_DT0,
    apply_T0,
    correction,
    denominator_report,
    numerator_direct,
    theta_eps_for_pair,
    theta_star_for_pair,
)
from ..errors import ConfigError, NonSimpleEigenvalueError, SolverError, TehomogError
from ..numerics import Grid, RateStudy, fit_rate, inner
from ..spectrum import extract_eigenpair, homogenized_eigenvalues, medium_eigenvalue_near
from .config import ExperimentConfig

NULL_TOL = 1e-9


class ExperimentError(SolverError):
    """A solve inside an experiment failed; the message names the sweep point."""


# ---------------------------------------------------------------- plumbing


def thread_count() -> int:
    raw = os.environ.get("TEHOMOG_THREADS")
    if raw is None or raw == "":
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"TEHOMOG_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"TEHOMOG_THREADS must be a positive integer, got {raw!r}")
    return n


def sweep(fn: Callable[[Any], Any], items: Sequence[Any], label: Callable[[Any], str]) -> list:
    """Ordered parallel map; a solver failure is re-raised naming its point."""

    def guarded(item):
        try:
            return fn(item)
        except TehomogError as exc:
            raise ExperimentError(f"{label(item)}: {type(exc).__name__}: {exc}") from exc

    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [guarded(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, items))


def grid_for(eps: float, points_per_period: int) -> Grid:
    """Grid with ``points_per_period`` intervals per period, aligned with cell boundaries when possible."""
    target = points_per_period / eps
    n = round(target)
    if abs(target - n) > 1e-8 * target:
        n = math.ceil(target)
    return Grid(int(n) + 1)


@dataclass(frozen=True)
class Check:
    value: float
    threshold: float
    kind: str  # "min": value >= threshold, "max": value <= threshold

    @property
    def passed(self) -> bool:
        if math.isnan(self.value):
            return False
        return self.value >= self.threshold if self.kind == "min" else self.value <= self.threshold

    def to_dict(self) -> dict:
        return {"value": self.value, "threshold": self.threshold, "kind": self.kind, "pass": self.passed}


@dataclass
class ExperimentResult:
    experiment: str
    columns: list[str]
    rows: list[tuple[float, ...]]
    studies: dict[str, RateStudy] = field(default_factory=dict)
    checks: dict[str, Check] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)
    null_case: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def study(self) -> RateStudy:
        """The primary rate study (the one named after the experiment)."""
        return self.studies[self.experiment]

    def rates(self) -> dict:
        return {
            "experiment": self.experiment,
            "pass": self.passed,
            "null_case": self.null_case,
            "studies": {k: _study_dict(s) for k, s in self.studies.items()},
            "checks": {k: c.to_dict() for k, c in self.checks.items()},
        }


def _study_dict(s: RateStudy) -> dict:
    d = s.to_dict()
    if math.isinf(d["slope"]):
        d["slope"] = "inf"
    return d


def _slope_check(study: RateStudy, threshold: float, null_case: bool) -> Check:
    if null_case:
        worst = max(err for _, err in study.samples)
        return Check(worst, NULL_TOL, "max")
    return Check(study.slope, threshold, "min")


def _medium_check(pts: list[dict], key: str) -> Check:
    """Null case of a resolvent sweep: u_eps equals the same-mesh homogenized solution."""
    return Check(max(p[key] for p in pts), NULL_TOL, "max")


def _null(profile) -> bool:
    return profile.is_constant


# ---------------------------------------------------------------- E1-E4


def resolvent_point(cfg: ExperimentConfig, eps: float, cells=None) -> dict:
    """All resolvent-sweep errors at one eps for h = sin(pi x)."""
    idx = cfg.profile
    cells = cells or solve_cell_functions(idx)
    tau = cfg.tau
    g = grid_for(eps, cfg.points_per_period)
    u0 = constant_coefficient_solution(idx.n_bar - 1.0, tau, (0.0, 0.0, 0.0, 0.0), (1.0, math.pi))
    coef = Coefficient.oscillatory(idx, eps)
    ue = solve_clamped(coef, tau, np.sin(math.pi * g.x), g)
    terms = build_expansion(u0, cells, eps, tau, g, idx)
    th2 = solve_theta_eps(2, idx, eps, tau, terms, g)
    th3 = solve_theta_eps(3, idx, eps, tau, terms, g)
    q = element_quadrature(g, coef)
    x = q.points
    u, udd = q.interpolate(ue.u), ue.second_derivative(q)
    base, base_dd = u0(x), u0(x, 2)
    u2, u2dd = terms.u2_derivatives(x)
    u3, u3dd = terms.u3_derivatives(x)
    t2, t2dd = q.interpolate(th2.u), th2.second_derivative(q)
    t3dd = th3.second_derivative(q)
    z1 = udd - (base_dd + eps**2 * u2dd + eps * t2dd)
    # same-mesh homogenized solve: separates medium effects from discretization error
    uh = solve_clamped(Coefficient.homogenized(idx.n_bar), tau, np.sin(math.pi * g.x), g)
    return {
        "eps": eps,
        "m": g.m,
        "e1": q.norm(z1),
        "e2": q.norm(u - base),
        "e2_corrected": q.norm(u - base - eps * t2),
        "e3": q.norm(z1 - eps**3 * u3dd - eps**2 * t3dd),
        "theta_norm": q.norm(t2),
        "u_h2": q.norm(udd),
        "medium_h2": q.norm(udd - uh.second_derivative(q)),
        "medium_l2": q.norm(u - q.interpolate(uh.u)),
    }


def _resolvent_sweep(cfg: ExperimentConfig) -> list[dict]:
    cells = solve_cell_functions(cfg.profile)
    return sweep(lambda e: resolvent_point(cfg, e, cells), list(cfg.eps_list),
                 lambda e: f"eps={e:.6g}, tau={cfg.tau:.6g}")


def run_e1(cfg: ExperimentConfig) -> ExperimentResult:
    pts = _resolvent_sweep(cfg)
    null = _null(cfg.profile)
    study = fit_rate([(p["eps"], p["e1"]) for p in pts])
    res = ExperimentResult("E1", ["eps", "err", "aux1"], [(p["eps"], p["e1"], p["u_h2"]) for p in pts],
                           {"E1": study}, null_case=null)
    res.checks["E1"] = _medium_check(pts, "medium_h2") if null else _slope_check(study, cfg.threshold("E1"), False)
    res.info.update(tau=cfg.tau, meshes=[p["m"] for p in pts])
    return res


def run_e2(cfg: ExperimentConfig) -> ExperimentResult:
    pts = _resolvent_sweep(cfg)
    null = _null(cfg.profile)
    plain = fit_rate([(p["eps"], p["e2"]) for p in pts])
    corr = fit_rate([(p["eps"], p["e2_corrected"]) for p in pts])
    res = ExperimentResult("E2", ["eps", "err", "aux1"], [(p["eps"], p["e2"], p["e2_corrected"]) for p in pts],
                           {"E2": plain, "E2_corrected": corr}, null_case=null)
    if null:
        res.checks["E2"] = _medium_check(pts, "medium_l2")
    else:
        res.checks["E2"] = _slope_check(plain, cfg.threshold("E2"), False)
        res.checks["E2_corrected"] = _slope_check(corr, cfg.threshold("E2_corrected"), False)
    res.info.update(tau=cfg.tau, meshes=[p["m"] for p in pts])
    return res


def run_e3(cfg: ExperimentConfig) -> ExperimentResult:
    pts = _resolvent_sweep(cfg)
    null = _null(cfg.profile)
    study = fit_rate([(p["eps"], p["e3"]) for p in pts])
    res = ExperimentResult("E3", ["eps", "err"], [(p["eps"], p["e3"]) for p in pts], {"E3": study}, null_case=null)
    res.checks["E3"] = _medium_check(pts, "medium_h2") if null else _slope_check(study, cfg.threshold("E3"), False)
    res.info.update(tau=cfg.tau, meshes=[p["m"] for p in pts])
    return res


def run_e4(cfg: ExperimentConfig) -> ExperimentResult:
    pts = _resolvent_sweep(cfg)
    null = _null(cfg.profile)
    norms = [p["theta_norm"] for p in pts]
    study = fit_rate([(p["eps"], p["theta_norm"]) for p in pts])
    res = ExperimentResult("E4", ["eps", "err"], [(p["eps"], p["theta_norm"]) for p in pts], {"E4": study},
                           null_case=null)
    if null:
        res.checks["E4"] = Check(max(norms), NULL_TOL, "max")
    else:
        res.checks["E4"] = Check(max(norms) / min(norms), cfg.threshold("E4"), "max")
    res.info.update(tau=cfg.tau, ratio=max(norms) / min(norms) if min(norms) > 0 else math.nan)
    return res


# ---------------------------------------------------------------- eigenvalue experiments


def homogenized_root(cfg: ExperimentConfig) -> float:
    roots = homogenized_eigenvalues(cfg.profile.n_bar, cfg.tau_window)
    if len(roots) <= cfg.eigen_index:
        raise ExperimentError(
            f"only {len(roots)} homogenized eigenvalues in {cfg.tau_window}; eigen_index={cfg.eigen_index}"
        )
    root = roots[cfg.eigen_index]
    if not root.simple:
        raise NonSimpleEigenvalueError(f"homogenized eigenvalue {root.tau} is not simple")
    return root.tau


def fixed_delta_eps(cfg: ExperimentConfig) -> list[float]:
    return [1.0 / (n + cfg.delta) for n in cfg.N_list]


def run_e5(cfg: ExperimentConfig) -> ExperimentResult:
    idx = cfg.profile
    cells = solve_cell_functions(idx)
    tau0 = homogenized_root(cfg)
    g0 = Grid(cfg.base_m)
    pair0 = extract_eigenpair(idx.n_bar, tau0, g0)
    null = _null(idx)
    rep = correction(idx, idx.n_bar, tau0, pair0, cfg.delta, g0, cells=cells)
    tau1 = rep.tau1

    def point(eps):
        root = medium_eigenvalue_near(idx, eps, tau0, step=cfg.scan_step)
        g = grid_for(eps, cfg.points_per_period)
        pair = extract_eigenpair(idx.n_bar, tau0, g)
        th = theta_eps_for_pair(idx, eps, pair, g, cells).u
        ts = theta_star_for_pair(idx, cfg.delta, pair, g, cells).u
        gap = math.sqrt(max(inner(th - ts, th - ts, g), 0.0))
        return eps, root.tau, root.simple, gap

    pts = sweep(point, fixed_delta_eps(cfg), lambda e: f"eps={e:.6g}, tau={tau0:.10g}")
    rows = [(e, abs(t - tau0 - e * tau1), t, (t - tau0) / e, gap) for e, t, _, gap in pts]
    study = fit_rate([(r[0], r[1]) for r in rows])
    limit = fit_rate([(r[0], r[4]) for r in rows])
    res = ExperimentResult("E5", ["eps", "err", "aux1", "aux2", "aux3"], rows,
                           {"E5": study, "theta_limit": limit}, null_case=null)
    if null:
        res.checks["E5"] = Check(max(r[1] for r in rows) / tau0, NULL_TOL, "max")
        res.checks["tau1_zero"] = Check(abs(tau1), NULL_TOL, "max")
    else:
        res.checks["E5"] = _slope_check(study, cfg.threshold("E5"), False)
        finest = rows[-1]
        res.checks["E5_relative"] = Check(abs(finest[3] - tau1) / abs(tau1), cfg.threshold("E5_relative"), "max")
        res.checks["theta_limit"] = _slope_check(limit, cfg.threshold("theta_limit"), False)
    res.info.update(tau0=tau0, tau1=tau1, delta=cfg.delta, N_list=list(cfg.N_list),
                    simple=[p[2] for p in pts], correction=rep.to_dict())
    return res


def run_e6(cfg: ExperimentConfig) -> ExperimentResult:
    idx = cfg.profile
    tau0 = homogenized_root(cfg)
    meshes = [cfg.base_m, 2 * cfg.base_m - 1, 4 * cfg.base_m - 3]

    def point(m):
        g = Grid(m)
        rep = denominator_report(extract_eigenpair(idx.n_bar, tau0, g))
        return g.h, rep

    pts = sweep(point, meshes, lambda m: f"m={m}, tau={tau0:.10g}")
    rows = [(h, r.relative_gap("symmetric"), r.relative_gap("adjoint"), r.relative_gap("reference"),
             r.reference, r.value) for h, r in pts]
    study = fit_rate([(r[0], r[1]) for r in rows])
    res = ExperimentResult("E6", ["eps", "err", "aux1", "aux2", "aux3", "aux4"], rows, {"E6": study})
    res.checks["E6"] = Check(rows[0][1], cfg.threshold("E6"), "max")
    res.checks["E6_order"] = Check(math.log2(rows[0][1] / rows[1][1]), cfg.threshold("E6_order"), "min")
    res.info.update(
        tau0=tau0, meshes=meshes, denominator=rows[0][5], reference=rows[0][4],
        reference_gap=rows[0][3], reference_identity_holds=rows[0][3] <= cfg.threshold("E6"),
    )
    return res


def run_e7(cfg: ExperimentConfig) -> ExperimentResult:
    idx = cfg.profile
    tau0 = homogenized_root(cfg)
    g = Grid(cfg.base_m)
    phi = extract_eigenpair(idx.n_bar, tau0, g).phi
    d = apply_DT0(idx.n_bar, tau0, phi, g)
    base = apply_T0(idx.n_bar, tau0, phi, g)

    def point(h):
        r = apply_T0(idx.n_bar, tau0 + h, phi, g) - base - h * d
        return h, math.sqrt(max(inner(r, r, g), 0.0))

    rows = sweep(point, list(cfg.h_list), lambda h: f"h={h:.3g}, tau={tau0:.10g}")
    study = fit_rate(rows)
    res = ExperimentResult("E7", ["eps", "err"], rows, {"E7": study})
    res.checks["E7"] = Check(study.slope, cfg.threshold("E7"), "min")
    res.info.update(tau0=tau0, m=g.m)
    return res


def run_e8(cfg: ExperimentConfig) -> ExperimentResult:
    idx = cfg.profile
    cells = solve_cell_functions(idx)
    tau0 = homogenized_root(cfg)
    null = _null(idx)

    def point(eps):
        g = grid_for(eps, cfg.points_per_period)
        pair = extract_eigenpair(idx.n_bar, tau0, g)
        num = numerator_direct(idx, eps, tau0, pair.phi, g)
        th = theta_eps_for_pair(idx, eps, pair, g, cells).u
        lead = eps * inner(th, pair.phi, g)
        return eps, abs(num + lead), num, lead

    rows = sweep(point, fixed_delta_eps(cfg), lambda e: f"eps={e:.6g}, tau={tau0:.10g}")
    study = fit_rate([(r[0], r[1]) for r in rows])
    res = ExperimentResult("E8", ["eps", "err", "aux1", "aux2"], rows, {"E8": study}, null_case=null)
    res.checks["E8"] = _slope_check(study, cfg.threshold("E8"), null)
    res.info.update(tau0=tau0, delta=cfg.delta)
    return res


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "E1": run_e1, "E2": run_e2, "E3": run_e3, "E4": run_e4,
    "E5": run_e5, "E6": run_e6, "E7": run_e7, "E8": run_e8,
}


# ---------------------------------------------------------------- artifacts

# CSV column holding the errors of each secondary rate study
STUDY_COLUMN = {"E2_corrected": "aux1", "theta_limit": "aux3"}


def _fmt(v: float) -> str:
    return repr(float(v))


def plot_script(res: ExperimentResult) -> str:
    lines = [
        f"# {res.experiment}: log-log error against the swept parameter",
        "set datafile separator ','",
        "set logscale xy",
        "set key left top",
        f"set xlabel '{'h' if res.experiment in ('E6', 'E7') else 'eps'}'",
        "set ylabel 'error'",
        f"set title '{res.experiment}'",
    ]
    plots = []
    for name, s in res.studies.items():
        col = res.columns.index(STUDY_COLUMN.get(name, "err")) + 1
        if math.isinf(s.slope):
            continue
        plots.append(f"'samples.csv' using 1:{col} with linespoints title '{name} (slope {s.slope:.3f})'")
    lines.append("plot " + ", \\\n     ".join(plots) if plots else "# no finite rate to plot")
    return "\n".join(lines) + "\n"


def write_artifacts(res: ExperimentResult, cfg: ExperimentConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "samples.csv").open("w") as fh:
        fh.write(",".join(res.columns) + "\n")
        for row in res.rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    (out_dir / "rates.json").write_text(json.dumps(res.rates(), indent=2) + "\n")
    report = {
        "experiment": res.experiment,
        "pass": res.passed,
        "null_case": res.null_case,
        "profile": cfg.profile.to_spec(),
        "config": {
            "tau": cfg.tau, "tau_window": list(cfg.tau_window), "eigen_index": cfg.eigen_index,
            "eps_list": list(cfg.eps_list), "delta": cfg.delta, "N_list": list(cfg.N_list),
            "points_per_period": cfg.points_per_period, "base_m": cfg.base_m, "scan_step": cfg.scan_step,
            "h_list": list(cfg.h_list),
        },
        "info": res.info,
        "rates": res.rates(),
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, default=_json_default) + "\n")
    (out_dir / "plot.gp").write_text(plot_script(res))
    return out_dir


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run one experiment; with ``write`` the artifacts go to ``output_dir/<id>``."""
    res = RUNNERS[cfg.experiment](cfg)
    if write:
        write_artifacts(res, cfg, Path(cfg.output_dir) / cfg.experiment)
    return res

"""Periodic cell hierarchy on Y = [0, 1].

All cell functions solve ``-u'' = f`` on the torus with zero cell average:

* beta:  beta''  = n - n_bar
* chi:   chi''   = a_hom / a - 1          (equals beta / (n_bar - 1))
* gamma: -gamma'' = 2 chi'
* alpha: -alpha'' = chi
* B:     -B''    = 2 gamma'

The primary path integrates piecewise polynomials exactly (scipy ``PPoly``).
Piecewise-constant profiles are represented exactly; smooth and sampled
profiles go through a periodic cubic spline of n. Trigonometric profiles
additionally have a closed-form Fourier path, used as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PPoly

from .errors import ConsistencyError
from .numerics import Grid, integrate
from .periodic_media import PIECEWISE, TRIGONOMETRIC, PeriodicIndex, coefficient_a, homogenized_coefficient, wrap

NAMES = ("beta", "chi", "gamma", "alpha", "bmat")
SPLINE_INTERVALS = 2048
MEAN_TOLERANCE = 1e-6


# ---------------------------------------------------------------- periodic Poisson


def _add_constant(pp: PPoly, value: float) -> PPoly:
    c = pp.c.copy()
    c[-1, :] += value
    return PPoly(c, pp.x)


def periodic_poisson_ppoly(rhs: PPoly) -> PPoly:
    """Mean-zero periodic solution of ``-u'' = rhs`` for a piecewise polynomial on [0, 1].

    The rhs mean is projected out when it is below ``MEAN_TOLERANCE``.
    """
    mean = float(rhs.integrate(0.0, 1.0))
    if abs(mean) > MEAN_TOLERANCE:
        raise ConsistencyError(f"rhs has cell average {mean:.3e}; no periodic solution exists")
    rhs = _add_constant(rhs, -mean)
    slope = rhs.antiderivative()
    du = _add_constant(PPoly(-slope.c, slope.x), float(slope.integrate(0.0, 1.0)))
    u = du.antiderivative()
    return _add_constant(u, -float(u.integrate(0.0, 1.0)))


def solve_periodic_poisson(rhs, g: Grid) -> np.ndarray:
    """Grid-sample version: ``rhs`` sampled at ``g.x`` (first and last sample are the same point).

    The rhs is interpolated by a periodic cubic spline and integrated exactly.
    """
    rhs = np.asarray(rhs, dtype=float)
    mean = integrate(rhs, g)
    if abs(mean) > MEAN_TOLERANCE:
        raise ConsistencyError(f"rhs has cell average {mean:.3e}; no periodic solution exists")
    vals = rhs - mean
    vals[-1] = vals[0]
    pp = CubicSpline(g.x, vals, bc_type="periodic")
    return periodic_poisson_ppoly(PPoly(pp.c, pp.x))(g.x)


# ---------------------------------------------------------------- profile as PPoly


def profile_ppoly(idx: PeriodicIndex, intervals: int = SPLINE_INTERVALS) -> PPoly:
    """n(y) on [0, 1] as a piecewise polynomial (exact for piecewise-constant profiles)."""
    if idx.kind == PIECEWISE:
        bps = np.append(np.array(idx.breakpoints), 1.0)
        return PPoly(np.array([idx.values], dtype=float), bps)
    y = np.linspace(0.0, 1.0, intervals + 1)
    vals = np.asarray(idx.n(y), dtype=float)
    vals[-1] = vals[0]
    sp = CubicSpline(y, vals, bc_type="periodic")
    return PPoly(sp.c, sp.x)


def _scaled(pp: PPoly, factor: float) -> PPoly:
    return PPoly(pp.c * factor, pp.x)


# ---------------------------------------------------------------- cell solves


def beta_ppoly(idx: PeriodicIndex) -> PPoly:
    n = profile_ppoly(idx)
    return periodic_poisson_ppoly(_add_constant(_scaled(n, -1.0), idx.n_bar))


def chi_ppoly(idx: PeriodicIndex) -> PPoly:
    """chi from ``chi'' = a_hom / a - 1``, assembled from the coefficient a."""
    a_hom = homogenized_coefficient(idx)
    if idx.kind == PIECEWISE:
        bps = np.append(np.array(idx.breakpoints), 1.0)
        inv_a = 1.0 / coefficient_a(idx, np.array(idx.breakpoints))
        rhs = PPoly(np.array([1.0 - a_hom * inv_a]), bps)
    else:
        y = np.linspace(0.0, 1.0, SPLINE_INTERVALS + 1)
        vals = 1.0 - a_hom / coefficient_a(idx, y)
        vals[-1] = vals[0]
        sp = CubicSpline(y, vals, bc_type="periodic")
        rhs = PPoly(sp.c, sp.x)
    return periodic_poisson_ppoly(rhs)


def gamma_ppoly(chi: PPoly) -> PPoly:
    return periodic_poisson_ppoly(_scaled(chi.derivative(), 2.0))


def alpha_ppoly(chi: PPoly) -> PPoly:
    return periodic_poisson_ppoly(chi)


def bmat_ppoly(gamma: PPoly) -> PPoly:
    return periodic_poisson_ppoly(_scaled(gamma.derivative(), 2.0))


def solve_beta(idx: PeriodicIndex, g: Grid) -> np.ndarray:
    return beta_ppoly(idx)(g.x)


def solve_chi(idx: PeriodicIndex, g: Grid) -> np.ndarray:
    chi = chi_ppoly(idx)(g.x)
    expected = solve_beta(idx, g) / (idx.n_bar - 1.0)
    if np.max(np.abs(chi - expected)) > 1e-9:
        raise AssertionError("chi differs from beta / (n_bar - 1)")
    return chi


def _ppoly_from_samples(samples, g: Grid) -> PPoly:
    vals = np.asarray(samples, dtype=float).copy()
    vals[-1] = vals[0]
    sp = CubicSpline(g.x, vals, bc_type="periodic")
    return PPoly(sp.c, sp.x)


def solve_gamma(chi, g: Grid) -> np.ndarray:
    """gamma from chi samples (spline path); use :func:`gamma_ppoly` for exact input."""
    return gamma_ppoly(_ppoly_from_samples(chi, g))(g.x)


def solve_alpha(chi, g: Grid) -> np.ndarray:
    return alpha_ppoly(_ppoly_from_samples(chi, g))(g.x)


def solve_B(gamma, g: Grid) -> np.ndarray:
    return bmat_ppoly(_ppoly_from_samples(gamma, g))(g.x)


# ---------------------------------------------------------------- bundle


@dataclass(frozen=True)
class CellFunctions:
    """The cell hierarchy sampled on a torus grid, with exact evaluators.

    ``values[name]`` and ``slopes[name]`` hold samples of each function and of
    its first derivative; :meth:`evaluate` works at any real ``y`` (reduced
    mod 1), so boundary traces never alias against the sample grid.
    """

    grid: Grid
    n_bar: float
    pieces: dict = field(repr=False)
    values: dict = field(repr=False)
    slopes: dict = field(repr=False)

    def evaluate(self, name: str, y, deriv: int = 0):
        pp = self.pieces[name]
        if deriv:
            pp = pp.derivative(deriv)
        out = pp(wrap(y))
        return out if np.ndim(out) else float(out)

    def __getattr__(self, name):
        if name in NAMES:
            return self.values[name]
        if name.endswith("_y") and name[:-2] in NAMES:
            return self.slopes[name[:-2]]
        raise AttributeError(name)


def _bundle(grid: Grid, n_bar: float, pieces: dict) -> CellFunctions:
    values = {k: np.asarray(pieces[k](grid.x)) for k in NAMES}
    slopes = {k: np.asarray(pieces[k].derivative()(grid.x)) for k in NAMES}
    return CellFunctions(grid, n_bar, pieces, values, slopes)


def solve_cell_functions(idx: PeriodicIndex, g: Grid | None = None) -> CellFunctions:
    g = g or Grid(1025)
    beta = beta_ppoly(idx)
    chi = chi_ppoly(idx)
    diff = float(np.max(np.abs(chi(g.x) * (idx.n_bar - 1.0) - beta(g.x))))
    if diff > 1e-9:
        raise AssertionError(f"chi (n_bar - 1) differs from beta by {diff:.2e}")
    gamma = gamma_ppoly(chi)
    pieces = {"beta": beta, "chi": chi, "gamma": gamma, "alpha": alpha_ppoly(chi), "bmat": bmat_ppoly(gamma)}
    return _bundle(g, idx.n_bar, pieces)


# ---------------------------------------------------------------- Fourier oracle


@dataclass(frozen=True)
class FourierSeries:
    """Real trigonometric polynomial sum_k c_k cos(2 pi k y) + s_k sin(2 pi k y), zero mean."""

    cos: tuple[float, ...]
    sin: tuple[float, ...]

    def _arrays(self):
        k = max(len(self.cos), len(self.sin))
        c = np.zeros(k)
        s = np.zeros(k)
        c[: len(self.cos)] = self.cos
        s[: len(self.sin)] = self.sin
        return c, s

    def derivative(self) -> "FourierSeries":
        c, s = self._arrays()
        w = 2 * math.pi * np.arange(1, len(c) + 1)
        return FourierSeries(tuple(w * s), tuple(-w * c))

    def scale(self, factor: float) -> "FourierSeries":
        c, s = self._arrays()
        return FourierSeries(tuple(factor * c), tuple(factor * s))

    def solve_poisson(self) -> "FourierSeries":
        """Mean-zero solution of -u'' = self."""
        c, s = self._arrays()
        w2 = (2 * math.pi * np.arange(1, len(c) + 1)) ** 2
        return FourierSeries(tuple(c / w2), tuple(s / w2))

    def __call__(self, y):
        c, s = self._arrays()
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.shape(y))
        for k, (ck, sk) in enumerate(zip(c, s), 1):
            out = out + ck * np.cos(2 * math.pi * k * y) + sk * np.sin(2 * math.pi * k * y)
        return out


def fourier_cell_functions(idx: PeriodicIndex) -> dict[str, FourierSeries]:
    """Closed-form cell hierarchy for trigonometric profiles."""
    if idx.kind != TRIGONOMETRIC:
        raise ValueError("the Fourier path needs a trigonometric profile")
    osc = FourierSeries(idx.cos_coeffs, idx.sin_coeffs)
    beta = osc.scale(-1.0).solve_poisson()
    chi = beta.scale(1.0 / (idx.n_bar - 1.0))
    gamma = chi.derivative().scale(2.0).solve_poisson()
    alpha = chi.solve_poisson()
    bmat = gamma.derivative().scale(2.0).solve_poisson()
    return {"beta": beta, "chi": chi, "gamma": gamma, "alpha": alpha, "bmat": bmat}

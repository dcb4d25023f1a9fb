"""Bulk expansion terms and boundary correctors in one dimension.

With ``g = (D^2+tau) u0`` the bulk terms are

    u2 = chi(x/eps) g,        u3 = gamma(x/eps) g',        v0 = a_hom g,

and the boundary corrector of order n solves the oscillatory homogeneous
problem with Cauchy data ``theta = -eps u_n``, ``theta' = -eps (u_n)'`` at both
ends. The derivative trace contains the fast part ``chi'(y) g / eps``, so the
slope data of theta stays O(1) while the value data is O(eps).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .bvp4 import BvpSolution, Coefficient, ExpSum, constant_coefficient_solution, solve_cauchy
from .cell_problems import CellFunctions
from .errors import ResolutionError
from .numerics import Grid, first_difference, second_difference
from .periodic_media import PeriodicIndex, cell_split

SmoothField = Union[ExpSum, np.ndarray]


@dataclass(frozen=True)
class CutoffDelta:
    """1/eps = N + delta."""

    eps: float
    N: int
    delta: float


def cutoff(eps: float) -> CutoffDelta:
    n, delta = cell_split(eps)
    return CutoffDelta(float(eps), n, delta)


# ---------------------------------------------------------------- expansion


@dataclass(frozen=True)
class Traces:
    """Values and slopes of one bulk term at x = 0 and x = 1."""

    value0: float
    slope0: float
    value1: float
    slope1: float
    fast_slope0: float
    fast_slope1: float

    def as_cauchy(self, eps: float) -> tuple[float, float, float, float]:
        """Boundary data (-eps u, -eps u') with the fast slope part already divided by eps."""
        return (-eps * self.value0, -eps * self.slope0 - self.fast_slope0,
                -eps * self.value1, -eps * self.slope1 - self.fast_slope1)


@dataclass(frozen=True)
class ExpansionTerms:
    """Bulk terms of the two-scale expansion sampled on ``grid`` plus exact traces.

    ``traces2`` and ``traces3`` split each slope into the slow part
    (cell function times d/dx of the envelope) and the fast part (cell
    derivative times the envelope, with the 1/eps factor removed).
    """

    grid: Grid
    eps: float
    tau: float
    u0: np.ndarray = field(repr=False)
    u2: np.ndarray = field(repr=False)
    u3: np.ndarray = field(repr=False)
    v0: np.ndarray = field(repr=False)
    traces2: Traces
    traces3: Traces
    cut: CutoffDelta
    envelope: SmoothField = field(repr=False)
    cells: CellFunctions = field(repr=False)

    def _envelope_derivs(self, x, upto: int):
        return _derivatives(self.envelope, x, self.grid, upto)

    def u2_derivatives(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(u2, u2'') at arbitrary points, with the exact cell-function chain rule."""
        u0 = self._envelope_derivs(x, 4)
        g = u0[2] + self.tau * u0[0]
        dg = u0[3] + self.tau * u0[1]
        d2g = u0[4] + self.tau * u0[2]
        y = np.asarray(x) / self.eps
        c = [self.cells.evaluate("chi", y, k) for k in range(3)]
        val = c[0] * g
        dd = c[2] * g / self.eps**2 + 2 * c[1] * dg / self.eps + c[0] * d2g
        return val, dd

    def u3_derivatives(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(u3, u3'') at arbitrary points."""
        u0 = self._envelope_derivs(x, 5)
        dg = u0[3] + self.tau * u0[1]
        d2g = u0[4] + self.tau * u0[2]
        d3g = u0[5] + self.tau * u0[3]
        y = np.asarray(x) / self.eps
        c = [self.cells.evaluate("gamma", y, k) for k in range(3)]
        val = c[0] * dg
        dd = c[2] * dg / self.eps**2 + 2 * c[1] * d2g / self.eps + c[0] * d3g
        return val, dd


def _derivatives(u0: SmoothField, x, g: Grid, upto: int) -> list[np.ndarray]:
    """Derivatives 0..upto of the envelope at ``x``: exact for ExpSum, differenced for samples."""
    if isinstance(u0, ExpSum):
        return [np.asarray(u0(x, k)) for k in range(upto + 1)]
    # even orders by repeated second differences, odd orders by one first difference
    out = [np.asarray(u0, dtype=float)]
    for k in range(1, upto + 1):
        out.append(second_difference(out[k - 2], g) if k % 2 == 0 else first_difference(out[k - 1], g))
    return [np.interp(x, g.x, d) for d in out]


def build_expansion(u0: SmoothField, cells: CellFunctions, eps: float, tau: float, g: Grid,
                    idx: PeriodicIndex | None = None) -> ExpansionTerms:
    """Assemble u2, u3, v0 and the boundary traces for a homogenized envelope ``u0``.

    ``u0`` is either an exact :class:`ExpSum` (derivatives exact) or grid
    samples (derivatives by finite differences). Traces at x = 1 use the cell
    argument 1/eps reduced mod 1 to delta, evaluated through the exact cell
    functions.
    """
    if idx is not None:
        Coefficient.oscillatory(idx, eps).check_resolution(g)
    elif g.intervals * eps < 16 - 1e-9:
        raise ResolutionError(f"grid does not resolve eps={eps}")
    cut = cutoff(eps)
    d = _derivatives(u0, g.x, g, 3)
    env = d[2] + tau * d[0]
    denv = d[3] + tau * d[1]
    y = g.x / eps
    chi = cells.evaluate("chi", y)
    gam = cells.evaluate("gamma", y)
    u2 = chi * env
    u3 = gam * denv
    a_hom = 1.0 / (cells.n_bar - 1.0)
    v0 = a_hom * env

    ends = np.array([0.0, 1.0])
    e = _derivatives(u0, ends, g, 4)
    env_e = e[2] + tau * e[0]
    denv_e = e[3] + tau * e[1]
    d2env_e = e[4] + tau * e[2]
    # cell arguments at the two ends; chi and gamma are C^1, so no one-sided limits are needed
    y_end = np.array([0.0, cut.delta])
    chi_e = cells.evaluate("chi", y_end)
    dchi_e = cells.evaluate("chi", y_end, 1)
    gam_e = cells.evaluate("gamma", y_end)
    dgam_e = cells.evaluate("gamma", y_end, 1)
    t2 = Traces(float(chi_e[0] * env_e[0]), float(chi_e[0] * denv_e[0]),
                float(chi_e[1] * env_e[1]), float(chi_e[1] * denv_e[1]),
                float(dchi_e[0] * env_e[0]), float(dchi_e[1] * env_e[1]))
    t3 = Traces(float(gam_e[0] * denv_e[0]), float(gam_e[0] * d2env_e[0]),
                float(gam_e[1] * denv_e[1]), float(gam_e[1] * d2env_e[1]),
                float(dgam_e[0] * denv_e[0]), float(dgam_e[1] * denv_e[1]))
    return ExpansionTerms(g, float(eps), float(tau), np.asarray(d[0]), u2, u3, v0, t2, t3, cut, u0, cells)


# ---------------------------------------------------------------- correctors


def solve_theta_eps(order: int, idx: PeriodicIndex, eps: float, tau: float, terms: ExpansionTerms,
                    g: Grid) -> BvpSolution:
    """Boundary corrector of order 2 or 3 (its companion ``v`` is psi = a (D^2+tau) theta)."""
    if order not in (2, 3):
        raise ValueError(f"corrector order must be 2 or 3, got {order!r}")
    if abs(terms.eps - eps) > 1e-15 or abs(terms.tau - tau) > 1e-12 * max(1.0, tau):
        raise ValueError("expansion terms were built for a different (eps, tau)")
    traces = terms.traces2 if order == 2 else terms.traces3
    return solve_cauchy(Coefficient.oscillatory(idx, eps), tau, np.zeros(g.m), traces.as_cauchy(eps), g)


def theta_star_data(n_bar: float, tau0: float, phi_endpoint_data: tuple[float, float],
                    beta_prime: tuple[float, float]) -> tuple[float, float, float, float]:
    """Cauchy data of the limit corrector: zero values and slopes -beta'(y) phi'' / (tau0 (n_bar - 1))."""
    scale = -1.0 / (tau0 * (n_bar - 1.0))
    return (0.0, scale * beta_prime[0] * phi_endpoint_data[0], 0.0, scale * beta_prime[1] * phi_endpoint_data[1])


def solve_theta_star(n_bar: float, tau0: float, phi_endpoint_data: tuple[float, float],
                     beta_prime: tuple[float, float], g: Grid) -> BvpSolution:
    """Limit corrector with constant coefficient 1/(n_bar - 1)."""
    bc = theta_star_data(n_bar, tau0, phi_endpoint_data, beta_prime)
    return solve_cauchy(Coefficient.homogenized(n_bar), tau0, np.zeros(g.m), bc, g)


def theta_star_exact(n_bar: float, tau0: float, phi_endpoint_data: tuple[float, float],
                     beta_prime: tuple[float, float]) -> ExpSum:
    """Characteristic-root closed form of the limit corrector."""
    bc = theta_star_data(n_bar, tau0, phi_endpoint_data, beta_prime)
    return constant_coefficient_solution(n_bar - 1.0, tau0, bc)


def cell_slope_at_cut(cells: CellFunctions, delta: float, name: str = "beta") -> float:
    """Cell-function slope at the cut point delta."""
    return float(cells.evaluate(name, delta, 1))

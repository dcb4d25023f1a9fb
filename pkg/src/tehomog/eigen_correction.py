"""First-order correction of a simple transmission eigenvalue.

Conventions. ``L_tau = (D^2+tau) a (D^2+tau) + tau^2`` on H^2_0(0, 1) and the
solution operator is ``T(tau) f = L_tau^{-1}(-f'')``, so that an eigenpair
satisfies ``tau T(tau) phi = phi`` and ``T_0(tau_0) phi = phi / tau_0``.

The eigenproblem ``F(tau) phi = (I - tau T(tau)) phi = 0`` is not
self-adjoint: ``T_0 = L^{-1}(-D^2)`` is symmetric only in the pairing
weighted by -D^2. The left null vector of ``F_0(tau_0)`` is proportional to
``L phi = -tau_0 phi''``, and we normalize it as ``psi = -phi'' / ||phi'||^2``
so that ``<phi, psi> = 1``. First-order perturbation then gives

    tau_eps - tau_0 = -tau_0^2 eps <theta, psi> / (1 + tau_0^2 <DT_0 phi, psi>) + O(eps^2)

where ``T_eps phi - T_0 phi = eps theta + O(eps^2)``. Using
``DT_0 = -L^{-1} (2/(n_bar-1)) (D^2 + tau n_bar) T_0`` this becomes

    tau1 = tau_0^2 (1 - n_bar) <theta, psi> / (n_bar + 1 - 2 tau_0^2 n_bar <L^{-1} phi, psi>).

The symmetric variant ``tau_0^2 (1 - n_bar) <theta, phi> / (n_bar - 3 - 2 tau_0 n_bar <L^{-1} phi, phi>)``
is also evaluated and reported as ``tau1_reference`` for comparison; it does
not reproduce the eigenvalue shift (see the README).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .bvp4 import BvpSolution, Coefficient, mass_apply, solve_weak, stiffness_apply
from .cell_problems import CellFunctions, solve_cell_functions
from .correctors import build_expansion, cell_slope_at_cut, cutoff, solve_theta_eps, solve_theta_star
from .errors import DegenerateDenominatorError, DomainError, NonSimpleEigenvalueError
from .numerics import Grid, inner
from .periodic_media import PeriodicIndex
from .spectrum import Eigenpair

GUARD_TOL = 1e-8
THETA_STAR = "theta_star"
THETA_EPS = "theta_eps"


# ---------------------------------------------------------------- operators


def _homog(n_bar: float) -> Coefficient:
    return Coefficient.homogenized(n_bar)


def apply_L_inverse(n_bar: float, tau0: float, rhs, g: Grid) -> np.ndarray:
    """Clamped solve of ``L_{tau0,0} w = rhs`` with the constant coefficient 1/(n_bar - 1)."""
    rhs = np.asarray(rhs, dtype=float)
    return solve_weak(_homog(n_bar), tau0, mass_apply(g, rhs), g).u


def apply_T(coef: Coefficient, tau: float, f, g: Grid) -> BvpSolution:
    """``T(tau) f = L^{-1}(-f'')`` with the weak load ``int f' q'``."""
    return solve_weak(coef, tau, stiffness_apply(g, f), g)


def apply_T0(n_bar: float, tau: float, f, g: Grid) -> np.ndarray:
    return apply_T(_homog(n_bar), tau, f, g).u


def apply_DT0(n_bar: float, tau0: float, u, g: Grid) -> np.ndarray:
    """Derivative in tau of ``T_0``: ``-L^{-1} (2/(n_bar-1)) (D^2 + tau n_bar) T_0 u``.

    ``(D^2 + tau n_bar) s`` is applied weakly, ``-int s' q' + tau n_bar int s q``,
    which is exact integration by parts since s is clamped.
    """
    s = apply_T0(n_bar, tau0, u, g)
    load = (2.0 / (n_bar - 1.0)) * (-stiffness_apply(g, s) + tau0 * n_bar * mass_apply(g, s))
    return -solve_weak(_homog(n_bar), tau0, load, g).u


def left_eigenvector(pair: Eigenpair) -> np.ndarray:
    """``psi = -phi'' / ||phi'||^2``, the left null vector with ``<phi, psi> = 1``."""
    g = pair.grid
    return -pair.d2phi / inner(pair.dphi, pair.dphi, g)


# ---------------------------------------------------------------- denominator


@dataclass(frozen=True)
class DenominatorReport:
    """Both pairings of the denominator identity.

    ``lhs_*`` is ``1 + tau0^2 <DT_0 phi, .>`` computed through apply_DT0;
    ``rhs_*`` is the closed expression divided by (n_bar - 1). ``symmetric``
    pairs with phi, ``adjoint`` with psi. ``reference`` is the expression
    ``n_bar - 3 - 2 tau0 n_bar <L^{-1} phi, phi>``.
    """

    n_bar: float
    tau0: float
    l_inv_phi_phi: float
    l_inv_phi_psi: float
    lhs_symmetric: float
    rhs_symmetric: float
    lhs_adjoint: float
    rhs_adjoint: float
    reference: float
    reference_rhs: float

    @property
    def value(self) -> float:
        """The denominator used by :func:`correction`: ``n_bar + 1 - 2 tau0^2 n_bar <L^{-1} phi, psi>``."""
        return self.rhs_adjoint * (self.n_bar - 1.0)

    def relative_gap(self, which: str = "symmetric") -> float:
        if which == "symmetric":
            lhs, rhs = self.lhs_symmetric, self.rhs_symmetric
        elif which == "adjoint":
            lhs, rhs = self.lhs_adjoint, self.rhs_adjoint
        elif which == "reference":
            lhs, rhs = self.lhs_symmetric, self.reference_rhs
        else:
            raise ValueError(which)
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs))


def denominator_report(pair: Eigenpair, g: Grid | None = None) -> DenominatorReport:
    g = g or pair.grid
    if g.m != pair.grid.m:
        raise ValueError("eigenpair and grid differ")
    n_bar, tau0, phi = pair.n_bar, pair.tau, pair.phi
    psi = left_eigenvector(pair)
    linv = apply_L_inverse(n_bar, tau0, phi, g)
    dt = apply_DT0(n_bar, tau0, phi, g)
    lpp, lps = inner(linv, phi, g), inner(linv, psi, g)
    nrm = inner(phi, phi, g)
    lhs_sym = nrm + tau0**2 * inner(dt, phi, g)
    lhs_adj = inner(phi, psi, g) + tau0**2 * inner(dt, psi, g)
    rhs_sym = ((n_bar + 1.0) * nrm - 2.0 * tau0**2 * n_bar * lpp) / (n_bar - 1.0)
    rhs_adj = (n_bar + 1.0 - 2.0 * tau0**2 * n_bar * lps) / (n_bar - 1.0)
    reference = n_bar - 3.0 - 2.0 * tau0 * n_bar * lpp
    return DenominatorReport(n_bar, tau0, lpp, lps, lhs_sym, rhs_sym, lhs_adj, rhs_adj,
                             reference, reference / (n_bar - 1.0))


def denominator(n_bar: float, tau0: float, pair: Eigenpair, g: Grid | None = None) -> float:
    """Denominator ``n_bar + 1 - 2 tau0^2 n_bar <L^{-1} phi, psi>`` with a guard against zero."""
    if abs(pair.n_bar - n_bar) > 1e-12 or abs(pair.tau - tau0) > 1e-9 * tau0:
        raise ValueError("eigenpair does not match (n_bar, tau0)")
    rep = denominator_report(pair, g)
    if abs(rep.value) <= GUARD_TOL:
        raise DegenerateDenominatorError(f"denominator {rep.value:.3e} is numerically zero")
    return rep.value


# ---------------------------------------------------------------- numerator


def numerator_direct(idx: PeriodicIndex, eps: float, tau0: float, phi, g: Grid) -> float:
    """``<T_0(tau0) phi - T_eps(tau0) phi, phi>`` from two clamped solves."""
    phi = np.asarray(phi, dtype=float)
    t0 = apply_T(_homog(idx.n_bar), tau0, phi, g).u
    te = apply_T(Coefficient.oscillatory(idx, eps), tau0, phi, g).u
    return inner(t0 - te, phi, g)


def theta_eps_for_pair(idx: PeriodicIndex, eps: float, pair: Eigenpair, g: Grid,
                       cells: CellFunctions | None = None) -> BvpSolution:
    """Order-2 boundary corrector for the envelope ``u0 = phi / tau0``."""
    cells = cells or solve_cell_functions(idx)
    u0 = pair.exact.scale(1.0 / pair.tau) if pair.exact is not None else pair.phi / pair.tau
    terms = build_expansion(u0, cells, eps, pair.tau, g, idx)
    return solve_theta_eps(2, idx, eps, pair.tau, terms, g)


def theta_star_for_pair(idx: PeriodicIndex, delta: float, pair: Eigenpair, g: Grid,
                        cells: CellFunctions | None = None) -> BvpSolution:
    cells = cells or solve_cell_functions(idx)
    beta_prime = (cell_slope_at_cut(cells, 0.0), cell_slope_at_cut(cells, delta))
    return solve_theta_star(pair.n_bar, pair.tau, pair.endpoint_d2, beta_prime, g)


# ---------------------------------------------------------------- correction


@dataclass(frozen=True)
class CorrectionReport:
    tau0: float
    tau1: float
    numerator_inner: float
    numerator_kind: str
    denominator: float
    denominator_guard: bool
    delta: float
    eps: float | None
    numerator_inner_phi: float
    tau1_reference: float
    denominator_reference: float
    sufficient_condition_hint: bool
    n_bar: float
    mesh_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def correction(idx: PeriodicIndex, n_bar: float, tau0: float, pair: Eigenpair, delta: float, g: Grid,
               mode: str = THETA_STAR, eps: float | None = None,
               cells: CellFunctions | None = None) -> CorrectionReport:
    """Coefficient tau1 in ``tau_eps = tau0 + eps tau1 + O(eps^2)``.

    ``mode = "theta_star"`` uses the eps-independent limit corrector for the
    cutoff ``delta``; ``mode = "theta_eps"`` uses the order-2 boundary
    corrector at the given ``eps`` (delta is then taken from eps).
    """
    if abs(idx.n_bar - n_bar) > 1e-12:
        raise DomainError("n_bar does not match the profile")
    if not pair.simple:
        raise NonSimpleEigenvalueError("the correction needs a simple eigenvalue")
    if g.m != pair.grid.m:
        raise ValueError("eigenpair and grid differ")
    cells = cells or solve_cell_functions(idx)
    if mode == THETA_STAR:
        if not 0.0 <= delta < 1.0:
            raise DomainError(f"delta must lie in [0, 1), got {delta!r}")
        theta = theta_star_for_pair(idx, delta, pair, g, cells).u
        used_eps = None
    elif mode == THETA_EPS:
        if eps is None:
            raise DomainError("mode theta_eps needs eps")
        delta = cutoff(eps).delta
        theta = theta_eps_for_pair(idx, eps, pair, g, cells).u
        used_eps = float(eps)
    else:
        raise DomainError(f"unknown correction mode {mode!r}")

    rep = denominator_report(pair, g)
    den = rep.value
    guard = abs(den) > GUARD_TOL
    if not guard:
        raise DegenerateDenominatorError(f"denominator {den:.3e} is numerically zero")
    psi = left_eigenvector(pair)
    num_psi = inner(theta, psi, g)
    num_phi = inner(theta, pair.phi, g)
    tau1 = tau0**2 * (1.0 - n_bar) * num_psi / den
    tau1_ref = tau0**2 * (1.0 - n_bar) * num_phi / rep.reference if rep.reference != 0 else math.nan
    return CorrectionReport(
        tau0=float(tau0), tau1=float(tau1), numerator_inner=float(num_psi),
        numerator_kind=f"{mode}:adjoint", denominator=float(den), denominator_guard=guard,
        delta=float(delta), eps=used_eps, numerator_inner_phi=float(num_phi),
        tau1_reference=float(tau1_ref), denominator_reference=float(rep.reference),
        sufficient_condition_hint=bool(1.0 < n_bar <= 3.0), n_bar=float(n_bar), mesh_points=g.m,
    )

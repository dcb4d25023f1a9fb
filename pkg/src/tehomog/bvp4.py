"""Fourth-order two-point problems ``(D^2+tau) a (D^2+tau) u + tau^2 u = h`` on (0, 1).

The operator is solved through its second-order system

    (n - 1)^{-1} (u'' + tau u) = v,        v'' + tau v + tau^2 u = h,

(``a = 1 / (n - 1)``) with a mixed P1 Galerkin method on the uniform grid.
The first equation is tested against every hat function, so the prescribed
slopes u'(0), u'(1) enter as natural boundary terms; the second is tested
against interior hats only, and u(0), u(1) are imposed directly. Coefficient
integrals are computed exactly for piecewise-constant media by splitting
elements at the jumps of n(x/eps), so no differencing of the coefficient ever
happens. Unknowns are interleaved as (u_0, v_0, u_1, v_1, ...), which gives a
banded matrix with three sub- and three super-diagonals.

Constant-coefficient problems also have an exact solution through the four
characteristic roots, see :func:`constant_coefficient_solution`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError, ResolutionError, SingularMatrixError
from .numerics import Grid, second_difference, solve_banded
from .periodic_media import PeriodicIndex

LOWER = UPPER = 3
MIN_INTERVALS_PER_PERIOD = 16
GAUSS_POINTS = 4


# ---------------------------------------------------------------- coefficient


@dataclass(frozen=True)
class Coefficient:
    """The coefficient ``a = 1 / c`` with ``c(x) = n(x/eps) - 1`` or a constant ``c``.

    Use :meth:`oscillatory`, :meth:`homogenized` or :meth:`from_a`.
    """

    index: PeriodicIndex | None = None
    eps: float | None = None
    c_value: float | None = None

    @classmethod
    def oscillatory(cls, idx: PeriodicIndex, eps: float) -> "Coefficient":
        if not 0 < eps < 1:
            raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
        return cls(index=idx, eps=float(eps))

    @classmethod
    def homogenized(cls, n_bar: float) -> "Coefficient":
        if not n_bar > 1:
            raise DomainError(f"n_bar must exceed 1, got {n_bar!r}")
        return cls(c_value=float(n_bar) - 1.0)

    @classmethod
    def from_a(cls, a: float) -> "Coefficient":
        if not a > 0:
            raise DomainError("the coefficient a must be positive")
        return cls(c_value=1.0 / float(a))

    @property
    def is_constant(self) -> bool:
        return self.c_value is not None

    def c(self, x):
        """n - 1 at physical points ``x``."""
        if self.is_constant:
            return np.full(np.shape(x), self.c_value, dtype=float)
        return np.asarray(self.index.n_scaled(x, self.eps), dtype=float) - 1.0

    def a(self, x):
        return 1.0 / self.c(x)

    def jumps(self) -> np.ndarray:
        """Discontinuities of the coefficient inside (0, 1)."""
        if self.is_constant:
            return np.empty(0)
        if not self.index.is_piecewise_constant or self.index.is_constant:
            return np.empty(0)
        # interior breakpoints plus the cell boundary, where the last piece meets the first
        local = np.append(self.index.jump_points(), 0.0)
        cells = np.arange(int(math.ceil(1.0 / self.eps)) + 1)
        pts = ((cells[:, None] + local[None, :]) * self.eps).ravel()
        return np.sort(pts[(pts > 0.0) & (pts < 1.0)])

    def check_resolution(self, g: Grid) -> None:
        if self.is_constant:
            return
        per_period = g.intervals * self.eps
        if per_period < MIN_INTERVALS_PER_PERIOD - 1e-9:
            raise ResolutionError(
                f"grid has {per_period:.1f} intervals per period eps={self.eps:.4g}; "
                f"at least {MIN_INTERVALS_PER_PERIOD} are required"
            )

    def describe(self) -> dict:
        if self.is_constant:
            return {"kind": "constant", "a": 1.0 / self.c_value}
        return {"kind": "oscillatory", "eps": self.eps, "profile": self.index.to_spec()}


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True)
class ElementQuadrature:
    """Gauss points on the grid elements, split at coefficient jumps.

    ``element`` is the element holding each point and ``local`` its barycentric
    coordinate, so P1 fields interpolate exactly and the coefficient is never
    sampled on a discontinuity.
    """

    points: np.ndarray
    weights: np.ndarray
    element: np.ndarray
    local: np.ndarray

    def interpolate(self, nodal) -> np.ndarray:
        nodal = np.asarray(nodal, dtype=float)
        return (1.0 - self.local) * nodal[self.element] + self.local * nodal[self.element + 1]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def norm(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return math.sqrt(max(self.integrate(values * values), 0.0))


def element_quadrature(g: Grid, coef: Coefficient, points: int = GAUSS_POINTS) -> ElementQuadrature:
    return _element_quadrature(g.m, coef, points)


@lru_cache(maxsize=64)
def _element_quadrature(m: int, coef: Coefficient, npts: int) -> ElementQuadrature:
    g = Grid(m)
    jumps = coef.jumps()
    # merge jumps that sit on a node to within rounding
    if jumps.size:
        near = np.abs(jumps * g.intervals - np.round(jumps * g.intervals)) < 1e-9
        jumps = jumps[~near]
    cuts = np.union1d(g.x, jumps)
    s, t = cuts[:-1], cuts[1:]
    elem = np.clip(np.searchsorted(g.x, 0.5 * (s + t), side="right") - 1, 0, g.m - 2)
    nodes, wts = np.polynomial.legendre.leggauss(npts)
    half = 0.5 * (t - s)
    pts = (0.5 * (s + t))[:, None] + half[:, None] * nodes[None, :]
    weights = half[:, None] * wts[None, :]
    element = np.repeat(elem, npts)
    pts = pts.ravel()
    local = (pts - g.x[element]) / g.h
    return ElementQuadrature(pts, weights.ravel(), element, local)


# ---------------------------------------------------------------- weak loads


def mass_apply(g: Grid, f) -> np.ndarray:
    """P1 consistent mass matrix times nodal values: ``int f_h q_j``."""
    f = np.asarray(f, dtype=float)
    r = np.zeros(g.m)
    r[:-1] += g.h / 6.0 * (2.0 * f[:-1] + f[1:])
    r[1:] += g.h / 6.0 * (f[:-1] + 2.0 * f[1:])
    return r


def stiffness_apply(g: Grid, f) -> np.ndarray:
    """P1 stiffness matrix times nodal values: ``int f_h' q_j'``."""
    f = np.asarray(f, dtype=float)
    d = np.diff(f) / g.h
    r = np.zeros(g.m)
    r[:-1] -= d
    r[1:] += d
    return r


def weighted_mass(g: Grid, coef: Coefficient) -> np.ndarray:
    """Element matrices ``int c q_i q_j`` (shape (m-1, 2, 2)), exact for piecewise c."""
    q = element_quadrature(g, coef)
    c = coef.c(q.points) * q.weights
    out = np.zeros((g.m - 1, 2, 2))
    p0, p1 = 1.0 - q.local, q.local
    for i, pi in enumerate((p0, p1)):
        for j, pj in enumerate((p0, p1)):
            out[:, i, j] = np.bincount(q.element, weights=c * pi * pj, minlength=g.m - 1)
    return out


def nodal_coefficient(g: Grid, coef: Coefficient) -> np.ndarray:
    """Hat-weighted averages ``int c q_j / int q_j``."""
    em = weighted_mass(g, coef)
    num = np.zeros(g.m)
    num[:-1] += em[:, 0, 0] + em[:, 0, 1]
    num[1:] += em[:, 1, 0] + em[:, 1, 1]
    den = np.full(g.m, g.h)
    den[[0, -1]] = 0.5 * g.h
    return num / den


# ---------------------------------------------------------------- assembly


def _band_add(ab, rows, cols, vals):
    np.add.at(ab, (UPPER + rows - cols, cols), vals)


@lru_cache(maxsize=32)
def _system_matrix(m: int, coef: Coefficient, tau: float) -> np.ndarray:
    g = Grid(m)
    h = g.h
    stiff = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    mass = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    cmass = weighted_mass(g, coef)
    e = np.arange(m - 1)
    ab = np.zeros((LOWER + UPPER + 1, 2 * m))

    def eq1_row(j):
        return np.where((j == 0) | (j == m - 1), 2 * j + 1, 2 * j)

    for i in range(2):
        ni = e + i
        r1 = eq1_row(ni)
        interior = (ni > 0) & (ni < m - 1)
        r2 = 2 * ni[interior] + 1
        for j in range(2):
            nj = e + j
            _band_add(ab, r1, 2 * nj + 1, cmass[:, i, j])
            _band_add(ab, r1, 2 * nj, np.full(m - 1, stiff[i, j] - tau * mass[i, j]))
            _band_add(ab, r2, 2 * nj[interior] + 1, np.full(r2.size, -stiff[i, j] + tau * mass[i, j]))
            _band_add(ab, r2, 2 * nj[interior], np.full(r2.size, tau**2 * mass[i, j]))
    # Dirichlet rows for u_0 and u_{m-1}
    _band_add(ab, np.array([0, 2 * m - 2]), np.array([0, 2 * m - 2]), np.ones(2))
    ab.setflags(write=False)
    return ab


def _rhs(g: Grid, load, bc) -> np.ndarray:
    u0, du0, u1, du1 = (float(b) for b in bc)
    m = g.m
    rhs = np.zeros(2 * m)
    rhs[0] = u0
    rhs[1] = -du0
    rhs[2 * m - 2] = u1
    rhs[2 * m - 1] = du1
    rhs[3 : 2 * m - 2 : 2] = np.asarray(load, dtype=float)[1:-1]
    return rhs


# ---------------------------------------------------------------- solutions


@dataclass(frozen=True)
class BvpSolution:
    """Nodal values of u and of the companion field v = a (u'' + tau u)."""

    grid: Grid
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    tau: float
    coef: Coefficient

    def second_derivative(self, q: ElementQuadrature) -> np.ndarray:
        """u'' = c v - tau u at quadrature points (c = n - 1 taken inside each piece)."""
        return self.coef.c(q.points) * q.interpolate(self.v) - self.tau * q.interpolate(self.u)

    def norms(self, q: ElementQuadrature | None = None) -> tuple[float, float]:
        """(L2 norm of u, L2 norm of u'')."""
        q = q or element_quadrature(self.grid, self.coef)
        return q.norm(q.interpolate(self.u)), q.norm(self.second_derivative(q))


def _check_inputs(coef: Coefficient, tau: float, g: Grid, bc) -> None:
    if not (tau > 0 and math.isfinite(tau)):
        raise DomainError(f"tau must be positive and finite, got {tau!r}")
    if not all(math.isfinite(float(b)) for b in bc):
        raise DomainError("boundary data must be finite")
    coef.check_resolution(g)


def solve_weak(coef: Coefficient, tau: float, load, g: Grid, bc: Sequence[float] = (0.0, 0.0, 0.0, 0.0)) -> BvpSolution:
    """Solve with a ready weak load ``load[j] = int h q_j`` (only interior entries are used)."""
    tau = float(tau)
    _check_inputs(coef, tau, g, bc)
    load = np.asarray(load, dtype=float)
    if load.shape != (g.m,):
        raise ValueError(f"expected {g.m} load entries, got shape {load.shape}")
    ab = _system_matrix(g.m, coef, tau)
    try:
        x = solve_banded((LOWER, UPPER), ab, _rhs(g, load, bc))
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"discrete fourth-order system is singular at tau={tau}; perturb tau or the mesh ({exc})",
            pivot_index=exc.pivot_index,
        ) from exc
    return BvpSolution(g, x[0::2].copy(), x[1::2].copy(), tau, coef)


def solve_cauchy(coef: Coefficient, tau: float, h, bc: Sequence[float], g: Grid) -> BvpSolution:
    """Solve with prescribed (u(0), u'(0), u(1), u'(1)); ``h`` is sampled on ``g``."""
    h = np.asarray(h, dtype=float)
    if h.shape != (g.m,):
        raise ValueError(f"expected {g.m} samples of h, got shape {h.shape}")
    return solve_weak(coef, tau, mass_apply(g, h), g, bc)


def solve_clamped(coef: Coefficient, tau: float, h, g: Grid) -> BvpSolution:
    """Solve with u = u' = 0 at both ends."""
    return solve_cauchy(coef, tau, h, (0.0, 0.0, 0.0, 0.0), g)


def apply_operator(coef: Coefficient, tau: float, u, g: Grid) -> np.ndarray:
    """Finite-difference application of ``(D^2+tau) a (D^2+tau) u + tau^2 u``.

    The coefficient at node j is the hat-weighted average of n - 1. Only
    indices 2..m-3 carry values; the rest are NaN.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (g.m,):
        raise ValueError(f"expected {g.m} samples, got shape {u.shape}")
    a = 1.0 / nodal_coefficient(g, coef)
    w = a * (second_difference(u, g) + tau * u)
    out = np.full(g.m, np.nan)
    h2 = g.h**2
    out[2:-2] = (w[1:-3] - 2.0 * w[2:-2] + w[3:-1]) / h2 + tau * w[2:-2] + tau**2 * u[2:-2]
    return out


# ---------------------------------------------------------------- closed forms


@dataclass(frozen=True)
class ExpSum:
    """Real function ``Re sum_k c_k exp(r_k x)`` with exact derivatives."""

    coeffs: tuple[complex, ...]
    rates: tuple[complex, ...]

    def __call__(self, x, deriv: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.shape(x), dtype=complex)
        for c, r in zip(self.coeffs, self.rates):
            # anchor growing modes at x = 1 so nothing overflows
            if r.real > 0:
                out = out + c * np.exp(r) * r**deriv * np.exp(r * (x - 1.0))
            else:
                out = out + c * r**deriv * np.exp(r * x)
        out = out.real
        return out if np.ndim(out) else float(out)

    def __add__(self, other: "ExpSum") -> "ExpSum":
        return ExpSum(self.coeffs + other.coeffs, self.rates + other.rates)

    def __sub__(self, other: "ExpSum") -> "ExpSum":
        return self + other.scale(-1.0)

    def scale(self, factor: float) -> "ExpSum":
        return ExpSum(tuple(factor * c for c in self.coeffs), self.rates)

    @classmethod
    def zero(cls) -> "ExpSum":
        return cls((), ())

    @classmethod
    def cauchy_wave(cls, value: float, slope: float, k: float) -> "ExpSum":
        """Solution of y'' + k^2 y = 0 with y(0) = value, y'(0) = slope."""
        return cls((complex(value, -slope / k),), (complex(0.0, k),))

    @classmethod
    def sine(cls, amplitude: float, freq: float) -> "ExpSum":
        """amplitude * sin(freq x)."""
        return cls((complex(0.0, -amplitude),), (complex(0.0, freq),))


def characteristic_roots(c: float, tau: float) -> np.ndarray:
    """The four roots of ``(r^2 + tau)^2 = -tau^2 c`` (``c = n_bar - 1 = 1/a``)."""
    s = np.array([-tau + 1j * tau * math.sqrt(c), -tau - 1j * tau * math.sqrt(c)])
    r = np.sqrt(s)
    return np.concatenate([r, -r])


def constant_coefficient_solution(
    c: float,
    tau: float,
    bc: Sequence[float],
    forcing: tuple[float, float] | None = None,
) -> ExpSum:
    """Exact solution of ``a (D^2+tau)^2 u + tau^2 u = h`` with a = 1/c and Cauchy data ``bc``.

    ``forcing = (amplitude, freq)`` selects h = amplitude * sin(freq x); the
    default is h = 0.
    """
    a = 1.0 / c
    part = ExpSum.zero()
    if forcing is not None:
        amp, k = forcing
        part = ExpSum.sine(amp / (a * (tau - k * k) ** 2 + tau**2), k)
    roots = characteristic_roots(c, tau)
    # basis exp(r x) for Re r <= 0 and exp(r (x - 1)) otherwise
    anchor = np.where(roots.real > 0, 1.0, 0.0)
    mat = np.zeros((4, 4), dtype=complex)
    for k, (r, x0) in enumerate(zip(roots, anchor)):
        e0, e1 = np.exp(-r * x0), np.exp(r * (1.0 - x0))
        mat[:, k] = [e0, r * e0, e1, r * e1]
    target = np.array(bc, dtype=float) - np.array([part(0.0), part(0.0, 1), part(1.0), part(1.0, 1)])
    coeffs = np.linalg.solve(mat, target.astype(complex))
    coeffs = coeffs * np.exp(-roots * anchor)
    return part + ExpSum(tuple(coeffs), tuple(roots))

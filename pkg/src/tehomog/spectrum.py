"""Real transmission eigenvalues on (0, 1) through 2x2 transfer matrices.

Both fields start from shared Cauchy data (A, B) at x = 0:

    w'' + tau n(x/eps) w = 0,      v'' + tau v = 0,

and the eigenvalue condition is that the matching matrix ``M_w - M_v``
(the two fundamental matrices over [0, 1]) is singular. Piecewise-constant
media use exact cos/sin propagators, so the determinant carries no mesh
error; smooth media fall back to classical RK4 with a fixed number of steps
per period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .bvp4 import ExpSum
from .errors import BracketError, DomainError, NonSimpleEigenvalueError
from .numerics import Grid, find_root, integrate
from .periodic_media import PeriodicIndex, cell_split

TAU_MIN = 1e-3
SCAN_STEP = 1e-3
ROOT_TOL = 1e-12
SIMPLICITY_TOL = 1e-8
# RK4 steps per period for smooth profiles; 256 keeps tau_eps within ~1e-8 of the 512-step value
STEPS_PER_CELL = 256


# ---------------------------------------------------------------- propagators


def wave_propagator(k2: float, length: float) -> np.ndarray:
    """Fundamental matrix of y'' + k2 y = 0 over ``length`` (k2 > 0)."""
    k = math.sqrt(k2)
    c, s = math.cos(k * length), math.sin(k * length)
    return np.array([[c, s / k], [-k * s, c]])


def _rk4_propagator(idx: PeriodicIndex, eps: float, tau: float, y0: float, y1: float, steps: int) -> np.ndarray:
    """RK4 fundamental matrix of w'' = -tau n(x/eps) w for cell coordinates y0 -> y1."""
    hy = (y1 - y0) / steps
    hx = hy * eps
    # n at every node and midpoint, in one vectorized call; the stages below are scalar
    q = -tau * np.asarray(idx.n(y0 + 0.5 * hy * np.arange(2 * steps + 1)), dtype=float)
    a, b, c, d = 1.0, 0.0, 0.0, 1.0  # columns (w, w') of the two fundamental solutions
    half = 0.5 * hx
    for k in range(steps):
        q0, qm, q1 = q[2 * k], q[2 * k + 1], q[2 * k + 2]
        # state (w, w') with w' = p and p' = q w, advanced for both columns at once
        k1w, k1p = c, q0 * a
        l1w, l1p = d, q0 * b
        k2w, k2p = c + half * k1p, qm * (a + half * k1w)
        l2w, l2p = d + half * l1p, qm * (b + half * l1w)
        k3w, k3p = c + half * k2p, qm * (a + half * k2w)
        l3w, l3p = d + half * l2p, qm * (b + half * l2w)
        k4w, k4p = c + hx * k3p, q1 * (a + hx * k3w)
        l4w, l4p = d + hx * l3p, q1 * (b + hx * l3w)
        a += hx / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        c += hx / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        b += hx / 6.0 * (l1w + 2 * l2w + 2 * l3w + l4w)
        d += hx / 6.0 * (l1p + 2 * l2p + 2 * l3p + l4p)
    return np.array([[a, b], [c, d]])


def _piecewise_propagator(idx: PeriodicIndex, eps: float, tau: float, y0: float, y1: float) -> np.ndarray:
    """Exact propagator across cell coordinates [y0, y1] within one period."""
    bps = list(idx.breakpoints) + [1.0]
    mat = np.eye(2)
    for left, right, n in zip(bps[:-1], bps[1:], idx.values):
        lo, hi = max(left, y0), min(right, y1)
        if hi > lo:
            mat = wave_propagator(tau * n, (hi - lo) * eps) @ mat
    return mat


def medium_propagator(idx: PeriodicIndex, eps: float, tau: float, steps_per_cell: int = STEPS_PER_CELL) -> np.ndarray:
    """Fundamental matrix of the w-equation over the whole interval [0, 1]."""
    n_cells, delta = cell_split(eps)
    if idx.is_piecewise_constant:
        cell = _piecewise_propagator(idx, eps, tau, 0.0, 1.0)
        tail = _piecewise_propagator(idx, eps, tau, 0.0, delta) if delta > 0 else np.eye(2)
    else:
        cell = _rk4_propagator(idx, eps, tau, 0.0, 1.0, steps_per_cell)
        tail = np.eye(2)
        if delta > 0:
            tail = _rk4_propagator(idx, eps, tau, 0.0, delta, max(1, math.ceil(steps_per_cell * delta)))
    return tail @ np.linalg.matrix_power(cell, n_cells)


def _check_tau(tau) -> None:
    if np.any(np.asarray(tau) <= TAU_MIN):
        raise DomainError(f"tau must exceed {TAU_MIN} (tau = 0 is a spurious zero)")


# ---------------------------------------------------------------- determinants


def determinant_homog(n_bar: float, tau):
    """Closed-form matching determinant for the constant index ``n_bar`` (vectorized in tau)."""
    if not n_bar > 1:
        raise DomainError(f"n_bar must exceed 1, got {n_bar!r}")
    _check_tau(tau)
    tau = np.asarray(tau, dtype=float)
    mu, lam = np.sqrt(n_bar * tau), np.sqrt(tau)
    out = (np.cos(mu) - np.cos(lam)) ** 2 + (mu * np.sin(mu) - lam * np.sin(lam)) * (
        np.sin(mu) / mu - np.sin(lam) / lam
    )
    return out if np.ndim(out) else float(out)


def matching_matrix(source, tau: float, eps: float | None = None, steps_per_cell: int = STEPS_PER_CELL) -> tuple[np.ndarray, float]:
    """Return ``(M_w - M_v, ||M_w|| + ||M_v||)`` for a medium or a homogenized n_bar."""
    _check_tau(tau)
    if isinstance(source, PeriodicIndex):
        if eps is None or not 0 < eps < 1:
            raise DomainError("an oscillatory medium needs 0 < eps < 1")
        if steps_per_cell < 8:
            raise DomainError("steps_per_cell must be at least 8")
        mw = medium_propagator(source, eps, tau, steps_per_cell)
    else:
        if not source > 1:
            raise DomainError(f"n_bar must exceed 1, got {source!r}")
        mw = wave_propagator(tau * float(source), 1.0)
    mv = wave_propagator(tau, 1.0)
    return mw - mv, float(np.linalg.norm(mw, 2) + np.linalg.norm(mv, 2))


def determinant_eps(idx: PeriodicIndex, eps: float, tau: float, steps_per_cell: int = STEPS_PER_CELL) -> float:
    mat, _ = matching_matrix(idx, tau, eps, steps_per_cell)
    return float(np.linalg.det(mat))


# ---------------------------------------------------------------- roots


@dataclass(frozen=True)
class EigenRoot:
    tau: float
    simple: bool
    slope: float


def determinant_slope(det_fn: Callable[[float], float], tau: float) -> float:
    step = 1e-5 * max(1.0, abs(tau))
    return (det_fn(tau + step) - det_fn(tau - step)) / (2.0 * step)


def is_simple(det_fn: Callable[[float], float], tau: float, scale: float | None = None) -> tuple[bool, float]:
    """Classify a determinant zero: simple when |D'(tau)| exceeds ``SIMPLICITY_TOL * scale``.

    The default scale is the typical slope of D over a window of relative
    width 1e-2 around tau, which makes the test invariant under rescaling D.
    """
    slope = determinant_slope(det_fn, tau)
    if scale is None:
        width = 1e-2 * max(1.0, abs(tau))
        scale = max(abs(det_fn(tau - width)), abs(det_fn(tau + width))) / width
    return bool(abs(slope) > SIMPLICITY_TOL * max(scale, np.finfo(float).tiny)), float(slope)


def find_eigenvalue(det_fn: Callable[[float], float], bracket: tuple[float, float], tol: float = ROOT_TOL,
                    scale: float | None = None) -> EigenRoot:
    """Root of ``det_fn`` inside ``bracket`` with a simplicity classification."""
    tau = find_root(det_fn, bracket, tol)
    simple, slope = is_simple(det_fn, tau, scale)
    return EigenRoot(tau, simple, slope)


def scan(det_fn: Callable[[float], float], window: tuple[float, float], step: float = SCAN_STEP,
         tol: float = ROOT_TOL, vectorized: bool = False) -> list[EigenRoot]:
    """Sign-scan ``window`` at spacing ``step`` and refine every sign change."""
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo or not step > 0:
        raise DomainError("scan window must be increasing and the step positive")
    count = max(1, int(math.ceil((hi - lo) / step)))
    grid = np.linspace(lo, hi, count + 1)
    vals = np.asarray(det_fn(grid)) if vectorized else np.array([det_fn(t) for t in grid])
    roots = []
    for k in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        roots.append(find_eigenvalue(det_fn, (grid[k], grid[k + 1]), tol))
    for k in np.flatnonzero(vals == 0.0):
        simple, slope = is_simple(det_fn, float(grid[k]))
        roots.append(EigenRoot(float(grid[k]), simple, slope))
    return sorted(roots, key=lambda r: r.tau)


def homogenized_eigenvalues(n_bar: float, window: tuple[float, float] = (1.0, 200.0),
                            step: float = SCAN_STEP, tol: float = ROOT_TOL) -> list[EigenRoot]:
    lo = max(window[0], 2 * TAU_MIN)
    return scan(lambda t: determinant_homog(n_bar, t), (lo, window[1]), step, tol, vectorized=True)


def medium_eigenvalue_near(idx: PeriodicIndex, eps: float, guess: float, half_width: float = 10.0,
                           step: float = 1e-2, steps_per_cell: int = STEPS_PER_CELL, tol: float = ROOT_TOL) -> EigenRoot:
    """The root of determinant_eps closest to ``guess`` found by a local sign scan."""

    def det(t):
        return determinant_eps(idx, eps, t, steps_per_cell)

    window = (max(guess - half_width, 2 * TAU_MIN), guess + half_width)
    roots = scan(det, window, step, tol)
    if not roots:
        raise BracketError(f"no eigenvalue within {half_width} of {guess} at eps={eps}")
    return min(roots, key=lambda r: abs(r.tau - guess))


# ---------------------------------------------------------------- eigenpairs


@dataclass(frozen=True)
class Eigenpair:
    """Eigenvalue with the fields w, v and phi = (w - v) / ||w - v|| sampled on ``grid``.

    ``dphi``, ``d2phi`` and ``d3phi`` hold derivative samples obtained from the
    ODEs themselves (phi'' = -tau (n w - v)), so endpoint data never depends on
    finite differences. ``exact`` is the closed form of phi for homogenized
    pairs.
    """

    tau: float
    grid: Grid
    w: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    d2phi: np.ndarray = field(repr=False)
    d3phi: np.ndarray = field(repr=False)
    cauchy: tuple[float, float]
    simple: bool
    n_bar: float
    exact: ExpSum | None = field(default=None, repr=False)

    @property
    def endpoint_d2(self) -> tuple[float, float]:
        return float(self.d2phi[0]), float(self.d2phi[-1])

    @property
    def endpoint_d3(self) -> tuple[float, float]:
        return float(self.d3phi[0]), float(self.d3phi[-1])


def _null_vector(mat: np.ndarray, scale: float) -> np.ndarray:
    _, sv, vt = np.linalg.svd(mat)
    if sv[0] <= SIMPLICITY_TOL * scale:
        raise NonSimpleEigenvalueError(
            f"matching matrix vanishes (singular values {sv[0]:.2e}, {sv[1]:.2e}); eigenvalue is not simple"
        )
    if sv[1] > 1e-6 * scale:
        raise DomainError(f"tau is not an eigenvalue: smallest singular value {sv[1]:.2e}")
    ab = vt[-1]
    first = ab[0] if abs(ab[0]) > 1e-12 else ab[1]
    return ab if first > 0 else -ab


def _sweep_states(idx: PeriodicIndex, eps: float, tau: float, g: Grid, start: np.ndarray,
                  steps_per_cell: int) -> np.ndarray:
    """States (w, w') at every grid node, propagated from ``start`` at x = 0."""
    states = np.zeros((g.m, 2))
    states[0] = start
    if idx.is_piecewise_constant:
        local = idx.jump_points()
        cells = np.arange(int(math.ceil(1.0 / eps)) + 1)
        jumps = ((cells[:, None] + np.append(local, 0.0)[None, :]) * eps).ravel()
        cuts = np.union1d(g.x, jumps[(jumps > 0) & (jumps < 1)])
        node = 1
        state = start.copy()
        for a, b in zip(cuts[:-1], cuts[1:]):
            n = idx.n(0.5 * (a + b) / eps)
            state = wave_propagator(tau * n, b - a) @ state
            if node < g.m and b >= g.x[node] - 1e-14:
                states[node] = state
                node += 1
        return states
    sub = max(1, math.ceil(steps_per_cell * g.h / eps))
    state = start.copy()
    for j in range(1, g.m):
        y0, y1 = g.x[j - 1] / eps, g.x[j] / eps
        state = _rk4_propagator(idx, eps, tau, y0, y1, sub) @ state
        states[j] = state
    return states


def extract_eigenpair(source, tau: float, g: Grid, eps: float | None = None, steps_per_cell: int = STEPS_PER_CELL) -> Eigenpair:
    """Eigenfunction of a verified simple root.

    ``source`` is either the homogenized index n_bar (a number) or a
    :class:`PeriodicIndex` together with ``eps``.
    """
    mat, scale = matching_matrix(source, tau, eps, steps_per_cell)
    a0, b0 = _null_vector(mat, scale)
    lam = math.sqrt(tau)
    v_fn = ExpSum.cauchy_wave(a0, b0, lam)
    v, dv = v_fn(g.x), v_fn(g.x, 1)

    if isinstance(source, PeriodicIndex):
        states = _sweep_states(source, eps, tau, g, np.array([a0, b0]), steps_per_cell)
        w, dw = states[:, 0], states[:, 1]
        n_vals = np.asarray(source.n_scaled(g.x, eps), dtype=float)
        # left limit at x = 1: the medium to the left of the boundary
        n_vals[-1] = source.n(cell_split(eps)[1] - 1e-12)
        raw = w - v
        norm = math.sqrt(integrate(raw * raw, g))
        exact = None
        n_bar = source.n_bar
    else:
        n_bar = float(source)
        w_fn = ExpSum.cauchy_wave(a0, b0, math.sqrt(n_bar * tau))
        w, dw = w_fn(g.x), w_fn(g.x, 1)
        n_vals = np.full(g.m, n_bar)
        diff = w_fn - v_fn
        norm = math.sqrt(quad(lambda x: diff(x) ** 2, 0.0, 1.0, limit=400, epsabs=1e-15, epsrel=1e-13)[0])
        exact = diff.scale(1.0 / norm)

    phi = (w - v) / norm
    dphi = (dw - dv) / norm
    d2phi = -tau * (n_vals * w - v) / norm
    d3phi = -tau * (n_vals * dw - dv) / norm
    return Eigenpair(tau, g, w / norm, v / norm, phi, dphi, d2phi, d3phi, (a0 / norm, b0 / norm),
                     True, n_bar, exact)

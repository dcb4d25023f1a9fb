"""Shared numerical substrate: grids, quadrature, banded solves, root finding, rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import lapack

from .errors import BracketError, ConvergenceError, SingularMatrixError

MAX_ROOT_ITERATIONS = 200


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1] with ``m`` points, endpoints included."""

    m: int
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 9:
            raise ValueError(f"grid needs an integer point count >= 9, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        x = np.arange(self.m, dtype=float) / (self.m - 1)
        x[-1] = 1.0
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def h(self) -> float:
        return 1.0 / (self.m - 1)

    @property
    def intervals(self) -> int:
        return self.m - 1

    @classmethod
    def with_intervals(cls, n: int) -> "Grid":
        return cls(int(n) + 1)


@dataclass(frozen=True)
class RateStudy:
    """(eps, err) samples with the least-squares slope of log err against log eps.

    ``degenerate`` is set when some error is exactly zero; the slope is then
    reported as ``+inf``.
    """

    samples: tuple[tuple[float, float], ...]
    slope: float
    r2: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "samples": [list(s) for s in self.samples],
            "slope": self.slope,
            "r2": self.r2,
            "degenerate": self.degenerate,
        }


def _check_samples(f, g: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (g.m,):
        raise ValueError(f"expected {g.m} grid samples, got shape {f.shape}")
    return f


def quadrature_weights(g: Grid) -> np.ndarray:
    """Composite Simpson weights; the last panel is a trapezoid if the interval count is odd."""
    n = g.intervals
    h = g.h
    w = np.zeros(g.m)
    ns = n if n % 2 == 0 else n - 1
    if ns > 0:
        w[0:ns + 1:2] += 2.0
        w[1:ns:2] += 4.0
        w[0] -= 1.0
        w[ns] -= 1.0
        w[: ns + 1] *= h / 3.0
    if ns != n:
        w[n - 1] += h / 2.0
        w[n] += h / 2.0
    return w


def integrate(f, g: Grid) -> float:
    f = _check_samples(f, g)
    return float(np.dot(quadrature_weights(g), f))


def inner(f, q, g: Grid) -> float:
    """L2(0, 1) inner product of two sample vectors."""
    return integrate(_check_samples(f, g) * _check_samples(q, g), g)


def second_difference(u, g: Grid) -> np.ndarray:
    """Second derivative samples: 3-point interior stencil, one-sided 4-point at the ends."""
    u = _check_samples(u, g)
    h2 = g.h**2
    d = np.empty_like(u)
    d[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h2
    d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2
    d[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h2
    return d


def first_difference(u, g: Grid) -> np.ndarray:
    """First derivative samples: centered interior, one-sided 4-point at the ends."""
    u = _check_samples(u, g)
    h = g.h
    d = np.empty_like(u)
    d[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    d[0] = (-11.0 * u[0] + 18.0 * u[1] - 9.0 * u[2] + 2.0 * u[3]) / (6.0 * h)
    d[-1] = (11.0 * u[-1] - 18.0 * u[-2] + 9.0 * u[-3] - 2.0 * u[-4]) / (6.0 * h)
    return d


def discrete_norms(u, g: Grid) -> tuple[float, float]:
    """Return (L2 norm, L2 norm of the discrete second derivative)."""
    u = _check_samples(u, g)
    l2 = math.sqrt(max(integrate(u * u, g), 0.0))
    d2 = second_difference(u, g)
    h2 = math.sqrt(max(integrate(d2 * d2, g), 0.0))
    return l2, h2


# ---------------------------------------------------------------- banded solves


def dense_to_banded(a, lower: int, upper: int) -> np.ndarray:
    """Pack a dense square matrix into LAPACK band storage ``ab[upper + i - j, j] = a[i, j]``."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    ab = np.zeros((lower + upper + 1, n))
    for k in range(-lower, upper + 1):
        diag = np.diagonal(a, offset=k)
        if k >= 0:
            ab[upper - k, k:] = diag
        else:
            ab[upper - k, : n + k] = diag
    return ab


def banded_matvec(ab, lower: int, upper: int, x) -> np.ndarray:
    ab = np.asarray(ab, dtype=float)
    x = np.asarray(x, dtype=float)
    n = ab.shape[1]
    y = np.zeros(n)
    for k in range(-lower, upper + 1):
        row = ab[upper - k]
        if k >= 0:
            y[: n - k] += row[k:] * x[k:]
        else:
            y[-k:] += row[: n + k] * x[: n + k]
    return y


def banded_norm_inf(ab, lower: int, upper: int) -> float:
    ab = np.asarray(ab, dtype=float)
    n = ab.shape[1]
    rows = np.zeros(n)
    for k in range(-lower, upper + 1):
        row = np.abs(ab[upper - k])
        if k >= 0:
            rows[: n - k] += row[k:]
        else:
            rows[-k:] += row[: n + k]
    return float(rows.max()) if n else 0.0


def solve_banded(lower_upper: tuple[int, int], ab, rhs) -> np.ndarray:
    """Solve a banded system by LU with partial pivoting (LAPACK ``gbsv``).

    ``ab`` uses the same storage as :func:`scipy.linalg.solve_banded`.
    Raises :class:`SingularMatrixError` when a pivot falls below
    ``1e-14 * ||A||_inf``; the error carries the zero-based pivot index.
    """
    lower, upper = lower_upper
    ab = np.asarray(ab, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = ab.shape[1]
    if ab.shape[0] != lower + upper + 1:
        raise ValueError("band storage does not match (lower, upper)")
    if rhs.shape[0] != n:
        raise ValueError("right-hand side length does not match the matrix")
    if lower + upper + 1 > 9:
        raise ValueError("bandwidth above 9 is not supported")
    norm = banded_norm_inf(ab, lower, upper)
    if norm == 0.0:
        raise SingularMatrixError("zero matrix", pivot_index=0)

    work = np.zeros((2 * lower + upper + 1, n))
    work[lower:, :] = ab
    lub, piv, x, info = lapack.dgbsv(lower, upper, work, rhs)
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to dgbsv")
    diag = np.abs(lub[lower + upper, :])
    small = np.flatnonzero(diag <= 1e-14 * norm)
    if info > 0 or small.size:
        index = info - 1 if info > 0 else int(small[0])
        raise SingularMatrixError(
            f"numerically singular banded matrix (pivot {index})", pivot_index=int(index)
        )
    return x


# ---------------------------------------------------------------- root finding


def find_root(f: Callable[[float], float], bracket: tuple[float, float], tol: float = 1e-12) -> float:
    """Bracketing root finder: false position with bisection safeguards.

    The returned point always lies inside the initial bracket, and the final
    bracket has width at most ``tol``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not tol > 0:
        raise ValueError("tol must be positive")
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = float(f(lo)), float(f(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (math.isfinite(flo) and math.isfinite(fhi)) or (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")

    a, b, fa, fb = lo, hi, flo, fhi
    widths = [b - a, b - a]
    bisect = False
    for _ in range(MAX_ROOT_ITERATIONS):
        if b - a <= tol:
            return a if abs(fa) <= abs(fb) else b
        if bisect:
            x = 0.5 * (a + b)
        else:
            x = b - fb * (b - a) / (fb - fa)
            x = min(max(x, a + 0.5 * tol), b - 0.5 * tol)
            if not a < x < b:
                x = 0.5 * (a + b)
        fx = float(f(x))
        if fx == 0.0:
            return x
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        widths.append(b - a)
        # force a bisection whenever two steps failed to halve the bracket
        bisect = widths[-1] > 0.5 * widths[-3]
    raise ConvergenceError(f"root not bracketed to {tol} after {MAX_ROOT_ITERATIONS} iterations")


# ---------------------------------------------------------------- rate fits


def fit_rate(samples: Sequence[tuple[float, float]]) -> RateStudy:
    """Least-squares fit of ``log err = p log eps + c``."""
    pts = tuple((float(e), float(r)) for e, r in samples)
    if len(pts) < 3:
        raise ValueError("a rate fit needs at least 3 samples")
    eps = np.array([p[0] for p in pts])
    err = np.array([p[1] for p in pts])
    if np.any(eps <= 0) or len(set(eps.tolist())) != len(eps):
        raise ValueError("eps values must be positive and distinct")
    if np.any(err < 0) or not np.all(np.isfinite(err)):
        raise ValueError("errors must be finite and nonnegative")
    if np.any(err == 0):
        return RateStudy(pts, math.inf, 0.0, degenerate=True)

    lx, ly = np.log(eps), np.log(err)
    xm, ym = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - xm) ** 2))
    slope = float(np.sum((lx - xm) * (ly - ym)) / sxx)
    resid = ly - (ym + slope * (lx - xm))
    sst = float(np.sum((ly - ym) ** 2))
    r2 = 1.0 if sst == 0.0 else max(0.0, 1.0 - float(np.sum(resid**2)) / sst)
    return RateStudy(pts, slope, r2)

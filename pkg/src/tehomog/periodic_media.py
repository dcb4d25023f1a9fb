"""Periodic refractive-index profiles n(y) on the unit cell [0, 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError
from .numerics import Grid, integrate

PIECEWISE = "piecewise"
TRIGONOMETRIC = "trigonometric"
SAMPLED = "sampled"


def wrap(y):
    """Reduce to [0, 1) with the floor convention (negative arguments allowed)."""
    y = np.asarray(y, dtype=float)
    r = y - np.floor(y)
    # y - floor(y) can round up to exactly 1.0 for tiny negative y
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True)
class PeriodicIndex:
    """A 1-periodic refractive index with ``n(y) - 1 >= c_min > 0``.

    Build instances with :meth:`piecewise`, :meth:`trigonometric`,
    :meth:`sampled` or :meth:`constant` rather than calling the constructor.
    """

    kind: str
    breakpoints: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    mean: float = 0.0
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()
    samples: tuple[float, ...] = ()
    n_bar: float = field(init=False)
    c_min: float = field(init=False)
    _spline: Any = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.kind == PIECEWISE:
            self._init_piecewise()
        elif self.kind == TRIGONOMETRIC:
            self._init_trigonometric()
        elif self.kind == SAMPLED:
            self._init_sampled()
        else:
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if not (self.c_min > 0 and math.isfinite(self.c_min)):
            raise DomainError(f"profile must satisfy n(y) - 1 >= c > 0 (lower bound {self.c_min:.3g})")

    # ------------------------------------------------------------ constructors

    @classmethod
    def piecewise(cls, pieces: Sequence[tuple[float, float]]) -> "PeriodicIndex":
        """``pieces`` lists (y_i, n_i): n = n_i on [y_i, y_{i+1}), y_0 = 0."""
        pts = [(float(y), float(n)) for y, n in pieces]
        return cls(PIECEWISE, breakpoints=tuple(p[0] for p in pts), values=tuple(p[1] for p in pts))

    @classmethod
    def constant(cls, value: float) -> "PeriodicIndex":
        return cls.piecewise([(0.0, value)])

    @classmethod
    def trigonometric(cls, mean: float, cos: Sequence[float] = (), sin: Sequence[float] = ()) -> "PeriodicIndex":
        """n(y) = mean + sum_k cos[k-1] cos(2 pi k y) + sin[k-1] sin(2 pi k y)."""
        return cls(TRIGONOMETRIC, mean=float(mean), cos_coeffs=tuple(map(float, cos)),
                   sin_coeffs=tuple(map(float, sin)))

    @classmethod
    def sampled(cls, samples: Sequence[float]) -> "PeriodicIndex":
        """Samples at y_j = j/(m-1), j = 0..m-1; the first and last sample coincide."""
        return cls(SAMPLED, samples=tuple(map(float, samples)))

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> "PeriodicIndex":
        """Build from a config mapping tagged by ``kind``."""
        try:
            kind = spec["kind"]
            if kind == "constant":
                return cls.constant(spec["value"])
            if kind == PIECEWISE:
                return cls.piecewise([tuple(p) for p in spec["breakpoints"]])
            if kind == TRIGONOMETRIC:
                return cls.trigonometric(spec["mean"], spec.get("cos", ()), spec.get("sin", ()))
            if kind == SAMPLED:
                return cls.sampled(spec["samples"])
            if kind == "named":
                return named_profile(spec["name"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed profile spec {dict(spec)!r}: {exc}") from exc
        raise ConfigError(f"unknown profile kind {kind!r}")

    def to_spec(self) -> dict:
        if self.kind == PIECEWISE:
            return {"kind": PIECEWISE, "breakpoints": [[y, n] for y, n in zip(self.breakpoints, self.values)]}
        if self.kind == TRIGONOMETRIC:
            return {"kind": TRIGONOMETRIC, "mean": self.mean, "cos": list(self.cos_coeffs),
                    "sin": list(self.sin_coeffs)}
        return {"kind": SAMPLED, "samples": list(self.samples)}

    # ------------------------------------------------------------ init helpers

    def _init_piecewise(self):
        ys, ns = np.array(self.breakpoints), np.array(self.values)
        if len(ys) == 0 or len(ys) != len(ns):
            raise DomainError("piecewise profile needs matching breakpoints and values")
        if ys[0] != 0.0 or np.any(np.diff(ys) <= 0) or ys[-1] >= 1.0:
            raise DomainError("breakpoints must start at 0 and increase strictly inside [0, 1)")
        if not np.all(np.isfinite(ns)):
            raise DomainError("profile values must be finite")
        widths = np.diff(np.append(ys, 1.0))
        object.__setattr__(self, "n_bar", float(np.dot(widths, ns)))
        object.__setattr__(self, "c_min", float(ns.min() - 1.0))

    def _init_trigonometric(self):
        coeffs = np.array(self.cos_coeffs + self.sin_coeffs)
        if not (math.isfinite(self.mean) and np.all(np.isfinite(coeffs))):
            raise DomainError("profile coefficients must be finite")
        object.__setattr__(self, "n_bar", float(self.mean))
        y = np.arange(8192) / 8192.0
        lipschitz = sum(2 * math.pi * k * abs(c) for k, c in enumerate(self.cos_coeffs, 1))
        lipschitz += sum(2 * math.pi * k * abs(c) for k, c in enumerate(self.sin_coeffs, 1))
        lower = float(self.n(y).min()) - 1.0 - lipschitz / 8192.0
        object.__setattr__(self, "c_min", lower)

    def _init_sampled(self):
        s = np.array(self.samples)
        if len(s) < 9 or not np.all(np.isfinite(s)):
            raise DomainError("sampled profile needs at least 9 finite samples")
        if abs(s[0] - s[-1]) > 1e-12 * max(1.0, abs(s[0])):
            raise DomainError("sampled profile must be periodic: first and last samples must agree")
        s = s.copy()
        s[-1] = s[0]
        y = np.linspace(0.0, 1.0, len(s))
        spline = CubicSpline(y, s, bc_type="periodic")
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "n_bar", integrate(s, Grid(len(s))))
        fine = spline(np.linspace(0.0, 1.0, 4 * len(s)))
        object.__setattr__(self, "c_min", float(min(s.min(), fine.min())) - 1.0)

    # ------------------------------------------------------------ evaluation

    @property
    def is_piecewise_constant(self) -> bool:
        return self.kind == PIECEWISE

    @property
    def is_constant(self) -> bool:
        if self.kind == PIECEWISE:
            return len(set(self.values)) == 1
        if self.kind == TRIGONOMETRIC:
            return not any(self.cos_coeffs) and not any(self.sin_coeffs)
        return len(set(self.samples)) == 1

    def n(self, y):
        """Evaluate n at cell coordinate(s) ``y`` (any real, reduced mod 1)."""
        yy = wrap(y)
        if self.kind == PIECEWISE:
            idx = np.searchsorted(np.array(self.breakpoints), yy, side="right") - 1
            out = np.array(self.values)[idx]
        elif self.kind == TRIGONOMETRIC:
            out = np.full(np.shape(yy), self.mean, dtype=float)
            for k, c in enumerate(self.cos_coeffs, 1):
                out = out + c * np.cos(2 * math.pi * k * yy)
            for k, c in enumerate(self.sin_coeffs, 1):
                out = out + c * np.sin(2 * math.pi * k * yy)
        else:
            out = self._spline(yy)
        return out if np.ndim(out) else float(out)

    def n_scaled(self, x, eps: float):
        """n(x / eps)."""
        return self.n(np.asarray(x, dtype=float) / eps)

    def jump_points(self) -> np.ndarray:
        """Interior discontinuities of n within one cell (empty for smooth profiles)."""
        if self.kind != PIECEWISE:
            return np.empty(0)
        return np.array(self.breakpoints[1:])


def cell_split(eps: float) -> tuple[int, float]:
    """Write 1/eps = N + delta with integer N and delta in [0, 1).

    Values of 1/eps within 1e-9 relative of an integer count as whole, so
    eps = 1/7 gives (7, 0.0) despite rounding in the reciprocal.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise DomainError(f"eps must be positive and finite, got {eps!r}")
    r = 1.0 / eps
    whole = round(r)
    if abs(r - whole) <= 1e-9 * max(r, 1.0):
        return int(whole), 0.0
    n = math.floor(r)
    return int(n), float(r - n)


def cell_average(idx: PeriodicIndex) -> float:
    return idx.n_bar


def coefficient_a(idx: PeriodicIndex, y):
    """a(y) = 1 / (n(y) - 1)."""
    out = 1.0 / (np.asarray(idx.n(y)) - 1.0)
    return out if np.ndim(out) else float(out)


def mean_inverse_a(idx: PeriodicIndex) -> float:
    """Cell average of 1/a, computed from the coefficient a itself."""
    if idx.kind == PIECEWISE:
        ys = np.array(idx.breakpoints)
        widths = np.diff(np.append(ys, 1.0))
        return float(np.dot(widths, 1.0 / coefficient_a(idx, ys)))
    if idx.kind == TRIGONOMETRIC:
        # periodic trapezoid rule is exact for trigonometric polynomials of this degree
        order = max(len(idx.cos_coeffs), len(idx.sin_coeffs))
        y = np.arange(4 * order + 8) / (4 * order + 8)
        return float(np.mean(1.0 / coefficient_a(idx, y)))
    g = Grid(len(idx.samples))
    return integrate(1.0 / coefficient_a(idx, g.x), g)


def homogenized_coefficient(idx: PeriodicIndex) -> float:
    """Effective coefficient (mean of 1/a)^-1; cross-checked against 1/(n_bar - 1)."""
    via_a = 1.0 / mean_inverse_a(idx)
    via_mean = 1.0 / (idx.n_bar - 1.0)
    if abs(via_a - via_mean) > 1e-10 * abs(via_mean):
        raise AssertionError(f"homogenized coefficient mismatch: {via_a!r} vs {via_mean!r}")
    return via_mean


NAMED_PROFILES: dict[str, dict] = {
    "piecewise24": {"kind": PIECEWISE, "breakpoints": [[0.0, 2.0], [0.5, 4.0]]},
    "constant2": {"kind": "constant", "value": 2.0},
    "constant3": {"kind": "constant", "value": 3.0},
    "trig3": {"kind": TRIGONOMETRIC, "mean": 3.0, "cos": [1.0]},
    "trig3sin": {"kind": TRIGONOMETRIC, "mean": 3.0, "sin": [0.5]},
}


def named_profile(name: str) -> PeriodicIndex:
    try:
        spec = NAMED_PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown profile name {name!r}; known: {sorted(NAMED_PROFILES)}") from None
    return PeriodicIndex.from_spec(spec)

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from tehomog.bvp4 import (
    Coefficient,
    ExpSum,
    apply_operator,
    characteristic_roots,
    constant_coefficient_solution,
    element_quadrature,
    mass_apply,
    solve_cauchy,
    solve_clamped,
    solve_weak,
)
from tehomog.errors import DomainError, ResolutionError
from tehomog.numerics import Grid, fit_rate
from tehomog.periodic_media import PeriodicIndex, named_profile

TAU = 10.0


def manufactured(eps):
    """u = x^2 (1-x)^2 sin(3x) with n = 3 + cos(2 pi x / eps); returns (u, u'', h) callables."""
    x = sp.symbols("x", real=True)
    u = x**2 * (1 - x) ** 2 * sp.sin(3 * x)
    a = 1 / (2 + sp.cos(2 * sp.pi * x / eps))
    w = a * (sp.diff(u, x, 2) + TAU * u)
    h = sp.diff(w, x, 2) + TAU * w + TAU**2 * u
    return tuple(sp.lambdify(x, f, "numpy") for f in (u, sp.diff(u, x, 2), h))


@pytest.mark.parametrize("eps", [0.25, 0.125])
def test_manufactured_solution_second_order(eps):
    u, udd, h = manufactured(eps)
    coef = Coefficient.oscillatory(named_profile("trig3"), eps)
    errs = []
    for m in (129, 257, 513):
        g = Grid(m)
        sol = solve_clamped(coef, TAU, h(g.x), g)
        q = element_quadrature(g, coef)
        errs.append((g.h, q.norm(q.interpolate(sol.u) - u(q.points)), q.norm(sol.second_derivative(q) - udd(q.points))))
    l2 = fit_rate([(e[0], e[1]) for e in errs])
    h2 = fit_rate([(e[0], e[2]) for e in errs])
    assert l2.slope > 1.9
    assert h2.slope > 1.9
    assert errs[-1][1] < 1e-5


@pytest.mark.parametrize("bc", [(0, 0, 0, 0), (0.1, -0.3, 0.02, 0.5), (1.0, 0.0, -1.0, 2.0)])
def test_cauchy_problem_matches_closed_form(bc):
    exact = constant_coefficient_solution(2.0, TAU, bc, (1.0, math.pi))
    coef = Coefficient.homogenized(3.0)
    errs = []
    for m in (201, 401):
        g = Grid(m)
        sol = solve_cauchy(coef, TAU, np.sin(math.pi * g.x), bc, g)
        errs.append(np.max(np.abs(sol.u - exact(g.x))))
    assert errs[1] < 1e-5
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_closed_form_satisfies_equation():
    exact = constant_coefficient_solution(2.0, TAU, (0.3, -1.0, 0.2, 0.7), (2.0, 1.5))
    x = np.linspace(0, 1, 11)
    a = 0.5
    lhs = a * (exact(x, 4) + 2 * TAU * exact(x, 2) + TAU**2 * exact(x)) + TAU**2 * exact(x)
    np.testing.assert_allclose(lhs, 2.0 * np.sin(1.5 * x), atol=1e-9)
    np.testing.assert_allclose([exact(0.0), exact(0.0, 1), exact(1.0), exact(1.0, 1)], [0.3, -1.0, 0.2, 0.7],
                               atol=1e-12)


@pytest.mark.parametrize("c, tau", [(1.0, 1.0), (2.0, 61.8), (0.5, 200.0)])
def test_characteristic_roots(c, tau):
    r = characteristic_roots(c, tau)
    np.testing.assert_allclose((r**2 + tau) ** 2, -(tau**2) * c, rtol=1e-12)
    assert len(set(np.round(r, 10))) == 4


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.5, 20))
def test_expsum_derivatives(value, slope, k):
    f = ExpSum.cauchy_wave(value, slope, k)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(f(x), value * np.cos(k * x) + slope / k * np.sin(k * x), atol=1e-12)
    np.testing.assert_allclose(f(x, 2), -(k**2) * f(x), atol=1e-9 * k**2)


def test_expsum_algebra():
    s = ExpSum.sine(2.0, 3.0)
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose((s - s.scale(0.5))(x), np.sin(3 * x), atol=1e-15)
    assert ExpSum.zero()(0.3) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_solution_is_linear_in_load(seed, scale):
    rng = np.random.default_rng(seed)
    g = Grid(129)
    coef = Coefficient.oscillatory(named_profile("piecewise24"), 0.125)
    f1, f2 = rng.normal(size=g.m), rng.normal(size=g.m)
    u1 = solve_weak(coef, TAU, mass_apply(g, f1), g).u
    u2 = solve_weak(coef, TAU, mass_apply(g, f2), g).u
    u12 = solve_weak(coef, TAU, mass_apply(g, f1 + scale * f2), g).u
    np.testing.assert_allclose(u12, u1 + scale * u2, atol=1e-12 * (1 + np.max(np.abs(u12))))


def test_symmetric_medium_gives_symmetric_solution():
    # the cell profile is symmetric about y = 1/2 and 1/eps is whole, so the medium is symmetric about x = 1/2
    idx = PeriodicIndex.piecewise([(0.0, 4.0), (0.25, 2.0), (0.75, 4.0)])
    g = Grid(257)
    coef = Coefficient.oscillatory(idx, 0.125)
    u = solve_clamped(coef, TAU, np.sin(math.pi * g.x), g).u
    assert np.max(np.abs(u)) > 1e-4
    np.testing.assert_allclose(u, u[::-1], atol=1e-13 * np.max(np.abs(u)))


def test_clamped_conditions_hold():
    coef = Coefficient.oscillatory(named_profile("piecewise24"), 0.0625)
    slopes = []
    for m in (257, 513, 1025):
        g = Grid(m)
        u = solve_clamped(coef, TAU, np.ones(g.m), g).u
        assert max(abs(u[0]), abs(u[-1])) < 1e-10 * np.max(np.abs(u))
        slopes.append(u[1] / g.h)
    # the one-sided slope at x = 0 is O(h) since u'(0) = 0
    assert abs(slopes[1]) < 0.6 * abs(slopes[0]) and abs(slopes[2]) < 0.6 * abs(slopes[1])


def test_apply_operator_on_closed_form():
    exact = constant_coefficient_solution(2.0, TAU, (0, 0, 0, 0), (1.0, math.pi))
    g = Grid(401)
    r = apply_operator(Coefficient.homogenized(3.0), TAU, exact(g.x), g)
    assert np.isnan(r[:2]).all() and np.isnan(r[-2:]).all()
    np.testing.assert_allclose(r[2:-2], np.sin(math.pi * g.x[2:-2]), atol=1e-3)


def test_resolution_rule():
    coef = Coefficient.oscillatory(named_profile("piecewise24"), 1 / 16)
    with pytest.raises(ResolutionError):
        solve_clamped(coef, TAU, np.zeros(129), Grid(129))
    solve_clamped(coef, TAU, np.zeros(257), Grid(257))


@pytest.mark.parametrize("tau", [0.0, -1.0, math.inf])
def test_tau_must_be_positive(tau):
    with pytest.raises(DomainError):
        solve_clamped(Coefficient.homogenized(3.0), tau, np.zeros(33), Grid(33))


def test_coefficient_jumps_align_with_cells():
    coef = Coefficient.oscillatory(named_profile("piecewise24"), 0.25)
    np.testing.assert_allclose(coef.jumps(), [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875])
    assert Coefficient.oscillatory(named_profile("trig3"), 0.25).jumps().size == 0


def test_quadrature_integrates_piecewise_coefficient_exactly():
    coef = Coefficient.oscillatory(named_profile("piecewise24"), 1 / 3.3)
    q = element_quadrature(Grid(65), coef)
    # the integral of n - 1 over [0, 1] with 3.3 cells: 3 full cells average 2, the 0.3 tail sits in n = 2
    full = 3 * (1 / 3.3) * 2.0
    tail = (0.3 / 3.3) * 1.0
    assert q.integrate(coef.c(q.points)) == pytest.approx(full + tail, rel=1e-13)

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import PPoly

from tehomog.cell_problems import (
    NAMES,
    fourier_cell_functions,
    periodic_poisson_ppoly,
    solve_cell_functions,
    solve_periodic_poisson,
)
from tehomog.errors import ConsistencyError
from tehomog.numerics import Grid, integrate
from tehomog.periodic_media import PeriodicIndex, named_profile

Y = sp.symbols("y", real=True)


def sympy_periodic_poisson(rhs):
    """Mean-zero 1-periodic u with -u'' = rhs, by symbolic integration."""
    t, c1, c0 = sp.symbols("t c1 c0", real=True)
    slope = sp.integrate(rhs.subs(Y, t), (t, 0, Y))
    u = -sp.integrate(slope.subs(Y, t), (t, 0, Y)) + c1 * Y + c0
    sol = sp.solve([u.subs(Y, 1) - u.subs(Y, 0), sp.integrate(u, (Y, 0, 1))],
                   [c1, c0], dict=True)[0]
    return sp.simplify(u.subs(sol))


@pytest.fixture(scope="module")
def sympy_hierarchy():
    n = 3 + sp.cos(2 * sp.pi * Y)
    beta = sympy_periodic_poisson(3 - n)  # beta'' = n - n_bar
    chi = beta / 2
    gamma = sympy_periodic_poisson(2 * sp.diff(chi, Y))
    alpha = sympy_periodic_poisson(chi)
    bmat = sympy_periodic_poisson(2 * sp.diff(gamma, Y))
    return {"beta": beta, "chi": chi, "gamma": gamma, "alpha": alpha, "bmat": bmat}


def test_sympy_closed_forms(sympy_hierarchy):
    h = sympy_hierarchy
    pi = sp.pi
    assert sp.simplify(h["gamma"] - sp.sin(2 * pi * Y) / (8 * pi**3)) == 0
    assert sp.simplify(h["alpha"] + sp.cos(2 * pi * Y) / (32 * pi**4)) == 0
    assert sp.simplify(h["bmat"] - sp.cos(2 * pi * Y) / (8 * pi**4)) == 0


@pytest.mark.parametrize("name", NAMES)
def test_trig_profile_matches_sympy(name, sympy_hierarchy):
    cells = solve_cell_functions(named_profile("trig3"))
    y = np.linspace(0, 1, 41)
    exact = sp.lambdify(Y, sympy_hierarchy[name], "numpy")(y)
    scale = max(np.max(np.abs(exact)), 1e-300)
    np.testing.assert_allclose(cells.evaluate(name, y), exact, atol=1e-9 * scale)


@pytest.mark.parametrize("profile", ["trig3", "trig3sin"])
@pytest.mark.parametrize("name", NAMES)
def test_fourier_oracle_agrees(profile, name):
    idx = named_profile(profile)
    cells = solve_cell_functions(idx)
    four = fourier_cell_functions(idx)
    y = np.linspace(-0.5, 1.5, 57)
    ref = four[name](y)
    np.testing.assert_allclose(cells.evaluate(name, y), ref, atol=1e-9 * np.max(np.abs(ref)))


def test_piecewise_beta_slopes(piecewise_cells):
    # beta'' = n - n_bar is -1 then +1
    slopes = piecewise_cells.evaluate("beta", np.array([0.0, 0.25, 0.5, 0.75]), 1)
    np.testing.assert_allclose(slopes, [0.25, 0.0, -0.25, 0.0], atol=1e-14)


def test_piecewise_beta_closed_form(piecewise_cells):
    y = np.linspace(0, 1, 101)
    # beta'' = -1 then +1; the two halves average to +1/96 and -1/96, so no constant shift
    exact = np.where(y < 0.5, -0.5 * y**2 + 0.25 * y, 0.5 * (y - 0.5) ** 2 - 0.25 * (y - 0.5))
    np.testing.assert_allclose(piecewise_cells.evaluate("beta", y), exact, atol=1e-14)


@pytest.mark.parametrize("name", NAMES)
def test_piecewise_hierarchy_is_c1_periodic(piecewise_cells, name):
    pp = piecewise_cells.pieces[name]
    assert abs(pp(0.0) - pp(1.0)) < 1e-14
    assert abs(pp.derivative()(0.0) - pp.derivative()(1.0)) < 1e-13
    assert abs(pp.integrate(0.0, 1.0)) < 1e-15


def test_chi_is_scaled_beta(piecewise_cells):
    y = np.linspace(0, 1, 33)
    np.testing.assert_allclose(piecewise_cells.evaluate("chi", y) * 2.0, piecewise_cells.evaluate("beta", y),
                               atol=1e-15)


@pytest.mark.parametrize("profile", ["constant2", "constant3"])
def test_constant_profile_hierarchy_vanishes(profile):
    cells = solve_cell_functions(named_profile(profile))
    for name in NAMES:
        assert np.max(np.abs(cells.values[name])) <= 1e-10


piece_values = st.lists(st.floats(min_value=1.2, max_value=8.0), min_size=1, max_size=4)


@settings(max_examples=30, deadline=None)
@given(piece_values, st.data())
def test_random_piecewise_hierarchy(values, data):
    cuts = sorted(data.draw(st.sets(st.floats(min_value=0.05, max_value=0.95), min_size=len(values) - 1,
                                    max_size=len(values) - 1)))
    if any(b - a < 1e-3 for a, b in zip([0.0] + cuts, cuts)):
        return
    idx = PeriodicIndex.piecewise(list(zip([0.0] + cuts, values)))
    cells = solve_cell_functions(idx)
    beta = cells.pieces["beta"]
    # -beta'' = n_bar - n on every piece
    mids = 0.5 * (np.array([0.0] + cuts) + np.array(cuts + [1.0]))
    np.testing.assert_allclose(-beta.derivative(2)(mids), idx.n_bar - idx.n(mids), atol=1e-9)
    assert abs(beta(0.0) - beta(1.0)) < 1e-12
    assert abs(beta.integrate(0, 1)) < 1e-12
    y = np.linspace(0, 1, 17)
    np.testing.assert_allclose(cells.evaluate("chi", y) * (idx.n_bar - 1), cells.evaluate("beta", y), atol=1e-12)


def test_periodic_poisson_rejects_nonzero_mean():
    rhs = PPoly(np.array([[1.0]]), np.array([0.0, 1.0]))
    with pytest.raises(ConsistencyError):
        periodic_poisson_ppoly(rhs)


def test_sampled_poisson_matches_exact():
    g = Grid(257)
    u = solve_periodic_poisson(np.cos(2 * math.pi * g.x), g)
    np.testing.assert_allclose(u, np.cos(2 * math.pi * g.x) / (4 * math.pi**2), atol=1e-9)
    assert abs(integrate(u, g)) < 1e-12

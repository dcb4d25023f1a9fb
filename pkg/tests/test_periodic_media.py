import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tehomog.errors import ConfigError, DomainError
from tehomog.periodic_media import (
    NAMED_PROFILES,
    PeriodicIndex,
    cell_split,
    homogenized_coefficient,
    mean_inverse_a,
    named_profile,
    wrap,
)


def test_piecewise_average():
    idx = PeriodicIndex.piecewise([(0.0, 2.0), (0.5, 4.0)])
    assert idx.n_bar == 3.0
    assert idx.n(0.25) == 2.0 and idx.n(0.75) == 4.0
    assert idx.n(1.25) == 2.0 and idx.n(-0.25) == 4.0
    np.testing.assert_array_equal(idx.jump_points(), [0.5])


@pytest.mark.parametrize("name", sorted(NAMED_PROFILES))
def test_named_profiles_round_trip(name):
    idx = named_profile(name)
    again = PeriodicIndex.from_spec(idx.to_spec())
    y = np.linspace(-1, 2, 37)
    np.testing.assert_allclose(again.n(y), idx.n(y))


@pytest.mark.parametrize("spec", [
    {"kind": "piecewise", "breakpoints": [[0.0, 1.0]]},         # n - 1 = 0
    {"kind": "piecewise", "breakpoints": [[0.1, 2.0]]},         # must start at 0
    {"kind": "piecewise", "breakpoints": [[0.0, 2.0], [0.0, 3.0]]},
    {"kind": "trigonometric", "mean": 2.0, "cos": [1.5]},       # dips below 1
    {"kind": "sampled", "samples": [2.0] * 8},                  # too few
    {"kind": "sampled", "samples": [2.0] * 9 + [3.0]},          # not periodic
])
def test_invalid_profiles(spec):
    with pytest.raises(DomainError):
        PeriodicIndex.from_spec(spec)


def test_unknown_name_is_config_error():
    with pytest.raises(ConfigError):
        named_profile("nope")


@pytest.mark.parametrize("spec", [
    NAMED_PROFILES["piecewise24"],
    {"kind": "piecewise", "breakpoints": [[0.0, 1.5], [0.2, 5.0], [0.7, 2.5]]},
    NAMED_PROFILES["trig3"],
    {"kind": "trigonometric", "mean": 4.0, "cos": [0.5, 0.25], "sin": [0.3]},
    {"kind": "sampled", "samples": list(3.0 + 0.5 * np.cos(2 * np.pi * np.linspace(0, 1, 65)))},
])
def test_homogenized_identity(spec):
    idx = PeriodicIndex.from_spec(spec)
    assert (1.0 / mean_inverse_a(idx)) * (idx.n_bar - 1.0) == pytest.approx(1.0, abs=1e-10)
    assert homogenized_coefficient(idx) == pytest.approx(1.0 / (idx.n_bar - 1.0), rel=1e-12)


@pytest.mark.parametrize("n, expected", [(7, (7, 0.0)), (13, (13, 0.0)), (8.5, (8, 0.5)), (64.5, (64, 0.5))])
def test_cell_split(n, expected):
    N, delta = cell_split(1.0 / n)
    assert N == expected[0]
    assert delta == pytest.approx(expected[1], abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-3, max_value=0.99))
def test_cell_split_reconstructs(eps):
    N, delta = cell_split(eps)
    assert 0.0 <= delta < 1.0
    assert N + delta == pytest.approx(1.0 / eps, rel=1e-9)


@pytest.mark.parametrize("eps", [0.0, -0.1, math.inf, math.nan])
def test_cell_split_rejects(eps):
    with pytest.raises(DomainError):
        cell_split(eps)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_wrap_in_unit_interval(y):
    r = float(wrap(y))
    assert 0.0 <= r < 1.0

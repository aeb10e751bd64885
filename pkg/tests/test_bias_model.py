import math

import pytest
from hypothesis import given, strategies as st

from forcebias.bias_model import (
    BiasParameters,
    bias,
    check_force,
    implicit_equilibrium,
    implicit_gain,
    reproduce,
    sgn,
)

from conftest import HAND, params_and_force


def test_rejects_invalid_parameters():
    with pytest.raises(ValueError):
        BiasParameters(1.0, 0.0)
    with pytest.raises(ValueError):
        BiasParameters(1.0, 0.3)
    with pytest.raises(ValueError):
        BiasParameters(0.0, -0.5)
    with pytest.raises(ValueError):
        BiasParameters(float("nan"), -0.5)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
def test_forces_must_be_positive(bad):
    with pytest.raises(ValueError):
        check_force(bad)
    with pytest.raises(ValueError):
        reproduce(HAND, bad)


def test_sgn_of_zero_is_zero():
    assert sgn(0.0) == 0 and sgn(-0.0) == 0
    assert sgn(3.0) == 1 and sgn(-1e-300) == -1


def test_equilibrium_hand_finger():
    # reported as 1.009; exact value is 1.00962
    assert implicit_equilibrium(HAND) == pytest.approx(1.009, abs=1e-3)
    assert implicit_equilibrium(HAND) == pytest.approx(1.0096172662049471, rel=1e-14)


@pytest.mark.parametrize("beta", [-0.1, -0.5, -1.7])
def test_equilibrium_unit_alpha(beta):
    assert implicit_equilibrium(BiasParameters(1.0, beta)) == 1.0


def test_equilibrium_solved_by_hand():
    assert implicit_equilibrium(BiasParameters(2.0, -1.0)) == pytest.approx(2.0, rel=1e-15)


def test_from_equilibrium_roundtrip():
    p = BiasParameters.from_equilibrium(3.7, -0.4)
    assert p.gamma == pytest.approx(3.7, rel=1e-14)


def test_implicit_gain_examples():
    assert implicit_gain(HAND, HAND.gamma) == pytest.approx(0.0, abs=1e-15)
    # mpmath, 40 digits: 0.55146409036038846855...
    assert implicit_gain(HAND, 0.5) == pytest.approx(0.5514640903603885, rel=1e-14)
    assert implicit_gain(BiasParameters(1.0, -0.5), 4.0) == 0.5


def test_bias_examples():
    p = BiasParameters(1.0, -0.5)
    assert bias(p, 1.0) == 0.0
    assert bias(p, 4.0) == -0.5
    assert bias(p, 0.25) == 1.0


def test_reproduce_examples():
    p = BiasParameters(1.0, -0.5)
    assert reproduce(p, 4.0) == 2.0
    g = HAND.gamma
    assert reproduce(HAND, g) == g
    assert reproduce(HAND, 1.009) == pytest.approx(1.009, abs=1e-3)


@given(params_and_force())
def test_sign_of_bias_follows_equilibrium(pr):
    p, r = pr
    u = bias(p, r)
    if u != 0:
        assert sgn(u) == sgn(p.gamma - r)


@given(params_and_force())
def test_closed_form_identity(pr):
    p, r = pr
    assert abs(1 + bias(p, r) - p.alpha * r**p.beta) < 1e-12 * max(1.0, p.alpha * r**p.beta)


@given(params_and_force())
def test_reproduce_equals_power_law(pr):
    p, r = pr
    assert reproduce(p, r) == pytest.approx(p.alpha * r ** (1 + p.beta), rel=1e-12)


@given(params_and_force(beta_min=-0.99), st.floats(1.0001, 10.0))
def test_reproduce_monotone_when_exponent_positive(pr, factor):
    p, r = pr
    assert reproduce(p, r * factor) > reproduce(p, r)


@given(params_and_force())
def test_over_below_under_above(pr):
    p, r = pr
    h = reproduce(p, r)
    g = p.gamma
    if r < g * (1 - 1e-9):
        assert h > r
    elif r > g * (1 + 1e-9):
        assert h < r


def test_numpy_scalars_accepted():
    import numpy as np

    assert sgn(np.float64(-2.0)) == -1
    assert reproduce(HAND, np.float64(2.0)) == reproduce(HAND, 2.0)

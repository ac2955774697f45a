from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alfeld_elast.quadrature import MAX_DEGREE, exact_monomial, simplex_rule, simplex_volume
from alfeld_elast.tensor_calculus import exponents


def test_volume_of_reference_tet():
    rule = simplex_rule(3, 2)
    assert abs(rule.integrate(np.ones(len(rule.weights)), 1 / 6) - 1 / 6) < 1e-15
    assert abs(rule.weights.sum() - 1 / 6) < 1e-15


def test_x2y2_on_triangle():
    rule = simplex_rule(2, 4)
    x = rule.points[:, 1:]
    val = rule.integrate(x[:, 0] ** 2 * x[:, 1] ** 2, 0.5)
    assert abs(val - 1 / 180) < 1e-15
    assert abs(exact_monomial([0, 2, 2]) - 1 / 180) < 1e-16


def test_x3y3_on_tet():
    rule = simplex_rule(3, 6)
    x = rule.points[:, 1:]
    val = rule.integrate(x[:, 0] ** 3 * x[:, 1] ** 3, 1 / 6)
    assert abs(val - exact_monomial([0, 3, 3, 0])) < 1e-15


def test_exact_monomial_examples():
    assert exact_monomial([0, 0, 0, 0]) == pytest.approx(1 / 6, abs=1e-16)
    assert exact_monomial([0, 0, 0, 0], volume=2.5) == pytest.approx(2.5)
    assert exact_monomial([1, 1, 0, 0]) == pytest.approx(1 / 120, abs=1e-17)
    vol4 = 1 / 24
    assert exact_monomial([2, 0, 0, 0, 0]) == pytest.approx(2 * 24 * vol4 / factorial(6), rel=1e-14)


@pytest.mark.parametrize("ndim", [2, 3])
@pytest.mark.parametrize("degree", range(MAX_DEGREE + 1))
def test_rule_exact_on_all_monomials(ndim, degree):
    rule = simplex_rule(ndim, degree)
    assert np.all(rule.weights > 0)
    for alpha in exponents(ndim + 1, degree):
        val = rule.integrate(np.prod(rule.points ** np.array(alpha), axis=1), 1 / factorial(ndim))
        assert abs(val - exact_monomial(alpha)) < 1e-15


def test_unsupported_rule():
    with pytest.raises(ValueError):
        simplex_rule(3, MAX_DEGREE + 1)
    with pytest.raises(ValueError):
        simplex_rule(5, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_affine_invariance(seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(4, 3))
    vol = simplex_volume(V)
    if vol < 1e-3:
        return
    # integrate a cubic in physical coordinates two ways
    c = rng.normal(size=3)
    rule = simplex_rule(3, 3)
    x = rule.physical_points(V)
    got = rule.integrate((x @ c) ** 3, vol)
    # expand (sum_a lambda_a (V_a . c))^3 with barycentric monomials
    w = V @ c
    expected = 0.0
    for alpha in exponents(4, 3):
        if sum(alpha) != 3:
            continue
        mult = factorial(3) / np.prod([factorial(a) for a in alpha])
        expected += mult * np.prod(w ** np.array(alpha)) * exact_monomial(alpha, vol)
    assert abs(got - expected) <= 1e-13 * max(1.0, abs(expected))

from fractions import Fraction

import pytest

from fastslow.asymptotics import (
    breakdown_scale,
    residual_scaling_slope,
    series_residual,
    slow_manifold_series,
)
from fastslow.models import power_law_system

# residuals drop into double-precision noise below ~1e-4, so the slope grid
# stays coarse on purpose
EPS_GRID = [3e-2, 1e-2, 3e-3, 1e-3]


def test_coefficients_s1_are_double_factorials():
    sm = slow_manifold_series(1, 1, 4)
    got = [c.terms for c in sm.coefficients]
    # x_k = (2k-1)!! * y^(-(2k+1))
    want = [
        {Fraction(-1): Fraction(1)},
        {Fraction(-3): Fraction(1)},
        {Fraction(-5): Fraction(3)},
        {Fraction(-7): Fraction(15)},
        {Fraction(-9): Fraction(105)},
    ]
    assert got == want


def test_coefficients_s2_live_on_the_half_integer_lattice():
    sm = slow_manifold_series(2, -1, 3)
    got = [c.terms for c in sm.coefficients]
    want = [
        {Fraction(-1, 2): Fraction(1)},
        {Fraction(-2): Fraction(-1, 4)},
        {Fraction(-7, 2): Fraction(7, 32)},
        {Fraction(-5): Fraction(-21, 64)},
    ]
    assert got == want


def test_mu_sign_enters_through_odd_orders():
    plus = slow_manifold_series(1, 1, 3)
    minus = slow_manifold_series(1, -1, 3)
    for k in range(4):
        sign = -1 if k % 2 else 1
        assert minus.coefficients[k].terms == {
            q: sign * c for q, c in plus.coefficients[k].terms.items()
        }


def test_truncation_satisfies_graph_equation_to_next_order():
    sysm = power_law_system(1, 1)
    sm = slow_manifold_series(1, 1, 2)
    eps = 1e-3
    r = series_residual(sysm, sm, eps)
    assert 0 < r < 1e3 * eps**3  # residual is O(eps^(K+1)); constant ~15/y^7
    # halving eps divides the residual by ~2^3
    assert series_residual(sysm, sm, eps / 2) == pytest.approx(r / 8, rel=0.05)


@pytest.mark.parametrize("s,order", [(1, 1), (1, 2), (1, 3), (2, 2), (3, 1)])
def test_residual_scaling_slope(s, order):
    sysm = power_law_system(s, 1)
    sm = slow_manifold_series(s, 1, order)
    slope = residual_scaling_slope(sysm, sm, EPS_GRID)
    assert slope == pytest.approx(order + 1, abs=0.1)


@pytest.mark.parametrize("s", range(1, 9))
def test_breakdown_exponents_exact(s):
    sm = slow_manifold_series(s, 1, 1)
    x_exp, y_exp = breakdown_scale(sm)
    assert x_exp == Fraction(-1, s + 1)
    assert y_exp == Fraction(s, s + 1)


def test_eval_matches_coefficient_sum():
    sm = slow_manifold_series(1, 1, 2)
    y, eps = 1.5, 1e-2
    want = 1 / y + eps / y**3 + 3 * eps**2 / y**5
    assert sm.eval_x(y, eps) == pytest.approx(want, rel=1e-14)
    d_want = -1 / y**2 - 3 * eps / y**4 - 15 * eps**2 / y**6
    assert sm.eval_dx_dy(y, eps) == pytest.approx(d_want, rel=1e-14)


def test_degenerate_inputs_rejected():
    with pytest.raises(ValueError):
        slow_manifold_series(1, 1, 0)
    sm = slow_manifold_series(1, 1, 1)
    object.__setattr__(sm, "coefficients", sm.coefficients[:1])
    with pytest.raises(ValueError):
        breakdown_scale(sm)

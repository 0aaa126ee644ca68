from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastslow.exactpoly import GenPoly, StructureError, symbols
from fastslow.models import (
    ParameterError,
    autocatalator2d,
    autocatalator3d_rhs,
    critical_graph,
    nh_measure,
    parse_model,
    power_law_system,
)


def test_power_law_rhs_exact():
    sys2 = power_law_system(2, -1)
    x, y = symbols("x y")
    assert sys2.fast_rhs == 1 - x**2 * y
    assert sys2.slow_rhs == GenPoly.constant(-1, ("x", "y"))


def test_power_law_parameter_validation():
    with pytest.raises(ParameterError):
        power_law_system(0, 1)
    with pytest.raises(ParameterError):
        power_law_system(-2, 1)
    with pytest.raises(ParameterError):
        power_law_system(2, 0)


def test_time_scale_rhs_are_consistent():
    sysm = power_law_system(1, 1)
    eps = Fraction(1, 100)
    fast = sysm.fast_time_rhs(eps)
    slow = sysm.slow_time_rhs(eps)
    # slow-time field is the fast-time field divided by eps, exactly
    assert slow[0] * eps == fast[0]
    assert slow[1] * eps == fast[1]


def test_fast_time_rhs_accepts_float_eps_exactly():
    sysm = power_law_system(1, 1)
    fast = sysm.fast_time_rhs(0.25)
    assert fast[1] == GenPoly.constant(Fraction(1, 4), ("x", "y"))


@given(st.integers(1, 6))
@settings(max_examples=6, deadline=None)
def test_critical_graph_is_exact_zero_set(s):
    sysm = power_law_system(s, -1)
    graph = critical_graph(sysm)
    assert graph.direction == "x"
    # f vanishes identically on y = x**(-s): checked symbolically inside
    for xv in (0.5, 1.0, 3.0):
        yv = graph.expression.eval_float({"x": xv})
        assert sysm.fast_rhs.eval_float({"x": xv, "y": yv}) == pytest.approx(
            0.0, abs=1e-14
        )


def test_critical_graph_rejects_non_power_law():
    with pytest.raises(StructureError):
        critical_graph(autocatalator2d(Fraction(11, 10)))


def test_nh_measure_on_the_graph():
    # on y = x**(-s): df/dx = -s * x**(s-1) * y = -s / x
    sysm = power_law_system(3, -1)
    val = nh_measure(sysm, (Fraction(2), Fraction(1, 8)))
    assert val == Fraction(-3, 2)
    # loses hyperbolicity as x -> infinity
    assert abs(nh_measure(sysm, (Fraction(100), Fraction(1, 100**3)))) < 0.05


def test_autocatalator_rhs():
    sysm = autocatalator2d(Fraction(11, 10))
    x, y = symbols("x y")
    assert sysm.fast_rhs == y * x**2 + y - x
    assert sysm.slow_rhs == Fraction(11, 10) - y * x**2 - y


def test_autocatalator3d_shape():
    variables, polys = autocatalator3d_rhs(1, 1, Fraction(1, 100))
    assert variables == ("x", "y", "z")
    assert len(polys) == 3


def test_parse_model_registry():
    sysm = parse_model("power-law:s=2,mu=-3/2")
    assert sysm.params == {"s": 2, "mu": Fraction(-3, 2)}
    sysm = parse_model("autocatalator2d:mu=1.1")
    assert sysm.params["mu"] == Fraction(11, 10)
    sysm = parse_model("power-law:s=1")
    assert sysm.params["mu"] == Fraction(-1)
    with pytest.raises(ParameterError):
        parse_model("van-der-pol:mu=1")

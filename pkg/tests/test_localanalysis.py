from fractions import Fraction

import numpy as np
import pytest

from fastslow.exactpoly import GenPoly, PuiseuxSeries, StructureError, symbols
from fastslow.localanalysis import (
    center_manifold_series,
    cm_comparison_report,
    equilibria_on_subspace,
    invariance_residual,
    kappa2_plane_field,
    linearize_eigen,
    null_eigenvector_slope,
    rational_roots,
    transport_comparison_report,
    transport_series,
    variational_matrix,
)
from fastslow.transforms import kappa12, standard_chart_field


def _p1a(s, mu):
    cf = standard_chart_field(s, mu, "K1")
    eqs = equilibria_on_subspace(cf, "r1=0")
    pinned = [e for e in eqs if e.coordinates.get("v1") == 1]
    assert len(pinned) == 1
    return cf, pinned[0]


def test_rational_roots():
    (x,) = symbols("x")
    p = (2 * x - 1) * (x + 3) * x
    assert rational_roots(p, "x") == [-3, 0, Fraction(1, 2)]
    with pytest.raises(StructureError):
        rational_roots(GenPoly.monomial(1, {"x": Fraction(1, 2)}), "x")


@pytest.mark.parametrize("s", [1, 2, 3])
def test_equilibria_in_the_invariant_plane(s):
    cf = standard_chart_field(s, -1, "K1")
    eqs = equilibria_on_subspace(cf, "r1=0")
    # the v1 = 0 axis is a line of equilibria
    lines = [e for e in eqs if e.free_variable is not None]
    assert any(
        e.coordinates.get("v1") == 0 and e.free_variable == "eps1" for e in lines
    )
    # the hyperbolic corner point (v1, eps1) = (1, 0)
    pinned = [e for e in eqs if e.free_variable is None]
    assert any(
        e.coordinates.get("v1") == 1 and e.coordinates.get("eps1") == 0
        for e in pinned
    )
    # even s picks up the mirror point at v1 = -1
    has_mirror = any(e.coordinates.get("v1") == -1 for e in pinned)
    assert has_mirror == (s % 2 == 0)


@pytest.mark.parametrize("s", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("mu", [-1, -2])
def test_eigen_structure_at_corner_point(s, mu):
    cf, eq = _p1a(s, mu)
    ed = linearize_eigen(cf, eq)
    assert ed.exact
    assert set(ed.eigenvalues) == {Fraction(0), Fraction(-s * s)}
    assert null_eigenvector_slope(ed) == Fraction(-mu, s * s)


def test_center_manifold_series_coefficients():
    # s=1, mu=-1 closed-loop oracle: solved by hand through order 2, the
    # tail pinned by the certified-zero invariance residual
    cf, eq = _p1a(1, -1)
    cm = center_manifold_series(cf, eq, order=6)
    assert [cm.coefficient(k) for k in range(7)] == [1, 1, -2, 10, -74, 706, -8162]


@pytest.mark.parametrize("s", [1, 2, 3])
def test_center_manifold_invariance_and_tangency(s):
    cf, eq = _p1a(s, -1)
    cm = center_manifold_series(cf, eq, order=5)
    f2 = cf.restrict("r1", 0)
    res = invariance_residual(f2, "eps1", "v1", cm.series)
    assert all(q > cm.order for q in res.terms)
    ed = linearize_eigen(cf, eq)
    assert cm.coefficient(1) == null_eigenvector_slope(ed)


def test_cm_comparison_report_flags_printed_constants():
    cf, eq = _p1a(1, -1)
    rep = cm_comparison_report(center_manifold_series(cf, eq, order=3))
    by_order = {r["order"]: r for r in rep["rows"]}
    # first order printed form coincides for s=1
    assert by_order[1]["agree"]
    assert by_order[1]["computed"] == "1"
    # second order: exact -2 vs printed -3/2 -- reported, not asserted equal
    assert by_order[2]["computed"] == "-2"
    assert by_order[2]["printed"] == "-3/2"
    assert not by_order[2]["agree"]
    assert not rep["all_agree"]


def test_cm_first_order_vs_printed_depends_on_s():
    # printed -mu/s equals computed -mu/s^2 only at s=1
    cf, eq = _p1a(2, -1)
    rep = cm_comparison_report(center_manifold_series(cf, eq, order=2))
    assert not {r["order"]: r for r in rep["rows"]}[1]["agree"]


def test_transport_to_second_chart():
    cf, eq = _p1a(1, -1)
    cm = center_manifold_series(cf, eq, order=6)
    ts = transport_series(cm, kappa12(1), 1)
    assert ts.series.terms == {
        Fraction(-1): Fraction(1),
        Fraction(1): Fraction(1),
        Fraction(3): Fraction(-2),
        Fraction(5): Fraction(10),
        Fraction(7): Fraction(-74),
        Fraction(9): Fraction(706),
        Fraction(11): Fraction(-8162),
    }
    # leading term y2^(1/s), not the printed constant
    assert ts.leading_in_y2() == (Fraction(1), Fraction(1))
    rep = transport_comparison_report(ts, -1)
    assert not rep["leading_terms_agree"]
    assert rep["computed_leading"]["y2_exponent"] == "1"


def test_transport_rejects_wrong_map():
    from fastslow.transforms import kappa21

    cf, eq = _p1a(1, -1)
    cm = center_manifold_series(cf, eq, order=2)
    with pytest.raises(StructureError):
        transport_series(cm, kappa21(1), 1)


def test_variational_matrix_interpolates_jacobian():
    cf2 = kappa2_plane_field(1, -1)
    times = [0.0, 1.0]
    states = [[1.0, 2.0], [3.0, 4.0]]
    A = variational_matrix(cf2, times, states)
    # components: v2' = v2^2 y2 - v2^3, y2' = -v2
    v2, y2 = 1.0, 2.0
    want = np.array([[2 * v2 * y2 - 3 * v2**2, v2**2], [-1.0, 0.0]])
    assert np.allclose(A(0.0), want)
    v2, y2 = 2.0, 3.0  # midpoint of the linear interpolation
    want = np.array([[2 * v2 * y2 - 3 * v2**2, v2**2], [-1.0, 0.0]])
    assert np.allclose(A(0.5), want)

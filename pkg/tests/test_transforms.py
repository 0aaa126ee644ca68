from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastslow.exactpoly import GenPoly, Monomial, StructureError, symbols
from fastslow.models import power_law_system
from fastslow.transforms import (
    DesingularizationError,
    blowdown_consistency,
    desingularize_by_monomial,
    kappa12,
    kappa21,
    modified_chart_field,
    modified_weights,
    standard_chart_field,
    standard_weights,
    power_law_blowup_input,
    projective_localize,
    transition,
)

positive_fracs = st.fractions(
    min_value=Fraction(1, 12), max_value=Fraction(50), max_denominator=12
)


def _expected_k1(s, mu):
    v1, r1, eps1 = symbols("v1 r1 eps1")
    mu = Fraction(mu)
    return (
        s * v1**2 * (1 - v1**s) - mu * eps1 * v1 ** (s + 1),
        mu * r1 * eps1 * v1**s,
        -(s + 1) * mu * eps1**2 * v1**s,
    )


def _expected_k2(s, mu):
    v2, y2 = symbols("v2 y2")
    return (
        v2**2 * (y2 - v2**s),
        GenPoly.constant(Fraction(mu), ("v2", "y2")) * v2**s,
        GenPoly.constant(0, ("v2", "y2")),
    )


# -- localization / desingularization ---------------------------------------


def test_projective_localize_matches_substitution():
    sysm = power_law_system(2, -1)
    f_v, g = projective_localize(sysm)
    for vv, yv in ((0.5, 1.3), (2.0, 0.1)):
        xv = 1.0 / vv
        # dv/dt = -v^2 * dx/dt
        want = -(vv**2) * sysm.fast_rhs.eval_float({"x": xv, "y": yv})
        assert f_v.eval_float({"v": vv, "y": yv}) == pytest.approx(want, rel=1e-13)
        assert g.eval_float({"v": vv, "y": yv}) == pytest.approx(
            sysm.slow_rhs.eval_float({"x": xv, "y": yv}), rel=1e-13
        )


def test_desingularize_clears_poles():
    sysm = power_law_system(3, -1)
    f_v, g = projective_localize(sysm)
    assert f_v.min_exponent("v") < 0
    (f_d, g_d), reverses = desingularize_by_monomial([f_v, g], "v", 3)
    assert f_d.min_exponent("v") >= 0
    assert reverses  # odd power of v flips time for v < 0


def test_desingularize_reports_offending_term():
    sysm = power_law_system(5, -1)
    f_v, _ = projective_localize(sysm)  # min v-exponent is -(s-2) = -3
    with pytest.raises(DesingularizationError, match="negative exponent"):
        desingularize_by_monomial([f_v], "v", 1)


def test_blowup_input_field():
    variables, field3d = power_law_blowup_input(2, -1)
    assert variables == ("v", "y", "eps")
    v, y, eps = symbols("v y eps")
    assert field3d[0] == v**2 * (y - v**2)
    assert field3d[1] == -eps * v**2
    assert field3d[2].is_zero


# -- chart fields ------------------------------------------------------------


@pytest.mark.parametrize("s", [1, 2, 3])
@pytest.mark.parametrize("mu", [-1, -2, Fraction(11, 10)])
def test_chart_fields_exact(s, mu):
    k1 = standard_chart_field(s, mu, "K1")
    assert k1.coords == ("v1", "r1", "eps1")
    assert k1.extracted_factor == ("r1", Fraction(s + 1))
    assert k1.time_rescale == s
    for got, want in zip(k1.components, _expected_k1(s, mu)):
        assert got == want.with_variables(k1.coords)

    k2 = standard_chart_field(s, mu, "K2")
    assert k2.coords == ("v2", "y2", "eps")
    assert k2.extracted_factor == ("eps", Fraction(1))
    for got, want in zip(k2.components, _expected_k2(s, mu)):
        assert got == want.with_variables(k2.coords)


def test_chart_weights():
    w = standard_weights(3)
    assert (w.alpha_v, w.alpha_y, w.alpha_eps) == (1, 3, 4)
    m = modified_weights(3, Fraction(1, 10), 0)
    assert (m.alpha_v, m.alpha_y, m.alpha_eps) == (Fraction(11, 10), 3, 4)


def test_modified_chart_reduces_to_standard_chart():
    base = modified_chart_field(2, -1, 0, 0, "K1")
    base_chart = standard_chart_field(2, -1, "K1")
    # modified charts are not renormalized: rescale 1 vs s
    for got, want in zip(base.components, base_chart.components):
        assert 2 * got == want


def test_chart_restrict():
    k1 = standard_chart_field(1, -1, "K1")
    inv = k1.restrict("r1", 0)
    assert inv.coords == ("v1", "eps1")
    v1, eps1 = symbols("v1 eps1")
    assert inv.components[0] == (v1**2 * (1 - v1) + eps1 * v1**2).with_variables(
        inv.coords
    )


# -- transition maps ---------------------------------------------------------


@given(positive_fracs, positive_fracs, positive_fracs, st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_kappa_roundtrip(v1, r1, eps1, s):
    pt = {"v1": v1, "r1": r1, "eps1": eps1}
    there = transition(pt, kappa12(s))
    back = transition(there, kappa21(s))
    for k, v in pt.items():
        b = back[k]
        if isinstance(b, Fraction):
            assert b == v
        else:
            assert float(b) == pytest.approx(float(v), rel=1e-12)


def test_kappa_composition_is_identity():
    tm = kappa21(2).compose(kappa12(2))
    assert tm.source == "K1" and tm.target == "K1"
    for var, mono in tm.rules.items():
        assert mono.coeff == 1
        assert mono.powers == {var: Fraction(1)}


def test_transition_rejects_negative_base_under_fractional_power():
    with pytest.raises(StructureError):
        transition({"v1": 1.0, "r1": 1.0, "eps1": -0.5}, kappa12(1))


@pytest.mark.parametrize("s", [1, 2, 3])
def test_cross_chart_field_relation(s):
    # D(kappa12) . X_K1 = s * eps1 * X_K2 evaluated at the image point
    k1 = standard_chart_field(s, -1, "K1")
    k2 = standard_chart_field(s, -1, "K2")
    tm = kappa12(s)
    coords = ("v1", "r1", "eps1")
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(25):
        pt1 = {
            "v1": float(rng.uniform(0.3, 1.5)),
            "r1": float(rng.uniform(0.1, 1.0)),
            "eps1": float(rng.uniform(0.05, 0.8)),
        }
        x1 = [c.eval_float(pt1) for c in k1.components]
        img = tm.apply(pt1)
        pt2 = {
            "v2": float(img["v2"]),
            "y2": float(img["y2"]),
            "eps": float(img["r2"]) ** (s + 1),
        }
        x2 = [c.eval_float(pt2) for c in k2.components]
        for i, var in enumerate(("v2", "y2")):
            mono = tm.rules[var]
            g = GenPoly.monomial(mono.coeff, mono.powers, coords)
            lhs = sum(
                g.diff(c).eval_float(pt1) * x1[j] for j, c in enumerate(coords)
            )
            rhs = s * pt1["eps1"] * x2[i]
            worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-30))
    assert worst < 1e-12


# -- blow-down consistency ---------------------------------------------------


def _samples(chart, n=40, seed=3):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        if chart == "K1":
            out.append(
                {
                    "v1": rng.uniform(0.2, 2.0),
                    "r1": rng.uniform(0.05, 1.0),
                    "eps1": rng.uniform(0.05, 1.0),
                }
            )
        else:
            out.append(
                {
                    "v2": rng.uniform(0.2, 2.0),
                    "y2": rng.uniform(0.2, 2.0),
                    "eps": rng.uniform(0.05, 1.0),
                }
            )
    return out


@pytest.mark.parametrize("chart", ["K1", "K2"])
@pytest.mark.parametrize("s", [1, 2])
def test_blowdown_consistency(chart, s):
    _, field3d = power_law_blowup_input(s, -1)
    cf = standard_chart_field(s, -1, chart)
    worst, skipped = blowdown_consistency(cf, field3d, _samples(chart))
    assert worst < 1e-10
    assert not skipped


def test_blowdown_consistency_detects_wrong_field():
    # negative control: perturbing one chart component must blow the residual
    from dataclasses import replace

    _, field3d = power_law_blowup_input(1, -1)
    cf = standard_chart_field(1, -1, "K1")
    v1 = GenPoly.variable("v1", cf.coords)
    bad = replace(cf, components=(cf.components[0] + v1,) + cf.components[1:])
    worst, _ = blowdown_consistency(bad, field3d, _samples("K1"))
    assert worst > 1e-3

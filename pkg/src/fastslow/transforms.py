"""Projective localization, weighted blow-up charts and transitions.

The pipeline implemented here takes the power-law fast-slow system, moves the
unbounded end of the critical manifold to the origin via x = 1/v, removes the
resulting degenerate factor by multiplying with v**s, augments eps' = 0, and
derives the desingularized vector fields in the two directional charts of a
weighted blow-up

    v = r**a_v * vbar,   y = r**a_y * ybar,   eps = r**a_eps * epsbar.

Chart K1 sets ybar = 1, chart K2 sets epsbar = 1.  All chart fields are exact
GenPoly data; the common monomial factor removed by desingularization and any
constant time rescaling applied afterwards are recorded on the ChartField so
that every identity can be checked up to a known positive reparametrization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .exactpoly import GenPoly, Monomial, StructureError, rational_power
from .models import FastSlowSystem

__all__ = [
    "BlowUpWeights",
    "ChartField",
    "TransitionMap",
    "DesingularizationError",
    "projective_localize",
    "desingularize_by_monomial",
    "augment_epsilon",
    "blowup_chart",
    "standard_weights",
    "modified_weights",
    "power_law_blowup_input",
    "standard_chart_field",
    "kappa12",
    "kappa21",
    "transition",
    "blowdown_map",
    "blowdown_consistency",
    "pushforward_residual",
]


class DesingularizationError(ValueError):
    """Raised when a monomial factor cannot clear all negative exponents."""


@dataclass(frozen=True)
class BlowUpWeights:
    alpha_v: Fraction
    alpha_y: Fraction
    alpha_eps: Fraction

    def __post_init__(self):
        for name in ("alpha_v", "alpha_y", "alpha_eps"):
            val = Fraction(getattr(self, name))
            if val <= 0:
                raise ValueError(f"{name} must be positive, got {val}")
            object.__setattr__(self, name, val)


def standard_weights(s: int) -> BlowUpWeights:
    """The quasi-homogeneous weights (1, s, s+1)."""
    return BlowUpWeights(Fraction(1), Fraction(s), Fraction(s + 1))


def modified_weights(s: int, alpha1, alpha2) -> BlowUpWeights:
    """Perturbed weights (1 + a1, s + a2, s + 1) probing optimality."""
    return BlowUpWeights(
        1 + Fraction(alpha1), s + Fraction(alpha2), Fraction(s + 1)
    )


@dataclass(frozen=True)
class ChartField:
    """Desingularized vector field in blow-up chart coordinates."""

    chart: str  # "K1" (ybar = 1) or "K2" (epsbar = 1)
    coords: tuple[str, ...]
    components: tuple[GenPoly, ...]
    extracted_factor: tuple[str, Fraction]
    time_rescale: Fraction
    weights: BlowUpWeights
    params: dict = field(default_factory=dict)

    def rhs_at(self, point: Mapping) -> list:
        return [c.eval_at(point) for c in self.components]

    def restrict(self, var: str, value: Fraction | int = 0) -> "ChartField":
        """Restrict to an invariant subspace {var = value}, dropping var."""
        if var not in self.coords:
            raise StructureError(f"{var!r} not a chart coordinate")
        idx = self.coords.index(var)
        comp_on = self.components[idx].substitute({var: Monomial(value)})
        if not comp_on.is_zero:
            raise StructureError(f"{{{var}={value}}} is not invariant: {comp_on}")
        coords = tuple(v for v in self.coords if v != var)
        new_comps = []
        for i, c in enumerate(self.components):
            if i == idx:
                continue
            sub = c.substitute({var: Monomial(value)})
            new_comps.append(sub.with_variables(coords))
        return ChartField(
            self.chart,
            coords,
            tuple(new_comps),
            self.extracted_factor,
            self.time_rescale,
            self.weights,
            self.params,
        )

    def jacobian(self) -> list[list[GenPoly]]:
        return [[c.diff(v) for v in self.coords] for c in self.components]

    def to_json_dict(self) -> dict:
        return {
            "chart": self.chart,
            "coords": list(self.coords),
            "weights": {
                "alpha_v": str(self.weights.alpha_v),
                "alpha_y": str(self.weights.alpha_y),
                "alpha_eps": str(self.weights.alpha_eps),
            },
            "components": {v: str(c) for v, c in zip(self.coords, self.components)},
            "extracted_factor": {
                "variable": self.extracted_factor[0],
                "exponent": str(self.extracted_factor[1]),
            },
            "time_rescale": str(self.time_rescale),
        }


# ---------------------------------------------------------------------------
# Localization and desingularization
# ---------------------------------------------------------------------------


def projective_localize(system: FastSlowSystem) -> list[GenPoly]:
    """x = 1/v localization of a power-law system.

    Returns [F, G] with eps * dv/dt = F(v, y) and dy/dt = G(v, y); for s > 2
    the component F carries negative v-exponents (legal in GenPoly).
    """
    if system.family != "power-law":
        raise StructureError("projective localization expects the power-law family")
    # dv/dt = -v**2 * dx/dt under x = 1/v
    f_v = (-1) * GenPoly.monomial(1, {"v": 2}, ("v", "y")) * system.fast_rhs.substitute(
        {"x": Monomial.var("v", -1), "y": Monomial.var("y")}
    )
    g = system.slow_rhs.substitute(
        {"x": Monomial.var("v", -1), "y": Monomial.var("y")}
    )
    return [f_v, g.with_variables(("v", "y"))]


def desingularize_by_monomial(
    components: Sequence[GenPoly], var: str, exponent: Fraction | int
) -> tuple[list[GenPoly], bool]:
    """Multiply all components by var**exponent.

    Returns (new components, reverses_time_on_negative) where the flag records
    the orientation caveat for var < 0 with odd integral exponent.  Raises
    DesingularizationError if a negative exponent in var survives.
    """
    exponent = Fraction(exponent)
    factor = GenPoly.monomial(1, {var: exponent})
    out = []
    for comp in components:
        new = comp * factor
        bad = new.min_exponent(var)
        if bad is not None and bad < 0:
            offending = min(new.terms, key=lambda e: e[new.variables.index(var)])
            raise DesingularizationError(
                f"factor {var}^{exponent} leaves negative exponent in term "
                f"{dict(zip(new.variables, offending))}"
            )
        out.append(new)
    reverses = exponent.denominator == 1 and int(exponent) % 2 == 1
    return out, reverses


def augment_epsilon(f_v: GenPoly, g: GenPoly) -> tuple[tuple[str, ...], list[GenPoly]]:
    """Fast-time 3D field (v', y', eps') = (F, eps*G, 0) with eps symbolic."""
    eps = GenPoly.variable("eps", ("v", "y", "eps"))
    return ("v", "y", "eps"), [
        f_v.with_variables(("v", "y", "eps")),
        eps * g.with_variables(("v", "y", "eps")),
        GenPoly.constant(0, ("v", "y", "eps")),
    ]


def power_law_blowup_input(s: int, mu) -> tuple[tuple[str, ...], list[GenPoly]]:
    """The desingularized localized 3D field v' = v^2(y - v^s), y' = eps*mu*v^s."""
    from .models import power_law_system

    system = power_law_system(s, mu)
    f_v, g = projective_localize(system)
    (f_v_d, g_d), _ = desingularize_by_monomial([f_v, g], "v", s)
    return augment_epsilon(f_v_d, g_d)


# ---------------------------------------------------------------------------
# Blow-up charts
# ---------------------------------------------------------------------------


def _chart_rules(weights: BlowUpWeights, chart: str) -> dict[str, Monomial]:
    if chart == "K1":
        return {
            "v": Monomial(1, {"r1": weights.alpha_v, "v1": 1}),
            "y": Monomial(1, {"r1": weights.alpha_y}),
            "eps": Monomial(1, {"r1": weights.alpha_eps, "eps1": 1}),
        }
    if chart == "K2":
        ae = weights.alpha_eps
        return {
            "v": Monomial(1, {"eps": weights.alpha_v / ae, "v2": 1}),
            "y": Monomial(1, {"eps": weights.alpha_y / ae, "y2": 1}),
        }
    raise StructureError(f"unknown chart {chart!r} (expected 'K1' or 'K2')")


def blowup_chart(
    field3d: Sequence[GenPoly],
    weights: BlowUpWeights,
    chart: str,
    time_rescale: Fraction | int = 1,
    params: dict | None = None,
) -> ChartField:
    """Derive the desingularized chart vector field by exact elimination.

    The input field must be polynomial over (v, y, eps) with eps' = 0.  The
    chart substitution is performed exactly, the chart coordinate derivatives
    are solved for by linear elimination, the maximal common power of the
    radial variable (r1 in K1, eps in K2) is divided out and recorded, and the
    components are finally multiplied by the positive constant
    ``time_rescale`` (also recorded).
    """
    fv, fy, feps = (p.with_variables(("v", "y", "eps")) for p in field3d)
    if not feps.is_zero:
        raise StructureError("field3d must have eps' = 0")
    rules = _chart_rules(weights, chart)
    time_rescale = Fraction(time_rescale)
    if time_rescale <= 0:
        raise ValueError("time_rescale must be positive")

    if chart == "K1":
        av, ay, ae = weights.alpha_v, weights.alpha_y, weights.alpha_eps
        fv_c = fv.substitute(rules)
        fy_c = fy.substitute(rules)
        # y = r1**ay  =>  r1' = (1/ay) * r1**(1-ay) * y'
        r1p = (Fraction(1) / ay) * GenPoly.monomial(1, {"r1": 1 - ay}) * fy_c
        # v = r1**av * v1  =>  v1' = r1**(-av) * (v' - av r1**(av-1) r1' v1)
        v1 = GenPoly.variable("v1", ("r1", "v1", "eps1"))
        v1p = GenPoly.monomial(1, {"r1": -av}) * fv_c - (
            av * GenPoly.monomial(1, {"r1": -1}) * r1p * v1
        )
        # eps = r1**ae * eps1, eps' = 0  =>  eps1' = -ae r1**(-1) r1' eps1
        eps1 = GenPoly.variable("eps1", ("r1", "v1", "eps1"))
        e1p = -(ae * GenPoly.monomial(1, {"r1": -1}) * r1p * eps1)
        coords = ("v1", "r1", "eps1")
        comps = [v1p, r1p, e1p]
        radial = "r1"
    else:
        av, ay, ae = weights.alpha_v, weights.alpha_y, weights.alpha_eps
        fv_c = fv.substitute(rules)
        fy_c = fy.substitute(rules)
        v2p = GenPoly.monomial(1, {"eps": -av / ae}) * fv_c
        y2p = GenPoly.monomial(1, {"eps": -ay / ae}) * fy_c
        coords = ("v2", "y2", "eps")
        comps = [v2p, y2p, GenPoly.constant(0)]
        radial = "eps"

    comps = [c.with_variables(_chart_var_order(coords)) for c in comps]
    exps = [c.min_exponent(radial) for c in comps if not c.is_zero]
    q = min(exps) if exps else Fraction(0)
    inv = GenPoly.monomial(1, {radial: -q})
    comps = [time_rescale * (c * inv) for c in comps]
    return ChartField(
        chart=chart,
        coords=coords,
        components=tuple(c.with_variables(_chart_var_order(coords)) for c in comps),
        extracted_factor=(radial, q),
        time_rescale=time_rescale,
        weights=weights,
        params=dict(params or {}),
    )


def _chart_var_order(coords: tuple[str, ...]) -> tuple[str, ...]:
    return coords


def standard_chart_field(s: int, mu, chart: str) -> ChartField:
    """Chart field for the power-law family with weights (1, s, s+1).

    In K1 the derivation's common factor is r1**(s+1) and the recorded
    constant time rescale s reproduces the normalized form
    v1' = s v1^2 (1 - v1^s) - mu eps1 v1^(s+1).
    """
    varnames, field3d = power_law_blowup_input(s, mu)
    rescale = Fraction(s) if chart == "K1" else Fraction(1)
    cf = blowup_chart(
        field3d,
        standard_weights(s),
        chart,
        time_rescale=rescale,
        params={"s": s, "mu": Fraction(mu)},
    )
    return cf


def modified_chart_field(s: int, mu, alpha1, alpha2, chart: str = "K1") -> ChartField:
    """Chart field for the perturbed weights (1+a1, s+a2, s+1)."""
    varnames, field3d = power_law_blowup_input(s, mu)
    return blowup_chart(
        field3d,
        modified_weights(s, alpha1, alpha2),
        chart,
        time_rescale=1,
        params={
            "s": s,
            "mu": Fraction(mu),
            "alpha1": Fraction(alpha1),
            "alpha2": Fraction(alpha2),
        },
    )


# ---------------------------------------------------------------------------
# Transition maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionMap:
    source: str
    target: str
    rules: dict[str, Monomial]  # target coordinate -> monomial in source coords

    def apply(self, point: Mapping) -> dict:
        """Evaluate the monomial rules at a point (exact for perfect powers)."""
        out = {}
        for var, mono in self.rules.items():
            val = mono.coeff if isinstance(mono.coeff, Fraction) else Fraction(mono.coeff)
            acc = val
            for src, p in mono.powers.items():
                base = point[src]
                if isinstance(base, float):
                    if base <= 0 and p.denominator != 1:
                        raise StructureError(
                            f"non-positive base {src}={base} under fractional power"
                        )
                    acc = float(acc) * base ** float(p)
                else:
                    if Fraction(base) <= 0 and (p.denominator != 1 or p < 0):
                        raise StructureError(
                            f"non-positive base {src}={base} under fractional power"
                        )
                    power = rational_power(Fraction(base), p)
                    acc = acc * power if isinstance(power, Fraction) and isinstance(acc, Fraction) \
                        else float(acc) * float(power)
            out[var] = acc
        return out

    def compose(self, inner: "TransitionMap") -> "TransitionMap":
        """self o inner: rules of self rewritten in inner's source coordinates."""
        if inner.target != self.source:
            raise StructureError("transition maps do not chain")
        rules = {}
        for var, mono in self.rules.items():
            coeff = Fraction(mono.coeff)
            powers: dict[str, Fraction] = {}
            for mid, p in mono.powers.items():
                sub = inner.rules[mid]
                c = rational_power(Fraction(sub.coeff), p)
                if not isinstance(c, Fraction):
                    raise StructureError("irrational coefficient in composition")
                coeff *= c
                for src, sp in sub.powers.items():
                    powers[src] = powers.get(src, Fraction(0)) + sp * p
            rules[var] = Monomial(coeff, {k: v for k, v in powers.items() if v != 0})
        return TransitionMap(inner.source, self.target, rules)


def kappa12(s: int) -> TransitionMap:
    """K1 -> K2: v2 = v1 eps1^(-1/(s+1)), y2 = eps1^(-s/(s+1)), r2 = r1 eps1^(1/(s+1))."""
    sp1 = Fraction(s + 1)
    return TransitionMap(
        "K1",
        "K2",
        {
            "v2": Monomial(1, {"v1": 1, "eps1": Fraction(-1) / sp1}),
            "y2": Monomial(1, {"eps1": Fraction(-s) / sp1}),
            "r2": Monomial(1, {"r1": 1, "eps1": Fraction(1) / sp1}),
        },
    )


def kappa21(s: int) -> TransitionMap:
    """K2 -> K1: v1 = v2 y2^(-1/s), r1 = r2 y2^(1/s), eps1 = y2^(-(s+1)/s)."""
    sf = Fraction(s)
    return TransitionMap(
        "K2",
        "K1",
        {
            "v1": Monomial(1, {"v2": 1, "y2": Fraction(-1) / sf}),
            "r1": Monomial(1, {"r2": 1, "y2": Fraction(1) / sf}),
            "eps1": Monomial(1, {"y2": -Fraction(s + 1) / sf}),
        },
    )


def transition(point: Mapping, tmap: TransitionMap) -> dict:
    return tmap.apply(point)


# ---------------------------------------------------------------------------
# Push-forward consistency
# ---------------------------------------------------------------------------


def blowdown_map(weights: BlowUpWeights, chart: str) -> dict[str, GenPoly]:
    """The blow-down substitution as polynomials in the chart coordinates."""
    rules = _chart_rules(weights, chart)
    if chart == "K1":
        coords = ("v1", "r1", "eps1")
    else:
        coords = ("v2", "y2", "eps")
    out = {}
    for downstairs in ("v", "y", "eps"):
        if downstairs in rules:
            mono = rules[downstairs]
            out[downstairs] = GenPoly.monomial(mono.coeff, mono.powers, coords)
        else:
            out[downstairs] = GenPoly.variable(downstairs, coords)
    return out


def pushforward_residual(
    down_map: Mapping[str, GenPoly],
    chart_coords: Sequence[str],
    chart_components: Sequence[GenPoly],
    undo_factor: GenPoly,
    field3d: Sequence[GenPoly],
    samples: Sequence[Mapping[str, float]],
) -> tuple[float, list[int]]:
    """Max relative mismatch of D(blow-down) . X_chart vs X at sample points.

    ``undo_factor`` multiplies the chart components to recover the raw
    (pre-desingularization) field.  Samples with a singular Jacobian are
    skipped and their indices reported.
    """
    downstairs = ("v", "y", "eps")
    jac_sym = [
        [down_map[d].diff(c) for c in chart_coords] for d in downstairs
    ]
    worst = 0.0
    skipped = []
    for idx, pt in enumerate(samples):
        ptf = {k: float(v) for k, v in pt.items()}
        J = np.array([[e.eval_float(ptf) for e in row] for row in jac_sym])
        if not np.isfinite(J).all() or np.linalg.matrix_rank(J) < len(chart_coords):
            skipped.append(idx)
            continue
        raw = np.array(
            [c.eval_float(ptf) * undo_factor.eval_float(ptf) for c in chart_components]
        )
        down_pt = {d: down_map[d].eval_float(ptf) for d in downstairs}
        target = np.array([f.eval_float(down_pt) for f in field3d])
        got = J @ raw
        scale = max(np.max(np.abs(target)), 1e-30)
        worst = max(worst, float(np.max(np.abs(got - target)) / scale))
    return worst, skipped


def blowdown_consistency(
    chartfield: ChartField,
    field3d: Sequence[GenPoly],
    samples: Sequence[Mapping[str, float]],
    tol: float = 1e-10,
) -> tuple[float, list[int]]:
    """Check Phi_* (chart field) = original field at samples (r > 0)."""
    var, q = chartfield.extracted_factor
    undo = GenPoly.monomial(
        Fraction(1) / chartfield.time_rescale, {var: q}, chartfield.coords
    )
    down = blowdown_map(chartfield.weights, chartfield.chart)
    return pushforward_residual(
        down, chartfield.coords, chartfield.components, undo, field3d, samples
    )

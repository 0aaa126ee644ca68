"""Equilibria, linearization, and machine-verified center-manifold series.

Everything here is exact: equilibria are found with rational root search and
certified by evaluating the field, eigen-data of 2x2 Jacobians is computed in
closed form, and center-manifold graphs are obtained by solving the
invariance equation order by order in rational arithmetic.  Printed constants
from the source analysis are treated as cross-checks (a comparison report is
generated), never as ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .exactpoly import (
    GenPoly,
    Monomial,
    PuiseuxSeries,
    StructureError,
    rational_power,
)
from .transforms import ChartField, TransitionMap, standard_chart_field

__all__ = [
    "Equilibrium",
    "EigenData",
    "CMSeries",
    "rational_roots",
    "equilibria_on_subspace",
    "linearize_eigen",
    "center_manifold_series",
    "cm_comparison_report",
    "transport_series",
    "transport_comparison_report",
    "variational_matrix",
    "kappa2_plane_field",
]


@dataclass(frozen=True)
class Equilibrium:
    chart: str
    coordinates: dict  # var -> Fraction for pinned coordinates
    free_variable: str | None = None  # set for lines of equilibria
    subspace: str = "none"


@dataclass(frozen=True)
class EigenData:
    eigenvalues: tuple
    eigenvectors: tuple  # matching order; each a 2-tuple
    exact: bool
    jacobian: tuple  # ((j11, j12), (j21, j22)) exact entries


@dataclass(frozen=True)
class CMSeries:
    """Center-manifold graph v = n(t) with exactly certified residual."""

    chart: str
    base_point: dict
    graph_variable: str
    dependent_variable: str
    series: PuiseuxSeries
    order: int
    params: dict = field(default_factory=dict)

    def coefficient(self, k: int) -> Fraction:
        return self.series.coefficient(k)


# ---------------------------------------------------------------------------
# Equilibria
# ---------------------------------------------------------------------------


def _root_input(p: GenPoly, var: str) -> tuple[GenPoly, str]:
    exp, quot = p.extract_common_monomial(var)
    if exp > 0:
        # keep the root at zero by leaving one factor in place
        quot = quot * GenPoly.variable(var, quot.variables)
    return quot, var


def rational_roots(p: GenPoly, var: str) -> list[Fraction]:
    """All rational roots of a univariate polynomial with integer exponents."""
    i = p.variables.index(var)
    if any(
        e[j] != 0 for e in p.terms for j in range(len(p.variables)) if j != i
    ):
        raise StructureError("polynomial is not univariate in " + var)
    if any(e[i].denominator != 1 or e[i] < 0 for e in p.terms):
        raise StructureError("rational root search needs integer exponents")
    if p.is_zero:
        raise StructureError("zero polynomial has every root")
    coeffs: dict[int, Fraction] = {int(e[i]): c for e, c in p.terms.items()}
    denom_lcm = 1
    for c in coeffs.values():
        denom_lcm = denom_lcm * c.denominator // np.gcd(denom_lcm, c.denominator)
    ints = {k: int(c * denom_lcm) for k, c in coeffs.items()}
    degree = max(ints)
    lead = ints[degree]
    const_deg = min(ints)
    const = ints[const_deg]
    roots = []
    if const_deg > 0:
        roots.append(Fraction(0))

    def divisors(n: int) -> list[int]:
        n = abs(n)
        out = [d for d in range(1, int(n**0.5) + 1) if n % d == 0]
        return sorted(set(out + [n // d for d in out]))

    seen = set()
    for pnum in divisors(const):
        for qden in divisors(lead):
            for sign in (1, -1):
                cand = Fraction(sign * pnum, qden)
                if cand in seen:
                    continue
                seen.add(cand)
                if p.eval_at({var: cand}) == 0:
                    roots.append(cand)
    return sorted(roots)


def equilibria_on_subspace(cf: ChartField, subspace: str) -> list[Equilibrium]:
    """Equilibria of the chart field restricted to an invariant plane.

    ``subspace`` is 'var=value' (e.g. 'eps1=0').  Returns pinned points and
    lines of equilibria (free_variable set), all certified exactly.
    """
    var, _, val = subspace.partition("=")
    var = var.strip()
    value = Fraction(val.strip() or "0")
    f2 = cf.restrict(var, value)
    if len(f2.coords) == 1:
        # restricting a planar field leaves a line; it is all equilibria iff
        # the remaining component vanishes identically
        (axis,) = f2.coords
        if f2.components[0].is_zero:
            return [
                Equilibrium(
                    cf.chart, {var: value}, free_variable=axis, subspace=subspace
                )
            ]
        return [
            Equilibrium(cf.chart, {var: value, axis: r}, subspace=subspace)
            for r in rational_roots(*_root_input(f2.components[0], axis))
        ]
    a, b = f2.coords
    P, Q = f2.components
    found: list[Equilibrium] = []

    if P.is_zero and Q.is_zero:
        # field vanishes identically: every axis point is an equilibrium
        found.append(
            Equilibrium(cf.chart, {var: value}, free_variable=a, subspace=subspace)
        )
        found.append(
            Equilibrium(cf.chart, {var: value}, free_variable=b, subspace=subspace)
        )
        return found

    def on_line(fixed: str, free: str, root: Fraction):
        both_zero = all(
            comp.substitute({fixed: Monomial(root)}).is_zero for comp in (P, Q)
        )
        if both_zero:
            found.append(
                Equilibrium(
                    cf.chart,
                    {var: value, fixed: root},
                    free_variable=free,
                    subspace=subspace,
                )
            )
            return True
        return False

    # branch structure of this family: each component factors through
    # coordinate monomials, so candidate roots come from univariate slices
    for fixed, free in ((a, b), (b, a)):
        slices = [
            comp.substitute({free: Monomial(0)}) for comp in (P, Q)
        ]
        candidates: set[Fraction] = set()
        for sl in slices:
            if sl.is_zero:
                continue
            exp, quot = sl.extract_common_monomial(fixed)
            if exp > 0:
                candidates.add(Fraction(0))
            if not quot.is_constant():
                candidates.update(rational_roots(quot, fixed))
        for root in sorted(candidates):
            if on_line(fixed, free, root):
                continue
            pt = {fixed: root, free: Fraction(0)}
            if all(comp.eval_at(pt) == 0 for comp in (P, Q)):
                eq = Equilibrium(
                    cf.chart, {var: value, **pt}, subspace=subspace
                )
                if eq not in found:
                    found.append(eq)
    # dedupe lines found twice
    unique = []
    for eq in found:
        if eq not in unique:
            unique.append(eq)
    return unique


# ---------------------------------------------------------------------------
# Linearization
# ---------------------------------------------------------------------------


def linearize_eigen(cf: ChartField, eq: Equilibrium) -> EigenData:
    """Exact 2x2 eigen-data of the restricted field at an equilibrium."""
    sub_var = eq.subspace.partition("=")[0].strip()
    f2 = (
        cf.restrict(sub_var, eq.coordinates[sub_var])
        if len(cf.coords) > 2 and sub_var in cf.coords
        else cf
    )
    if len(f2.coords) != 2:
        raise StructureError("linearization needs a planar restricted field")
    point = {v: eq.coordinates[v] for v in f2.coords}
    J = [
        [comp.diff(v).eval_at(point) for v in f2.coords]
        for comp in f2.components
    ]
    tr = J[0][0] + J[1][1]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    disc = tr * tr - 4 * det
    root = rational_power(disc, Fraction(1, 2)) if disc >= 0 else None
    exact = isinstance(root, Fraction)
    if disc < 0:
        sq = complex(0, float(abs(disc)) ** 0.5)
        lams = ((complex(tr) + sq) / 2, (complex(tr) - sq) / 2)
        exact = False
    elif exact:
        lams = ((tr + root) / 2, (tr - root) / 2)
    else:
        lams = ((float(tr) + root) / 2, (float(tr) - root) / 2)

    def eigvec(lam):
        r1 = (J[0][0] - lam, J[0][1])
        r2 = (J[1][0], J[1][1] - lam)
        for r in (r1, r2):
            if r[0] != 0 or r[1] != 0:
                return (-r[1], r[0])
        return (Fraction(1), Fraction(0))  # J = lam*I

    vecs = tuple(eigvec(lam) for lam in lams)
    return EigenData(
        eigenvalues=lams,
        eigenvectors=vecs,
        exact=exact,
        jacobian=((J[0][0], J[0][1]), (J[1][0], J[1][1])),
    )


def null_eigenvector_slope(ed: EigenData) -> Fraction:
    """Slope d(dependent)/d(graph) of the zero-eigenvalue eigenvector."""
    idx = [i for i, lam in enumerate(ed.eigenvalues) if lam == 0]
    if len(idx) != 1:
        raise StructureError("expected a simple zero eigenvalue")
    w = ed.eigenvectors[idx[0]]
    if w[1] == 0:
        raise StructureError("null eigenvector is tangent to the graph variable")
    return Fraction(w[0]) / Fraction(w[1])


# ---------------------------------------------------------------------------
# Center manifold series
# ---------------------------------------------------------------------------


def _poly_at_series(
    p: GenPoly, assignment: Mapping[str, PuiseuxSeries], out_var: str
) -> PuiseuxSeries:
    """Evaluate a polynomial with series arguments (integer exponents only)."""
    total = PuiseuxSeries(out_var, {})
    orders = [s.order for s in assignment.values() if s.order is not None]
    if orders:
        total = PuiseuxSeries(out_var, {}, min(orders))
    for exps, coeff in p.terms.items():
        term = PuiseuxSeries.constant(coeff, out_var)
        for v, q in zip(p.variables, exps):
            if q == 0:
                continue
            if q.denominator != 1 or q < 0:
                raise StructureError(
                    f"series evaluation needs non-negative integer exponents ({v}^{q})"
                )
            term = term * assignment[v] ** int(q)
        total = total + term
    return total


def invariance_residual(
    cf2: ChartField, graph_var: str, dep_var: str, series: PuiseuxSeries
) -> PuiseuxSeries:
    """P(n(t), t) - n'(t) * Q(n(t), t) for the graph dep = n(graph)."""
    gi = cf2.coords.index(graph_var)
    di = cf2.coords.index(dep_var)
    P = cf2.components[di]
    Q = cf2.components[gi]
    t = PuiseuxSeries.monomial(graph_var, 1)
    if series.order is not None:
        t = t.truncate(series.order)
    assign = {dep_var: series, graph_var: t}
    lhs = _poly_at_series(P, assign, graph_var)
    rhs = series.differentiate() * _poly_at_series(Q, assign, graph_var)
    return lhs - rhs


def center_manifold_series(
    cf: ChartField, eq: Equilibrium, order: int = 6
) -> CMSeries:
    """Graph of the center manifold through the invariance equation.

    Works directly in the restricted chart plane; coefficients are obtained
    one order at a time (each residual coefficient is affine in the next
    unknown), and the invariance residual of the returned series vanishes
    identically through ``order``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    sub_var = eq.subspace.partition("=")[0].strip()
    f2 = (
        cf.restrict(sub_var, eq.coordinates[sub_var])
        if len(cf.coords) > 2 and sub_var in cf.coords
        else cf
    )
    if len(f2.coords) != 2:
        raise StructureError("center manifold expects a planar restricted field")
    ed = linearize_eigen(cf, eq)
    zero_count = sum(1 for lam in ed.eigenvalues if lam == 0)
    if zero_count != 1:
        raise StructureError(
            f"expected a simple zero eigenvalue, found {zero_count}"
        )
    slope = null_eigenvector_slope(ed)
    # graph variable = the center direction's non-graph coordinate: here the
    # family's centre direction is transverse to the strongly stable one,
    # with eps1 the natural graph variable (second coordinate of f2)
    dep_var, graph_var = f2.coords
    if eq.coordinates.get(graph_var) != 0:
        raise StructureError("expansion assumes the equilibrium sits at graph=0")
    base = eq.coordinates[dep_var]

    cap = Fraction(order + 1)
    coeffs: dict[Fraction, Fraction] = {Fraction(0): base}
    for k in range(1, order + 1):
        res0 = invariance_residual(
            f2, graph_var, dep_var, PuiseuxSeries(graph_var, coeffs, cap)
        ).coefficient(k)
        bumped = dict(coeffs)
        bumped[Fraction(k)] = bumped.get(Fraction(k), Fraction(0)) + 1
        res1 = invariance_residual(
            f2, graph_var, dep_var, PuiseuxSeries(graph_var, bumped, cap)
        ).coefficient(k)
        gain = res1 - res0
        if gain == 0:
            raise StructureError(f"degenerate linear system at order {k}")
        coeffs[Fraction(k)] = -res0 / gain
    series = PuiseuxSeries(graph_var, coeffs, cap)

    residual = invariance_residual(f2, graph_var, dep_var, series)
    bad = [q for q in residual.terms if q <= order]
    if bad:
        raise AssertionError(f"invariance residual not zero at orders {bad}")
    if series.coefficient(1) != slope:
        raise AssertionError(
            f"tangency violated: a1={series.coefficient(1)} vs slope {slope}"
        )
    return CMSeries(
        chart=cf.chart,
        base_point=dict(eq.coordinates),
        graph_variable=graph_var,
        dependent_variable=dep_var,
        series=series,
        order=order,
        params=dict(cf.params),
    )


def cm_comparison_report(cm: CMSeries) -> dict:
    """Compare computed coefficients against the printed closed forms.

    The printed first-order term -mu/s and second-order constant
    -(1+s+s^2) mu^2 / (2 s^3) are reported side by side with the exact
    invariance-equation values; agreement is recorded, not assumed.
    """
    s = cm.params["s"]
    mu = cm.params["mu"]
    printed_a1 = -mu / Fraction(s)
    printed_a2 = -Fraction(1 + s + s * s) * mu * mu / (2 * Fraction(s) ** 3)
    a1 = cm.coefficient(1)
    a2 = cm.coefficient(2)
    rows = [
        {
            "order": 1,
            "computed": str(a1),
            "printed": str(printed_a1),
            "agree": a1 == printed_a1,
            "note": "eigenvector tangency gives -mu/s^2",
        },
        {
            "order": 2,
            "computed": str(a2),
            "printed": str(printed_a2),
            "agree": a2 == printed_a2,
            "note": "printed constant from the quadratic normal-form step",
        },
    ]
    return {
        "s": s,
        "mu": str(mu),
        "series": str(cm.series),
        "rows": rows,
        "all_agree": all(r["agree"] for r in rows),
    }


# ---------------------------------------------------------------------------
# Series transport between charts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportedSeries:
    """v2 as a series in u = y2**(-1/s), certified down to O(u**order)."""

    series: PuiseuxSeries  # in the auxiliary variable u
    s: int

    def eval_at_y2(self, y2: float) -> float:
        return float(self.series.eval_at(float(y2) ** (-1.0 / self.s)))

    def leading_in_y2(self) -> tuple[Fraction, Fraction]:
        q, c = self.series.leading()
        return (-q / Fraction(self.s), c)  # (y2-exponent, coefficient)


def transport_series(cm: CMSeries, tmap: TransitionMap, s: int) -> TransportedSeries:
    """Transport the K1 center-manifold graph to K2 on {r1 = 0}.

    Substitutes eps1 = u**(s+1) with u = y2**(-1/s) and multiplies by
    eps1**(-1/(s+1)) = u**(-1); the result keeps its certified order.
    """
    if tmap.source != "K1" or tmap.target != "K2":
        raise StructureError("transport expects the K1 -> K2 transition")
    n = cm.series  # v1 = n(eps1)
    in_u = n.compose_monomial("u", s + 1)
    return TransportedSeries(in_u * PuiseuxSeries.monomial("u", -1), s)


def transport_comparison_report(ts: TransportedSeries, mu) -> dict:
    """Both readings of the transported-curve expansion, with the printed one.

    The direct substitution of the transition formulas yields leading term
    y2**(1/s); the printed expansion starts at the constant 1.  Both are
    reported with the term-by-term diff against the printed tail
    1 - mu/(s*y2) + c11*y2^(-(2s+1)/s).
    """
    s = ts.s
    mu = Fraction(mu)
    c11_printed = -Fraction(1 + s + s * s) * mu * mu / (2 * Fraction(s) ** 3)
    printed = {
        Fraction(0): Fraction(1),
        Fraction(-1): -mu / s,
        Fraction(-(2 * s + 1), s): c11_printed,
    }
    computed = {  # exponents in y2
        -q / Fraction(s): c for q, c in ts.series.terms.items()
    }
    exponents = sorted(set(printed) | set(computed), reverse=True)
    rows = []
    for e in exponents:
        got = computed.get(e)
        want = printed.get(e)
        rows.append(
            {
                "y2_exponent": str(e),
                "computed": None if got is None else str(got),
                "printed": None if want is None else str(want),
                "agree": got == want,
            }
        )
    lead_exp, lead_coeff = ts.leading_in_y2()
    return {
        "s": s,
        "mu": str(mu),
        "computed_leading": {"y2_exponent": str(lead_exp), "coeff": str(lead_coeff)},
        "printed_leading": {"y2_exponent": "0", "coeff": "1"},
        "leading_terms_agree": lead_exp == 0 and lead_coeff == 1,
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# Variational matrix along trajectories
# ---------------------------------------------------------------------------


def kappa2_plane_field(s: int, mu) -> ChartField:
    """The K2 chart field as a planar field in (v2, y2)."""
    return standard_chart_field(s, mu, "K2").restrict("eps", 1)


def variational_matrix(
    cf2: ChartField, times: Sequence[float], states: Sequence[Sequence[float]]
) -> Callable[[float], np.ndarray]:
    """A(t): the field's Jacobian along a trajectory, linearly interpolated."""
    if len(cf2.coords) != 2:
        raise StructureError("variational matrix expects a planar field")
    jac = cf2.jacobian()
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)

    def A(t: float) -> np.ndarray:
        x = np.array(
            [np.interp(t, times, states[:, j]) for j in range(states.shape[1])]
        )
        pt = dict(zip(cf2.coords, x))
        return np.array(
            [[entry.eval_float(pt) for entry in row] for row in jac]
        )

    return A

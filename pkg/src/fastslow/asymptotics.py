"""Slow-manifold expansion in eps and the breakdown-scale estimate.

The graph x(y) = x0(y) + eps*x1(y) + ... of the slow manifold satisfies

    eps * mu * dx/dy = 1 - x**s * y

and is computed term by term in exact arithmetic.  For s > 1 the
coefficients are Puiseux series in y (x0 = y**(-1/s)), carried on the
ramification lattice 1/s.  Balancing the first two terms gives the
eps-scale at which the expansion stops being asymptotic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactpoly import PuiseuxSeries
from .models import FastSlowSystem

__all__ = [
    "SlowManifoldSeries",
    "slow_manifold_series",
    "series_residual",
    "residual_scaling_slope",
    "breakdown_scale",
]


@dataclass(frozen=True)
class SlowManifoldSeries:
    s: int
    mu: Fraction
    order: int
    coefficients: tuple[PuiseuxSeries, ...]  # x_k(y), k = 0..order

    def eval_x(self, y: float, eps: float) -> float:
        return float(
            sum(
                float(ck.eval_at(float(y))) * eps**k
                for k, ck in enumerate(self.coefficients)
            )
        )

    def eval_dx_dy(self, y: float, eps: float) -> float:
        return float(
            sum(
                float(ck.differentiate().eval_at(float(y))) * eps**k
                for k, ck in enumerate(self.coefficients)
            )
        )


def _eps_power(coeffs: Sequence[PuiseuxSeries], s: int, cap: int) -> list[PuiseuxSeries]:
    """(sum_k eps^k c_k)^s truncated at eps^cap; exact Puiseux arithmetic."""
    zero = PuiseuxSeries("y", {})
    out = [PuiseuxSeries.constant(1, "y")] + [zero] * cap
    for _ in range(s):
        new = [zero] * (cap + 1)
        for i in range(cap + 1):
            if out[i].is_zero:
                continue
            for j in range(cap + 1 - i):
                if j < len(coeffs) and not coeffs[j].is_zero:
                    new[i + j] = new[i + j] + out[i] * coeffs[j]
        out = new
    return out


def slow_manifold_series(s: int, mu, order: int) -> SlowManifoldSeries:
    """Exact coefficients x_0..x_order of the slow-manifold expansion.

    x0 = y**(-1/s); every higher coefficient comes from the order-eps^k
    relation mu * x_{k-1}' = -(coefficient of eps^k in x**s * y), solved for
    x_k by dividing out the monomial s * x0**(s-1) * y = s * y**(1/s).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    mu = Fraction(mu)
    x0 = PuiseuxSeries.monomial("y", Fraction(-1, s))
    coeffs = [x0]
    y1 = PuiseuxSeries.monomial("y", 1)
    inv_pivot = PuiseuxSeries.monomial("y", Fraction(-1, s), Fraction(1, s))
    for k in range(1, order + 1):
        known = _eps_power(coeffs, s, k)[k] * y1
        xk = -1 * (mu * coeffs[k - 1].differentiate() + known) * inv_pivot
        coeffs.append(xk)
    return SlowManifoldSeries(s, mu, order, tuple(coeffs))


def series_residual(
    system: FastSlowSystem,
    sm: SlowManifoldSeries,
    eps: float,
    y_range: tuple[float, float] = (0.5, 2.0),
    n_samples: int = 41,
) -> float:
    """max |eps*mu*dx/dy - f(x(y), y)| over sampled y (bounded away from 0)."""
    mu = float(sm.mu)
    worst = 0.0
    for y in np.geomspace(y_range[0], y_range[1], n_samples):
        x = sm.eval_x(y, eps)
        lhs = eps * mu * sm.eval_dx_dy(y, eps)
        rhs = system.fast_rhs.eval_float({"x": x, "y": float(y)})
        worst = max(worst, abs(lhs - rhs))
    return worst


def residual_scaling_slope(
    system: FastSlowSystem,
    sm: SlowManifoldSeries,
    eps_grid: Sequence[float],
    y_range: tuple[float, float] = (0.5, 2.0),
) -> float:
    """Fitted log-log slope of the residual vs eps (expected order + 1)."""
    residuals = [series_residual(system, sm, e, y_range) for e in eps_grid]
    slope = np.polyfit(np.log(eps_grid), np.log(residuals), 1)[0]
    return float(slope)


def breakdown_scale(sm: SlowManifoldSeries) -> tuple[Fraction, Fraction]:
    """(x-exponent, y-exponent) of the eps-scale where x0 ~ eps*x1.

    Balancing the leading (most negative) y-exponents p0 of x0 and p1 of x1
    gives y = eps**(1/(p0-p1)) and x = eps**(p0/(p0-p1)); for the power-law
    family this is (-1/(s+1), s/(s+1)).
    """
    if len(sm.coefficients) < 2 or sm.coefficients[1].is_zero:
        raise ValueError("breakdown scale needs a nonzero first-order coefficient")
    p0 = sm.coefficients[0].valuation()
    p1 = sm.coefficients[1].valuation()
    if p0 is None or p1 is None or p0 == p1:
        raise ValueError("degenerate series: cannot balance leading exponents")
    y_exp = Fraction(1) / (p0 - p1)
    x_exp = p0 * y_exp
    return x_exp, y_exp

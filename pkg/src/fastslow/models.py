"""Model family definitions and fast-slow bookkeeping.

The central object is a planar fast-slow system

    x' = f(x, y)
    y' = eps * g(x, y)

on the fast time scale, with exact polynomial right-hand sides.  The
power-law family f = 1 - x**s * y, g = mu is the analysis target; the planar
autocatalator is registered for simulations (its critical set is a rational
graph and is excluded from the exact graph machinery), and the 3D
autocatalator exists as a simulation demo only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .exactpoly import GenPoly, StructureError, symbols

__all__ = [
    "FastSlowSystem",
    "CriticalManifoldGraph",
    "power_law_system",
    "autocatalator2d",
    "autocatalator3d_rhs",
    "critical_graph",
    "nh_measure",
    "parse_model",
]


class ParameterError(ValueError):
    """Raised for parameter values outside a model's admissible range."""


@dataclass(frozen=True)
class FastSlowSystem:
    """Planar fast-slow system x' = f, y' = eps*g with exact rhs."""

    fast_rhs: GenPoly
    slow_rhs: GenPoly
    params: dict = field(default_factory=dict)
    family: str = "generic"

    def __post_init__(self):
        for p, name in ((self.fast_rhs, "f"), (self.slow_rhs, "g")):
            extra = [v for v in p.variables if v not in ("x", "y")]
            if extra:
                raise StructureError(f"{name} has unexpected variables {extra}")

    def fast_time_rhs(self, eps: Fraction | float) -> list[GenPoly]:
        """(x', y') on the fast time scale t."""
        # floats convert to Fraction exactly, so eps enters without rounding
        return [self.fast_rhs, Fraction(eps) * self.slow_rhs]

    def slow_time_rhs(self, eps: Fraction | float) -> list[GenPoly]:
        """(dx/dtau, dy/dtau) on the slow time scale tau = eps*t."""
        return [(Fraction(1) / Fraction(eps)) * self.fast_rhs, self.slow_rhs]


@dataclass(frozen=True)
class CriticalManifoldGraph:
    """Critical set as a graph y = expression(x) (or x = expression(y))."""

    direction: str  # the graph variable
    expression: GenPoly


def power_law_system(s: int, mu: Fraction | int) -> FastSlowSystem:
    """f = 1 - x**s * y, g = mu."""
    if not isinstance(s, int) or s < 1:
        raise ParameterError(f"s must be a positive integer, got {s}")
    mu = Fraction(mu)
    if mu == 0:
        raise ParameterError("mu must be nonzero")
    x, y = symbols("x y")
    f = 1 - x**s * y
    g = GenPoly.constant(mu, ("x", "y"))
    return FastSlowSystem(f, g, {"s": s, "mu": mu}, family="power-law")


def autocatalator2d(mu: Fraction | int | float) -> FastSlowSystem:
    """Planar autocatalator: eps*x' = y*x**2 + y - x, y' = mu - y*x**2 - y."""
    mu = Fraction(mu) if not isinstance(mu, float) else Fraction(mu).limit_denominator(10**9)
    x, y = symbols("x y")
    f = y * x**2 + y - x
    g = GenPoly.constant(mu, ("x", "y")) - y * x**2 - y
    return FastSlowSystem(f, g, {"mu": mu}, family="autocatalator2d")


def autocatalator3d_rhs(
    mu: Fraction | int, kappa: Fraction | int, eps: Fraction | float
) -> tuple[tuple[str, ...], list[GenPoly]]:
    """Fast-time rhs of the 3D autocatalator (simulation demos only)."""
    x, y, z = symbols("x y z")
    mu = Fraction(mu)
    kappa = Fraction(kappa)
    f = y * x**2 + y - x
    g = mu * (kappa + z) - y * x**2 - y
    h = x - z
    return ("x", "y", "z"), [f, eps * g, eps * h]


def critical_graph(system: FastSlowSystem) -> CriticalManifoldGraph:
    """Graph y = x**(-s) of the power-law critical set, verified symbolically."""
    if system.family != "power-law":
        raise StructureError(
            "critical_graph supports only the power-law family "
            "(the autocatalator graph is rational, outside GenPoly)"
        )
    s = system.params["s"]
    c = GenPoly.monomial(1, {"x": -s}, ("x",))
    residual = system.fast_rhs.substitute({"y": _graph_rule(s)})
    if not residual.is_zero:
        raise AssertionError(f"graph residual is not zero: {residual}")
    return CriticalManifoldGraph(direction="x", expression=c)


def _graph_rule(s: int):
    from .exactpoly import Monomial

    return Monomial(1, {"x": Fraction(-s)})


def nh_measure(system: FastSlowSystem, point: tuple) -> Fraction | float:
    """Normal-hyperbolicity measure: d f / d x at the point."""
    x, y = point
    return system.fast_rhs.diff("x").eval_at({"x": x, "y": y})


def parse_model(spec: str) -> FastSlowSystem:
    """Registry lookup, e.g. 'power-law:s=2,mu=-1' or 'autocatalator2d:mu=1.1'."""
    name, _, args = spec.partition(":")
    kv = {}
    if args:
        for part in args.split(","):
            k, _, v = part.partition("=")
            kv[k.strip()] = v.strip()
    if name == "power-law":
        return power_law_system(int(kv["s"]), _parse_rat(kv.get("mu", "-1")))
    if name == "autocatalator2d":
        return autocatalator2d(_parse_rat(kv.get("mu", "11/10")))
    raise ParameterError(f"unknown model {name!r}")


def _parse_rat(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError:
        return Fraction(float(text)).limit_denominator(10**9)

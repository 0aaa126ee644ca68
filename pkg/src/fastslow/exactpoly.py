"""Exact generalized polynomials and truncated Puiseux series.

A :class:`GenPoly` is a finite sum of terms ``c * prod(v_i ** q_i)`` with
rational coefficients ``c`` and *rational* exponents ``q_i`` (negative and
fractional exponents are legal).  It is the symbolic carrier for every vector
field, chart transformation and manifold graph in this package; all operations
are exact.

A :class:`PuiseuxSeries` is a truncated one-variable series with rational
exponents on a fixed ramification lattice (multiples of ``1/d``), plus exact
bookkeeping of the truncation order so that series identities asserted in
tests are never vacuous.

No floating point enters unless a value is explicitly evaluated at a float
point, or a fractional power of a rational has no exact rational root.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rat = Fraction
RatLike = Union[Fraction, int]
Scalar = Union[Fraction, int, float]

__all__ = [
    "GenPoly",
    "PuiseuxSeries",
    "Monomial",
    "symbols",
    "rational_power",
]


class DomainError(ValueError):
    """Raised for evaluations outside the exact domain (e.g. (-1)**(1/2))."""


class StructureError(ValueError):
    """Raised for structurally invalid operands (e.g. unknown variables)."""


def _frac(x: RatLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def _int_nth_root(n: int, k: int) -> int | None:
    """Exact k-th root of a non-negative integer n, or None."""
    if n < 0:
        return None
    r = round(n ** (1.0 / k)) if n > 0 else 0
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def rational_power(base: Fraction, exponent: Fraction) -> Fraction | float:
    """base**exponent, exact when possible.

    Integral exponents are always exact.  Fractional exponents are exact iff
    ``base`` is a perfect power; otherwise a float is returned.  Fractional
    powers of non-positive bases raise :class:`DomainError`.
    """
    base = _frac(base)
    exponent = _frac(exponent)
    if base == 0:
        if exponent <= 0:
            raise DomainError("0 raised to a non-positive power")
        return Fraction(0)
    if exponent.denominator == 1:
        return base ** int(exponent)
    if base < 0:
        raise DomainError(f"fractional power of non-positive base {base}")
    k = exponent.denominator
    num_root = _int_nth_root(base.numerator, k)
    den_root = _int_nth_root(base.denominator, k)
    if num_root is not None and den_root is not None:
        return Fraction(num_root, den_root) ** exponent.numerator
    return float(base) ** float(exponent)


def _numeric_power(base: Scalar, exponent: Fraction) -> Scalar:
    if isinstance(base, float):
        if exponent.denominator != 1 and base <= 0:
            raise DomainError(f"fractional power of non-positive base {base}")
        if base == 0 and exponent < 0:
            raise DomainError("0 raised to a negative power")
        return base ** float(exponent)
    return rational_power(_frac(base), exponent)


class Monomial:
    """A single term ``coeff * prod(var ** power)`` used as substitution rule."""

    __slots__ = ("coeff", "powers")

    def __init__(self, coeff: RatLike, powers: Mapping[str, RatLike] | None = None):
        self.coeff = _frac(coeff)
        self.powers: dict[str, Fraction] = {
            v: _frac(p) for v, p in (powers or {}).items() if p != 0
        }

    @classmethod
    def var(cls, name: str, power: RatLike = 1, coeff: RatLike = 1) -> "Monomial":
        return cls(coeff, {name: power})

    def __repr__(self) -> str:
        return f"Monomial({self.coeff}, {self.powers})"


def _merge_variables(a: Sequence[str], b: Sequence[str]) -> tuple[str, ...]:
    out = list(a)
    for v in b:
        if v not in out:
            out.append(v)
    return tuple(out)


class GenPoly:
    """Immutable generalized polynomial with rational coefficients/exponents."""

    __slots__ = ("variables", "terms")

    def __init__(
        self,
        variables: Sequence[str],
        terms: Mapping[tuple, RatLike] | None = None,
    ):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise StructureError(f"duplicate variable in {variables}")
        canon: dict[tuple[Fraction, ...], Fraction] = {}
        for exps, coeff in (terms or {}).items():
            if len(exps) != len(variables):
                raise StructureError(
                    f"exponent vector {exps} does not match variables {variables}"
                )
            c = _frac(coeff)
            if c == 0:
                continue
            key = tuple(_frac(e) for e in exps)
            canon[key] = canon.get(key, Fraction(0)) + c
        object.__setattr__(self, "variables", variables)
        object.__setattr__(
            self, "terms", {k: v for k, v in canon.items() if v != 0}
        )

    def __setattr__(self, name, value):
        raise AttributeError("GenPoly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value: RatLike, variables: Sequence[str] = ()) -> "GenPoly":
        n = len(variables)
        return cls(variables, {(Fraction(0),) * n: _frac(value)})

    @classmethod
    def variable(cls, name: str, variables: Sequence[str] | None = None) -> "GenPoly":
        variables = tuple(variables) if variables is not None else (name,)
        if name not in variables:
            raise StructureError(f"{name!r} not in {variables}")
        exps = tuple(
            Fraction(1) if v == name else Fraction(0) for v in variables
        )
        return cls(variables, {exps: Fraction(1)})

    @classmethod
    def monomial(
        cls,
        coeff: RatLike,
        powers: Mapping[str, RatLike],
        variables: Sequence[str] | None = None,
    ) -> "GenPoly":
        variables = tuple(variables) if variables is not None else tuple(powers)
        exps = tuple(_frac(powers.get(v, 0)) for v in variables)
        return cls(variables, {exps: _frac(coeff)})

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in exps) for exps in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise StructureError("not a constant polynomial")
        return next(iter(self.terms.values()), Fraction(0))

    def with_variables(self, variables: Sequence[str]) -> "GenPoly":
        """Re-embed over a superset variable list (order of new list wins)."""
        variables = tuple(variables)
        missing = [v for v in self.variables if v not in variables]
        if missing:
            raise StructureError(f"target variable list drops {missing}")
        index = {v: i for i, v in enumerate(self.variables)}
        terms = {}
        for exps, coeff in self.terms.items():
            new = tuple(
                exps[index[v]] if v in index else Fraction(0) for v in variables
            )
            terms[new] = coeff
        return GenPoly(variables, terms)

    def _align(self, other: "GenPoly") -> tuple["GenPoly", "GenPoly"]:
        if self.variables == other.variables:
            return self, other
        merged = _merge_variables(self.variables, other.variables)
        return self.with_variables(merged), other.with_variables(merged)

    def _coerce(self, other) -> "GenPoly":
        if isinstance(other, GenPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return GenPoly.constant(other, self.variables)
        return NotImplemented  # type: ignore[return-value]

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other) -> "GenPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._align(other)
        terms = dict(a.terms)
        for exps, coeff in b.terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + coeff
        return GenPoly(a.variables, terms)

    __radd__ = __add__

    def __neg__(self) -> "GenPoly":
        return GenPoly(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "GenPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "GenPoly":
        return -(self - other)

    def __mul__(self, other) -> "GenPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._align(other)
        terms: dict[tuple, Fraction] = {}
        for ea, ca in a.terms.items():
            for eb, cb in b.terms.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                terms[key] = terms.get(key, Fraction(0)) + ca * cb
        return GenPoly(a.variables, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "GenPoly":
        if not isinstance(n, int) or n < 0:
            raise StructureError("GenPoly powers must be non-negative integers")
        out = GenPoly.constant(1, self.variables)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._align(other)
        return a.terms == b.terms

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    # -- calculus & transformations ---------------------------------------

    def diff(self, var: str) -> "GenPoly":
        """Term-wise derivative; rational exponents follow the power rule."""
        if var not in self.variables:
            raise StructureError(f"unknown variable {var!r}")
        i = self.variables.index(var)
        terms: dict[tuple, Fraction] = {}
        for exps, coeff in self.terms.items():
            q = exps[i]
            if q == 0:
                continue
            new = list(exps)
            new[i] = q - 1
            key = tuple(new)
            terms[key] = terms.get(key, Fraction(0)) + q * coeff
        return GenPoly(self.variables, terms)

    def substitute(self, rules: Mapping[str, Monomial]) -> "GenPoly":
        """Replace each ruled variable by ``coeff * monomial``, exactly.

        The result lives over the union of the untouched variables and the
        variables appearing in the rules (in order of first appearance).
        """
        for v in rules:
            if v not in self.variables:
                raise StructureError(f"rule for unknown variable {v!r}")
        keep = [v for v in self.variables if v not in rules]
        new_vars = tuple(keep)
        for rule in rules.values():
            new_vars = _merge_variables(new_vars, tuple(rule.powers))
        index = {v: i for i, v in enumerate(new_vars)}
        terms: dict[tuple, Fraction] = {}
        for exps, coeff in self.terms.items():
            new_exp = [Fraction(0)] * len(new_vars)
            c = coeff
            for v, q in zip(self.variables, exps):
                if q == 0:
                    continue
                if v in rules:
                    rule = rules[v]
                    factor = rational_power(rule.coeff, q)
                    if not isinstance(factor, Fraction):
                        raise DomainError(
                            f"substitution coefficient {rule.coeff}**{q} is irrational"
                        )
                    c *= factor
                    for rv, rp in rule.powers.items():
                        new_exp[index[rv]] += rp * q
                else:
                    new_exp[index[v]] += q
            key = tuple(new_exp)
            terms[key] = terms.get(key, Fraction(0)) + c
        return GenPoly(new_vars, terms)

    def extract_common_monomial(self, var: str) -> tuple[Fraction, "GenPoly"]:
        """Factor out the minimal power of ``var``: p = var**q * quotient."""
        if var not in self.variables:
            raise StructureError(f"unknown variable {var!r}")
        if self.is_zero:
            return Fraction(0), self
        i = self.variables.index(var)
        q = min(exps[i] for exps in self.terms)
        if q == 0:
            return Fraction(0), self
        terms = {}
        for exps, coeff in self.terms.items():
            new = list(exps)
            new[i] = exps[i] - q
            terms[tuple(new)] = coeff
        return q, GenPoly(self.variables, terms)

    def min_exponent(self, var: str) -> Fraction | None:
        """Minimal exponent of ``var`` over all terms, None for the zero poly."""
        if var not in self.variables:
            raise StructureError(f"unknown variable {var!r}")
        if self.is_zero:
            return None
        i = self.variables.index(var)
        return min(exps[i] for exps in self.terms)

    def drop_variable(self, var: str) -> "GenPoly":
        """Remove a variable the polynomial no longer depends on."""
        if var not in self.variables:
            raise StructureError(f"unknown variable {var!r}")
        i = self.variables.index(var)
        if any(exps[i] != 0 for exps in self.terms):
            raise StructureError(f"polynomial still depends on {var!r}")
        new_vars = tuple(v for v in self.variables if v != var)
        terms = {
            tuple(e for j, e in enumerate(exps) if j != i): c
            for exps, c in self.terms.items()
        }
        return GenPoly(new_vars, terms)

    # -- evaluation --------------------------------------------------------

    def eval_at(self, point: Mapping[str, Scalar]) -> Scalar:
        """Evaluate at a point binding every variable.

        Exact (Fraction) when all inputs are rational and every needed power
        has an exact value; float otherwise.  Fractional powers of
        non-positive values raise :class:`DomainError`.
        """
        missing = [v for v in self.variables if v not in point]
        if missing:
            raise StructureError(f"unbound variables {missing}")
        total: Scalar = Fraction(0)
        for exps, coeff in self.terms.items():
            val: Scalar = coeff
            for v, q in zip(self.variables, exps):
                if q == 0:
                    continue
                val = val * _numeric_power(point[v], q)
            total = total + val
        return total

    def eval_float(self, point: Mapping[str, float]) -> float:
        return float(self.eval_at({v: float(point[v]) for v in self.variables}))

    # -- canonical text ----------------------------------------------------

    @staticmethod
    def _fmt_exponent(q: Fraction) -> str:
        if q.denominator == 1 and q >= 0:
            return str(q.numerator)
        return f"({q})"

    def _sort_key(self, exps: tuple) -> tuple:
        # graded lexicographic on the rational exponents, highest first
        return (-sum(exps), tuple(-e for e in exps))

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for exps in sorted(self.terms, key=self._sort_key):
            coeff = self.terms[exps]
            factors = [
                f"{v}^{self._fmt_exponent(q)}" if q != 1 else v
                for v, q in zip(self.variables, exps)
                if q != 0
            ]
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append(" ".join(factors))
            elif coeff == -1:
                parts.append("-" + " ".join(factors))
            else:
                parts.append(f"{coeff} * " + " ".join(factors))
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self) -> str:
        return f"GenPoly({self.variables}, {str(self)!r})"


def symbols(names: str) -> list[GenPoly]:
    """Space-separated variable names -> GenPoly generators over a shared list."""
    split = tuple(names.split())
    return [GenPoly.variable(n, split) for n in split]


# ---------------------------------------------------------------------------
# Truncated Puiseux series
# ---------------------------------------------------------------------------


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


class PuiseuxSeries:
    """Truncated series sum(c_q * t**q) with rational exponents q.

    Exponents are exact multiples of ``1/ramification`` and strictly below
    ``order`` (None meaning the representation is exact).  Negative exponents
    are allowed (Laurent tails appear in chart transports).
    """

    __slots__ = ("variable", "terms", "order", "ramification")

    def __init__(
        self,
        variable: str,
        terms: Mapping[RatLike, RatLike] | None = None,
        order: RatLike | None = None,
    ):
        object.__setattr__(self, "variable", variable)
        ordr = None if order is None else _frac(order)
        canon: dict[Fraction, Fraction] = {}
        for q, c in (terms or {}).items():
            qf, cf = _frac(q), _frac(c)
            if cf == 0:
                continue
            if ordr is not None and qf >= ordr:
                continue
            canon[qf] = canon.get(qf, Fraction(0)) + cf
        canon = {q: c for q, c in canon.items() if c != 0}
        ram = 1
        for q in canon:
            ram = _lcm(ram, q.denominator)
        if ordr is not None:
            ram = _lcm(ram, ordr.denominator)
        object.__setattr__(self, "terms", canon)
        object.__setattr__(self, "order", ordr)
        object.__setattr__(self, "ramification", ram)

    def __setattr__(self, name, value):
        raise AttributeError("PuiseuxSeries is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value: RatLike, variable: str) -> "PuiseuxSeries":
        return cls(variable, {Fraction(0): _frac(value)})

    @classmethod
    def monomial(
        cls, variable: str, exponent: RatLike, coeff: RatLike = 1
    ) -> "PuiseuxSeries":
        return cls(variable, {_frac(exponent): _frac(coeff)})

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def valuation(self) -> Fraction | None:
        """Lowest exponent with nonzero coefficient (None for zero series)."""
        return min(self.terms) if self.terms else None

    def coefficient(self, q: RatLike) -> Fraction:
        return self.terms.get(_frac(q), Fraction(0))

    def leading(self) -> tuple[Fraction, Fraction]:
        if self.is_zero:
            raise StructureError("zero series has no leading term")
        q = min(self.terms)
        return q, self.terms[q]

    def _check_var(self, other: "PuiseuxSeries"):
        if self.variable != other.variable:
            raise StructureError(
                f"series variables differ: {self.variable!r} vs {other.variable!r}"
            )

    @staticmethod
    def _min_order(a: Fraction | None, b: Fraction | None) -> Fraction | None:
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "PuiseuxSeries":
        if isinstance(other, PuiseuxSeries):
            return other
        if isinstance(other, (int, Fraction)):
            return PuiseuxSeries.constant(other, self.variable)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other) -> "PuiseuxSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        self._check_var(other)
        terms = dict(self.terms)
        for q, c in other.terms.items():
            terms[q] = terms.get(q, Fraction(0)) + c
        return PuiseuxSeries(
            self.variable, terms, self._min_order(self.order, other.order)
        )

    __radd__ = __add__

    def __neg__(self) -> "PuiseuxSeries":
        return PuiseuxSeries(
            self.variable, {q: -c for q, c in self.terms.items()}, self.order
        )

    def __sub__(self, other) -> "PuiseuxSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "PuiseuxSeries":
        return -(self - other)

    def __mul__(self, other) -> "PuiseuxSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        self._check_var(other)
        # pessimistic truncation: each factor's uncertainty shifted by the
        # other factor's valuation
        order = None
        va, vb = self.valuation(), other.valuation()
        if self.order is not None:
            order = self.order + (vb if vb is not None else Fraction(0))
        if other.order is not None:
            o2 = other.order + (va if va is not None else Fraction(0))
            order = o2 if order is None else min(order, o2)
        terms: dict[Fraction, Fraction] = {}
        for qa, ca in self.terms.items():
            for qb, cb in other.terms.items():
                q = qa + qb
                if order is not None and q >= order:
                    continue
                terms[q] = terms.get(q, Fraction(0)) + ca * cb
        return PuiseuxSeries(self.variable, terms, order)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PuiseuxSeries":
        if not isinstance(n, int) or n < 0:
            raise StructureError("series powers must be non-negative integers")
        out = PuiseuxSeries.constant(1, self.variable)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (
            self.variable == other.variable
            and self.terms == other.terms
            and self.order == other.order
        )

    def __hash__(self):
        return hash((self.variable, frozenset(self.terms.items()), self.order))

    # -- calculus & composition -------------------------------------------

    def differentiate(self) -> "PuiseuxSeries":
        terms = {q - 1: q * c for q, c in self.terms.items() if q != 0}
        order = None if self.order is None else self.order - 1
        return PuiseuxSeries(self.variable, terms, order)

    def truncate(self, order: RatLike) -> "PuiseuxSeries":
        order = _frac(order)
        order = order if self.order is None else min(order, self.order)
        return PuiseuxSeries(self.variable, self.terms, order)

    def compose_monomial(
        self, variable: str, exponent: RatLike, coeff: RatLike = 1
    ) -> "PuiseuxSeries":
        """Exact substitution t -> coeff * u**exponent (exponent nonzero)."""
        exponent = _frac(exponent)
        if exponent == 0:
            raise StructureError("inner monomial must have nonzero exponent")
        terms: dict[Fraction, Fraction] = {}
        for q, c in self.terms.items():
            factor = rational_power(_frac(coeff), q)
            if not isinstance(factor, Fraction):
                raise DomainError(f"{coeff}**{q} is irrational")
            terms[q * exponent] = terms.get(q * exponent, Fraction(0)) + c * factor
        order = None
        if self.order is not None:
            # image of the truncation frontier; exponent < 0 flips the bound,
            # keep the terms whose preimage exponent was certified
            if exponent > 0:
                order = self.order * exponent
            else:
                # certified region becomes a lower bound in u; drop the
                # uncertified low end by re-truncating from below
                bound = self.order * exponent
                terms = {q: c for q, c in terms.items() if q > bound}
                order = None
        return PuiseuxSeries(variable, terms, order)

    def compose(self, inner: "PuiseuxSeries") -> "PuiseuxSeries":
        """Substitute t -> inner(u).

        General composition requires a strictly positive inner valuation and
        non-negative integral outer exponents; single-term inner series go
        through :meth:`compose_monomial` exactly.
        """
        if len(inner.terms) == 1 and inner.order is None:
            q, c = next(iter(inner.terms.items()))
            return self.compose_monomial(inner.variable, q, c)
        v = inner.valuation()
        if v is None or v <= 0:
            raise DomainError("inner series must have positive leading exponent")
        if any(q.denominator != 1 or q < 0 for q in self.terms):
            raise DomainError(
                "general composition needs non-negative integer outer exponents"
            )
        order = None
        if self.order is not None:
            order = self.order * v
        if inner.order is not None:
            o2 = inner.order
            order = o2 if order is None else min(order, o2)
        out = PuiseuxSeries(inner.variable, {}, order)
        power = PuiseuxSeries.constant(1, inner.variable)
        max_deg = max((int(q) for q in self.terms), default=0)
        for k in range(max_deg + 1):
            c = self.coefficient(k)
            if c != 0:
                out = out + c * power
            power = power * inner
        return PuiseuxSeries(inner.variable, out.terms, order)

    # -- evaluation & text -------------------------------------------------

    def eval_at(self, value: Scalar) -> Scalar:
        total: Scalar = Fraction(0)
        for q, c in self.terms.items():
            total = total + c * _numeric_power(value, q)
        return total

    def __str__(self) -> str:
        if self.is_zero:
            body = "0"
        else:
            parts = []
            for q in sorted(self.terms):
                c = self.terms[q]
                if q == 0:
                    parts.append(str(c))
                else:
                    e = GenPoly._fmt_exponent(q)
                    head = f"{self.variable}^{e}" if q != 1 else self.variable
                    if c == 1:
                        parts.append(head)
                    elif c == -1:
                        parts.append("-" + head)
                    else:
                        parts.append(f"{c} * {head}")
            body = parts[0]
            for p in parts[1:]:
                body += " - " + p[1:] if p.startswith("-") else " + " + p
        if self.order is not None:
            body += f" + O({self.variable}^{GenPoly._fmt_exponent(self.order)})"
        return body

    def __repr__(self) -> str:
        return f"PuiseuxSeries({self.variable!r}, {str(self)!r})"

    def as_genpoly(self) -> GenPoly:
        """Forget the truncation; the stored terms as an exact GenPoly."""
        return GenPoly(
            (self.variable,), {(q,): c for q, c in self.terms.items()}
        )

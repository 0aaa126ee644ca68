"""Lowering of exact polynomial fields to flat coefficient/exponent arrays.

Backends evaluate a vector field component i as

    sum_{t in ptr[i]:ptr[i+1]} coeffs[t] * prod_j x[j] ** exps[t, j]

so the same three arrays drive both the pure-Python and the compiled
stepping loops.  The Jacobian is lowered the same way, as n*n components in
row-major order, which gives implicit steps an exact (not finite-difference)
Newton matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exactpoly import GenPoly, StructureError

__all__ = ["CompiledField", "CompiledEvents"]


def _lower(polys: Sequence[GenPoly], variables: tuple[str, ...]):
    coeffs: list[float] = []
    exps: list[list[float]] = []
    ptr = [0]
    for p in polys:
        p = p.with_variables(variables)
        for e, c in sorted(p.terms.items()):
            coeffs.append(float(c))
            exps.append([float(q) for q in e])
        ptr.append(len(coeffs))
    n = len(variables)
    return (
        np.asarray(coeffs, dtype=np.float64),
        np.asarray(exps, dtype=np.float64).reshape(len(coeffs), n),
        np.asarray(ptr, dtype=np.int64),
    )


@dataclass(frozen=True)
class CompiledField:
    """Vector field and its Jacobian as flat term arrays."""

    variables: tuple[str, ...]
    coeffs: np.ndarray
    exps: np.ndarray
    ptr: np.ndarray
    jac_coeffs: np.ndarray
    jac_exps: np.ndarray
    jac_ptr: np.ndarray

    @classmethod
    def from_polys(
        cls, variables: Sequence[str], polys: Sequence[GenPoly]
    ) -> "CompiledField":
        variables = tuple(variables)
        if len(polys) != len(variables):
            raise StructureError(
                f"{len(polys)} components for {len(variables)} variables"
            )
        polys = [p.with_variables(variables) for p in polys]
        coeffs, exps, ptr = _lower(polys, variables)
        jac = [p.diff(v) for p in polys for v in variables]
        jc, je, jp = _lower(jac, variables)
        return cls(variables, coeffs, exps, ptr, jc, je, jp)

    @property
    def dim(self) -> int:
        return len(self.variables)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            vals = self.coeffs * np.prod(np.asarray(x) ** self.exps, axis=1)
        out = np.empty(self.dim)
        for i in range(self.dim):
            out[i] = vals[self.ptr[i]:self.ptr[i + 1]].sum()
        return out

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        n = self.dim
        with np.errstate(all="ignore"):
            vals = self.jac_coeffs * np.prod(np.asarray(x) ** self.jac_exps, axis=1)
        out = np.empty(n * n)
        for i in range(n * n):
            out[i] = vals[self.jac_ptr[i]:self.jac_ptr[i + 1]].sum()
        return out.reshape(n, n)


@dataclass(frozen=True)
class CompiledEvents:
    """Scalar event functions g_i(x) with crossing direction and terminality."""

    coeffs: np.ndarray
    exps: np.ndarray
    ptr: np.ndarray
    directions: np.ndarray  # int8: -1 down-crossing, +1 up-crossing, 0 any
    terminal: np.ndarray  # int8 flags
    names: tuple[str, ...]

    @classmethod
    def from_specs(cls, variables: tuple[str, ...], specs) -> "CompiledEvents":
        polys = [s.function for s in specs]
        coeffs, exps, ptr = _lower(polys, variables)
        return cls(
            coeffs,
            exps,
            ptr,
            np.asarray([s.direction for s in specs], dtype=np.int8),
            np.asarray([1 if s.terminal else 0 for s in specs], dtype=np.int8),
            tuple(s.name for s in specs),
        )

    @property
    def count(self) -> int:
        return len(self.directions)

    def value(self, i: int, x: np.ndarray) -> float:
        lo, hi = self.ptr[i], self.ptr[i + 1]
        with np.errstate(all="ignore"):
            return float(
                (self.coeffs[lo:hi] * np.prod(x ** self.exps[lo:hi], axis=1)).sum()
            )

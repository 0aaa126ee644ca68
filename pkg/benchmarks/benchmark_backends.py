"""Compare the pure-Python and compiled stepping loops on real workloads.

Run:  python benchmarks/benchmark_backends.py
"""

import time
from fractions import Fraction

import numpy as np

from fastslow.exactpoly import GenPoly
from fastslow.integrate import EventSpec
from fastslow.integrate.backend import get_backend
from fastslow.integrate.compile import CompiledEvents, CompiledField
from fastslow.models import autocatalator2d, power_law_system


def _departure_case():
    eps = 1e-6
    system = power_law_system(1, -1)
    cf = CompiledField.from_polys(("x", "y"), system.slow_time_rhs(eps))
    x = GenPoly.variable("x", ("x", "y"))
    y = GenPoly.variable("y", ("x", "y"))
    ev = CompiledEvents.from_specs(
        ("x", "y"),
        [
            EventSpec("departure", x * y - Fraction(1, 2), -1, True),
            EventSpec("floor", y - Fraction(1, 100000), -1, True),
        ],
    )
    args = (
        np.array([2.0, 0.5]), 0.0, 0.75, 1e-7, 1e-10, 0.0, 0.0, 5_000_000,
        0.0, ev.coeffs, ev.exps, ev.ptr, ev.directions, ev.terminal, 1e-12,
    )
    return "departure s=1 eps=1e-6 (sdirk3)", "sdirk3_run", cf, args


def _cycle_case():
    system = autocatalator2d(Fraction(11, 10))
    cf = CompiledField.from_polys(("x", "y"), system.fast_time_rhs(Fraction(1, 100)))
    ev = CompiledEvents.from_specs(("x", "y"), [])
    args = (
        np.array([2.0, 1.1]), 0.0, 500.0, 1e-10, 1e-12, 0.0, 0.0, 5_000_000,
        0.0, ev.coeffs, ev.exps, ev.ptr, ev.directions, ev.terminal, 1e-12,
    )
    return "autocatalator cycle eps=0.01 (dopri5)", "dopri5_run", cf, args


def run_case(label, fn_name, cf, args, repeats=3):
    row = {"case": label}
    results = {}
    for backend_name in ("pure", "compiled"):
        try:
            backend = get_backend(backend_name)
        except ImportError:
            row[backend_name] = None
            continue
        fn = getattr(backend, fn_name)
        call_args = (cf.coeffs, cf.exps, cf.ptr)
        if fn_name == "sdirk3_run":
            call_args += (cf.jac_coeffs, cf.jac_exps, cf.jac_ptr)
        call_args += args
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            out = fn(*call_args)
            best = min(best, time.perf_counter() - t0)
        results[backend_name] = out
        row[backend_name] = best
    if "pure" in results and "compiled" in results:
        fp = np.asarray(results["pure"][1][-1])
        fc = np.asarray(results["compiled"][1][-1])
        row["final_state_delta"] = float(np.abs(fp - fc).max())
        row["steps"] = (results["pure"][4], results["compiled"][4])
    return row


def main():
    print(f"{'case':45s} {'pure':>10s} {'compiled':>10s} {'speedup':>8s}")
    for case in (_departure_case(), _cycle_case()):
        row = run_case(*case)
        pure, comp = row.get("pure"), row.get("compiled")
        if pure and comp:
            print(
                f"{row['case']:45s} {pure:9.3f}s {comp:9.3f}s "
                f"{pure / comp:7.1f}x   "
                f"steps={row['steps']} max|Δfinal|={row['final_state_delta']:.2e}"
            )
        else:
            print(f"{row['case']:45s} compiled backend unavailable")


if __name__ == "__main__":
    main()

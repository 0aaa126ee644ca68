"""Command-line surface: every analysis step as a subcommand emitting JSON.

JSON is the single source of truth; CSV and gnuplot scripts are derived
views written next to the JSON when requested.  Exit codes: 0 success,
1 runtime failure (structured error JSON on stdout), 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import SCHEMA_VERSION
from .models import ParameterError, parse_model, power_law_system, _parse_rat
from .transforms import kappa12, modified_chart_field, standard_chart_field
from .localanalysis import (
    center_manifold_series,
    cm_comparison_report,
    equilibria_on_subspace,
    transport_comparison_report,
    transport_series,
)
from .asymptotics import breakdown_scale, slow_manifold_series
from .integrate import IntegratorConfig, integrate
from .experiments import (
    departure_point,
    find_limit_cycle,
    gnuplot_script,
    optimality_probe,
    scaling_fit,
)
from .acceptance import run_all

__all__ = ["main"]


def _grid(text: str) -> list[float]:
    """Parse a log-spaced grid spec `lo:hi:n`."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"grid must be lo:hi:n, got {text!r}"
        ) from exc
    if lo <= 0 or hi <= 0 or n < 2:
        raise argparse.ArgumentTypeError("grid needs positive lo, hi and n >= 2")
    return list(np.geomspace(lo, hi, n))


def _rat(text: str) -> Fraction:
    try:
        return _parse_rat(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _emit(doc: dict, args) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    text = json.dumps(doc, indent=2, default=str)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_views(result, args) -> None:
    if getattr(args, "csv", None):
        with open(args.csv, "w") as fh:
            fh.write(result.points_csv())
    if getattr(args, "gnuplot", None):
        if not getattr(args, "csv", None):
            raise ParameterError("--gnuplot needs --csv for the data file")
        header = result.points_csv().splitlines()[0].split(",")
        with open(args.gnuplot, "w") as fh:
            fh.write(gnuplot_script(args.csv, header[0], header[1], True))


# --------------------------------------------------------------------------
# Subcommand handlers
# --------------------------------------------------------------------------


def cmd_series(args) -> int:
    sm = slow_manifold_series(args.s, args.mu, args.order)
    x_exp, y_exp = breakdown_scale(sm)
    printed = [1] + [-(2 * k - 1) for k in range(1, args.order + 1)]
    doc = {
        "experiment": "series",
        "params": {"s": args.s, "mu": str(args.mu), "order": args.order},
        "coefficients": [str(c) for c in sm.coefficients],
        "breakdown_exponents": {"x": str(x_exp), "y": str(y_exp)},
        "comparison_note": (
            "recursion coefficients follow the double factorial (2k-1)!!; "
            f"the printed closed form lists {printed} for s=1, mu=1 — "
            "reported, not reconciled"
        ),
    }
    _emit(doc, args)
    return 0


def cmd_blowup(args) -> int:
    if args.weights == "standard":
        charts = {
            c: standard_chart_field(args.s, args.mu, c) for c in ("K1", "K2")
        }
    else:
        a1, a2 = (Fraction(w) for w in args.weights.split(","))
        charts = {
            c: modified_chart_field(args.s, args.mu, a1, a2, c)
            for c in ("K1", "K2")
        }
    doc = {
        "experiment": "blowup",
        "params": {"s": args.s, "mu": str(args.mu), "weights": args.weights},
        "charts": {c: cf.to_json_dict() for c, cf in charts.items()},
    }
    _emit(doc, args)
    return 0


def _cm_for(s: int, mu: Fraction, order: int):
    plane = standard_chart_field(s, mu, "K1").restrict("r1", 0)
    eqs = [
        e
        for e in equilibria_on_subspace(plane, "eps1=0")
        if e.coordinates.get("v1") == 1
    ]
    if not eqs:
        raise ParameterError("base equilibrium not found")
    return center_manifold_series(plane, eqs[0], order=order)


def cmd_center_manifold(args) -> int:
    cm = _cm_for(args.s, args.mu, args.order)
    doc = {
        "experiment": "center-manifold",
        "params": {"s": args.s, "mu": str(args.mu), "order": args.order},
        "series": str(cm.series),
        "comparison": cm_comparison_report(cm),
    }
    _emit(doc, args)
    return 0


def cmd_transport(args) -> int:
    cm = _cm_for(args.s, args.mu, args.order)
    ts = transport_series(cm, kappa12(args.s), args.s)
    doc = {
        "experiment": "transport",
        "params": {"s": args.s, "mu": str(args.mu), "order": args.order},
        "series_in_u": str(ts.series),
        "comparison": transport_comparison_report(ts, args.mu),
    }
    _emit(doc, args)
    return 0


def cmd_simulate(args) -> int:
    system = parse_model(args.model)
    cfg = IntegratorConfig(
        method=args.method, time_scale=args.time_scale,
        rtol=args.rtol, atol=args.atol,
    )
    traj = integrate(
        system, [args.x0, args.y0], (0.0, args.t1), cfg, eps=args.eps
    )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(traj.to_csv())
    doc = {
        "experiment": "simulate",
        "params": {
            "model": args.model, "eps": args.eps, "t1": args.t1,
            "method": args.method, "time_scale": args.time_scale,
        },
        "points": [
            {"t": float(t), "state": [float(v) for v in row]}
            for t, row in zip(traj.times[:: max(1, len(traj.times) // 50)],
                              traj.states[:: max(1, len(traj.times) // 50)])
        ],
        "final_state": [float(v) for v in traj.final_state()],
        "stats": traj.stats,
        "status": traj.status,
        "verdict": traj.status == "done",
    }
    _emit(doc, args)
    return 0 if traj.status in ("done", "event") else 1


def cmd_departure(args) -> int:
    ev = departure_point(args.s, args.mu, args.eps, args.theta)
    doc = {
        "experiment": "departure",
        "params": {
            "s": args.s, "mu": str(args.mu),
            "eps": args.eps, "theta": args.theta,
        },
        "points": [
            {
                "eps": ev.eps, "x_star": ev.state[0], "y_star": ev.state[1],
                "time": ev.time, "criterion": ev.criterion_value,
            }
        ],
        "verdict": True,
    }
    _emit(doc, args)
    return 0


def cmd_scaling_fit(args) -> int:
    result = scaling_fit(args.s, args.mu, args.eps_decades, args.theta)
    _write_views(result, args)
    _emit(result.to_document(), args)
    return 0


def cmd_optimality(args) -> int:
    result = optimality_probe(
        args.s, args.mu, args.alpha1, args.alpha2, args.r1_grid
    )
    _write_views(result, args)
    _emit(result.to_document(), args)
    return 0


def cmd_limit_cycle(args) -> int:
    result = find_limit_cycle(args.mu, args.eps, args.section_x)
    _write_views(result, args)
    _emit(result.to_document(), args)
    return 0


def cmd_verify(args) -> int:
    results = run_all()
    for r in results:
        print(r.line(), file=sys.stderr)
    doc = {
        "experiment": "verify",
        "points": [
            {
                "name": r.name, "passed": r.passed,
                "detail": r.detail, "seconds": round(r.seconds, 3),
            }
            for r in results
        ],
        "verdict": all(r.passed for r in results),
    }
    _emit(doc, args)
    return 0 if doc["verdict"] else 1


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="fastslow",
        description="Fast-slow systems with unbounded critical manifolds",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def add(name, handler, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(handler=handler)
        p.add_argument("--out", help="write the JSON document here")
        return p

    p = add("series", cmd_series, help="slow-manifold expansion coefficients")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mu", type=_rat, required=True)
    p.add_argument("--order", type=int, default=3)

    p = add("blowup", cmd_blowup, help="chart fields of the weighted blow-up")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mu", type=_rat, default=Fraction(-1))
    p.add_argument(
        "--weights", default="standard",
        help="'standard' or 'alpha1,alpha2' for perturbed weights",
    )

    p = add("center-manifold", cmd_center_manifold,
            help="center-manifold series at the chart-K1 base equilibrium")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mu", type=_rat, required=True)
    p.add_argument("--order", type=int, default=6)

    p = add("transport", cmd_transport,
            help="center-manifold series transported to chart K2")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mu", type=_rat, required=True)
    p.add_argument("--order", type=int, default=6)

    p = add("simulate", cmd_simulate, help="integrate a registered model")
    p.add_argument("--model", required=True,
                   help="e.g. power-law:s=2,mu=-1 or autocatalator2d:mu=1.1")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--x0", type=float, default=2.0)
    p.add_argument("--y0", type=float, default=0.5)
    p.add_argument("--method", default="adaptive-explicit",
                   choices=["adaptive-explicit", "implicit-stiff"])
    p.add_argument("--time-scale", default="fast", choices=["fast", "slow"])
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--csv", help="write the full trajectory CSV here")

    p = add("departure", cmd_departure, help="single departure-point run")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mu", type=_rat, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.5)

    p = add("scaling-fit", cmd_scaling_fit,
            help="departure scaling exponents over an eps sweep")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mu", type=_rat, required=True)
    p.add_argument("--eps-decades", type=_grid, default=None,
                   metavar="LO:HI:N", help="log-spaced eps grid")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--csv", help="write raw points CSV here")
    p.add_argument("--gnuplot", help="write a gnuplot script here (needs --csv)")

    p = add("optimality", cmd_optimality,
            help="normal-multiplier decay for modified blow-up weights")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mu", type=_rat, required=True)
    p.add_argument("--alpha1", type=_rat, required=True)
    p.add_argument("--alpha2", type=_rat, required=True)
    p.add_argument("--r1-grid", type=_grid, default=None, metavar="LO:HI:N")
    p.add_argument("--csv", help="write raw points CSV here")
    p.add_argument("--gnuplot", help="write a gnuplot script here (needs --csv)")

    p = add("limit-cycle", cmd_limit_cycle,
            help="Poincare return map of the planar autocatalator")
    p.add_argument("--mu", type=_rat, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--section-x", type=float, default=2.0)
    p.add_argument("--csv", help="write raw points CSV here")
    p.add_argument("--gnuplot", help="write a gnuplot script here (needs --csv)")

    add("verify", cmd_verify, help="run the full acceptance suite")
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ParameterError, ValueError, RuntimeError) as exc:
        err = {
            "schema_version": SCHEMA_VERSION,
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }
        print(json.dumps(err, indent=2))
        return 1


if __name__ == "__main__":
    sys.exit(main(argv=None))

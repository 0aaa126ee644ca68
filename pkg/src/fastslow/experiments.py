"""Quantitative experiments: departure detection, scaling-law fits, the
modified-weight optimality probe, and the relaxation-oscillation cycle.

Sweep points (over eps or over r1) are independent jobs run on a bounded
thread pool and gathered in input order, so results are deterministic.
Each result converts to a JSON document {experiment, params, points,
fit, verdict} plus a CSV of raw points.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactpoly import GenPoly, Monomial
from .localanalysis import kappa2_plane_field, variational_matrix
from .models import ParameterError, autocatalator2d, power_law_system
from .transforms import modified_chart_field
from .integrate import EventSpec, IntegratorConfig, integrate

__all__ = [
    "DepartureEvent",
    "FitLine",
    "ScalingFitResult",
    "OptimalityResult",
    "LimitCycleResult",
    "departure_point",
    "scaling_fit",
    "optimality_probe",
    "find_limit_cycle",
    "asymptotic_autonomy_check",
    "ols_line",
    "worker_count",
]


def worker_count() -> int:
    env = os.environ.get("FASTSLOW_WORKERS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# Log-log fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitLine:
    slope: float
    intercept: float
    stderr: float
    r2: float

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r2": self.r2,
        }


def ols_line(xs: Sequence[float], ys: Sequence[float]) -> FitLine:
    """Ordinary least squares y = a*x + b with the slope's standard error."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points to fit a line")
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 and sxx > 0 else 0.0
    return FitLine(float(a), float(b), stderr, r2)


# ---------------------------------------------------------------------------
# Departure detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DepartureEvent:
    eps: float
    state: tuple[float, float]  # (x*, y*)
    time: float
    criterion_value: float


class DepartureNotObserved(RuntimeError):
    pass


def _departure_events(s: int, theta: float, y_floor: float) -> list[EventSpec]:
    x, y = GenPoly.variable("x", ("x", "y")), GenPoly.variable("y", ("x", "y"))
    delta = x**s * y
    level = Fraction(1) - Fraction(theta)
    return [
        EventSpec("departure", delta - level, direction=-1, terminal=True),
        EventSpec(
            "y-floor",
            y - Fraction(y_floor),
            direction=-1,
            terminal=True,
        ),
    ]


def departure_point(
    s: int,
    mu,
    eps: float,
    theta: float = 0.5,
    x_start: float = 2.0,
    cfg: IntegratorConfig | None = None,
) -> DepartureEvent:
    """First slow-time crossing of Delta = x**s * y below 1 - theta, starting
    on the critical graph at x = x_start.

    Integration runs on the slow time scale with the stiff method (the fast
    contraction rate is O(1/eps) there).
    """
    mu = Fraction(mu)
    if mu >= 0:
        raise ParameterError("departure toward y -> 0 requires mu < 0")
    if not 0.0 < theta < 1.0:
        raise ParameterError("theta must be in (0, 1)")
    if not eps > 0:
        raise ParameterError("eps must be positive")
    system = power_law_system(s, mu)
    y0 = x_start ** (-s)
    # the floor sits well below the predicted departure height eps^(s/(s+1))
    y_floor = min(0.01 * eps ** (s / (s + 1)), 0.1 * y0)
    cfg = cfg or IntegratorConfig(
        method="implicit-stiff", time_scale="slow", rtol=1e-7, atol=1e-10
    )
    t_end = 1.5 * y0 / float(abs(mu))
    traj = integrate(
        system,
        [x_start, y0],
        (0.0, t_end),
        cfg,
        events=_departure_events(s, theta, y_floor),
        eps=eps,
    )
    hits = [e for e in traj.events if e.kind == "departure"]
    if not hits:
        raise DepartureNotObserved(
            f"departure not observed before the y floor at eps={eps}; "
            "decrease eps or theta"
        )
    ev = hits[0]
    x_star, y_star = ev.state
    # monotone-crossing check: the criterion decreases into the event
    tail = traj.states[-4:]
    deltas = tail[:, 0] ** s * tail[:, 1]
    if not np.all(np.diff(deltas) < 0):
        raise DepartureNotObserved("criterion not monotone at the crossing")
    return DepartureEvent(
        eps=float(eps),
        state=(float(x_star), float(y_star)),
        time=float(ev.time),
        criterion_value=float(x_star**s * y_star),
    )


# ---------------------------------------------------------------------------
# Scaling-law fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFitResult:
    s: int
    mu: float
    theta: float
    points: tuple[tuple[float, float, float], ...]  # (eps, x*, y*)
    failures: tuple[tuple[float, str], ...]
    fit_x: FitLine
    fit_y: FitLine

    @property
    def expected_slopes(self) -> tuple[float, float]:
        return (-1.0 / (self.s + 1), self.s / (self.s + 1))

    def to_document(self) -> dict:
        ex, ey = self.expected_slopes
        return {
            "experiment": "scaling-fit",
            "params": {"s": self.s, "mu": self.mu, "theta": self.theta},
            "points": [
                {"eps": e, "x_star": x, "y_star": y} for e, x, y in self.points
            ],
            "failures": [{"eps": e, "error": m} for e, m in self.failures],
            "fit": {
                "x": self.fit_x.to_json_dict(),
                "y": self.fit_y.to_json_dict(),
                "expected": {"x": ex, "y": ey},
            },
            "verdict": bool(
                abs(self.fit_x.slope - ex) < 0.05
                and abs(self.fit_y.slope - ey) < 0.05
            ),
        }

    def points_csv(self) -> str:
        lines = ["eps,x_star,y_star"]
        lines += [f"{e!r},{x!r},{y!r}" for e, x, y in self.points]
        return "\n".join(lines) + "\n"


def _check_grid(grid: Sequence[float], n_min: int, decades: float):
    if len(grid) < n_min:
        raise ParameterError(f"grid needs at least {n_min} points")
    span = math.log10(max(grid) / min(grid))
    if span < decades:
        raise ParameterError(f"grid must span >= {decades} decades, got {span:.2f}")


def scaling_fit(
    s: int,
    mu,
    eps_grid: Sequence[float] | None = None,
    theta: float = 0.5,
    x_start: float = 2.0,
) -> ScalingFitResult:
    """OLS fit of log x*, log y* against log eps over an eps sweep."""
    if eps_grid is None:
        eps_grid = list(np.geomspace(1e-7, 1e-4, 7))
    _check_grid(eps_grid, 5, 3.0)

    def job(eps: float):
        return departure_point(s, mu, eps, theta, x_start)

    points: list[tuple[float, float, float]] = []
    failures: list[tuple[float, str]] = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [pool.submit(job, e) for e in eps_grid]
    for eps, fut in zip(eps_grid, futures):
        try:
            ev = fut.result()
            points.append((float(eps), ev.state[0], ev.state[1]))
        except (DepartureNotObserved, RuntimeError) as exc:
            failures.append((float(eps), str(exc)))
    if len(points) < 5:
        raise DepartureNotObserved(
            f"only {len(points)} departures observed; cannot fit"
        )
    log_e = [math.log(p[0]) for p in points]
    fit_x = ols_line(log_e, [math.log(p[1]) for p in points])
    fit_y = ols_line(log_e, [math.log(p[2]) for p in points])
    return ScalingFitResult(
        s, float(mu), theta, tuple(points), tuple(failures), fit_x, fit_y
    )


# ---------------------------------------------------------------------------
# Optimality probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimalityResult:
    s: int
    mu: float
    alpha1: Fraction
    alpha2: Fraction
    r1_grid: tuple[float, ...]
    multipliers: tuple[float, ...]
    beta_symbolic: Fraction
    beta_fit: FitLine | None  # None when the multiplier is constant
    constant_multiplier: Fraction | None
    inconclusive: bool

    @property
    def beta(self) -> float:
        return float(self.beta_symbolic)

    def to_document(self) -> dict:
        fit = self.beta_fit.to_json_dict() if self.beta_fit else None
        return {
            "experiment": "optimality",
            "params": {
                "s": self.s,
                "mu": self.mu,
                "alpha1": str(self.alpha1),
                "alpha2": str(self.alpha2),
            },
            "points": [
                {"r1": r, "multiplier": m}
                for r, m in zip(self.r1_grid, self.multipliers)
            ],
            "fit": {
                "beta_symbolic": str(self.beta_symbolic),
                "beta": fit,
                "constant_multiplier": (
                    str(self.constant_multiplier)
                    if self.constant_multiplier is not None
                    else None
                ),
            },
            "verdict": bool(not self.inconclusive and self.beta > 0)
            if (self.alpha1, self.alpha2) != (0, 0)
            else bool(self.constant_multiplier not in (None, 0)),
        }

    def points_csv(self) -> str:
        lines = ["r1,multiplier"]
        lines += [f"{r!r},{m!r}" for r, m in zip(self.r1_grid, self.multipliers)]
        return "\n".join(lines) + "\n"


def optimality_probe(
    s: int,
    mu,
    alpha1,
    alpha2,
    r1_grid: Sequence[float] | None = None,
) -> OptimalityResult:
    """Normal-multiplier decay along the {eps1 = 0} equilibrium line of the
    modified-weight chart field.

    The line is v1 = r1**((alpha2 - s*alpha1)/s); the multiplier is
    d(v1')/d(v1) evaluated there.  The symbolic exponent beta comes from
    substituting the line into the multiplier polynomial (the result
    collapses to a single monomial), and the numeric log-log fit over the
    r1 grid must reproduce it.
    """
    alpha1, alpha2 = Fraction(alpha1), Fraction(alpha2)
    if alpha1 < 0 or alpha2 < 0 or alpha1 + alpha2 > Fraction(1, 4):
        raise ParameterError("need alpha1, alpha2 >= 0 with alpha1+alpha2 <= 1/4")
    if r1_grid is None:
        r1_grid = list(np.geomspace(1e-6, 1e-1, 11))
    _check_grid(r1_grid, 5, 4.0)
    cf = modified_chart_field(s, mu, alpha1, alpha2, "K1")
    plane = cf.restrict("eps1", 0)
    mult = plane.components[plane.coords.index("v1")].diff("v1")
    line_exp = (alpha2 - s * alpha1) / s
    on_line = mult.substitute({"v1": Monomial(1, {"r1": line_exp})})
    if len(on_line.terms) != 1:
        raise AssertionError(
            f"multiplier on the equilibrium line is not a monomial: {on_line}"
        )
    (exps,), (coeff,) = zip(*on_line.terms.items())
    beta_symbolic = exps[on_line.variables.index("r1")]

    def job(r1: float) -> float:
        v1 = r1 ** float(line_exp)
        return float(on_line.eval_float({"r1": r1, "v1": v1}))

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        multipliers = list(pool.map(job, r1_grid))

    if beta_symbolic == 0:
        return OptimalityResult(
            s, float(mu), alpha1, alpha2, tuple(map(float, r1_grid)),
            tuple(multipliers), Fraction(0), None, coeff, inconclusive=False,
        )
    fit = ols_line(
        [math.log(r) for r in r1_grid],
        [math.log(abs(m)) for m in multipliers],
    )
    return OptimalityResult(
        s, float(mu), alpha1, alpha2, tuple(map(float, r1_grid)),
        tuple(multipliers), beta_symbolic, fit, None,
        inconclusive=fit.r2 < 0.99,
    )


# ---------------------------------------------------------------------------
# Limit cycle (planar autocatalator)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitCycleResult:
    mu: float
    eps: float
    section_x: float
    y_fixed: float
    period: float
    amplitude_x: float
    return_derivative: float
    closure_error: float

    def to_document(self) -> dict:
        return {
            "experiment": "limit-cycle",
            "params": {"mu": self.mu, "eps": self.eps, "section_x": self.section_x},
            "points": [
                {
                    "y_fixed": self.y_fixed,
                    "period": self.period,
                    "amplitude_x": self.amplitude_x,
                }
            ],
            "fit": {
                "return_derivative": self.return_derivative,
                "closure_error": self.closure_error,
            },
            "verdict": bool(
                abs(self.return_derivative) < 1 and self.closure_error < 1e-6
            ),
        }

    def points_csv(self) -> str:
        return (
            "y_fixed,period,amplitude_x,return_derivative,closure_error\n"
            f"{self.y_fixed!r},{self.period!r},{self.amplitude_x!r},"
            f"{self.return_derivative!r},{self.closure_error!r}\n"
        )


class LimitCycleError(RuntimeError):
    pass


def _one_return(
    polys, section_x: float, y: float, cfg: IntegratorConfig, t_cap: float
) -> tuple[float, float, float]:
    """(y at next up-crossing of x = section_x, elapsed time, max x)."""
    x = GenPoly.variable("x", ("x", "y"))
    ev = EventSpec(
        "section", x - Fraction(section_x), direction=1, terminal=True
    )
    traj = integrate(polys, [section_x, y], (0.0, t_cap), cfg, events=[ev])
    hits = [e for e in traj.events if e.kind == "section"]
    if traj.status != "event" or not hits:
        raise LimitCycleError(
            f"no section crossing within t = {t_cap} (status {traj.status})"
        )
    hit = hits[0]
    return hit.state[1], hit.time, float(traj.states[:, 0].max())


def find_limit_cycle(
    mu,
    eps,
    section_x: float = 2.0,
    reverse_time: bool = False,
    cfg: IntegratorConfig | None = None,
    max_returns: int = 60,
) -> LimitCycleResult:
    """Fixed point of the Poincare return map on {x = section_x, x' > 0}.

    Attraction makes plain return-map iteration converge; the derivative is
    then estimated by centered differences and certifies |P'| < 1.
    """
    system = autocatalator2d(mu)
    eps = Fraction(eps)
    polys = system.fast_time_rhs(eps)
    if reverse_time:
        polys = [-1 * p for p in polys]
    field = (("x", "y"), polys)
    cfg = cfg or IntegratorConfig(rtol=1e-10, atol=1e-12)
    t_cap = 40.0 / float(eps)
    y = float(mu)  # anywhere in the basin works; the cycle is attracting
    period = amplitude = 0.0
    converged = False
    for _ in range(max_returns):
        y_next, period, amplitude = _one_return(field, section_x, y, cfg, t_cap)
        if abs(y_next - y) < 1e-10 * max(1.0, abs(y)):
            converged = True
            y = y_next
            break
        y = y_next
    if not converged:
        raise LimitCycleError(
            "return map did not converge; no attracting cycle found"
        )
    y_check, _, _ = _one_return(field, section_x, y, cfg, t_cap)
    closure = abs(y_check - y)
    delta = 1e-6 * max(1.0, abs(y))
    y_plus, _, _ = _one_return(field, section_x, y + delta, cfg, t_cap)
    y_minus, _, _ = _one_return(field, section_x, y - delta, cfg, t_cap)
    deriv = (y_plus - y_minus) / (2 * delta)
    return LimitCycleResult(
        mu=float(mu),
        eps=float(eps),
        section_x=section_x,
        y_fixed=y,
        period=period,
        amplitude_x=amplitude,
        return_derivative=float(deriv),
        closure_error=float(closure),
    )


# ---------------------------------------------------------------------------
# Asymptotic autonomy of the variational equation
# ---------------------------------------------------------------------------


def asymptotic_autonomy_check(
    k: int,
    parity: str = "odd",
    mu=-1,
    t_max: float = 1e4,
    initial: tuple[float, float] = (1.0, 1.0),
    eig_bound: float = 1e-3,
) -> dict:
    """Integrate the planar chart field and track the eigenvalues of the
    variational matrix A(t); both must decay toward the double zero.

    parity selects s = 2k (even) or s = 2k + 1 (odd).
    """
    if parity not in ("even", "odd"):
        raise ParameterError("parity must be 'even' or 'odd'")
    if k < 1:
        raise ParameterError("k must be >= 1")
    mu = Fraction(mu)
    if mu >= 0:
        raise ParameterError("decay requires mu < 0")
    s = 2 * k if parity == "even" else 2 * k + 1
    plane = kappa2_plane_field(s, mu)
    cfg = IntegratorConfig(rtol=1e-9, atol=1e-12, max_steps=5_000_000)
    traj = integrate(plane, list(initial), (0.0, t_max), cfg)
    if traj.status != "done":
        raise RuntimeError(f"integration ended with status {traj.status}")
    v2_final = abs(traj.final_state()[0])
    if v2_final > abs(traj.states[0, 0]):
        raise RuntimeError("v2 failed to decay; check the sign of mu")
    A = variational_matrix(plane, traj.times, traj.states)
    sample_ts = np.geomspace(max(1.0, traj.times[1]), t_max, 60)
    eig_max = [
        float(np.abs(np.linalg.eigvals(A(t))).max()) for t in sample_ts
    ]
    # decreasing envelope: running max from the right
    envelope = np.maximum.accumulate(eig_max[::-1])[::-1]
    tail = envelope[len(envelope) // 3:]
    return {
        "s": s,
        "k": k,
        "parity": parity,
        "mu": float(mu),
        "t_max": t_max,
        "final_state": tuple(map(float, traj.final_state())),
        "eig_max_final": eig_max[-1],
        "eig_bound": eig_bound,
        "eig_below_bound": bool(eig_max[-1] < eig_bound),
        "envelope_decreasing": bool(np.all(np.diff(tail) <= 0)),
        "samples": list(zip(map(float, sample_ts), map(float, eig_max))),
    }


def gnuplot_script(csv_path: str, xlabel: str, ylabel: str, logscale: bool) -> str:
    """Minimal gnuplot companion for an experiment CSV."""
    lines = [
        "set datafile separator ','",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale:
        lines.append("set logscale xy")
    lines.append(f"plot '{csv_path}' using 1:2 skip 1 with points title '{ylabel}'")
    return "\n".join(lines) + "\n"

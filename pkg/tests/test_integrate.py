import math
from fractions import Fraction

import numpy as np
import pytest

from fastslow.exactpoly import GenPoly, StructureError
from fastslow.integrate import (
    EVENT_TOL,
    EventSpec,
    IntegratorConfig,
    Trajectory,
    integrate,
)
from fastslow.integrate.api import lyapunov_along
from fastslow.integrate.backend import BACKEND_NAME, get_backend
from fastslow.integrate.compile import CompiledEvents, CompiledField
from fastslow.localanalysis import kappa2_plane_field
from fastslow.models import power_law_system

Y = GenPoly.variable("y", ("y",))
DECAY = (("y",), [-Y])  # y' = -y

_X = GenPoly.variable("x", ("x", "v"))
_V = GenPoly.variable("v", ("x", "v"))
OSC = (("x", "v"), [_V, -_X])  # harmonic oscillator


@pytest.mark.parametrize("method", ["adaptive-explicit", "implicit-stiff"])
def test_linear_decay_endpoint(method):
    cfg = IntegratorConfig(method=method, rtol=1e-10, atol=1e-12)
    traj = integrate(DECAY, [1.0], (0.0, 1.0), cfg)
    assert traj.status == "done"
    assert abs(traj.final_state()[0] - math.exp(-1)) < 1e-8


def test_oscillator_energy_drift():
    cfg = IntegratorConfig(rtol=1e-9, atol=1e-12)
    traj = integrate(OSC, [1.0, 0.0], (0.0, 200 * math.pi), cfg)
    energy = traj.states[:, 0] ** 2 + traj.states[:, 1] ** 2
    assert np.abs(energy - 1.0).max() < 1e-6


@pytest.mark.parametrize(
    "method,expected", [("adaptive-explicit", 5.0), ("implicit-stiff", 3.0)]
)
def test_fixed_step_convergence_order(method, expected):
    errs = []
    for h in (0.1, 0.05, 0.025):
        cfg = IntegratorConfig(method=method, fixed_step=h)
        traj = integrate(DECAY, [1.0], (0.0, 1.0), cfg)
        errs.append(abs(traj.final_state()[0] - math.exp(-1)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) > (4.0 if expected == 5.0 else 2.7)
    assert max(orders) < expected + 0.6


def test_methods_agree_on_stiff_relaxation():
    # x' = (y - x)/eps, y' = -1: both methods must land on the same point
    sysm = power_law_system(1, -1)
    finals = []
    for method in ("adaptive-explicit", "implicit-stiff"):
        cfg = IntegratorConfig(method=method, rtol=1e-9, atol=1e-12, time_scale="slow")
        traj = integrate(sysm, [2.0, 0.5], (0.0, 0.1), cfg, eps=1e-3)
        finals.append(traj.final_state())
    assert np.abs(finals[0] - finals[1]).max() < 1e-6


# -- events -------------------------------------------------------------------


def test_terminal_event_is_refined_to_tolerance():
    ev = EventSpec("half-life", Y - Fraction(1, 2), direction=-1, terminal=True)
    # the event time inherits the O(h^2) chord error, so keep steps small
    cfg = IntegratorConfig(max_step=0.02)
    traj = integrate(DECAY, [1.0], (0.0, 5.0), cfg, events=[ev])
    assert traj.status == "event"
    (rec,) = traj.events
    assert rec.kind == "half-life"
    assert abs(rec.state[0] - 0.5) <= EVENT_TOL
    assert rec.time == pytest.approx(math.log(2), abs=1e-4)
    # trajectory ends at the event state
    assert traj.final_state()[0] == pytest.approx(0.5, abs=1e-9)


def test_nonterminal_events_record_all_crossings():
    ev = EventSpec("x-axis", GenPoly.variable("x", ("x", "v")), direction=0)
    traj = integrate(OSC, [1.0, 0.0], (0.0, 2 * math.pi), events=[ev])
    assert traj.status == "done"
    times = [r.time for r in traj.events]
    assert len(times) == 2
    assert times[0] == pytest.approx(math.pi / 2, abs=1e-4)
    assert times[1] == pytest.approx(3 * math.pi / 2, abs=1e-4)


def test_event_direction_filter():
    ev = EventSpec("up", GenPoly.variable("x", ("x", "v")), direction=+1)
    traj = integrate(OSC, [1.0, 0.0], (0.0, 2 * math.pi), events=[ev])
    times = [r.time for r in traj.events]
    assert len(times) == 1
    assert times[0] == pytest.approx(3 * math.pi / 2, abs=1e-4)


def test_event_at_start_is_not_retriggered():
    # g = x vanishes at t=0; only the later genuine crossing may fire
    ev = EventSpec("axis", GenPoly.variable("x", ("x", "v")), direction=0, terminal=True)
    traj = integrate(OSC, [0.0, 1.0], (0.0, 2 * math.pi), events=[ev])
    assert traj.status == "event"
    assert traj.events[0].time == pytest.approx(math.pi, abs=1e-4)


# -- slow-manifold tracking ---------------------------------------------------


def _track_to(y_stop, eps):
    sysm = power_law_system(1, -1)
    cfg = IntegratorConfig(
        method="implicit-stiff", rtol=1e-10, atol=1e-13, time_scale="slow"
    )
    stop = EventSpec(
        "y-stop",
        GenPoly.variable("y", ("x", "y")) - Fraction(y_stop),
        direction=-1,
        terminal=True,
    )
    return integrate(sysm, [2.0, 0.5], (0.0, 0.5), cfg, events=[stop], eps=eps)


def test_trajectory_tracks_critical_graph():
    eps = 1e-4
    traj = _track_to(Fraction(35, 100), eps)
    assert traj.status == "event"
    x, y = traj.states[:, 0], traj.states[:, 1]
    rel_dev = np.abs(x - 1.0 / y) * y  # |x - x_graph| / x_graph
    assert rel_dev.max() < 10 * eps


def test_graph_distance_scales_linearly_in_eps():
    # first-order matching x ~ 1/y + eps/y^3 => distance proportional to eps
    eps_grid = [4e-4, 2e-4, 1e-4, 5e-5]
    dists = []
    for eps in eps_grid:
        traj = _track_to(Fraction(2, 5), eps)
        x, y = traj.final_state()
        dists.append(abs(x - 1.0 / y))
    slope = np.polyfit(np.log(eps_grid), np.log(dists), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


# -- decay certificate --------------------------------------------------------


def _k2_orbit(s, t_end=200.0, y0=(1.0, 1.0), sign=1):
    cf = kappa2_plane_field(s, -1)
    comps = cf.components if sign == 1 else tuple(-1 * c for c in cf.components)
    cfg = IntegratorConfig(rtol=1e-10, atol=1e-13)
    return integrate((cf.coords, list(comps)), list(y0), (0.0, t_end), cfg)


def test_lyapunov_certificate():
    traj = _k2_orbit(3)  # s = 2k+1 with k = 1
    out = lyapunov_along(traj, 1, -1)
    assert out["monotone_decreasing"]
    assert out["identity_residual"] < 1e-6


def test_lyapunov_time_reversed_control():
    traj = _k2_orbit(3, t_end=2.0, sign=-1)
    out = lyapunov_along(traj, 1, -1)
    assert not out["monotone_decreasing"]
    assert out["max_increase"] > 0


def test_lyapunov_on_the_invariant_axis():
    traj = _k2_orbit(3, t_end=1.0, y0=(0.0, 1.0))
    out = lyapunov_along(traj, 1, -1)
    assert out["constant"]
    assert out["identity_residual"] == 0.0


def test_lyapunov_rejects_bad_parameters():
    traj = _k2_orbit(3, t_end=1.0)
    with pytest.raises(ValueError):
        lyapunov_along(traj, 1, +1)
    with pytest.raises(ValueError):
        lyapunov_along(traj, -1, -1)


# -- plumbing ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="rk4")
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(time_scale="medium")
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)


def test_integrate_input_validation():
    with pytest.raises(ValueError):
        integrate(DECAY, [1.0, 2.0], (0.0, 1.0))  # dimension mismatch
    with pytest.raises(ValueError):
        integrate(DECAY, [1.0], (1.0, 0.0))  # backwards span
    with pytest.raises(ValueError):
        integrate(power_law_system(1, -1), [2.0, 0.5], (0.0, 1.0))  # missing eps
    with pytest.raises(TypeError):
        integrate(object(), [1.0], (0.0, 1.0))


def test_max_steps_marks_truncation():
    cfg = IntegratorConfig(max_steps=5)
    traj = integrate(DECAY, [1.0], (0.0, 100.0), cfg)
    assert traj.status == "max-steps"
    assert traj.truncated


def test_trajectory_times_strictly_increasing():
    with pytest.raises(StructureError):
        Trajectory(("y",), np.array([0.0, 0.0]), np.zeros((2, 1)), ())


def test_csv_and_gnuplot_views():
    traj = integrate(DECAY, [1.0], (0.0, 0.1))
    csv = traj.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "t,y"
    assert len(lines) == len(traj.times) + 1
    assert float(lines[1].split(",")[1]) == 1.0
    assert "np.float" not in csv
    block = traj.to_gnuplot_block()
    assert block.startswith("# t y\n")


def test_stats_report_backend_and_counts():
    traj = integrate(DECAY, [1.0], (0.0, 1.0))
    assert traj.stats["backend"] == BACKEND_NAME
    assert traj.stats["steps"] == len(traj.times) - 1
    assert traj.stats["rejected"] >= 0


def test_backends_take_identical_steps():
    try:
        compiled = get_backend("compiled")
    except (ImportError, RuntimeError):
        pytest.skip("compiled backend not built")
    pure = get_backend("pure")
    cf = CompiledField.from_polys(("x", "v"), list(OSC[1]))
    ev = CompiledEvents.from_specs(("x", "v"), [])
    args = (
        np.array([1.0, 0.0]), 0.0, 20.0, 1e-8, 1e-10, 0.0, 0.0, 100000, 0.0,
        ev.coeffs, ev.exps, ev.ptr, ev.directions, ev.terminal, EVENT_TOL,
    )
    out_p = pure.dopri5_run(cf.coeffs, cf.exps, cf.ptr, *args)
    out_c = compiled.dopri5_run(cf.coeffs, cf.exps, cf.ptr, *args)
    assert out_p[4] == out_c[4]  # accepted steps
    assert np.abs(np.asarray(out_p[1][-1]) - np.asarray(out_c[1][-1])).max() < 1e-12

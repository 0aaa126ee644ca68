"""Pure-Python stepping loops (reference backend).

Both integrators share one call shape so the compiled backend can swap in
transparently:

    run(coeffs, exps, ptr, [jac arrays,] y0, t0, t1, rtol, atol, h0, hmax,
        max_steps, fixed_step, ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term,
        event_tol)
    -> (times, states, events, status, n_accept, n_reject)

`events` holds (event_index, t, y) tuples; status is one of the STATUS_*
codes below.  Event times come from bisection on the linearly interpolated
step, driven until |g| <= event_tol.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "pure"

STATUS_DONE = 0
STATUS_EVENT = 1
STATUS_MAXSTEPS = 2
STATUS_FAILED = 3

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, 0] = 1 / 5
_DP_A[2, :2] = (3 / 40, 9 / 40)
_DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_B = _DP_A[6].copy()
_DP_BHAT = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B - _DP_BHAT

# 3-stage stiffly accurate SDIRK, gamma the mid root of
# g^3 - 3g^2 + (3/2)g - 1/6 giving L-stability; weights from the
# order-2/order-3 quadrature conditions with c = (gamma, (1+gamma)/2, 1)
def _sdirk_tableau():
    g = 0.4358665215084590
    for _ in range(4):
        g -= (g**3 - 3 * g**2 + 1.5 * g - 1 / 6) / (3 * g**2 - 6 * g + 1.5)
    c2 = (1 + g) / 2
    m = np.array([[g, c2], [g * g, c2 * c2]])
    b1, b2 = np.linalg.solve(m, [0.5 - g, 1 / 3 - g])
    assert abs(b1 + b2 + g - 1.0) < 1e-12
    bh2 = (0.5 - g) / (c2 - g)
    a = np.array([[g, 0, 0], [c2 - g, g, 0], [b1, b2, g]])
    b = np.array([b1, b2, g])
    bhat = np.array([1 - bh2, bh2, 0.0])
    return g, a, b, bhat


_SD_G, _SD_A, _SD_B, _SD_BHAT = _sdirk_tableau()
_SD_E = _SD_B - _SD_BHAT


def _rhs(coeffs, exps, ptr, y, n):
    with np.errstate(all="ignore"):
        vals = coeffs * np.prod(y**exps, axis=1)
    out = np.empty(n)
    for i in range(n):
        out[i] = vals[ptr[i]:ptr[i + 1]].sum()
    return out


def _event_value(ev_coeffs, ev_exps, ev_ptr, i, y):
    lo, hi = ev_ptr[i], ev_ptr[i + 1]
    with np.errstate(all="ignore"):
        return float((ev_coeffs[lo:hi] * np.prod(y ** ev_exps[lo:hi], axis=1)).sum())


def _crosses(direction, g0, g1):
    if direction >= 0 and g0 < 0.0 <= g1:
        return True
    if direction <= 0 and g0 > 0.0 >= g1:
        return True
    return False


def _locate_event(ev, i, t0, y0, t1, y1, g0, g1, event_tol):
    """Bisection for g(y(theta)) = 0 on the chord y0 -> y1."""
    ev_coeffs, ev_exps, ev_ptr = ev
    lo, hi = 0.0, 1.0
    glo = g0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        ym = y0 + mid * (y1 - y0)
        gm = _event_value(ev_coeffs, ev_exps, ev_ptr, i, ym)
        if abs(gm) <= event_tol:
            return t0 + mid * (t1 - t0), ym
        if (glo < 0.0) == (gm < 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return t0 + mid * (t1 - t0), y0 + mid * (y1 - y0)


def _initial_step(f0, y0, t0, t1, rtol, atol, order):
    sc = atol + rtol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / sc) ** 2)))
    h = 1e-6 * (t1 - t0) if d1 < 1e-12 else 0.01 * d0 / d1
    return min(h if h > 0 else 1e-6 * (t1 - t0), t1 - t0)


def _check_events(ev, g_prev, t_prev, y_prev, t, y, event_tol, events_out):
    """Returns (terminal_hit, t_ev, y_ev); updates g_prev in place."""
    ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term = ev
    hit = None
    for i in range(len(ev_dir)):
        g1 = _event_value(ev_coeffs, ev_exps, ev_ptr, i, y)
        g0 = g_prev[i]
        g_prev[i] = g1
        if math.isnan(g0) or math.isnan(g1):
            continue
        if g0 == 0.0 or not _crosses(ev_dir[i], g0, g1):
            continue
        t_ev, y_ev = _locate_event(
            (ev_coeffs, ev_exps, ev_ptr), i, t_prev, y_prev, t, y, g0, g1, event_tol
        )
        events_out.append((i, t_ev, y_ev.copy()))
        if ev_term[i] and (hit is None or t_ev < hit[0]):
            hit = (t_ev, y_ev)
    return hit


def dopri5_run(
    coeffs, exps, ptr, y0, t0, t1, rtol, atol, h0, hmax, max_steps, fixed_step,
    ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term, event_tol,
):
    n = len(ptr) - 1
    y = np.array(y0, dtype=np.float64)
    t = float(t0)
    times = [t]
    states = [y.copy()]
    events: list = []
    n_accept = n_reject = 0
    f0 = _rhs(coeffs, exps, ptr, y, n)
    g_prev = np.array(
        [_event_value(ev_coeffs, ev_exps, ev_ptr, i, y) for i in range(len(ev_dir))]
    )
    if fixed_step > 0:
        h = fixed_step
    elif h0 > 0:
        h = h0
    else:
        h = _initial_step(f0, y, t0, t1, rtol, atol, 5)
    hmax = hmax if hmax > 0 else t1 - t0
    k = np.empty((7, n))
    k[0] = f0
    while t < t1:
        if n_accept + n_reject >= max_steps:
            return times, states, events, STATUS_MAXSTEPS, n_accept, n_reject
        h = min(h, hmax, t1 - t)
        if h <= abs(t) * 1e-15 + 1e-300:
            return times, states, events, STATUS_FAILED, n_accept, n_reject
        for i in range(1, 7):
            yi = y + h * (_DP_A[i, :i] @ k[:i])
            k[i] = _rhs(coeffs, exps, ptr, yi, n)
        y_new = y + h * (_DP_B @ k)
        err_vec = h * (_DP_E @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))
        if not math.isfinite(err):
            err = 2.0
        if fixed_step > 0 or err <= 1.0:
            t_new = t + h
            hit = _check_events(
                (ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term),
                g_prev, t, y, t_new, y_new, event_tol, events,
            )
            if hit is not None:
                times.append(hit[0])
                states.append(hit[1].copy())
                return times, states, events, STATUS_EVENT, n_accept + 1, n_reject
            t, y = t_new, y_new
            times.append(t)
            states.append(y.copy())
            k[0] = k[6]  # FSAL
            n_accept += 1
            if fixed_step <= 0:
                h *= min(10.0, max(0.2, 0.9 * err ** -0.2 if err > 0 else 10.0))
        else:
            n_reject += 1
            h *= min(1.0, max(0.2, 0.9 * err ** -0.2))
    return times, states, events, STATUS_DONE, n_accept, n_reject


def _newton_stage(coeffs, exps, ptr, jc, je, jp, base, h, y_scale_tol, n):
    """Solve Y = base + h*gamma*f(Y); returns (Y, ok)."""
    hg = h * _SD_G
    yk = base.copy()
    prev_norm = math.inf
    for _ in range(12):
        f = _rhs(coeffs, exps, ptr, yk, n)
        g = yk - base - hg * f
        with np.errstate(all="ignore"):
            jvals = jc * np.prod(yk**je, axis=1)
        jac = np.empty((n, n))
        for i in range(n * n):
            jac[i // n, i % n] = jvals[jp[i]:jp[i + 1]].sum()
        a = np.eye(n) - hg * jac
        try:
            delta = np.linalg.solve(a, -g)
        except np.linalg.LinAlgError:
            return yk, False
        if not np.all(np.isfinite(delta)):
            return yk, False
        yk = yk + delta
        norm = math.sqrt(float(np.mean((delta / y_scale_tol) ** 2)))
        if norm < 0.03:
            return yk, True
        if norm > 2.0 * prev_norm and norm > 1.0:
            return yk, False
        prev_norm = norm
    return yk, False


def sdirk3_run(
    coeffs, exps, ptr, jc, je, jp, y0, t0, t1, rtol, atol, h0, hmax, max_steps,
    fixed_step, ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term, event_tol,
):
    n = len(ptr) - 1
    y = np.array(y0, dtype=np.float64)
    t = float(t0)
    times = [t]
    states = [y.copy()]
    events: list = []
    n_accept = n_reject = 0
    f0 = _rhs(coeffs, exps, ptr, y, n)
    g_prev = np.array(
        [_event_value(ev_coeffs, ev_exps, ev_ptr, i, y) for i in range(len(ev_dir))]
    )
    if fixed_step > 0:
        h = fixed_step
    elif h0 > 0:
        h = h0
    else:
        h = _initial_step(f0, y, t0, t1, rtol, atol, 3)
    hmax = hmax if hmax > 0 else t1 - t0
    k = np.empty((3, n))
    while t < t1:
        if n_accept + n_reject >= max_steps:
            return times, states, events, STATUS_MAXSTEPS, n_accept, n_reject
        h = min(h, hmax, t1 - t)
        if h <= abs(t) * 1e-15 + 1e-300:
            return times, states, events, STATUS_FAILED, n_accept, n_reject
        sc = atol + rtol * np.abs(y)
        ok = True
        for i in range(3):
            base = y + h * (_SD_A[i, :i] @ k[:i]) if i else y.copy()
            yi, ok = _newton_stage(coeffs, exps, ptr, jc, je, jp, base, h, sc, n)
            if not ok:
                break
            k[i] = _rhs(coeffs, exps, ptr, yi, n)
        if not ok:
            if fixed_step > 0:
                return times, states, events, STATUS_FAILED, n_accept, n_reject
            n_reject += 1
            h *= 0.25
            continue
        y_new = y + h * (_SD_B @ k)
        err_vec = h * (_SD_E @ k)
        scn = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scn) ** 2)))
        if not math.isfinite(err):
            err = 2.0
        if fixed_step > 0 or err <= 1.0:
            t_new = t + h
            hit = _check_events(
                (ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term),
                g_prev, t, y, t_new, y_new, event_tol, events,
            )
            if hit is not None:
                times.append(hit[0])
                states.append(hit[1].copy())
                return times, states, events, STATUS_EVENT, n_accept + 1, n_reject
            t, y = t_new, y_new
            times.append(t)
            states.append(y.copy())
            n_accept += 1
            if fixed_step <= 0:
                h *= min(5.0, max(0.2, 0.9 * err ** (-1 / 3) if err > 0 else 5.0))
        else:
            n_reject += 1
            h *= min(1.0, max(0.2, 0.9 * err ** (-1 / 3)))
    return times, states, events, STATUS_DONE, n_accept, n_reject

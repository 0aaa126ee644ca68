# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled stepping loops; mirrors _pure.py call-for-call.

The Butcher tableaus are copied from _pure at import time so both backends
integrate with bit-identical coefficients.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, isnan, pow, sqrt

from . import _pure

BACKEND_NAME = "compiled"

STATUS_DONE = 0
STATUS_EVENT = 1
STATUS_MAXSTEPS = 2
STATUS_FAILED = 3

DEF MAXN = 8

cdef double[7][7] DP_A
cdef double[7] DP_B
cdef double[7] DP_E
cdef double SD_G
cdef double[3][3] SD_A
cdef double[3] SD_B
cdef double[3] SD_E

def _init_tableaus():
    cdef int i, j
    for i in range(7):
        DP_B[i] = _pure._DP_B[i]
        DP_E[i] = _pure._DP_E[i]
        for j in range(7):
            DP_A[i][j] = _pure._DP_A[i, j]
    global SD_G
    SD_G = _pure._SD_G
    for i in range(3):
        SD_B[i] = _pure._SD_B[i]
        SD_E[i] = _pure._SD_E[i]
        for j in range(3):
            SD_A[i][j] = _pure._SD_A[i, j]

_init_tableaus()


cdef inline void _rhs_c(
    const double[::1] coeffs, const double[:, ::1] exps,
    const long long[::1] ptr, const double* y, int n, double* out
) noexcept nogil:
    cdef Py_ssize_t i, t, j
    cdef double acc, term, e
    for i in range(n):
        acc = 0.0
        for t in range(ptr[i], ptr[i + 1]):
            term = coeffs[t]
            for j in range(n):
                e = exps[t, j]
                if e == 1.0:
                    term *= y[j]
                elif e != 0.0:
                    term *= pow(y[j], e)
            acc += term
        out[i] = acc
    return


cdef inline double _event_value_c(
    const double[::1] ec, const double[:, ::1] ee, const long long[::1] ep,
    Py_ssize_t i, const double* y, int n
) noexcept nogil:
    cdef Py_ssize_t t, j
    cdef double acc = 0.0, term, e
    for t in range(ep[i], ep[i + 1]):
        term = ec[t]
        for j in range(n):
            e = ee[t, j]
            if e == 1.0:
                term *= y[j]
            elif e != 0.0:
                term *= pow(y[j], e)
        acc += term
    return acc


cdef inline bint _crosses_c(int direction, double g0, double g1) noexcept nogil:
    if direction >= 0 and g0 < 0.0 and g1 >= 0.0:
        return True
    if direction <= 0 and g0 > 0.0 and g1 <= 0.0:
        return True
    return False


cdef int _check_events_c(
    const double[::1] ec, const double[:, ::1] ee, const long long[::1] ep,
    const signed char[::1] ev_dir, const signed char[::1] ev_term,
    double* g_prev, double t_prev, const double* y_prev,
    double t, const double* y, double event_tol, int n,
    list events_out, double* t_hit, double* y_hit,
):
    """Updates g_prev; appends records; returns 1 if a terminal event hit."""
    cdef Py_ssize_t i, j, it
    cdef double g0, g1, lo, hi, glo, mid, gm
    cdef double ym[MAXN]
    cdef double best_t
    cdef int have_hit = 0
    cdef Py_ssize_t n_ev = ev_dir.shape[0]
    for i in range(n_ev):
        g1 = _event_value_c(ec, ee, ep, i, y, n)
        g0 = g_prev[i]
        g_prev[i] = g1
        if isnan(g0) or isnan(g1):
            continue
        if g0 == 0.0 or not _crosses_c(ev_dir[i], g0, g1):
            continue
        lo = 0.0
        hi = 1.0
        glo = g0
        mid = 0.5
        for it in range(120):
            mid = 0.5 * (lo + hi)
            for j in range(n):
                ym[j] = y_prev[j] + mid * (y[j] - y_prev[j])
            gm = _event_value_c(ec, ee, ep, i, ym, n)
            if fabs(gm) <= event_tol:
                break
            if (glo < 0.0) == (gm < 0.0):
                lo = mid
                glo = gm
            else:
                hi = mid
        else:
            mid = 0.5 * (lo + hi)
            for j in range(n):
                ym[j] = y_prev[j] + mid * (y[j] - y_prev[j])
        best_t = t_prev + mid * (t - t_prev)
        state = np.empty(n)
        for j in range(n):
            state[j] = ym[j]
        events_out.append((int(i), float(best_t), state))
        if ev_term[i] and (not have_hit or best_t < t_hit[0]):
            have_hit = 1
            t_hit[0] = best_t
            for j in range(n):
                y_hit[j] = ym[j]
    return have_hit


cdef double _initial_step_c(
    const double* f0, const double* y0, double t0, double t1,
    double rtol, double atol, int n
) noexcept nogil:
    cdef double d0 = 0.0, d1 = 0.0, sc, h
    cdef int i
    for i in range(n):
        sc = atol + rtol * fabs(y0[i])
        d0 += (y0[i] / sc) * (y0[i] / sc)
        d1 += (f0[i] / sc) * (f0[i] / sc)
    d0 = sqrt(d0 / n)
    d1 = sqrt(d1 / n)
    if d1 < 1e-12:
        h = 1e-6 * (t1 - t0)
    else:
        h = 0.01 * d0 / d1
    if h <= 0:
        h = 1e-6 * (t1 - t0)
    if h > t1 - t0:
        h = t1 - t0
    return h


def dopri5_run(
    const double[::1] coeffs, const double[:, ::1] exps,
    const long long[::1] ptr,
    cnp.ndarray y0_arr, double t0, double t1, double rtol, double atol,
    double h0, double hmax, long max_steps, double fixed_step,
    const double[::1] ev_coeffs, const double[:, ::1] ev_exps,
    const long long[::1] ev_ptr, const signed char[::1] ev_dir,
    const signed char[::1] ev_term, double event_tol,
):
    cdef int n = ptr.shape[0] - 1
    if n > MAXN:
        raise ValueError(f"compiled kernels support at most {MAXN} dimensions")
    cdef double y[MAXN]
    cdef double y_new[MAXN]
    cdef double yi[MAXN]
    cdef double k[7][MAXN]
    cdef double g_prev[32]
    cdef double t_hit
    cdef double y_hit[MAXN]
    cdef Py_ssize_t i, j, st
    cdef double t = t0, h, err, sc, ev, acc, fac
    cdef long n_accept = 0, n_reject = 0
    cdef Py_ssize_t n_ev = ev_dir.shape[0]
    if n_ev > 32:
        raise ValueError("at most 32 events supported")

    y0 = np.ascontiguousarray(y0_arr, dtype=np.float64)
    for j in range(n):
        y[j] = y0[j]
    times = [t0]
    states = [np.array(y0)]
    events = []
    _rhs_c(coeffs, exps, ptr, y, n, k[0])
    for i in range(n_ev):
        g_prev[i] = _event_value_c(ev_coeffs, ev_exps, ev_ptr, i, y, n)
    if fixed_step > 0:
        h = fixed_step
    elif h0 > 0:
        h = h0
    else:
        h = _initial_step_c(k[0], y, t0, t1, rtol, atol, n)
    if hmax <= 0:
        hmax = t1 - t0

    while t < t1:
        if n_accept + n_reject >= max_steps:
            return times, states, events, STATUS_MAXSTEPS, n_accept, n_reject
        if h > hmax:
            h = hmax
        if h > t1 - t:
            h = t1 - t
        if h <= fabs(t) * 1e-15 + 1e-300:
            return times, states, events, STATUS_FAILED, n_accept, n_reject
        for st in range(1, 7):
            for j in range(n):
                acc = 0.0
                for i in range(st):
                    acc += DP_A[st][i] * k[i][j]
                yi[j] = y[j] + h * acc
            _rhs_c(coeffs, exps, ptr, yi, n, k[st])
        err = 0.0
        for j in range(n):
            acc = 0.0
            ev = 0.0
            for i in range(7):
                acc += DP_B[i] * k[i][j]
                ev += DP_E[i] * k[i][j]
            y_new[j] = y[j] + h * acc
            sc = atol + rtol * max(fabs(y[j]), fabs(y_new[j]))
            err += (h * ev / sc) * (h * ev / sc)
        err = sqrt(err / n)
        if not isfinite(err):
            err = 2.0
        if fixed_step > 0 or err <= 1.0:
            if _check_events_c(
                ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term,
                g_prev, t, y, t + h, y_new, event_tol, n,
                events, &t_hit, y_hit,
            ):
                state = np.empty(n)
                for j in range(n):
                    state[j] = y_hit[j]
                times.append(float(t_hit))
                states.append(state)
                return times, states, events, STATUS_EVENT, n_accept + 1, n_reject
            t = t + h
            for j in range(n):
                y[j] = y_new[j]
                k[0][j] = k[6][j]  # FSAL
            state = np.empty(n)
            for j in range(n):
                state[j] = y[j]
            times.append(float(t))
            states.append(state)
            n_accept += 1
            if fixed_step <= 0:
                if err > 0:
                    fac = 0.9 * pow(err, -0.2)
                else:
                    fac = 10.0
                h *= min(10.0, max(0.2, fac))
        else:
            n_reject += 1
            h *= min(1.0, max(0.2, 0.9 * pow(err, -0.2)))
    return times, states, events, STATUS_DONE, n_accept, n_reject


cdef inline void _jac_c(
    const double[::1] jc, const double[:, ::1] je, const long long[::1] jp,
    const double* y, int n, double* jac
) noexcept nogil:
    cdef Py_ssize_t i, t, j
    cdef double acc, term, e
    for i in range(n * n):
        acc = 0.0
        for t in range(jp[i], jp[i + 1]):
            term = jc[t]
            for j in range(n):
                e = je[t, j]
                if e == 1.0:
                    term *= y[j]
                elif e != 0.0:
                    term *= pow(y[j], e)
            acc += term
        jac[i] = acc
    return


cdef int _gauss_solve(double* A, double* b, int n) noexcept nogil:
    """In-place row-major solve with partial pivoting; 0 ok, 1 singular."""
    cdef int i, j, p, piv
    cdef double best, tmp, m
    for i in range(n):
        piv = i
        best = fabs(A[i * n + i])
        for p in range(i + 1, n):
            if fabs(A[p * n + i]) > best:
                best = fabs(A[p * n + i])
                piv = p
        if best == 0.0 or not isfinite(best):
            return 1
        if piv != i:
            for j in range(n):
                tmp = A[i * n + j]
                A[i * n + j] = A[piv * n + j]
                A[piv * n + j] = tmp
            tmp = b[i]
            b[i] = b[piv]
            b[piv] = tmp
        for p in range(i + 1, n):
            m = A[p * n + i] / A[i * n + i]
            if m != 0.0:
                for j in range(i, n):
                    A[p * n + j] -= m * A[i * n + j]
                b[p] -= m * b[i]
    for i in range(n - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, n):
            tmp -= A[i * n + j] * b[j]
        b[i] = tmp / A[i * n + i]
    return 0


cdef int _newton_stage_c(
    const double[::1] coeffs, const double[:, ::1] exps,
    const long long[::1] ptr,
    const double[::1] jc, const double[:, ::1] je, const long long[::1] jp,
    const double* base, double h, const double* sc, int n, double* yk
) noexcept nogil:
    cdef double hg = h * SD_G
    cdef double f[MAXN]
    cdef double g[MAXN]
    cdef double jac[MAXN * MAXN]
    cdef double a[MAXN * MAXN]
    cdef double prev_norm = 1e300
    cdef double norm, d
    cdef int it, i, j
    for i in range(n):
        yk[i] = base[i]
    for it in range(12):
        _rhs_c(coeffs, exps, ptr, yk, n, f)
        for i in range(n):
            g[i] = -(yk[i] - base[i] - hg * f[i])
        _jac_c(jc, je, jp, yk, n, jac)
        for i in range(n):
            for j in range(n):
                a[i * n + j] = (1.0 if i == j else 0.0) - hg * jac[i * n + j]
        if _gauss_solve(a, g, n):
            return 0
        norm = 0.0
        for i in range(n):
            d = g[i]
            if not isfinite(d):
                return 0
            yk[i] += d
            norm += (d / sc[i]) * (d / sc[i])
        norm = sqrt(norm / n)
        if norm < 0.03:
            return 1
        if norm > 2.0 * prev_norm and norm > 1.0:
            return 0
        prev_norm = norm
    return 0


def sdirk3_run(
    const double[::1] coeffs, const double[:, ::1] exps,
    const long long[::1] ptr,
    const double[::1] jc, const double[:, ::1] je, const long long[::1] jp,
    cnp.ndarray y0_arr, double t0, double t1, double rtol, double atol,
    double h0, double hmax, long max_steps, double fixed_step,
    const double[::1] ev_coeffs, const double[:, ::1] ev_exps,
    const long long[::1] ev_ptr, const signed char[::1] ev_dir,
    const signed char[::1] ev_term, double event_tol,
):
    cdef int n = ptr.shape[0] - 1
    if n > MAXN:
        raise ValueError(f"compiled kernels support at most {MAXN} dimensions")
    cdef double y[MAXN]
    cdef double y_new[MAXN]
    cdef double yi[MAXN]
    cdef double base[MAXN]
    cdef double sc[MAXN]
    cdef double f0[MAXN]
    cdef double k[3][MAXN]
    cdef double g_prev[32]
    cdef double t_hit
    cdef double y_hit[MAXN]
    cdef Py_ssize_t i, j, st
    cdef double t = t0, h, err, scn, ev, acc, fac
    cdef long n_accept = 0, n_reject = 0
    cdef int ok
    cdef Py_ssize_t n_ev = ev_dir.shape[0]
    if n_ev > 32:
        raise ValueError("at most 32 events supported")

    y0 = np.ascontiguousarray(y0_arr, dtype=np.float64)
    for j in range(n):
        y[j] = y0[j]
    times = [t0]
    states = [np.array(y0)]
    events = []
    _rhs_c(coeffs, exps, ptr, y, n, f0)
    for i in range(n_ev):
        g_prev[i] = _event_value_c(ev_coeffs, ev_exps, ev_ptr, i, y, n)
    if fixed_step > 0:
        h = fixed_step
    elif h0 > 0:
        h = h0
    else:
        h = _initial_step_c(f0, y, t0, t1, rtol, atol, n)
    if hmax <= 0:
        hmax = t1 - t0

    while t < t1:
        if n_accept + n_reject >= max_steps:
            return times, states, events, STATUS_MAXSTEPS, n_accept, n_reject
        if h > hmax:
            h = hmax
        if h > t1 - t:
            h = t1 - t
        if h <= fabs(t) * 1e-15 + 1e-300:
            return times, states, events, STATUS_FAILED, n_accept, n_reject
        for j in range(n):
            sc[j] = atol + rtol * fabs(y[j])
        ok = 1
        for st in range(3):
            for j in range(n):
                acc = 0.0
                for i in range(st):
                    acc += SD_A[st][i] * k[i][j]
                base[j] = y[j] + h * acc
            ok = _newton_stage_c(
                coeffs, exps, ptr, jc, je, jp, base, h, sc, n, yi
            )
            if not ok:
                break
            _rhs_c(coeffs, exps, ptr, yi, n, k[st])
        if not ok:
            if fixed_step > 0:
                return times, states, events, STATUS_FAILED, n_accept, n_reject
            n_reject += 1
            h *= 0.25
            continue
        err = 0.0
        for j in range(n):
            acc = 0.0
            ev = 0.0
            for i in range(3):
                acc += SD_B[i] * k[i][j]
                ev += SD_E[i] * k[i][j]
            y_new[j] = y[j] + h * acc
            scn = atol + rtol * max(fabs(y[j]), fabs(y_new[j]))
            err += (h * ev / scn) * (h * ev / scn)
        err = sqrt(err / n)
        if not isfinite(err):
            err = 2.0
        if fixed_step > 0 or err <= 1.0:
            if _check_events_c(
                ev_coeffs, ev_exps, ev_ptr, ev_dir, ev_term,
                g_prev, t, y, t + h, y_new, event_tol, n,
                events, &t_hit, y_hit,
            ):
                state = np.empty(n)
                for j in range(n):
                    state[j] = y_hit[j]
                times.append(float(t_hit))
                states.append(state)
                return times, states, events, STATUS_EVENT, n_accept + 1, n_reject
            t = t + h
            for j in range(n):
                y[j] = y_new[j]
            state = np.empty(n)
            for j in range(n):
                state[j] = y[j]
            times.append(float(t))
            states.append(state)
            n_accept += 1
            if fixed_step <= 0:
                if err > 0:
                    fac = 0.9 * pow(err, -1.0 / 3.0)
                else:
                    fac = 5.0
                h *= min(5.0, max(0.2, fac))
        else:
            n_reject += 1
            h *= min(1.0, max(0.2, 0.9 * pow(err, -1.0 / 3.0)))
    return times, states, events, STATUS_DONE, n_accept, n_reject

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: likelihood sweep, compensator sweep, thinning loop.

Signature-for-signature twin of `_kernels_py`; see that module for the
contract documentation.  The simulation loop keeps the exact floating
point operation order of the pure version so both backends produce
bit-identical event histories from the same uniform stream.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, log1p, pow

from ..errors import NumericalError

cnp.import_array()


def log_likelihood_core(
    double[::1] times,
    cnp.int64_t[::1] streams,
    double[::1] g,
    double[::1] dg,
    double t0,
    double t1,
    double[::1] mu,
    double[:, ::1] nu,
    double[::1] dec,
    bint want_grad,
):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t m = mu.shape[0]
    cdef double ll = 0.0
    cdef double t_cur = t0
    cdef double t, dt, f, lam, inv, acc, srow, span, r, E, one_minus, ge
    cdef Py_ssize_t k = 0, k2, e, i, j

    S_arr = np.zeros((m, m))
    cdef double[:, ::1] S = S_arr
    cdef double[:, ::1] U = S  # placeholders, rebound below when needed
    cdef double[:, ::1] D = S
    cdef double[::1] gmu = mu
    cdef double[:, ::1] gnu = nu
    cdef double[::1] gdec = mu
    cdef double[::1] gex = mu
    gmu_arr = gnu_arr = gdec_arr = gex_arr = None
    if want_grad:
        U_arr = np.zeros((m, m))
        D_arr = np.zeros((m, m))
        gmu_arr = np.zeros(m)
        gnu_arr = np.zeros((m, m))
        gdec_arr = np.zeros(m)
        gex_arr = np.zeros(m)
        U = U_arr
        D = D_arr
        gmu = gmu_arr
        gnu = gnu_arr
        gdec = gdec_arr
        gex = gex_arr

    while k < n:
        t = times[k]
        dt = t - t_cur
        if dt < 0.0:
            dt = 0.0
        for i in range(m):
            f = exp(-dec[i] * dt)
            if want_grad:
                for j in range(m):
                    U[i, j] = f * (U[i, j] + dt * S[i, j])
                    D[i, j] = f * D[i, j]
                    S[i, j] = f * S[i, j]
            else:
                for j in range(m):
                    S[i, j] = f * S[i, j]
        t_cur = t
        k2 = k
        while k2 < n and times[k2] == t:
            k2 += 1
        for e in range(k, k2):
            i = streams[e]
            srow = 0.0
            for j in range(m):
                srow += nu[i, j] * S[i, j]
            lam = mu[i] + dec[i] * srow
            if not lam > 0.0:
                return -float("inf"), e, gmu_arr, gnu_arr, gdec_arr, gex_arr
            ll += log(lam)
            if want_grad:
                inv = 1.0 / lam
                gmu[i] += inv
                acc = 0.0
                for j in range(m):
                    gnu[i, j] += dec[i] * inv * S[i, j]
                    acc += nu[i, j] * (S[i, j] - dec[i] * U[i, j])
                    gex[j] += dec[i] * inv * nu[i, j] * D[i, j]
                gdec[i] += inv * acc
        for e in range(k, k2):
            j = streams[e]
            ge = g[e]
            for i in range(m):
                S[i, j] += ge
            if want_grad:
                ge = dg[e]
                for i in range(m):
                    D[i, j] += ge
        k = k2

    span = t1 - t0
    for i in range(m):
        ll -= mu[i] * span
        if want_grad:
            gmu[i] -= span
    for e in range(n):
        j = streams[e]
        r = t1 - times[e]
        if r < 0.0:
            r = 0.0
        for i in range(m):
            E = exp(-dec[i] * r)
            one_minus = 1.0 - E
            ll -= nu[i, j] * g[e] * one_minus
            if want_grad:
                gnu[i, j] -= g[e] * one_minus
                gdec[i] -= nu[i, j] * g[e] * r * E
                gex[j] -= nu[i, j] * dg[e] * one_minus
    return ll, -1, gmu_arr, gnu_arr, gdec_arr, gex_arr


def compensator_matrix(
    double[::1] times,
    cnp.int64_t[::1] streams,
    double[::1] g,
    double t0,
    double[::1] mu,
    double[:, ::1] nu,
    double[::1] dec,
    double[::1] query,
):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t m = mu.shape[0]
    cdef Py_ssize_t nq = query.shape[0]
    cdef Py_ssize_t k = 0, qi, i, j
    cdef double t_cur = t0
    cdef double q, dt, f, acc

    out_arr = np.empty((nq, m))
    cdef double[:, ::1] out = out_arr
    S_arr = np.zeros((m, m))
    cdef double[:, ::1] S = S_arr
    total_arr = np.zeros(m)
    cdef double[::1] total = total_arr

    for qi in range(nq):
        q = query[qi]
        while k < n and times[k] < q:
            dt = times[k] - t_cur
            if dt < 0.0:
                dt = 0.0
            for i in range(m):
                f = exp(-dec[i] * dt)
                for j in range(m):
                    S[i, j] = f * S[i, j]
            j = streams[k]
            for i in range(m):
                S[i, j] += g[k]
            total[j] += g[k]
            t_cur = times[k]
            k += 1
        dt = q - t_cur
        if dt < 0.0:
            dt = 0.0
        for i in range(m):
            f = exp(-dec[i] * dt)
            for j in range(m):
                S[i, j] = f * S[i, j]
        t_cur = q
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += nu[i, j] * (total[j] - S[i, j])
            out[qi, i] = mu[i] * (q - t0) + acc
    return out_arr


cdef class _UniformBuffer:
    """Sequential uniforms drawn block-wise from a Python callable."""

    cdef double[::1] buf
    cdef Py_ssize_t pos
    cdef object refill

    def __init__(self, refill):
        self.refill = refill
        self.buf = np.empty(0)
        self.pos = 0

    cdef double next(self):
        cdef double u
        if self.pos == self.buf.shape[0]:
            self.buf = self.refill()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


def simulate_core(
    double[::1] mu,
    double[:, ::1] nu,
    double[::1] dec,
    double[::1] exponent,
    double[::1] mark_rate,
    double[::1] scale,
    double t_start,
    double t_end,
    double[:, ::1] s0,
    Py_ssize_t max_events,
    object refill,
    Py_ssize_t stop_stream=-1,
    bint stop_any=False,
):
    cdef Py_ssize_t m = mu.shape[0]
    cdef Py_ssize_t i, j, s
    cdef double lam_bar = 0.0
    cdef double srow, li, dt, t_cand, lam_tot, f, target, acc, v, gval
    cdef double t_cur = t_start
    cdef double t_stop = t_end

    S_arr = np.array(s0, dtype=float, copy=True, order="C")
    cdef double[:, ::1] S = S_arr
    lam_arr = np.zeros(m)
    cdef double[::1] lam = lam_arr
    cdef _UniformBuffer ub = _UniformBuffer(refill)

    for i in range(m):
        srow = 0.0
        for j in range(m):
            srow += nu[i, j] * S[i, j]
        lam[i] = mu[i] + dec[i] * srow
        lam_bar += lam[i]

    out_t = []
    out_s = []
    out_v = []
    truncated = False

    while lam_bar > 0.0:
        dt = -log1p(-ub.next()) / lam_bar
        t_cand = t_cur + dt
        if t_cand > t_stop:
            break
        lam_tot = 0.0
        for i in range(m):
            f = exp(-dec[i] * dt)
            srow = 0.0
            for j in range(m):
                S[i, j] = S[i, j] * f
                srow += nu[i, j] * S[i, j]
            li = mu[i] + dec[i] * srow
            lam[i] = li
            lam_tot += li
        if lam_tot > lam_bar + 1e-9 * lam_bar + 1e-12:
            raise NumericalError(
                f"thinning bound violated at t={t_cand}: {lam_tot} > {lam_bar}"
            )
        t_cur = t_cand
        target = ub.next() * lam_bar
        if target < lam_tot:
            s = m - 1
            acc = 0.0
            for i in range(m):
                acc += lam[i]
                if target < acc:
                    s = i
                    break
            v = -log1p(-ub.next()) / mark_rate[s]
            while v <= 0.0:  # guard the measure-zero u == 0 draw
                v = -log1p(-ub.next()) / mark_rate[s]
            gval = scale[s] * pow(v, exponent[s])
            out_t.append(t_cand)
            out_s.append(s)
            out_v.append(v)
            for i in range(m):
                S[i, s] += gval
            lam_bar = lam_tot
            for i in range(m):
                lam_bar += dec[i] * nu[i, s] * gval
            if stop_any or s == stop_stream:
                break
            if len(out_t) >= max_events:
                truncated = True
                break
        else:
            lam_bar = lam_tot

    return (
        np.array(out_t),
        np.array(out_s, dtype=np.int64),
        np.array(out_v),
        truncated,
    )

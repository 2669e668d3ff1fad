"""Pure NumPy/Python kernels, the fallback twin of the Cython extension.

All three entry points match `_kernels.pyx` signature-for-signature.  The
simulation loop deliberately uses scalar `math` calls in the same
operation order as the compiled code so that both backends consume the
same uniform stream and produce bit-identical event histories.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NumericalError


def log_likelihood_core(times, streams, g, dg, t0, t1, mu, nu, dec, want_grad):
    """One likelihood sweep over an event history.

    `g` and `dg` are the per-event impact values and their derivatives
    with respect to the source stream's impact exponent, both precomputed.
    Returns (loglik, bad_event, grad_mu, grad_nu, grad_dec, grad_exponent);
    `bad_event` is the index of the first event with non-positive owned
    intensity (-1 if none), in which case loglik is -inf.  Gradient arrays
    are None when `want_grad` is false.
    """
    n = times.size
    m = mu.size
    ll = 0.0
    S = np.zeros((m, m))
    if want_grad:
        U = np.zeros((m, m))
        D = np.zeros((m, m))
        gmu = np.zeros(m)
        gnu = np.zeros((m, m))
        gdec = np.zeros(m)
        gex = np.zeros(m)
    else:
        U = D = gmu = gnu = gdec = gex = None

    t_cur = t0
    k = 0
    while k < n:
        t = times[k]
        dt = t - t_cur
        if dt < 0.0:
            dt = 0.0
        f = np.exp(-dec * dt)[:, None]
        if want_grad:
            U += dt * S
            U *= f
            D *= f
        S *= f
        t_cur = t
        k2 = k
        while k2 < n and times[k2] == t:
            k2 += 1
        # Simultaneous events see the state before any of their bumps:
        # an event never excites itself or its exact contemporaries.
        for e in range(k, k2):
            i = int(streams[e])
            lam = mu[i] + dec[i] * float(nu[i] @ S[i])
            if not lam > 0.0:
                return -np.inf, e, gmu, gnu, gdec, gex
            ll += math.log(lam)
            if want_grad:
                inv = 1.0 / lam
                gmu[i] += inv
                gnu[i] += (dec[i] * inv) * S[i]
                gdec[i] += inv * float(nu[i] @ (S[i] - dec[i] * U[i]))
                gex += (dec[i] * inv) * (nu[i] * D[i])
        for e in range(k, k2):
            j = int(streams[e])
            S[:, j] += g[e]
            if want_grad:
                D[:, j] += dg[e]
        k = k2

    span = t1 - t0
    ll -= float(mu.sum()) * span
    if want_grad:
        gmu -= span
    if n:
        r = np.maximum(t1 - times, 0.0)
        for i in range(m):
            E = np.exp(-dec[i] * r)
            one_minus = 1.0 - E
            tail = np.bincount(streams, weights=g * one_minus, minlength=m)
            ll -= float(nu[i] @ tail)
            if want_grad:
                gnu[i] -= tail
                gdec[i] -= float(
                    nu[i] @ np.bincount(streams, weights=g * r * E, minlength=m)
                )
                gex -= nu[i] * np.bincount(streams, weights=dg * one_minus, minlength=m)
    return ll, -1, gmu, gnu, gdec, gex


def compensator_matrix(times, streams, g, t0, mu, nu, dec, query):
    """Integrated intensities of every stream at each query time.

    Query times must be non-decreasing and >= t0.  Events at exactly a
    query time contribute nothing there (their term starts at zero), so
    strict/non-strict treatment of ties is immaterial.
    """
    n = times.size
    m = mu.size
    nq = query.size
    out = np.empty((nq, m))
    S = np.zeros((m, m))
    total = np.zeros(m)  # plain per-source impact sums, no decay
    t_cur = t0
    k = 0
    for qi in range(nq):
        q = query[qi]
        while k < n and times[k] < q:
            dt = times[k] - t_cur
            if dt < 0.0:
                dt = 0.0
            S *= np.exp(-dec * dt)[:, None]
            j = int(streams[k])
            S[:, j] += g[k]
            total[j] += g[k]
            t_cur = times[k]
            k += 1
        dt = q - t_cur
        if dt < 0.0:
            dt = 0.0
        S *= np.exp(-dec * dt)[:, None]
        t_cur = q
        out[qi] = mu * (q - t0) + (nu * (total[None, :] - S)).sum(axis=1)
    return out


def simulate_core(
    mu,
    nu,
    dec,
    exponent,
    mark_rate,
    scale,
    t_start,
    t_end,
    s0,
    max_events,
    refill,
    stop_stream=-1,
    stop_any=False,
):
    """Thinning loop: simulate events on [t_start, t_end].

    `s0` is the excitation state matrix at t_start (zeros for a fresh
    start), `refill` a callable yielding fresh blocks of uniforms in
    [0, 1).  Stops early after the first event of `stop_stream` (or of
    any stream when `stop_any`), or when `max_events` is reached, which
    sets the truncation flag.  Returns (times, streams, volumes,
    truncated).
    """
    m = mu.size
    mu_l = [float(x) for x in mu]
    dec_l = [float(x) for x in dec]
    ex_l = [float(x) for x in exponent]
    beta_l = [float(x) for x in mark_rate]
    c_l = [float(x) for x in scale]
    nu_l = [[float(nu[i, j]) for j in range(m)] for i in range(m)]
    S = [[float(s0[i, j]) for j in range(m)] for i in range(m)]
    lam = [0.0] * m

    lam_bar = 0.0
    for i in range(m):
        srow = 0.0
        row = S[i]
        nrow = nu_l[i]
        for j in range(m):
            srow += nrow[j] * row[j]
        lam[i] = mu_l[i] + dec_l[i] * srow
        lam_bar += lam[i]

    buf = np.empty(0)
    pos = 0

    def next_u():
        nonlocal buf, pos
        if pos == buf.shape[0]:
            buf = refill()
            pos = 0
        u = float(buf[pos])
        pos += 1
        return u

    out_t: list[float] = []
    out_s: list[int] = []
    out_v: list[float] = []
    truncated = False
    t_cur = float(t_start)
    t_stop = float(t_end)

    while lam_bar > 0.0:
        u1 = next_u()
        dt = -math.log1p(-u1) / lam_bar
        t_cand = t_cur + dt
        if t_cand > t_stop:
            break
        lam_tot = 0.0
        for i in range(m):
            f = math.exp(-dec_l[i] * dt)
            row = S[i]
            nrow = nu_l[i]
            srow = 0.0
            for j in range(m):
                row[j] *= f
                srow += nrow[j] * row[j]
            li = mu_l[i] + dec_l[i] * srow
            lam[i] = li
            lam_tot += li
        if lam_tot > lam_bar + 1e-9 * lam_bar + 1e-12:
            raise NumericalError(
                f"thinning bound violated at t={t_cand}: {lam_tot} > {lam_bar}"
            )
        t_cur = t_cand
        target = next_u() * lam_bar
        if target < lam_tot:
            s = m - 1
            acc = 0.0
            for i in range(m):
                acc += lam[i]
                if target < acc:
                    s = i
                    break
            v = -math.log1p(-next_u()) / beta_l[s]
            while v <= 0.0:  # guard the measure-zero u == 0 draw
                v = -math.log1p(-next_u()) / beta_l[s]
            gval = c_l[s] * v ** ex_l[s]
            out_t.append(t_cand)
            out_s.append(s)
            out_v.append(v)
            for i in range(m):
                S[i][s] += gval
            lam_bar = lam_tot
            for i in range(m):
                lam_bar += dec_l[i] * nu_l[i][s] * gval
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

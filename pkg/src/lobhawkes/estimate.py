"""Maximum-likelihood calibration under the structural constraints.

The ground intensity log-likelihood is

    sum_k log lambda_{s_k}(t_k) - sum_i Lambda_i(T+)

and is maximized directly in the reduced parameter space: one baseline
per asset and direction (ask/bid tied), one branching weight per allowed
pattern cell, one decay per target stream, one impact exponent per
source stream (optionally tied across streams).  Every optimizer iterate
therefore satisfies the constraints exactly; nothing is projected.

Volume mark rates are fit first from the marks alone (closed form
exponential MLE) and held fixed, so the mark density contributes a
constant that is reported separately from the ground term.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import digamma, gammaln

from ._backend import kernels
from .errors import InputError, NumericalError
from .events import EventStream
from .intensity import spectral_radius
from .params import ParameterSet, stream_label
from .pattern import STREAMS_PER_ASSET, InteractionPattern, build_pattern

__all__ = [
    "FitOptions",
    "FitReport",
    "MarkFit",
    "WindowedFit",
    "fit",
    "fit_marks",
    "fit_windows",
    "log_likelihood",
    "mark_log_likelihood",
]


def _impact_and_deriv(streams, volumes, exponent, mark_rate):
    """Per-event impact g and its derivative in the source exponent."""
    ex = exponent[streams]
    beta = mark_rate[streams]
    logv = np.log(volumes)
    g = np.exp(ex * (np.log(beta) + logv) - gammaln(ex + 1.0))
    dg = g * (np.log(beta) + logv - digamma(ex + 1.0))
    return g, dg


def _core_arrays(data: EventStream):
    return (
        np.ascontiguousarray(data.times),
        np.ascontiguousarray(data.streams),
    )


def log_likelihood(params: ParameterSet, data: EventStream) -> float:
    """Ground (timing) log-likelihood of the data under the parameters.

    The mark density term is constant in these parameters and reported
    by `mark_log_likelihood` instead; the full marked log-density is the
    sum of the two.  Returns -inf, with a diagnostic warning, if any
    event sits at zero intensity of its own stream.
    """
    if len(data) and int(data.streams.max()) >= params.n_streams:
        raise InputError("data references streams outside the parameter set")
    times, streams = _core_arrays(data)
    g = params.impact_of(streams, data.volumes)
    ll, bad, *_ = kernels.log_likelihood_core(
        times,
        streams,
        g,
        np.zeros_like(g),
        data.t_start,
        data.t_end,
        np.ascontiguousarray(params.mu),
        np.ascontiguousarray(params.branching),
        np.ascontiguousarray(params.decay),
        False,
    )
    if bad >= 0:
        warnings.warn(
            f"zero intensity at event {bad} "
            f"(t={data.times[bad]:.6g}, stream {stream_label(int(data.streams[bad]))}); "
            "log-likelihood is -inf"
        )
    return float(ll)


def mark_log_likelihood(params: ParameterSet, data: EventStream) -> float:
    """Log-density of the volume marks under the exponential mark law."""
    if len(data) == 0:
        return 0.0
    beta = params.mark_rate[data.streams]
    return float(np.sum(np.log(beta) - beta * data.volumes))


# ---------------------------------------------------------------------------
# mark fitting


@dataclass
class MarkFit:
    """Volume-mark distribution fit for one stream.

    Both candidate families are scored by their Kolmogorov-Smirnov
    distance; `rate` is the exponential MLE 1 / mean.  A degenerate
    (constant) sample gets an infinite Gaussian distance.  `tail_x` /
    `tail_p` tabulate the empirical survival P(V > x) on a log-spaced
    grid for tail inspection.
    """

    stream: int
    n_obs: int
    rate: float
    gauss_mean: float
    gauss_std: float
    ks_exponential: float
    ks_gaussian: float
    preferred: str
    low_confidence: bool
    tail_x: np.ndarray = field(repr=False)
    tail_p: np.ndarray = field(repr=False)


def _ks_distance(sample: np.ndarray, cdf) -> float:
    x = np.sort(sample)
    n = x.size
    f = cdf(x)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - f), np.max(f - lower)))


def fit_marks(volumes, stream: int = 0, min_obs: int = 30) -> MarkFit:
    """Fit the volume-mark law of one stream from its observed marks."""
    v = np.asarray(volumes, dtype=float)
    if v.size == 0:
        raise InputError("cannot fit marks to an empty sample")
    if not np.all(np.isfinite(v) & (v > 0)):
        raise InputError("volumes must be finite and > 0")
    mean = float(v.mean())
    rate = 1.0 / mean
    std = float(v.std())
    ks_exp = _ks_distance(v, lambda x: -np.expm1(-rate * x))
    if std > 0:
        from scipy.stats import norm

        ks_gauss = _ks_distance(v, lambda x: norm.cdf(x, loc=mean, scale=std))
    else:
        ks_gauss = float("inf")
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        tail_x = np.geomspace(lo, hi, 25)
    else:
        tail_x = np.array([lo])
    tail_p = np.array([np.mean(v > x) for x in tail_x])
    return MarkFit(
        stream=stream,
        n_obs=int(v.size),
        rate=rate,
        gauss_mean=mean,
        gauss_std=std,
        ks_exponential=ks_exp,
        ks_gaussian=ks_gauss,
        preferred="exponential" if ks_exp <= ks_gauss else "gaussian",
        low_confidence=v.size < min_obs,
        tail_x=tail_x,
        tail_p=tail_p,
    )


# ---------------------------------------------------------------------------
# reduced parameter space


@dataclass
class FitOptions:
    """Optimizer knobs; the defaults match the documented contract."""

    tie_impact_exponent: bool = False
    max_iterations: int = 500
    rel_tol: float = 1e-8
    mu_floor: float = 1e-10
    decay_bounds: tuple[float, float] = (1e-8, 1e6)
    exponent_bounds: tuple[float, float] = (0.0, 10.0)
    nu_init: float = 0.3
    exponent_init: float = 1.0


class _ReducedSpace:
    """Mapping between the free vector and full parameter arrays."""

    def __init__(self, pattern: InteractionPattern, tie_exponent: bool):
        self.pattern = pattern
        self.tie = tie_exponent
        self.d = pattern.n_assets
        self.m = pattern.n_streams
        self.cells = pattern.cells()
        self.n_mu = 2 * self.d
        self.n_nu = len(self.cells)
        self.n_dec = self.m
        self.n_ex = 1 if tie_exponent else self.m
        self.size = self.n_mu + self.n_nu + self.n_dec + self.n_ex

    def names(self) -> list[str]:
        out = []
        for a in range(self.d):
            out += [f"mu_up[{a}]", f"mu_down[{a}]"]
        out += [f"nu[{stream_label(i)}<-{stream_label(j)}]" for i, j in self.cells]
        out += [f"decay[{stream_label(i)}]" for i in range(self.m)]
        if self.tie:
            out.append("impact_exponent")
        else:
            out += [f"impact_exponent[{stream_label(j)}]" for j in range(self.m)]
        return out

    def unpack(self, theta: np.ndarray):
        d, m = self.d, self.m
        mu = np.empty(m)
        for a in range(d):
            up, down = theta[2 * a], theta[2 * a + 1]
            base = STREAMS_PER_ASSET * a
            mu[base + 0] = mu[base + 2] = up
            mu[base + 1] = mu[base + 3] = down
        nu = np.zeros((m, m))
        for c, (i, j) in enumerate(self.cells):
            nu[i, j] = theta[self.n_mu + c]
        dec = theta[self.n_mu + self.n_nu : self.n_mu + self.n_nu + m].copy()
        ex_part = theta[self.n_mu + self.n_nu + m :]
        ex = np.full(m, ex_part[0]) if self.tie else ex_part.copy()
        return mu, nu, dec, ex

    def reduce_grad(self, gmu, gnu, gdec, gex) -> np.ndarray:
        out = np.empty(self.size)
        for a in range(self.d):
            base = STREAMS_PER_ASSET * a
            out[2 * a] = gmu[base + 0] + gmu[base + 2]
            out[2 * a + 1] = gmu[base + 1] + gmu[base + 3]
        for c, (i, j) in enumerate(self.cells):
            out[self.n_mu + c] = gnu[i, j]
        out[self.n_mu + self.n_nu : self.n_mu + self.n_nu + self.m] = gdec
        if self.tie:
            out[-1] = gex.sum()
        else:
            out[self.n_mu + self.n_nu + self.m :] = gex
        return out

    def bounds(self, opts: FitOptions) -> list[tuple[float, float | None]]:
        b: list[tuple[float, float | None]] = []
        b += [(opts.mu_floor, None)] * self.n_mu
        b += [(0.0, None)] * self.n_nu
        b += [opts.decay_bounds] * self.n_dec
        b += [opts.exponent_bounds] * self.n_ex
        return b


def _initial_guess(space: _ReducedSpace, data: EventStream, opts: FitOptions) -> np.ndarray:
    theta = np.empty(space.size)
    span = max(data.span, np.finfo(float).tiny)
    counts = data.counts()
    for a in range(space.d):
        base = STREAMS_PER_ASSET * a
        up = 0.5 * (counts[base + 0] + counts[base + 2]) / (2.0 * span)
        down = 0.5 * (counts[base + 1] + counts[base + 3]) / (2.0 * span)
        theta[2 * a] = max(up, opts.mu_floor)
        theta[2 * a + 1] = max(down, opts.mu_floor)
    theta[space.n_mu : space.n_mu + space.n_nu] = opts.nu_init
    for i in range(space.m):
        own = data.times_for(i)
        if own.size >= 2:
            med = float(np.median(np.diff(own)))
            dec0 = 1.0 / med if med > 0 else 1.0
        else:
            dec0 = 1.0
        lo, hi = opts.decay_bounds
        theta[space.n_mu + space.n_nu + i] = min(max(dec0, lo), hi)
    theta[space.n_mu + space.n_nu + space.m :] = opts.exponent_init
    return theta


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FitReport:
    """Calibration result: parameters, fit quality, applied constraints."""

    params: ParameterSet
    loglik: float
    mark_loglik: float
    spectral_radius: float
    converged: bool
    iterations: int
    n_events: int
    message: str
    constraint_set: dict
    mark_fits: list[MarkFit]
    warnings: list[str]


def _fit_mark_rates(data: EventStream, opts: FitOptions):
    """Closed-form per-stream mark rates, with flags for thin streams."""
    m = data.n_streams
    rates = np.ones(m)
    fits: list[MarkFit] = []
    notes: list[str] = []
    for s in range(m):
        v = data.volumes_for(s)
        if v.size == 0:
            notes.append(
                f"stream {stream_label(s)}: no events; mark rate defaulted to 1"
            )
            fits.append(
                MarkFit(
                    stream=s, n_obs=0, rate=1.0, gauss_mean=np.nan, gauss_std=np.nan,
                    ks_exponential=np.nan, ks_gaussian=np.nan, preferred="exponential",
                    low_confidence=True, tail_x=np.empty(0), tail_p=np.empty(0),
                )
            )
            continue
        mf = fit_marks(v, stream=s)
        if mf.low_confidence:
            notes.append(
                f"stream {stream_label(s)}: only {mf.n_obs} marks; "
                "mark fit is low-confidence"
            )
        rates[s] = mf.rate
        fits.append(mf)
    return rates, fits, notes


def _build_objective(data: EventStream, space: _ReducedSpace, mark_rate: np.ndarray):
    times, streams = _core_arrays(data)
    volumes = np.ascontiguousarray(data.volumes)
    t0, t1 = data.t_start, data.t_end

    def negloglik(theta: np.ndarray):
        mu, nu, dec, ex = space.unpack(theta)
        g, dg = _impact_and_deriv(streams, volumes, ex, mark_rate)
        ll, bad, gmu, gnu, gdec, gex = kernels.log_likelihood_core(
            times, streams, g, dg, t0, t1, mu, nu, dec, True
        )
        if bad >= 0 or not np.isfinite(ll):
            # Bounded away from the boundary this cannot trigger, but the
            # optimizer must never see NaN.
            return 1e308, np.zeros(space.size)
        return -ll, -space.reduce_grad(gmu, gnu, gdec, gex)

    return negloglik


def fit(
    data: EventStream,
    pattern: InteractionPattern | None = None,
    options: FitOptions | None = None,
) -> FitReport:
    """Calibrate all free parameters to one event history.

    Mark rates come first (closed form, then fixed); the remaining
    parameters follow by bound-constrained quasi-Newton ascent with the
    analytic gradient.  An optimizer failure is reported through
    `converged` / `message`, never silently.
    """
    opts = options or FitOptions()
    pattern = pattern or build_pattern(data.n_assets)
    if pattern.n_assets != data.n_assets:
        raise InputError(
            f"pattern is for {pattern.n_assets} assets, data has {data.n_assets}"
        )
    notes: list[str] = []
    mark_rate, mark_fits, mark_notes = _fit_mark_rates(data, opts)
    notes += mark_notes
    counts = data.counts()
    for s in range(data.n_streams):
        if counts[s] == 0:
            notes.append(
                f"stream {stream_label(s)}: no events; its tied baseline is "
                "driven by the paired stream or the positivity floor"
            )

    space = _ReducedSpace(pattern, opts.tie_impact_exponent)
    theta0 = _initial_guess(space, data, opts)
    objective = _build_objective(data, space, mark_rate)

    try:
        res = minimize(
            objective,
            theta0,
            jac=True,
            method="L-BFGS-B",
            bounds=space.bounds(opts),
            options={
                "maxiter": opts.max_iterations,
                "ftol": opts.rel_tol,
                "maxfun": 200_000,
            },
        )
    except Exception as exc:  # pragma: no cover - scipy failures are rare
        raise NumericalError(f"likelihood optimization failed: {exc}") from exc

    mu, nu, dec, ex = space.unpack(res.x)
    params = ParameterSet(
        mu=mu, branching=nu, decay=dec, impact_exponent=ex,
        mark_rate=mark_rate, pattern=pattern,
    )
    rho = spectral_radius(params.branching)
    if rho >= 1.0:
        notes.append(
            f"fitted branching spectral radius {rho:.4f} >= 1: "
            "the fitted model is non-stationary"
        )
    if not res.success:
        notes.append(f"optimizer did not report convergence: {res.message}")
    return FitReport(
        params=params,
        loglik=-float(res.fun),
        mark_loglik=mark_log_likelihood(params, data),
        spectral_radius=rho,
        converged=bool(res.success),
        iterations=int(res.nit),
        n_events=len(data),
        message=str(res.message),
        constraint_set={
            "baseline_symmetry": "ask and bid baselines tied per asset and direction",
            "pattern_allowed_cells": pattern.n_allowed,
            "tied_impact_exponent": opts.tie_impact_exponent,
            "free_parameters": space.size,
            "parameter_names": space.names(),
        },
        mark_fits=mark_fits,
        warnings=notes,
    )


@dataclass
class WindowedFit:
    """Per-window calibrations plus their equal-weight average."""

    reports: list[FitReport]
    average: ParameterSet
    window_bounds: list[tuple[float, float]]


def fit_windows(
    data: EventStream,
    window: float,
    pattern: InteractionPattern | None = None,
    options: FitOptions | None = None,
) -> WindowedFit:
    """Fit each contiguous window of the given length independently.

    Windows of equal length get equal weight in the averaged parameters
    regardless of their event counts.  The trailing remainder shorter
    than `window` is dropped.
    """
    if not (np.isfinite(window) and window > 0):
        raise InputError(f"window length must be finite and > 0, got {window}")
    n_win = int(data.span // window)
    if n_win < 1:
        raise InputError(
            f"window {window} exceeds the data span {data.span}; nothing to fit"
        )
    reports = []
    bounds = []
    for w in range(n_win):
        t0 = data.t_start + w * window
        t1 = t0 + window
        reports.append(fit(data.restrict(t0, t1), pattern=pattern, options=options))
        bounds.append((t0, t1))
    avg = reports[0].params.copy_with(
        mu=np.mean([r.params.mu for r in reports], axis=0),
        branching=np.mean([r.params.branching for r in reports], axis=0),
        decay=np.mean([r.params.decay for r in reports], axis=0),
        impact_exponent=np.mean([r.params.impact_exponent for r in reports], axis=0),
        mark_rate=np.mean([r.params.mark_rate for r in reports], axis=0),
    )
    return WindowedFit(reports=reports, average=avg, window_bounds=bounds)

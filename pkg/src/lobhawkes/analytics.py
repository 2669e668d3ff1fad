"""Sampled-path diagnostics: signature plots, lead-lag-free correlation,
durations and rate summaries.

Quote paths are piecewise constant, so sampling uses the previous-tick
convention (last value at or before each grid time).  The realized
variance per unit time of a sampled log-price is

    V(tau) = (1/T) * sum_n (X((n+1) tau) - X(n tau))^2

and the correlation between two assets at scale tau divides their
realized covariation by the geometric mean of the two variances.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .book import PricePath
from .errors import InputError
from .events import EventStream

__all__ = [
    "RegularGrid",
    "previous_tick_sample",
    "sample_path",
    "signature_plot",
    "epps_correlation",
    "power_law_fit",
    "durations",
    "duration_volume_table",
    "empirical_rates",
    "default_taus",
]


@dataclass(frozen=True)
class RegularGrid:
    """Uniform sampling grid: times start + i * step, i = 0..count-1."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise InputError("grid start and step must be finite")
        if self.step <= 0:
            raise InputError(f"grid step must be > 0, got {self.step}")
        if self.count < 1:
            raise InputError(f"grid needs at least one point, got {self.count}")

    @property
    def times(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def span(self) -> float:
        return self.step * (self.count - 1)

    @classmethod
    def cover(cls, t_start: float, t_end: float, step: float) -> RegularGrid:
        """The densest grid with this step fitting inside [t_start, t_end]."""
        count = int(math.floor((t_end - t_start) / step)) + 1
        return cls(start=t_start, step=step, count=max(count, 1))


def previous_tick_sample(
    times: np.ndarray,
    values: np.ndarray,
    grid,
    before_start: str = "error",
) -> np.ndarray:
    """Last observed value at or before each grid time.

    `before_start` picks the policy for grid times preceding the first
    observation: "error" refuses, "fill" repeats the first observed
    value.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size != values.size:
        raise InputError("times and values must have equal lengths")
    if times.size == 0:
        raise InputError("previous-tick sampling needs at least one observation")
    if np.any(np.diff(times) < 0):
        raise InputError("observation times must be non-decreasing")
    grid_times = grid.times if isinstance(grid, RegularGrid) else np.asarray(grid, dtype=float)
    idx = np.searchsorted(times, grid_times, side="right") - 1
    early = idx < 0
    if np.any(early):
        if before_start == "fill":
            idx = np.maximum(idx, 0)
        else:
            raise InputError(
                f"{int(early.sum())} grid time(s) precede the first observation "
                f"at t={times[0]}; pass before_start='fill' to pad"
            )
    return values[idx]


def sample_path(path: PricePath, grid, price: str = "mid", log: bool = True) -> np.ndarray:
    """Previous-tick sample one quote series of a price path.

    `price` is one of mid/ask/bid.  With `log` the series is log-priced,
    the form the variance diagnostics expect.
    """
    series = {"mid": path.mid, "ask": path.ask, "bid": path.bid}.get(price)
    if series is None:
        raise InputError(f"unknown price series {price!r}; use mid, ask or bid")
    x = previous_tick_sample(path.times, series, grid)
    if log:
        if np.any(x <= 0):
            raise InputError("cannot log-price a series with non-positive values")
        x = np.log(x)
    return x


def _stride_for(tau: float, step: float) -> int:
    m = int(round(tau / step))
    if m < 1 or abs(m * step - tau) > 1e-9 * max(tau, step):
        raise InputError(
            f"tau {tau} is not a positive multiple of the grid step {step}"
        )
    return m


def _increments(x: np.ndarray, stride: int) -> np.ndarray:
    n_inc = (x.size - 1) // stride
    if n_inc < 1:
        return np.empty(0)
    y = x[: n_inc * stride + 1 : stride]
    return np.diff(y)


def signature_plot(
    x: np.ndarray, step: float, taus, window: float | None = None
) -> dict[float, float]:
    """Realized variance per unit time of a sampled series at each scale.

    Scales must be positive multiples of the grid step; a tau too coarse
    for the series span is dropped with a warning.  With `window`, the
    series is cut into equal windows, each window's curve is computed,
    and windows are averaged with equal weight.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise InputError("signature plot needs at least two samples")
    if window is not None:
        return _window_average(x, step, taus, window, signature_plot)
    span = (x.size - 1) * step
    out: dict[float, float] = {}
    for tau in taus:
        m = _stride_for(float(tau), step)
        inc = _increments(x, m)
        if inc.size == 0:
            warnings.warn(f"tau {tau} exceeds the series span {span:g}; dropped")
            continue
        out[float(tau)] = float(np.sum(inc * inc) / span)
    return out


def epps_correlation(
    x1: np.ndarray, x2: np.ndarray, step: float, taus, window: float | None = None
) -> dict[float, float]:
    """Correlation of two sampled log-price series per sampling scale.

    Realized covariation over the geometric mean of realized variances.
    Scales where either variance vanishes are omitted with a warning.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.size != x2.size:
        raise InputError("both series must share the sampling grid")
    if x1.size < 2:
        raise InputError("correlation needs at least two samples")
    if window is not None:
        return _window_average(
            x1, step, taus, window,
            lambda a, s, t: epps_correlation(a[0], a[1], s, t),
            x2=x2,
        )
    span = (x1.size - 1) * step
    out: dict[float, float] = {}
    for tau in taus:
        m = _stride_for(float(tau), step)
        d1 = _increments(x1, m)
        d2 = _increments(x2, m)
        if d1.size == 0:
            warnings.warn(f"tau {tau} exceeds the series span {span:g}; dropped")
            continue
        v1 = float(np.sum(d1 * d1) / span)
        v2 = float(np.sum(d2 * d2) / span)
        if v1 <= 0.0 or v2 <= 0.0:
            warnings.warn(f"zero realized variance at tau {tau}; correlation undefined")
            continue
        co = float(np.sum(d1 * d2) / span)
        out[float(tau)] = co / math.sqrt(v1 * v2)
    return out


def _window_average(x, step, taus, window, func, x2=None):
    per_win = int(round(window / step))
    if per_win < 2:
        raise InputError(f"window {window} holds fewer than two grid steps")
    n_win = (np.asarray(x).size - 1) // per_win
    if n_win < 1:
        raise InputError(f"window {window} exceeds the sampled span")
    curves = []
    for w in range(n_win):
        sl = slice(w * per_win, w * per_win + per_win + 1)
        if x2 is None:
            curves.append(func(x[sl], step, taus))
        else:
            curves.append(func((x[sl], x2[sl]), step, taus))
    keys = [k for k in curves[0] if all(k in c for c in curves)]
    return {k: float(np.mean([c[k] for c in curves])) for k in keys}


def power_law_fit(curve: dict[float, float]) -> tuple[float, float]:
    """Least-squares slope and R^2 of log(value) against log(scale).

    Diagnostic only; entries with non-positive value are skipped.
    """
    pairs = [(t, v) for t, v in curve.items() if t > 0 and v > 0]
    if len(pairs) < 2:
        raise InputError("power-law fit needs at least two positive points")
    lt = np.log([p[0] for p in pairs])
    lv = np.log([p[1] for p in pairs])
    slope, intercept = np.polyfit(lt, lv, 1)
    fitted = slope * lt + intercept
    ss_res = float(np.sum((lv - fitted) ** 2))
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def durations(events: EventStream, stream: int | None = None) -> np.ndarray:
    """Gaps between consecutive events, of one stream or of the merged flow."""
    t = events.times if stream is None else events.times_for(stream)
    return np.diff(t)


def duration_volume_table(
    events: EventStream, stream: int | None = None
) -> np.ndarray:
    """Rows (duration to previous event, volume of the closing event).

    One row per event after the first, pairing each waiting time with
    the mark of the event that ended it.
    """
    if stream is None:
        t, v = events.times, events.volumes
    else:
        t, v = events.times_for(stream), events.volumes_for(stream)
    if t.size < 2:
        return np.empty((0, 2))
    return np.column_stack((np.diff(t), v[1:]))


def empirical_rates(events: EventStream, burn_in: float = 0.1) -> np.ndarray:
    """Per-stream event rates after discarding a leading burn-in fraction."""
    if not 0.0 <= burn_in < 1.0:
        raise InputError(f"burn-in fraction must be in [0, 1), got {burn_in}")
    t0 = events.t_start + burn_in * events.span
    span = events.t_end - t0
    if span <= 0:
        raise InputError("burn-in leaves no observation span")
    keep = events.times >= t0
    counts = np.bincount(events.streams[keep], minlength=events.n_streams)
    return counts / span


def default_taus(step: float, max_tau: float = 100.0) -> list[float]:
    """Roughly log-spaced scales from the grid step up to `max_tau`."""
    taus = []
    scale = step
    while scale <= max_tau:
        for mult in (1, 2, 5):
            tau = mult * scale
            if step <= tau <= max_tau:
                taus.append(round(tau, 10))
        scale *= 10
    return sorted(set(taus))

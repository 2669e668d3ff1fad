"""Next-event forecasting and execution-cost primitives.

Survival curves freeze the history at the forecast origin: with no
further arrivals the intensity just decays, so the probability that a
stream stays quiet for tau more seconds is exp(-[Lambda(t0+tau) -
Lambda(t0)]) with the decay-only compensator increment, which for the
first event after t0 is exact.  A Monte Carlo rollout mode regenerates
future event/mark pairs with the simulator instead, capturing the
feedback of intervening events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import InputError
from .events import EventStream
from .intensity import excitation_at_end
from .params import ParameterSet, stream_label
from .simulate import continue_from, make_rng

__all__ = [
    "survival",
    "survival_curve",
    "hazard_shares",
    "next_event_forecast",
    "ForecastReport",
    "RolloutSummary",
    "ImpactLadder",
    "market_impact_cost",
    "CostReport",
    "round_trip_cost",
]


def _frozen_state(params: ParameterSet, history: EventStream):
    """Per-stream (baseline, decay, excitation load) at the horizon end."""
    s_mat = excitation_at_end(params, history)
    load = np.sum(params.branching * s_mat, axis=1)
    return load


def survival_curve(
    params: ParameterSet, history: EventStream, stream: int, taus
) -> np.ndarray:
    """P(no event of `stream` in (t0, t0 + tau]) under the frozen history.

    t0 is the history horizon end; events exactly at t0 are fully
    absorbed before forecasting.
    """
    if stream < 0 or stream >= params.n_streams:
        raise InputError(f"stream {stream} out of range")
    taus = np.asarray(taus, dtype=float)
    if np.any(~np.isfinite(taus)) or np.any(taus < 0):
        raise InputError("forecast offsets must be finite and >= 0")
    load = _frozen_state(params, history)[stream]
    a = params.decay[stream]
    increment = params.mu[stream] * taus - np.expm1(-a * taus) * load
    return np.exp(-increment)


def survival(params: ParameterSet, history: EventStream, stream: int, tau: float) -> float:
    """Single-point frozen-history survival probability."""
    return float(survival_curve(params, history, stream, [tau])[0])


def hazard_shares(params: ParameterSet, history: EventStream) -> np.ndarray:
    """Instantaneous next-event probabilities per stream at the origin."""
    load = _frozen_state(params, history)
    lam = params.mu + params.decay * load
    total = float(lam.sum())
    if total <= 0:
        raise InputError("all intensities vanish; no next event to forecast")
    return lam / total


def _expected_next_time(mu: float, a: float, load: float) -> float:
    """Mean waiting time integral of the frozen-history survival."""
    if mu <= 0:
        # Excitation alone dies out with positive escape probability, so
        # the expected wait is infinite.
        return math.inf
    val, _ = quad(
        lambda tau: math.exp(-(mu * tau + (-math.expm1(-a * tau)) * load)),
        0.0,
        math.inf,
    )
    return float(val)


@dataclass
class RolloutSummary:
    """Monte Carlo next-event distribution from simulator continuations."""

    n_rollouts: int
    stream_probability: np.ndarray
    no_event_probability: float
    mean_wait: float  # conditional on an event inside the rollout horizon
    first_times: np.ndarray = field(repr=False)
    first_streams: np.ndarray = field(repr=False)


@dataclass
class ForecastReport:
    """Frozen-history forecast, optionally backed by a rollout study."""

    taus: np.ndarray
    survival: np.ndarray  # shape (n_streams, len(taus))
    hazard_share: np.ndarray
    most_probable_stream: int
    expected_time: np.ndarray
    labels: list[str]
    rollout: RolloutSummary | None = None


def next_event_forecast(
    params: ParameterSet,
    history: EventStream,
    horizon: float,
    n_grid: int = 101,
    rollouts: int = 0,
    seed: int = 0,
) -> ForecastReport:
    """Forecast the next event over (t0, t0 + horizon].

    Produces per-stream frozen-history survival curves, the hazard share
    of each stream at the origin, and expected waiting times.  With
    `rollouts` > 0 the report also carries a Monte Carlo next-event
    distribution obtained by continuing the simulation past t0,
    regenerating event/mark pairs from the model.
    """
    if not (np.isfinite(horizon) and horizon > 0):
        raise InputError(f"forecast horizon must be finite and > 0, got {horizon}")
    taus = np.linspace(0.0, horizon, n_grid)
    m = params.n_streams
    curves = np.vstack(
        [survival_curve(params, history, s, taus) for s in range(m)]
    )
    shares = hazard_shares(params, history)
    load = _frozen_state(params, history)
    expected = np.array(
        [
            _expected_next_time(float(params.mu[s]), float(params.decay[s]), float(load[s]))
            for s in range(m)
        ]
    )
    rollout = None
    if rollouts > 0:
        rollout = _rollout_study(params, history, horizon, rollouts, seed)
    return ForecastReport(
        taus=taus,
        survival=curves,
        hazard_share=shares,
        most_probable_stream=int(np.argmax(shares)),
        expected_time=expected,
        labels=[stream_label(s) for s in range(m)],
        rollout=rollout,
    )


def _rollout_study(params, history, horizon, rollouts, seed) -> RolloutSummary:
    rng = make_rng(seed)
    m = params.n_streams
    first_t = np.full(rollouts, np.nan)
    first_s = np.full(rollouts, -1, dtype=np.int64)
    # The excitation state is identical across rollouts; continue_from
    # rebuilds it cheaply from the history each call.
    for r in range(rollouts):
        times, streams, _, _ = continue_from(
            params, history, history.t_end + horizon, rng, stop_any=True
        )
        if times.size:
            first_t[r] = times[0] - history.t_end
            first_s[r] = streams[0]
    hit = first_s >= 0
    prob = np.bincount(first_s[hit], minlength=m) / rollouts
    return RolloutSummary(
        n_rollouts=rollouts,
        stream_probability=prob,
        no_event_probability=float(1.0 - hit.mean()) if rollouts else 1.0,
        mean_wait=float(np.nanmean(first_t)) if hit.any() else math.nan,
        first_times=first_t,
        first_streams=first_s,
    )


# ---------------------------------------------------------------------------
# execution costs


@dataclass
class ImpactLadder:
    """Standing volume at increasing tick offsets from the best quote.

    `offsets[i]` counts ticks away from the best price (the first level
    is the best quote itself, offset 0), `volumes[i]` the quantity
    resting there.
    """

    offsets: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.int64)
        self.volumes = np.asarray(self.volumes, dtype=float)
        if self.offsets.size == 0:
            raise InputError("an impact ladder needs at least one level")
        if self.offsets.size != self.volumes.size:
            raise InputError("offsets and volumes must have equal lengths")
        if self.offsets[0] != 0:
            raise InputError("the first ladder level must sit at the best quote (offset 0)")
        if np.any(np.diff(self.offsets) <= 0):
            raise InputError("ladder offsets must be strictly increasing")
        if np.any(self.volumes <= 0) or np.any(~np.isfinite(self.volumes)):
            raise InputError("ladder volumes must be finite and > 0")

    @property
    def depth(self) -> float:
        return float(self.volumes.sum())

    @classmethod
    def simulated(
        cls, params: ParameterSet, stream: int, n_levels: int, seed: int = 0
    ) -> ImpactLadder:
        """Synthetic ladder: consecutive tick offsets, volumes drawn from
        the stream's exponential mark law."""
        if n_levels < 1:
            raise InputError("n_levels must be >= 1")
        from .simulate import draw_marks

        vols = draw_marks(float(params.mark_rate[stream]), n_levels, make_rng(seed))
        return cls(offsets=np.arange(n_levels), volumes=vols)


@dataclass
class CostReport:
    """Outcome of walking a ladder with a market order."""

    cost: float
    filled: float
    unfilled: float
    fills: list[tuple[int, float]]

    @property
    def complete(self) -> bool:
        return self.unfilled == 0.0


def market_impact_cost(ladder: ImpactLadder, quantity: float, tick: float) -> CostReport:
    """Cost of sweeping `quantity` through the ladder, best level first.

    Each consumed unit at tick offset x costs x * tick relative to the
    best quote, so the first level is free and deeper levels pay their
    displacement.  Partial consumption of the marginal level is allowed;
    any demand beyond the ladder is reported as unfilled.
    """
    if not (np.isfinite(quantity) and quantity > 0):
        raise InputError(f"quantity must be finite and > 0, got {quantity}")
    if not (np.isfinite(tick) and tick > 0):
        raise InputError(f"tick must be finite and > 0, got {tick}")
    remaining = float(quantity)
    cost = 0.0
    fills: list[tuple[int, float]] = []
    for x, avail in zip(ladder.offsets, ladder.volumes):
        if remaining <= 0:
            break
        take = min(remaining, float(avail))
        cost += take * float(x) * tick
        fills.append((int(x), take))
        remaining -= take
    return CostReport(
        cost=cost,
        filled=float(quantity) - max(remaining, 0.0),
        unfilled=max(remaining, 0.0),
        fills=fills,
    )


def round_trip_cost(
    path,
    t_in: float,
    t_out: float,
    quantity: float,
    ladder: ImpactLadder | None = None,
    tick: float | None = None,
) -> float:
    """Cost of buying at the ask at t_in and selling at the bid at t_out.

    Abstracting from mid-price moves this is the spread at exit times
    the quantity, plus the ladder impact of the order size when a ladder
    is supplied.
    """
    if not (np.isfinite(quantity) and quantity > 0):
        raise InputError(f"quantity must be finite and > 0, got {quantity}")
    if t_out < t_in:
        raise InputError(f"t_out {t_out} precedes t_in {t_in}")
    if not (path.t_start <= t_in and t_out <= path.t_end):
        raise InputError("round trip times fall outside the price path horizon")
    cost = quantity * path.spread_at(t_out)
    if ladder is not None:
        cost += market_impact_cost(ladder, quantity, tick if tick is not None else path.tick).cost
    return float(cost)

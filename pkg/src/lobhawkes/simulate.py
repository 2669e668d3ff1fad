"""Exact simulation of the coupled quote streams by thinning.

Candidate arrivals are proposed from the current total intensity, which
only decays between events and is therefore a valid upper bound; accepted
candidates are assigned a stream proportionally to the per-stream
intensities and receive an exponential volume mark drawn at acceptance.

All randomness flows through a Philox (4x64 counter-based, period 2^128)
bit generator keyed by the seed, consumed as a single uniform stream via
inverse-CDF transforms.  Identical (parameters, config) therefore yield
bit-identical histories, and batch runs with distinct seeds are
independent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .book import PricePath, prices_from_counts
from .errors import InputError, NonStationaryError
from .events import EventStream
from .intensity import excitation_at_end, spectral_radius
from .params import ParameterSet

__all__ = ["SimConfig", "SimResult", "simulate", "simulate_many", "draw_mark", "draw_marks"]

_BLOCK = 4096


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide seeded generator: Philox keyed by the seed."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass
class SimConfig:
    """Simulation window and book wiring.

    `p0` is the opening bid, one value or one per asset.  `max_events`
    caps the history; hitting it marks the result truncated.
    """

    horizon_end: float
    seed: int = 0
    p0: float | tuple | list = 1.0
    tick: float = 1e-5
    max_events: int = 1_000_000
    initial_spread_ticks: int = 1
    allow_nonstationary: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.horizon_end) and self.horizon_end >= 0):
            raise InputError(f"horizon_end must be finite and >= 0, got {self.horizon_end}")
        if self.max_events < 1:
            raise InputError("max_events must be >= 1")
        if self.tick <= 0 or not np.isfinite(self.tick):
            raise InputError(f"tick must be finite and > 0, got {self.tick}")

    def p0_for(self, n_assets: int) -> np.ndarray:
        p0 = np.atleast_1d(np.asarray(self.p0, dtype=float))
        if p0.size == 1:
            return np.full(n_assets, p0[0])
        if p0.size != n_assets:
            raise InputError(f"p0 has {p0.size} entries for {n_assets} assets")
        return p0


@dataclass
class SimResult:
    """Simulated history plus the quote paths it implies."""

    events: EventStream
    prices: list[PricePath]
    truncated: bool

    @property
    def path(self) -> PricePath:
        return self.prices[0]


class _UniformBlocks:
    """Block-wise uniform supplier shared by both kernel backends."""

    def __init__(self, rng: np.random.Generator, block: int = _BLOCK):
        self._rng = rng
        self._block = block

    def __call__(self) -> np.ndarray:
        return self._rng.random(self._block)


def _run_core(params, t_start, t_end, s0, rng, max_events, stop_stream=-1, stop_any=False):
    return kernels.simulate_core(
        np.ascontiguousarray(params.mu),
        np.ascontiguousarray(params.branching),
        np.ascontiguousarray(params.decay),
        np.ascontiguousarray(params.impact_exponent),
        np.ascontiguousarray(params.mark_rate),
        np.ascontiguousarray(params.impact_scale),
        float(t_start),
        float(t_end),
        np.ascontiguousarray(s0),
        int(max_events),
        _UniformBlocks(rng),
        int(stop_stream),
        bool(stop_any),
    )


def simulate(params: ParameterSet, cfg: SimConfig) -> SimResult:
    """Simulate the event streams on [0, horizon_end] and rebuild prices.

    Refuses non-stationary parameter sets (branching spectral radius
    >= 1) unless the config explicitly allows them.
    """
    rho = spectral_radius(params.branching)
    if rho >= 1.0 and not cfg.allow_nonstationary:
        raise NonStationaryError(
            f"branching spectral radius {rho:.6g} >= 1; simulation would "
            "explode (set allow_nonstationary to override)"
        )
    m = params.n_streams
    times, streams, volumes, truncated = _run_core(
        params,
        0.0,
        cfg.horizon_end,
        np.zeros((m, m)),
        make_rng(cfg.seed),
        cfg.max_events,
    )
    # When the cap cuts the history short, the honest horizon ends at the
    # last generated event.
    t_end = float(times[-1]) if truncated else cfg.horizon_end
    events = EventStream(
        times, streams, volumes, 0.0, t_end, n_assets=params.n_assets
    )
    p0 = cfg.p0_for(params.n_assets)
    prices = [
        prices_from_counts(
            events, float(p0[a]), cfg.tick, asset=a,
            initial_spread_ticks=cfg.initial_spread_ticks,
        )
        for a in range(params.n_assets)
    ]
    return SimResult(events=events, prices=prices, truncated=truncated)


def simulate_many(params: ParameterSet, cfg: SimConfig, seeds) -> list[SimResult]:
    """Independent runs of `simulate`, one per seed.

    Runs share nothing but the parameters, so callers may distribute
    them across processes; this implementation executes sequentially.
    """
    results = []
    for seed in seeds:
        run_cfg = SimConfig(
            horizon_end=cfg.horizon_end,
            seed=int(seed),
            p0=cfg.p0,
            tick=cfg.tick,
            max_events=cfg.max_events,
            initial_spread_ticks=cfg.initial_spread_ticks,
            allow_nonstationary=cfg.allow_nonstationary,
        )
        results.append(simulate(params, run_cfg))
    return results


def continue_from(
    params: ParameterSet,
    history: EventStream,
    t_end: float,
    rng: np.random.Generator,
    max_events: int = 1_000_000,
    stop_stream: int = -1,
    stop_any: bool = False,
):
    """Extend a frozen history beyond its horizon with fresh simulation.

    Returns (times, streams, volumes, truncated) of the new events only.
    Used by rollout forecasting; the excitation state is rebuilt from the
    supplied history, so events at the horizon end are fully absorbed.
    """
    if t_end < history.t_end:
        raise InputError(f"t_end {t_end} precedes the history horizon {history.t_end}")
    s0 = excitation_at_end(params, history)
    return _run_core(
        params, history.t_end, t_end, s0, rng, max_events,
        stop_stream=stop_stream, stop_any=stop_any,
    )


def draw_mark(mark_rate: float, rng: np.random.Generator) -> float:
    """One exponential volume mark with mean 1 / mark_rate."""
    return float(draw_marks(mark_rate, 1, rng)[0])


def draw_marks(mark_rate: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exponential volume marks via the same inverse CDF the simulator uses."""
    if not (np.isfinite(mark_rate) and mark_rate > 0):
        raise InputError(f"mark rate must be finite and > 0, got {mark_rate}")
    u = rng.random(n)
    return -np.log1p(-u) / mark_rate

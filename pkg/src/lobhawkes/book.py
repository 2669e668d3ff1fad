"""Best bid/ask price paths driven by counting the four event streams.

Every event moves its side's best quote by exactly one tick, so the ask
price of asset a is p0 + spread0 * tick + (N_ask_up - N_ask_down) * tick
and the bid price is p0 + (N_bid_up - N_bid_down) * tick.  Nothing stops
the two sides from crossing; the crossed fraction is reported as a
diagnostic instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .events import EventStream
from .params import Side, StreamId

__all__ = ["PricePath", "prices_from_counts", "spread_series"]


@dataclass
class PricePath:
    """Piecewise-constant best quotes of one asset.

    `times` holds the jump times; `ask` / `bid` the quote values right
    after each jump.  Index 0 is the synthetic opening state at t_start.
    """

    times: np.ndarray
    ask: np.ndarray
    bid: np.ndarray
    p0: float
    tick: float
    t_start: float
    t_end: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.ask = np.asarray(self.ask, dtype=float)
        self.bid = np.asarray(self.bid, dtype=float)
        if not (self.times.size == self.ask.size == self.bid.size):
            raise InputError("times/ask/bid must have equal lengths")
        if self.times.size == 0:
            raise InputError("a price path needs at least its opening state")
        if np.any(np.diff(self.times) < 0):
            raise InputError("price path times must be non-decreasing")
        if self.tick <= 0 or not np.isfinite(self.tick):
            raise InputError(f"tick must be finite and > 0, got {self.tick}")

    @property
    def spread(self) -> np.ndarray:
        return self.ask - self.bid

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.ask + self.bid)

    def _at(self, series: np.ndarray, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        if np.any(idx < 0):
            raise InputError("query before the opening state of the price path")
        out = series[idx]
        return out

    def ask_at(self, t):
        out = self._at(self.ask, t)
        return float(out) if out.ndim == 0 else out

    def bid_at(self, t):
        out = self._at(self.bid, t)
        return float(out) if out.ndim == 0 else out

    def mid_at(self, t):
        out = self._at(self.mid, t)
        return float(out) if out.ndim == 0 else out

    def spread_at(self, t):
        out = self._at(self.spread, t)
        return float(out) if out.ndim == 0 else out

    def crossed_fraction(self) -> float:
        """Time-weighted fraction of the horizon with bid above ask."""
        if self.t_end <= self.t_start:
            return 0.0
        bounds = np.append(self.times, self.t_end)
        holding = np.diff(bounds)
        crossed = self.spread < 0
        return float(np.sum(holding[crossed]) / (self.t_end - self.t_start))


def prices_from_counts(
    events: EventStream,
    p0: float,
    tick: float = 1e-5,
    asset: int = 0,
    initial_spread_ticks: int = 1,
) -> PricePath:
    """Rebuild an asset's quote path from its event stream.

    `p0` is the opening bid; the opening ask sits `initial_spread_ticks`
    ticks above it.  With zero initial spread both sides open at p0.
    """
    if tick <= 0 or not np.isfinite(tick):
        raise InputError(f"tick must be finite and > 0, got {tick}")
    if asset < 0 or asset >= events.n_assets:
        raise InputError(f"asset {asset} out of range for {events.n_assets}-asset stream")
    if initial_spread_ticks < 0:
        raise InputError("initial spread must be >= 0 ticks")
    base = 4 * asset
    keep = (events.streams >= base) & (events.streams < base + 4)
    times = events.times[keep]
    local = events.streams[keep] - base
    # Per-event quote increments in ticks: up=+1, down=-1 on the owning side.
    sign = np.where(local % 2 == 0, 1, -1)
    is_ask = local < 2
    ask0 = p0 + initial_spread_ticks * tick
    ask_steps = np.where(is_ask, sign, 0)
    bid_steps = np.where(is_ask, 0, sign)
    ask = ask0 + tick * np.cumsum(ask_steps)
    bid = p0 + tick * np.cumsum(bid_steps)
    return PricePath(
        times=np.concatenate(([events.t_start], times)),
        ask=np.concatenate(([ask0], ask)),
        bid=np.concatenate(([p0], bid)),
        p0=p0,
        tick=tick,
        t_start=events.t_start,
        t_end=events.t_end,
    )


def spread_series(path: PricePath, grid) -> np.ndarray:
    """Previous-tick sampled spread at the given times (empty grid ok)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return np.empty(0)
    return path.spread_at(grid)


def stream_of_quote(asset: int, side: Side, up: bool) -> int:
    """Flat stream index of a quote move, mainly for readable tests."""
    from .params import Direction

    return StreamId(asset, side, Direction.UP if up else Direction.DOWN).index

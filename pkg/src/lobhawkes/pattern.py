"""Allowed excitation structure between best-quote event streams.

Each asset contributes four streams (ask/bid crossed with up/down moves).
Within an asset, upward streams may excite each other and downward streams
may excite each other, but up and down never interact: an ask-up event can
raise the arrival rate of further ask-up and bid-up events only.  Across
assets, coupling is same-side: ask streams of one asset may excite ask
streams (either direction) of another, and likewise for bid streams.

Branching matrices are indexed [target, source]; entry (i, j) is the mean
number of direct children on stream i spawned by one event on stream j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

STREAMS_PER_ASSET = 4

# Offsets within an asset block, side * 2 + direction with ask=0, bid=1,
# up=0, down=1.
ASK_UP, ASK_DOWN, BID_UP, BID_DOWN = 0, 1, 2, 3

_WITHIN = {
    ASK_UP: (ASK_UP, BID_UP),
    BID_UP: (ASK_UP, BID_UP),
    ASK_DOWN: (ASK_DOWN, BID_DOWN),
    BID_DOWN: (ASK_DOWN, BID_DOWN),
}

_CROSS = {
    ASK_UP: (ASK_UP, ASK_DOWN),
    ASK_DOWN: (ASK_UP, ASK_DOWN),
    BID_UP: (BID_UP, BID_DOWN),
    BID_DOWN: (BID_UP, BID_DOWN),
}


@dataclass(frozen=True)
class InteractionPattern:
    """Boolean mask of branching-matrix cells that may be nonzero."""

    n_assets: int
    allowed: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = STREAMS_PER_ASSET * self.n_assets
        if self.allowed.shape != (m, m):
            raise InputError(f"pattern mask must be {m}x{m}, got {self.allowed.shape}")

    @property
    def n_streams(self) -> int:
        return STREAMS_PER_ASSET * self.n_assets

    @property
    def n_allowed(self) -> int:
        return int(self.allowed.sum())

    def cells(self) -> list[tuple[int, int]]:
        """Allowed (target, source) cells in row-major order."""
        ti, si = np.nonzero(self.allowed)
        return list(zip(ti.tolist(), si.tolist()))

    def violations(self, branching: np.ndarray) -> list[tuple[int, int]]:
        """Cells of `branching` that are nonzero outside the pattern."""
        if branching.shape != self.allowed.shape:
            raise InputError(
                f"branching shape {branching.shape} does not match pattern "
                f"{self.allowed.shape}"
            )
        bad = (branching != 0.0) & ~self.allowed
        ti, si = np.nonzero(bad)
        return list(zip(ti.tolist(), si.tolist()))


def build_pattern(n_assets: int) -> InteractionPattern:
    """Construct the interaction mask for `n_assets` assets.

    Allows 8 cells per asset (up block and down block of the within-asset
    quadrant) plus 8 cells per ordered asset pair (same-side cross-asset
    coupling), 8 * d^2 in total.
    """
    if n_assets < 1:
        raise InputError(f"n_assets must be >= 1, got {n_assets}")
    m = STREAMS_PER_ASSET * n_assets
    allowed = np.zeros((m, m), dtype=bool)
    for a in range(n_assets):
        base_t = STREAMS_PER_ASSET * a
        for b in range(n_assets):
            base_s = STREAMS_PER_ASSET * b
            table = _WITHIN if a == b else _CROSS
            for target, sources in table.items():
                for source in sources:
                    allowed[base_t + target, base_s + source] = True
    return InteractionPattern(n_assets=n_assets, allowed=allowed)

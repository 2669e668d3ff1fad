"""Model parameters: stream labels, kernels, volume impact, parameter sets.

The conditional intensity of stream i is

    lambda_i(t) = mu_i + sum_j nu_ij sum_{t_k^j < t} a_i exp(-a_i (t - t_k^j)) g_j(v_k)

with one decay rate a_i per target stream and a normalized power-law
volume impact g_j per source stream.  Marks are exponentially distributed,
V ~ Exp(beta_j), and g is normalized so that E[g(V)] = 1, which makes
nu_ij the mean number of direct children (branching interpretation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import InputError
from .pattern import STREAMS_PER_ASSET, InteractionPattern, build_pattern


class Side(IntEnum):
    ASK = 0
    BID = 1


class Direction(IntEnum):
    UP = 0
    DOWN = 1


@dataclass(frozen=True)
class StreamId:
    """Label of one event stream: (asset index, book side, move direction)."""

    asset: int
    side: Side
    direction: Direction

    def __post_init__(self):
        if self.asset < 0:
            raise ValueError(f"asset index must be >= 0, got {self.asset}")

    @property
    def index(self) -> int:
        """Flat index: asset * 4 + side * 2 + direction."""
        return self.asset * STREAMS_PER_ASSET + int(self.side) * 2 + int(self.direction)

    @classmethod
    def from_index(cls, index: int) -> StreamId:
        if index < 0:
            raise ValueError(f"stream index must be >= 0, got {index}")
        rem = index % STREAMS_PER_ASSET
        return cls(index // STREAMS_PER_ASSET, Side(rem // 2), Direction(rem % 2))

    def __str__(self) -> str:
        side = "a" if self.side == Side.ASK else "b"
        sign = "+" if self.direction == Direction.UP else "-"
        return f"{self.asset}:{side}{sign}"


def stream_label(index: int) -> str:
    return str(StreamId.from_index(index))


@dataclass(frozen=True)
class ExpKernel:
    """Exponential excitation kernel h(t) = rate * exp(-rate * t), t >= 0."""

    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"kernel rate must be finite and > 0, got {self.rate}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    def integral(self, t):
        """Integral of the kernel over [0, t]; tends to 1 as t -> inf."""
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 0, -np.expm1(-self.rate * np.maximum(t, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PowerImpact:
    """Power-law volume impact g(v) = beta^q v^q / Gamma(q+1), q = exponent.

    With V ~ Exp(beta) this normalization gives E[g(V)] = 1 exactly, for
    any exponent q >= 0 and rate beta > 0.
    """

    exponent: float
    mark_rate: float

    def __post_init__(self):
        if not (math.isfinite(self.exponent) and self.exponent >= 0):
            raise ValueError(f"impact exponent must be finite and >= 0, got {self.exponent}")
        if not (math.isfinite(self.mark_rate) and self.mark_rate > 0):
            raise ValueError(f"mark rate must be finite and > 0, got {self.mark_rate}")

    @property
    def scale(self) -> float:
        """Prefactor beta^q / Gamma(q+1)."""
        return self.mark_rate**self.exponent / math.gamma(self.exponent + 1.0)

    def __call__(self, volume):
        v = np.asarray(volume, dtype=float)
        if not np.all(np.isfinite(v) & (v > 0)):
            raise ValueError("volumes must be finite and > 0")
        out = self.scale * v**self.exponent
        return float(out) if out.ndim == 0 else out


def _as_vector(x, m: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (m,):
        raise InputError(f"{name} must have shape ({m},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr.copy()


@dataclass
class ParameterSet:
    """Full parameter set for a d-asset coupled bid/ask system.

    Streams are flat-indexed asset * 4 + side * 2 + direction (ask=0/bid=1,
    up=0/down=1).  `branching[i, j]` couples target stream i to source
    stream j and must vanish outside the allowed interaction pattern.
    Baselines are constrained side-symmetric per asset: ask-up equals
    bid-up and ask-down equals bid-down.

    Instances validate on construction and are treated as immutable;
    all evaluation routines only read from them.
    """

    mu: np.ndarray
    branching: np.ndarray
    decay: np.ndarray
    impact_exponent: np.ndarray
    mark_rate: np.ndarray
    pattern: InteractionPattern = field(default=None, repr=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size % STREAMS_PER_ASSET != 0 or mu.size == 0:
            raise InputError(f"mu must have length 4*d, got shape {mu.shape}")
        m = mu.size
        d = m // STREAMS_PER_ASSET
        if self.pattern is None:
            self.pattern = build_pattern(d)
        elif self.pattern.n_assets != d:
            raise InputError(
                f"pattern is for {self.pattern.n_assets} assets, parameters for {d}"
            )
        self.mu = _as_vector(mu, m, "mu")
        self.decay = _as_vector(self.decay, m, "decay")
        self.impact_exponent = _as_vector(self.impact_exponent, m, "impact_exponent")
        self.mark_rate = _as_vector(self.mark_rate, m, "mark_rate")

        branching = np.asarray(self.branching, dtype=float)
        if branching.shape != (m, m):
            raise InputError(f"branching must be {m}x{m}, got {branching.shape}")
        if not np.all(np.isfinite(branching)):
            raise InputError("branching contains non-finite values")
        if np.any(branching < 0):
            raise InputError("branching entries must be >= 0")
        bad = self.pattern.violations(branching)
        if bad:
            i, j = bad[0]
            raise InputError(
                f"branching[{i},{j}] ({stream_label(i)} <- {stream_label(j)}) "
                f"must be 0: outside the allowed interaction pattern"
            )
        self.branching = branching.copy()

        if np.any(self.mu < 0):
            raise InputError("mu entries must be >= 0")
        if np.any(self.decay <= 0):
            raise InputError("decay rates must be > 0")
        if np.any(self.impact_exponent < 0):
            raise InputError("impact exponents must be >= 0")
        if np.any(self.mark_rate <= 0):
            raise InputError("mark rates must be > 0")
        for a in range(d):
            base = STREAMS_PER_ASSET * a
            for up, other in ((0, 2), (1, 3)):  # ask-up vs bid-up, ask-down vs bid-down
                if self.mu[base + up] != self.mu[base + other]:
                    raise InputError(
                        f"baseline symmetry violated for asset {a}: "
                        f"mu[{stream_label(base + up)}]={self.mu[base + up]!r} != "
                        f"mu[{stream_label(base + other)}]={self.mu[base + other]!r}"
                    )
        self._impact_scale = None

    @property
    def n_streams(self) -> int:
        return self.mu.size

    @property
    def n_assets(self) -> int:
        return self.mu.size // STREAMS_PER_ASSET

    @property
    def kernels(self) -> tuple[ExpKernel, ...]:
        return tuple(ExpKernel(r) for r in self.decay)

    @property
    def impacts(self) -> tuple[PowerImpact, ...]:
        return tuple(
            PowerImpact(q, b) for q, b in zip(self.impact_exponent, self.mark_rate)
        )

    @property
    def impact_scale(self) -> np.ndarray:
        """Per-stream prefactor beta^q / Gamma(q+1) of the impact function."""
        if self._impact_scale is None:
            self._impact_scale = np.array(
                [
                    b**q / math.gamma(q + 1.0)
                    for q, b in zip(self.impact_exponent, self.mark_rate)
                ]
            )
        return self._impact_scale

    def impact_of(self, streams: np.ndarray, volumes: np.ndarray) -> np.ndarray:
        """Impact values g_{s_k}(v_k) for events on the given source streams."""
        streams = np.asarray(streams, dtype=np.int64)
        v = np.asarray(volumes, dtype=float)
        if v.size and not np.all(np.isfinite(v) & (v > 0)):
            raise InputError("volumes must be finite and > 0")
        return self.impact_scale[streams] * v ** self.impact_exponent[streams]

    def copy_with(self, **kwargs) -> ParameterSet:
        fields = dict(
            mu=self.mu,
            branching=self.branching,
            decay=self.decay,
            impact_exponent=self.impact_exponent,
            mark_rate=self.mark_rate,
            pattern=self.pattern,
        )
        fields.update(kwargs)
        return ParameterSet(**fields)


def symmetric_params(
    n_assets: int = 1,
    mu_up: float = 0.3,
    mu_down: float = 0.3,
    nu_self: float = 0.5,
    nu_within: float = 0.0,
    nu_cross: float = 0.0,
    decay: float = 2.0,
    impact_exponent: float = 0.5,
    mark_rate: float = 1.0,
) -> ParameterSet:
    """Convenience constructor for side-symmetric parameter sets.

    `nu_self` fills the diagonal, `nu_within` the off-diagonal cells of the
    within-asset up/down blocks, `nu_cross` the allowed same-direction
    cross-asset cells (up->up and down->down; the direction-flipping
    cross-asset cells stay 0).
    """
    m = STREAMS_PER_ASSET * n_assets
    pat = build_pattern(n_assets)
    mu = np.tile([mu_up, mu_down, mu_up, mu_down], n_assets)
    branching = np.zeros((m, m))
    for i, j in pat.cells():
        if i == j:
            branching[i, j] = nu_self
        elif i // STREAMS_PER_ASSET == j // STREAMS_PER_ASSET:
            branching[i, j] = nu_within
        elif i % 2 == j % 2:  # same direction across assets
            branching[i, j] = nu_cross
    return ParameterSet(
        mu=mu,
        branching=branching,
        decay=np.full(m, float(decay)),
        impact_exponent=np.full(m, float(impact_exponent)),
        mark_rate=np.full(m, float(mark_rate)),
        pattern=pat,
    )

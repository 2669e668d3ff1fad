"""Event containers: single marked events and whole recorded streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .pattern import STREAMS_PER_ASSET
from .params import StreamId


@dataclass(frozen=True)
class MarkedEvent:
    """One best-quote move: arrival time (s), stream index, volume mark."""

    time: float
    stream: int
    volume: float

    def __post_init__(self):
        if not math.isfinite(self.time):
            raise ValueError(f"event time must be finite, got {self.time}")
        if self.stream < 0:
            raise ValueError(f"stream index must be >= 0, got {self.stream}")
        if not (math.isfinite(self.volume) and self.volume > 0):
            raise ValueError(f"volume must be finite and > 0, got {self.volume}")

    @property
    def stream_id(self) -> StreamId:
        return StreamId.from_index(self.stream)


@dataclass
class EventStream:
    """Time-ordered marked events over a fixed observation horizon.

    Events are stored as parallel arrays sorted by time with ties broken
    by stream index, all inside [t_start, t_end].  `left_truncated`
    marks histories whose beginning was not recorded; intensity
    evaluation before the first retained event is then refused.
    """

    times: np.ndarray
    streams: np.ndarray
    volumes: np.ndarray
    t_start: float
    t_end: float
    n_assets: int = 0
    left_truncated: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.streams = np.asarray(self.streams, dtype=np.int64)
        self.volumes = np.asarray(self.volumes, dtype=float)
        n = self.times.size
        if self.streams.size != n or self.volumes.size != n:
            raise InputError(
                f"times/streams/volumes lengths differ: "
                f"{n}/{self.streams.size}/{self.volumes.size}"
            )
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise InputError("horizon bounds must be finite")
        if self.t_end < self.t_start:
            raise InputError(f"empty horizon: t_end {self.t_end} < t_start {self.t_start}")
        if n:
            if not np.all(np.isfinite(self.times)):
                raise InputError("event times contain non-finite values")
            if not np.all((self.volumes > 0) & np.isfinite(self.volumes)):
                raise InputError("volumes must be finite and > 0")
            if np.any(self.streams < 0):
                raise InputError("stream indices must be >= 0")
            dt = np.diff(self.times)
            if np.any(dt < 0):
                k = int(np.argmax(dt < 0))
                raise InputError(
                    f"events out of order at position {k + 1}: "
                    f"{self.times[k + 1]} < {self.times[k]}"
                )
            tied = dt == 0
            if np.any(tied & (np.diff(self.streams) < 0)):
                raise InputError("tied event times must be ordered by stream index")
            if self.times[0] < self.t_start or self.times[-1] > self.t_end:
                raise InputError("event times fall outside the horizon")
        inferred = int(self.streams.max()) // STREAMS_PER_ASSET + 1 if n else 1
        if self.n_assets <= 0:
            self.n_assets = inferred
        elif self.n_assets < inferred:
            raise InputError(
                f"n_assets={self.n_assets} too small for stream index {int(self.streams.max())}"
            )

    @classmethod
    def from_events(cls, times, streams, volumes, t_start, t_end, **kwargs) -> EventStream:
        """Build from possibly unordered data, sorting by (time, stream)."""
        times = np.asarray(times, dtype=float)
        streams = np.asarray(streams, dtype=np.int64)
        volumes = np.asarray(volumes, dtype=float)
        order = np.lexsort((streams, times))
        return cls(times[order], streams[order], volumes[order], t_start, t_end, **kwargs)

    @classmethod
    def empty(cls, t_start: float, t_end: float, n_assets: int = 1) -> EventStream:
        return cls(
            np.empty(0), np.empty(0, dtype=np.int64), np.empty(0),
            t_start, t_end, n_assets=n_assets,
        )

    @property
    def horizon(self) -> tuple[float, float]:
        return (self.t_start, self.t_end)

    @property
    def span(self) -> float:
        return self.t_end - self.t_start

    @property
    def n_streams(self) -> int:
        return STREAMS_PER_ASSET * self.n_assets

    def __len__(self) -> int:
        return self.times.size

    def __iter__(self):
        for t, s, v in zip(self.times, self.streams, self.volumes):
            yield MarkedEvent(float(t), int(s), float(v))

    def mask_for(self, stream: int) -> np.ndarray:
        return self.streams == stream

    def times_for(self, stream: int) -> np.ndarray:
        return self.times[self.mask_for(stream)]

    def volumes_for(self, stream: int) -> np.ndarray:
        return self.volumes[self.mask_for(stream)]

    def counts(self) -> np.ndarray:
        """Event count per stream, length 4 * n_assets."""
        return np.bincount(self.streams, minlength=self.n_streams).astype(np.int64)

    def restrict(self, t0: float, t1: float) -> EventStream:
        """Events within [t0, t1] as a new stream with that horizon."""
        if not (self.t_start <= t0 <= t1 <= self.t_end):
            raise InputError(f"window [{t0}, {t1}] outside horizon {self.horizon}")
        keep = (self.times >= t0) & (self.times <= t1)
        return replace(
            self,
            times=self.times[keep],
            streams=self.streams[keep],
            volumes=self.volumes[keep],
            t_start=t0,
            t_end=t1,
        )

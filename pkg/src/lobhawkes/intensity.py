"""Conditional intensities, integrated intensities, stationarity checks.

Two evaluation routes are kept deliberately separate: `intensity` and
`compensator` sum over the full history directly from the definitions,
while `RecursionState` and the bulk `compensator_curve` exploit the
exponential kernel's one-step update.  Tests hold the two routes against
each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import InputError
from .events import EventStream, MarkedEvent
from .params import ParameterSet

__all__ = [
    "intensity",
    "intensities_at",
    "compensator",
    "compensator_curve",
    "IntensityTrace",
    "intensity_trace",
    "RecursionState",
    "excitation_at_end",
    "spectral_radius",
    "is_stationary",
]


def _check_compatible(params: ParameterSet, history: EventStream) -> None:
    if len(history) and int(history.streams.max()) >= params.n_streams:
        raise InputError(
            f"history references stream {int(history.streams.max())} but the "
            f"parameter set has only {params.n_streams} streams"
        )


def _check_eval_time(history: EventStream, t: float) -> None:
    if not np.isfinite(t):
        raise InputError(f"evaluation time must be finite, got {t}")
    if t < history.t_start:
        raise InputError(
            f"evaluation time {t} precedes the horizon start {history.t_start}"
        )
    if history.left_truncated and len(history) and t < history.times[0]:
        raise InputError(
            "history is flagged left-truncated: intensities before its first "
            f"retained event (t={history.times[0]}) are not defined"
        )


def intensity(params: ParameterSet, history: EventStream, stream: int, t: float) -> float:
    """Conditional intensity of one stream at time t, by direct summation.

    Only events strictly before t contribute: an event never excites
    itself.  The value at an event's own arrival time is therefore the
    left limit, the one that enters the likelihood.
    """
    return float(intensities_at(params, history, t)[stream])


def intensities_at(params: ParameterSet, history: EventStream, t: float) -> np.ndarray:
    """Conditional intensities of all streams at time t (direct summation)."""
    _check_compatible(params, history)
    _check_eval_time(history, t)
    before = history.times < t
    times = history.times[before]
    streams = history.streams[before]
    g = params.impact_of(streams, history.volumes[before])
    lam = params.mu.copy()
    if times.size:
        dt = t - times
        for i in range(params.n_streams):
            w = params.decay[i] * np.exp(-params.decay[i] * dt)
            lam[i] += float(np.sum(params.branching[i, streams] * w * g))
    return lam


def compensator(params: ParameterSet, history: EventStream, stream: int, t: float) -> float:
    """Integrated intensity of one stream over [t_start, t], closed form.

    Each past event contributes nu[stream, src] * g(v) * (1 - e^{-a (t - t_k)});
    the kernel integrates to one, so a child's total future contribution
    is exactly its branching weight times its impact.
    """
    _check_compatible(params, history)
    _check_eval_time(history, t)
    before = history.times < t
    times = history.times[before]
    streams = history.streams[before]
    g = params.impact_of(streams, history.volumes[before])
    total = params.mu[stream] * (t - history.t_start)
    if times.size:
        a = params.decay[stream]
        total += float(
            np.sum(params.branching[stream, streams] * g * -np.expm1(-a * (t - times)))
        )
    return total


def compensator_curve(
    params: ParameterSet, history: EventStream, query_times: np.ndarray
) -> np.ndarray:
    """Integrated intensities of every stream at each query time.

    Query times must be non-decreasing and inside [t_start, t_end].
    Returns an array of shape (len(query_times), n_streams).  This is the
    recursive bulk route; `compensator` is the direct one.
    """
    _check_compatible(params, history)
    query = np.asarray(query_times, dtype=float)
    if query.ndim != 1:
        raise InputError("query times must be one-dimensional")
    if query.size == 0:
        return np.empty((0, params.n_streams))
    if not np.all(np.isfinite(query)):
        raise InputError("query times must be finite")
    if np.any(np.diff(query) < 0):
        raise InputError("query times must be non-decreasing")
    if query[0] < history.t_start:
        raise InputError(
            f"query time {query[0]} precedes the horizon start {history.t_start}"
        )
    g = params.impact_of(history.streams, history.volumes)
    return np.asarray(
        kernels.compensator_matrix(
            np.ascontiguousarray(history.times),
            np.ascontiguousarray(history.streams),
            np.ascontiguousarray(g),
            history.t_start,
            np.ascontiguousarray(params.mu),
            np.ascontiguousarray(params.branching),
            np.ascontiguousarray(params.decay),
            query,
        )
    )


@dataclass
class IntensityTrace:
    """Per-stream intensities sampled along a time grid."""

    times: np.ndarray
    values: np.ndarray  # shape (len(times), n_streams)

    def stream(self, index: int) -> np.ndarray:
        return self.values[:, index]


def intensity_trace(
    params: ParameterSet, history: EventStream, times: np.ndarray
) -> IntensityTrace:
    """Sample all conditional intensities along non-decreasing times.

    Sample points that coincide with an event time see the pre-event
    (left limit) intensity, matching `intensity`.
    """
    _check_compatible(params, history)
    grid = np.asarray(times, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise InputError("sample times must be non-decreasing")
    if grid.size and grid[0] < history.t_start:
        raise InputError("sample times precede the horizon start")
    state = RecursionState.fresh(params, history.t_start)
    out = np.empty((grid.size, params.n_streams))
    k = 0
    ev_times = history.times
    n = len(history)
    for qi, q in enumerate(grid):
        while k < n and ev_times[k] < q:
            state.update(
                MarkedEvent(float(ev_times[k]), int(history.streams[k]), float(history.volumes[k]))
            )
            k += 1
        out[qi] = state.intensities(q)
    return IntensityTrace(times=grid, values=out)


@dataclass
class RecursionState:
    """Running excitation state for O(1)-per-event intensity updates.

    `excitation[i, j]` holds sum_k e^{-a_i (t - t_k^j)} g_j(v_k) over all
    absorbed events of source stream j, decayed to `time`.  The state is
    single-owner mutable: `update` advances it in place and returns it.
    """

    params: ParameterSet
    time: float
    excitation: np.ndarray

    @classmethod
    def fresh(cls, params: ParameterSet, t0: float = 0.0) -> RecursionState:
        m = params.n_streams
        return cls(params=params, time=float(t0), excitation=np.zeros((m, m)))

    def copy(self) -> RecursionState:
        return RecursionState(self.params, self.time, self.excitation.copy())

    def advance_to(self, t: float) -> None:
        """Decay the state forward to time t without absorbing events."""
        dt = t - self.time
        if dt < 0:
            raise InputError(f"cannot advance state backwards: {t} < {self.time}")
        self.excitation *= np.exp(-self.params.decay * dt)[:, None]
        self.time = float(t)

    def update(self, event: MarkedEvent) -> RecursionState:
        """Absorb one event (at or after the current state time)."""
        p = self.params
        if event.stream >= p.n_streams:
            raise InputError(f"event.stream {event.stream} out of range")
        self.advance_to(event.time)
        s = event.stream
        g = p.impact_scale[s] * event.volume ** p.impact_exponent[s]
        self.excitation[:, s] += g
        return self

    def intensities(self, t: float | None = None) -> np.ndarray:
        """All stream intensities at t >= state time.

        At t equal to the state time this includes every absorbed event
        at full weight, i.e. the post-event (right limit) value.
        """
        p = self.params
        if t is None or t == self.time:
            exc = self.excitation
        else:
            dt = t - self.time
            if dt < 0:
                raise InputError(f"cannot evaluate state backwards: {t} < {self.time}")
            exc = self.excitation * np.exp(-p.decay * dt)[:, None]
        return p.mu + p.decay * np.sum(p.branching * exc, axis=1)


def excitation_at_end(params: ParameterSet, history: EventStream) -> np.ndarray:
    """Excitation state matrix at the history's horizon end.

    Entry (i, j) is sum_k e^{-a_i (T - t_k^j)} g_j(v_k) over the whole
    history; events exactly at T are fully absorbed (right limit), which
    is what warm-started simulation and forecasting need.
    """
    _check_compatible(params, history)
    m = params.n_streams
    out = np.zeros((m, m))
    if len(history):
        g = params.impact_of(history.streams, history.volumes)
        dt = history.t_end - history.times
        for i in range(m):
            out[i] = np.bincount(
                history.streams, weights=np.exp(-params.decay[i] * dt) * g, minlength=m
            )
    return out


def spectral_radius(branching: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a branching matrix."""
    b = np.asarray(branching, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise InputError(f"branching matrix must be square, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise InputError("branching matrix contains non-finite entries")
    return float(np.max(np.abs(np.linalg.eigvals(b))))


def is_stationary(params: ParameterSet) -> bool:
    """True when the branching spectral radius is strictly below one."""
    return spectral_radius(params.branching) < 1.0

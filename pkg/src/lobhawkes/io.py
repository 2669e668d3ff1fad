"""File formats: tick CSV ingestion with cleaning, event and table
writers, and keyed-text parameter serialization.

The event interchange format is a comma-separated file with header
`timestamp_ms,asset,side,direction,price,volume`: integer millisecond
timestamps, symbol strings, side `a`/`b`, direction `+`/`-`, decimal
prices and volumes.  All floating-point output is rendered with 17
significant digits so a write/read cycle is bit-exact; timestamps are
rounded to whole milliseconds on write, which is the native resolution
of the format.

Ingestion cleans the usual tick-data defects: unparseable rows,
non-positive prices or volumes, timestamps out of order beyond a 1 s
tolerance (anything within it is sorted), consecutive duplicate rows,
and quotes whose spread exceeds a multiple of the asset's median
spread.  Every drop is counted by reason; too many bad rows abort the
load.  When the direction column is absent it is inferred from the
sign of the quote change, dropping rows that leave the price unchanged
since only price-moving orders are modeled.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .book import PricePath
from .errors import InputError
from .events import EventStream
from .params import ParameterSet, StreamId
from .pattern import STREAMS_PER_ASSET, build_pattern

__all__ = [
    "IngestReport",
    "IngestResult",
    "ingest",
    "write_events",
    "write_prices",
    "write_table",
    "serialize_params",
    "deserialize_params",
    "save_params",
    "load_params",
    "serialize_fit_report",
]

EVENT_COLUMNS = ("timestamp_ms", "asset", "side", "direction", "price", "volume")

PARAMS_SCHEMA_VERSION = 1

_SIDE_CODE = {0: "a", 1: "b"}
_DIR_CODE = {0: "+", 1: "-"}


def fmt(x: float) -> str:
    """Canonical float rendering: 17 significant digits, round-trip exact."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# ingestion


@dataclass
class IngestReport:
    """Row accounting for one ingestion run."""

    n_rows: int
    n_events: int
    drops: dict[str, int] = field(default_factory=dict)
    symbols: list[str] = field(default_factory=list)
    direction_inferred: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def n_dropped(self) -> int:
        return sum(self.drops.values())


@dataclass
class IngestResult:
    """Cleaned events plus per-asset quote paths and the drop report."""

    events: EventStream
    prices: list[PricePath | None]
    report: IngestReport


@dataclass
class _Row:
    ms: int
    asset: int
    side: int
    direction: int | None
    price: float
    volume: float

    @property
    def time(self) -> float:
        return self.ms / 1000.0

    def key(self):
        return (self.ms, self.asset, self.side, self.direction, self.price, self.volume)


def _parse_rows(reader, header, symbols, drops):
    """First pass: field parsing, symbol mapping, positivity."""
    idx = {name: k for k, name in enumerate(header)}
    for name in ("timestamp_ms", "asset", "side", "price", "volume"):
        if name not in idx:
            raise InputError(f"event file is missing required column '{name}'")
    has_dir = "direction" in idx
    known = None if symbols is None else {s: i for i, s in enumerate(symbols)}
    seen: dict[str, None] = {}
    raw = []
    n_rows = 0
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        n_rows += 1
        try:
            ms = int(row[idx["timestamp_ms"]])
            sym = row[idx["asset"]].strip()
            side_c = row[idx["side"]].strip().lower()
            if side_c not in ("a", "b"):
                raise ValueError(f"bad side {side_c!r}")
            direction = None
            if has_dir:
                dir_c = row[idx["direction"]].strip()
                if dir_c not in ("+", "-"):
                    raise ValueError(f"bad direction {dir_c!r}")
                direction = 0 if dir_c == "+" else 1
            price = float(row[idx["price"]])
            volume = float(row[idx["volume"]])
        except (ValueError, IndexError):
            drops["unparseable"] += 1
            continue
        if not (math.isfinite(price) and price > 0 and math.isfinite(volume) and volume > 0):
            drops["nonpositive"] += 1
            continue
        if known is not None:
            if sym not in known:
                drops["unknown_asset"] += 1
                continue
        else:
            seen.setdefault(sym, None)
        raw.append((sym, _Row(ms, -1, 0 if side_c == "a" else 1, direction, price, volume)))
    if known is None:
        # Deterministic asset order without a caller-supplied list.
        order = sorted(seen)
        known = {s: i for i, s in enumerate(order)}
        out_symbols = order
    else:
        out_symbols = list(symbols)
    rows = []
    for sym, r in raw:
        r.asset = known[sym]
        rows.append(r)
    return rows, out_symbols, has_dir, n_rows


def _order_and_dedup(rows, tolerance_s, drops):
    """Drop rows out of order beyond the tolerance, sort, dedup."""
    kept = []
    high = -math.inf
    tol_ms = int(round(tolerance_s * 1000))
    for k, r in enumerate(rows):
        if r.ms < high - tol_ms:
            drops["out_of_order"] += 1
            continue
        high = max(high, r.ms)
        kept.append((r.ms, k, r))
    kept.sort(key=lambda item: (item[0], item[1]))
    out = []
    prev = None
    for _, _, r in kept:
        if prev is not None and r.key() == prev.key():
            drops["duplicate"] += 1
            continue
        out.append(r)
        prev = r
    return out


def _lattice_ok(price, tick):
    ratio = price / tick
    return abs(ratio - round(ratio)) <= 1e-6


def _spread_and_lattice(rows, n_assets, tick, strict, spread_multiple, drops):
    """Quote-state walk: off-lattice handling and spread-outlier drops."""
    # First walk just collects spread magnitudes for the medians.
    quote = [[math.nan, math.nan] for _ in range(n_assets)]
    samples: list[list[float]] = [[] for _ in range(n_assets)]
    for r in rows:
        quote[r.asset][r.side] = r.price
        a, b = quote[r.asset]
        if math.isfinite(a) and math.isfinite(b):
            samples[r.asset].append(abs(a - b))
    med = [float(np.median(s)) if s else 0.0 for s in samples]

    quote = [[math.nan, math.nan] for _ in range(n_assets)]
    kept = []
    off_lattice = 0
    for r in rows:
        if tick is not None and not _lattice_ok(r.price, tick):
            off_lattice += 1
            if strict:
                drops["off_lattice"] += 1
                continue
        previous = quote[r.asset][r.side]
        quote[r.asset][r.side] = r.price
        a, b = quote[r.asset]
        if (
            med[r.asset] > 0
            and math.isfinite(a)
            and math.isfinite(b)
            and abs(a - b) > spread_multiple * med[r.asset]
        ):
            drops["spread_outlier"] += 1
            quote[r.asset][r.side] = previous
            continue
        kept.append(r)
    return kept, off_lattice


def _resolve_directions(rows, n_assets, drops):
    """Infer +/- from quote changes where the file gave no direction."""
    last = [[math.nan, math.nan] for _ in range(n_assets)]
    kept = []
    for r in rows:
        if r.direction is None:
            prev = last[r.asset][r.side]
            last[r.asset][r.side] = r.price
            if not math.isfinite(prev):
                drops["no_prior_quote"] += 1
                continue
            if r.price == prev:
                drops["unchanged_price"] += 1
                continue
            r.direction = 0 if r.price > prev else 1
        else:
            last[r.asset][r.side] = r.price
        kept.append(r)
    return kept


def _build_paths(rows, n_assets, t_end, tick):
    """Per-asset piecewise-constant quote paths from the kept rows."""
    paths: list[PricePath | None] = []
    for asset in range(n_assets):
        times, asks, bids = [], [], []
        ask = bid = math.nan
        for r in rows:
            if r.asset != asset:
                continue
            if r.side == 0:
                ask = r.price
            else:
                bid = r.price
            if math.isfinite(ask) and math.isfinite(bid):
                times.append(r.time)
                asks.append(ask)
                bids.append(bid)
        if not times:
            paths.append(None)
            continue
        paths.append(
            PricePath(
                times=np.array(times),
                ask=np.array(asks),
                bid=np.array(bids),
                p0=bids[0],
                tick=tick if tick is not None else 1e-5,
                t_start=times[0],
                t_end=max(t_end, times[-1]),
            )
        )
    return paths


def ingest(
    path,
    symbols: list[str] | None = None,
    tick: float | None = None,
    strict: bool = False,
    spread_multiple: float = 10.0,
    max_bad_fraction: float = 0.5,
    out_of_order_tolerance: float = 1.0,
    exclude_intervals=None,
    t_start: float | None = None,
    t_end: float | None = None,
) -> IngestResult:
    """Load and clean a tick CSV into a merged multi-asset EventStream.

    `symbols` fixes the asset index order; without it, symbols found in
    the file are indexed in lexicographic order.  `tick` enables the
    price-lattice check (rows off the lattice are dropped only under
    `strict`).  `exclude_intervals` is an optional sequence of
    (start_s, end_s) windows to excise, e.g. around midnight rollovers;
    it is off by default.  The resulting stream is flagged as left
    truncated since recording starts mid-flow.
    """
    drops: dict[str, int] = {
        "unparseable": 0,
        "nonpositive": 0,
        "unknown_asset": 0,
        "out_of_order": 0,
        "duplicate": 0,
        "off_lattice": 0,
        "spread_outlier": 0,
        "excluded": 0,
        "no_prior_quote": 0,
        "unchanged_price": 0,
    }
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            # A zero-byte file is an empty recording, not a schema error.
            rows, out_symbols, has_dir, n_rows = [], list(symbols or []), True, 0
        else:
            rows, out_symbols, has_dir, n_rows = _parse_rows(
                reader, [h.strip() for h in header], symbols, drops
            )
    n_assets = max(len(out_symbols), 1)

    if exclude_intervals:
        kept = []
        for r in rows:
            t = r.time
            if any(lo <= t < hi for lo, hi in exclude_intervals):
                drops["excluded"] += 1
            else:
                kept.append(r)
        rows = kept

    rows = _order_and_dedup(rows, out_of_order_tolerance, drops)
    rows, off_lattice = _spread_and_lattice(
        rows, n_assets, tick, strict, spread_multiple, drops
    )
    rows = _resolve_directions(rows, n_assets, drops)

    bad = (
        drops["unparseable"]
        + drops["nonpositive"]
        + drops["out_of_order"]
        + drops["spread_outlier"]
        + drops["off_lattice"]
    )
    if n_rows > 0 and bad / n_rows > max_bad_fraction:
        raise InputError(
            f"{bad} of {n_rows} rows dropped as bad "
            f"(limit {max_bad_fraction:.0%}); refusing to continue"
        )

    warnings = []
    if off_lattice and not strict:
        warnings.append(
            f"{off_lattice} prices off the tick lattice (kept; strict mode drops them)"
        )
    if drops["no_prior_quote"] or drops["unchanged_price"]:
        warnings.append(
            "direction inferred from quote changes; rows without a prior quote "
            "or with unchanged price were dropped"
        )

    times = np.array([r.time for r in rows])
    streams = np.array(
        [r.asset * STREAMS_PER_ASSET + r.side * 2 + r.direction for r in rows],
        dtype=np.int64,
    )
    volumes = np.array([r.volume for r in rows])
    lo = t_start if t_start is not None else (float(times[0]) if times.size else 0.0)
    hi = t_end if t_end is not None else (float(times[-1]) if times.size else lo)
    events = EventStream.from_events(
        times, streams, volumes, lo, hi,
        n_assets=n_assets, left_truncated=True,
    )
    report = IngestReport(
        n_rows=n_rows,
        n_events=len(events),
        drops={k: v for k, v in drops.items() if v},
        symbols=out_symbols,
        direction_inferred=not has_dir,
        warnings=warnings,
    )
    return IngestResult(events=events, prices=_build_paths(rows, n_assets, hi, tick), report=report)


# ---------------------------------------------------------------------------
# writers


def default_symbols(n_assets: int) -> list[str]:
    return [f"A{k}" for k in range(n_assets)]


def _check_symbols(symbols, n_assets):
    if len(symbols) != n_assets:
        raise InputError(f"{len(symbols)} symbols for {n_assets} assets")
    for s in symbols:
        if "," in s or "\n" in s or not s:
            raise InputError(f"symbol {s!r} is empty or contains a delimiter")


def write_events(
    path,
    events: EventStream,
    symbols: list[str] | None = None,
    p0=1.0,
    tick: float = 1e-5,
    initial_spread_ticks: int = 1,
) -> None:
    """Emit an EventStream as a tick CSV.

    Prices are reconstructed from the one-tick-per-event quote dynamics
    with opening bid `p0` (scalar or per asset).  Timestamps are
    rounded to whole milliseconds, the native resolution of the format.
    """
    if symbols is None:
        symbols = default_symbols(events.n_assets)
    _check_symbols(symbols, events.n_assets)
    p0 = np.broadcast_to(np.asarray(p0, dtype=float), (events.n_assets,))
    quote = np.empty((events.n_assets, 2))
    quote[:, 0] = p0 + initial_spread_ticks * tick
    quote[:, 1] = p0
    lines = [",".join(EVENT_COLUMNS)]
    for t, s, v in zip(events.times, events.streams, events.volumes):
        sid = StreamId.from_index(int(s))
        side = int(sid.side)
        sign = 1 if int(sid.direction) == 0 else -1
        quote[sid.asset, side] += sign * tick
        lines.append(
            ",".join(
                (
                    str(int(round(t * 1000))),
                    symbols[sid.asset],
                    _SIDE_CODE[side],
                    _DIR_CODE[int(sid.direction)],
                    fmt(quote[sid.asset, side]),
                    fmt(v),
                )
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_prices(path, paths, symbols: list[str] | None = None) -> None:
    """Quote-path table: one row per jump, columns timestamp_ms, asset, ask, bid."""
    if symbols is None:
        symbols = default_symbols(len(paths))
    _check_symbols(symbols, len(paths))
    lines = ["timestamp_ms,asset,ask,bid"]
    for sym, p in zip(symbols, paths):
        if p is None:
            continue
        for t, a, b in zip(p.times, p.ask, p.bid):
            lines.append(
                ",".join((str(int(round(t * 1000))), sym, fmt(a), fmt(b)))
            )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_table(path, header: list[str], rows) -> None:
    """Generic CSV table; floats rendered at 17 significant digits."""

    def cell(x):
        if isinstance(x, str):
            if "," in x or "\n" in x:
                raise InputError(f"table cell {x!r} contains a delimiter")
            return x
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        return fmt(x)

    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise InputError("table row width does not match header")
        lines.append(",".join(cell(x) for x in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# parameter serialization


def _json_number_list(values) -> str:
    return "[" + ", ".join(fmt(v) for v in values) + "]"


def serialize_params(params: ParameterSet) -> str:
    """Keyed-text (JSON) rendering with 17-significant-digit numbers.

    The matrix is emitted row by row; `deserialize_params` reproduces
    the ParameterSet bit-exactly.
    """
    rows = ",\n    ".join(_json_number_list(row) for row in params.branching)
    return (
        "{\n"
        f'  "schema_version": {PARAMS_SCHEMA_VERSION},\n'
        f'  "n_assets": {params.n_assets},\n'
        f'  "mu": {_json_number_list(params.mu)},\n'
        f'  "branching": [\n    {rows}\n  ],\n'
        f'  "decay": {_json_number_list(params.decay)},\n'
        f'  "impact_exponent": {_json_number_list(params.impact_exponent)},\n'
        f'  "mark_rate": {_json_number_list(params.mark_rate)}\n'
        "}\n"
    )


def _require(obj: dict, key: str):
    if key not in obj:
        raise InputError(f"parameter file is missing key '{key}'")
    return obj[key]


def _as_vector(obj, key, n):
    raw = _require(obj, key)
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (n,):
        raise InputError(f"'{key}' must be a flat list of {n} numbers, got shape {arr.shape}")
    return arr


def deserialize_params(text: str) -> ParameterSet:
    """Parse serialized parameters, validating against the interaction
    pattern of the declared asset count."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"parameter file is not valid JSON: {e.msg} (line {e.lineno})") from e
    if not isinstance(obj, dict):
        raise InputError("parameter file must contain a JSON object")
    version = _require(obj, "schema_version")
    if version != PARAMS_SCHEMA_VERSION:
        raise InputError(
            f"unsupported schema_version {version}; this build reads version "
            f"{PARAMS_SCHEMA_VERSION}"
        )
    n_assets = _require(obj, "n_assets")
    if not isinstance(n_assets, int) or n_assets < 1:
        raise InputError(f"'n_assets' must be a positive integer, got {n_assets!r}")
    m = STREAMS_PER_ASSET * n_assets
    mu = _as_vector(obj, "mu", m)
    branching = np.asarray(_require(obj, "branching"), dtype=float)
    if branching.shape != (m, m):
        raise InputError(
            f"'branching' must be a {m}x{m} matrix, got shape {branching.shape}"
        )
    decay = _as_vector(obj, "decay", m)
    exponent = _as_vector(obj, "impact_exponent", m)
    mark_rate = _as_vector(obj, "mark_rate", m)
    return ParameterSet(
        mu=mu,
        branching=branching,
        decay=decay,
        impact_exponent=exponent,
        mark_rate=mark_rate,
        pattern=build_pattern(n_assets),
    )


def save_params(path, params: ParameterSet) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(serialize_params(params))


def load_params(path) -> ParameterSet:
    with open(path) as fh:
        return deserialize_params(fh.read())


# ---------------------------------------------------------------------------
# fit report serialization


def serialize_fit_report(report) -> str:
    """JSON rendering of a FitReport, parameters inlined."""
    mark_lines = []
    for mf in report.mark_fits:
        mark_lines.append(
            "    {"
            f'"stream": {mf.stream}, "n_obs": {mf.n_obs}, "rate": {fmt(mf.rate)}, '
            f'"preferred": "{mf.preferred}", '
            f'"low_confidence": {"true" if mf.low_confidence else "false"}'
            "}"
        )
    marks = "[\n" + ",\n".join(mark_lines) + "\n  ]" if mark_lines else "[]"
    warn = ", ".join(json.dumps(w) for w in report.warnings)
    params_block = "\n".join(
        "  " + line for line in serialize_params(report.params).strip().splitlines()
    ).lstrip()
    return (
        "{\n"
        f'  "converged": {"true" if report.converged else "false"},\n'
        f'  "iterations": {report.iterations},\n'
        f'  "n_events": {report.n_events},\n'
        f'  "log_likelihood": {fmt(report.loglik)},\n'
        f'  "mark_log_likelihood": {fmt(report.mark_loglik)},\n'
        f'  "spectral_radius": {fmt(report.spectral_radius)},\n'
        f'  "message": {json.dumps(report.message)},\n'
        f'  "warnings": [{warn}],\n'
        f'  "mark_fits": {marks},\n'
        f'  "params": {params_block}\n'
        "}\n"
    )

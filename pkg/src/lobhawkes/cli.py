"""Command-line surface.

Subcommands: simulate, fit, gof, analyze, forecast, cost.  Exit codes:
0 success, 2 input error (bad flags, unreadable or malformed files),
3 numerical failure, 4 non-stationary parameters treated as an error
(fits only under --strict; simulate always unless explicitly allowed).
All randomness is controlled by --seed and every output file is
byte-deterministic given the inputs and the package version.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import analytics
from .errors import InputError, NonStationaryError, NumericalError
from .estimate import FitOptions, fit, fit_windows
from .forecast import ImpactLadder, market_impact_cost, next_event_forecast
from .gof import gof_report
from .params import stream_label
from .io import (
    default_symbols,
    fmt,
    ingest,
    load_params,
    save_params,
    serialize_fit_report,
    write_events,
    write_prices,
    write_table,
)
from .simulate import SimConfig, simulate

__all__ = ["main", "entry", "build_parser"]


def _parse_symbols(text):
    if text is None:
        return None
    symbols = [s.strip() for s in text.split(",") if s.strip()]
    if not symbols:
        raise InputError("--assets must list at least one symbol")
    return symbols


def _parse_taus(text, grid_step):
    if text is None:
        return analytics.default_taus(grid_step)
    try:
        taus = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise InputError(f"--taus must be comma-separated numbers: {e}") from e
    if not taus:
        raise InputError("--taus lists no values")
    return taus


def _ingested(args):
    symbols = _parse_symbols(getattr(args, "assets", None))
    result = ingest(
        args.input,
        symbols=symbols,
        tick=getattr(args, "tick_size", None),
        strict=getattr(args, "strict", False),
    )
    events = result.events
    burn = getattr(args, "burn_in", 0.0)
    if burn:
        if not 0 <= burn < 1:
            raise InputError(f"--burn-in must be in [0, 1), got {burn}")
        events = events.restrict(events.t_start + burn * events.span, events.t_end)
    for w in result.report.warnings:
        print(f"note: {w}", file=sys.stderr)
    if len(events) == 0:
        raise InputError(f"no usable events in {args.input}")
    return events, result


def _check_streams(params, events):
    if params.n_streams != events.n_streams:
        raise InputError(
            f"parameter file covers {params.n_streams} streams but the data "
            f"has {events.n_streams}"
        )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    params = load_params(args.params)
    cfg = SimConfig(
        horizon_end=args.horizon,
        seed=args.seed,
        p0=args.p0,
        tick=args.tick_size,
        max_events=args.max_events,
        initial_spread_ticks=args.spread_ticks,
        allow_nonstationary=args.allow_nonstationary,
    )
    result = simulate(params, cfg)
    symbols = _parse_symbols(args.assets) or default_symbols(params.n_assets)
    write_events(
        args.output,
        result.events,
        symbols=symbols,
        p0=args.p0,
        tick=args.tick_size,
        initial_spread_ticks=args.spread_ticks,
    )
    if args.prices:
        write_prices(args.prices, result.prices, symbols=symbols)
    flag = " (truncated at event cap)" if result.truncated else ""
    print(
        f"simulated {len(result.events)} events on "
        f"[{fmt(result.events.t_start)}, {fmt(result.events.t_end)}]{flag}"
    )
    return 0


def _cmd_fit(args) -> int:
    events, _ = _ingested(args)
    options = FitOptions(tie_impact_exponent=args.tie_impact)
    if args.window:
        if args.output:
            raise InputError(
                "--output holds a whole-sample report; with --window use "
                "--params to save the averaged parameters"
            )
        wf = fit_windows(events, args.window, options=options)
        for (lo, hi), rep in zip(wf.window_bounds, wf.reports):
            print(
                f"window [{fmt(lo)}, {fmt(hi)}]: loglik={fmt(rep.loglik)} "
                f"spectral_radius={fmt(rep.spectral_radius)} converged={rep.converged}"
            )
        if args.params:
            save_params(args.params, wf.average)
        radius = max(rep.spectral_radius for rep in wf.reports)
        print(f"averaged parameters over {len(wf.reports)} windows")
    else:
        report = fit(events, options=options)
        for w in report.warnings:
            print(f"note: {w}", file=sys.stderr)
        print(
            f"fit: n_events={report.n_events} converged={report.converged} "
            f"iterations={report.iterations} loglik={fmt(report.loglik)} "
            f"spectral_radius={fmt(report.spectral_radius)}"
        )
        if args.output:
            with open(args.output, "w", newline="") as fh:
                fh.write(serialize_fit_report(report))
        if args.params:
            save_params(args.params, report.params)
        radius = report.spectral_radius
    if args.strict and radius >= 1.0:
        print(
            f"error: fitted spectral radius {fmt(radius)} >= 1 (non-stationary)",
            file=sys.stderr,
        )
        return 4
    return 0


def _cmd_gof(args) -> int:
    events, _ = _ingested(args)
    params = load_params(args.params)
    _check_streams(params, events)
    report = gof_report(params, events, level=args.level)
    if args.output:
        rows = [
            (sg.stream, sg.label, sg.n_residuals, sg.ks_distance, sg.p_value)
            for sg in report.streams
        ]
        rows.append((-1, "pooled", report.pooled_n, report.pooled_ks, report.pooled_p))
        write_table(
            args.output,
            ["stream", "label", "n_residuals", "ks_distance", "p_value"],
            rows,
        )
    verdict = "pass" if report.passed(args.level) else "fail"
    print(
        f"gof: pooled n={report.pooled_n} ks={fmt(report.pooled_ks)} "
        f"p={fmt(report.pooled_p)} -> {verdict} at level {fmt(args.level)}"
    )
    print(f"note: {report.note}", file=sys.stderr)
    return 0


def _cmd_analyze(args) -> int:
    events, result = _ingested(args)
    symbols = result.report.symbols or default_symbols(events.n_assets)
    taus = _parse_taus(args.taus, args.grid_step)
    os.makedirs(args.output, exist_ok=True)
    step = args.grid_step
    window = args.window if args.window else None

    sampled = {}
    for a, path in enumerate(result.prices):
        if path is None:
            print(f"note: no two-sided quotes for {symbols[a]}; skipped", file=sys.stderr)
            continue
        start = path.times[0]
        end = events.t_end
        if events.t_start > start:
            start = events.t_start
        count = int(np.floor((end - start) / step)) + 1
        if count < 2:
            print(f"note: horizon too short to sample {symbols[a]}", file=sys.stderr)
            continue
        grid = analytics.RegularGrid(start=float(start), step=step, count=count)
        sampled[a] = analytics.sample_path(path, grid, price="mid", log=True)

    sig_curves = {}
    for a, x in sampled.items():
        curve = analytics.signature_plot(x, step, taus, window=window)
        sig_curves[a] = curve
        slope, r2 = analytics.power_law_fit(curve)
        print(f"signature {symbols[a]}: slope={fmt(slope)} r2={fmt(r2)}")
    if sig_curves:
        common = sorted(set.intersection(*(set(c) for c in sig_curves.values())))
        write_table(
            os.path.join(args.output, "signature.csv"),
            ["tau"] + [f"variance_{symbols[a]}" for a in sig_curves],
            [[t] + [sig_curves[a][t] for a in sig_curves] for t in common],
        )

    pairs = [(i, j) for i in sampled for j in sampled if i < j]
    if pairs:
        epps = {}
        for i, j in pairs:
            n = min(sampled[i].size, sampled[j].size)
            epps[(i, j)] = analytics.epps_correlation(
                sampled[i][:n], sampled[j][:n], step, taus, window=window
            )
        common = sorted(set.intersection(*(set(c) for c in epps.values())))
        write_table(
            os.path.join(args.output, "epps.csv"),
            ["tau"] + [f"corr_{symbols[i]}_{symbols[j]}" for i, j in pairs],
            [[t] + [epps[p][t] for p in pairs] for t in common],
        )

    rows = []
    for s in range(events.n_streams):
        d = analytics.durations(events, stream=s)
        rows.append(_duration_row(s, stream_label(s), d))
    rows.append(_duration_row(-1, "pooled", analytics.durations(events)))
    write_table(
        os.path.join(args.output, "durations.csv"),
        ["stream", "label", "count", "mean", "std", "min", "median", "max"],
        rows,
    )
    print(f"analysis tables written to {args.output}")
    return 0


def _duration_row(stream, label, d):
    if d.size == 0:
        return (stream, label, 0, 0.0, 0.0, 0.0, 0.0, 0.0)
    return (
        stream,
        label,
        int(d.size),
        float(np.mean(d)),
        float(np.std(d)),
        float(np.min(d)),
        float(np.median(d)),
        float(np.max(d)),
    )


def _cmd_forecast(args) -> int:
    events, _ = _ingested(args)
    params = load_params(args.params)
    _check_streams(params, events)
    report = next_event_forecast(
        params,
        events,
        horizon=args.horizon,
        n_grid=args.points,
        rollouts=args.rollouts,
        seed=args.seed,
    )
    rows = [
        [report.taus[k]] + [report.survival[s, k] for s in range(len(report.labels))]
        for k in range(report.taus.size)
    ]
    write_table(args.output, ["tau"] + list(report.labels), rows)
    print(f"most probable next stream: {report.labels[report.most_probable_stream]}")
    for s, label in enumerate(report.labels):
        expected = report.expected_time[s]
        expected_txt = fmt(expected) if np.isfinite(expected) else "inf"
        print(
            f"stream {label}: hazard_share={fmt(report.hazard_share[s])} "
            f"expected_wait={expected_txt}"
        )
    if report.rollout is not None:
        ro = report.rollout
        shares = " ".join(
            f"{label}={fmt(p)}" for label, p in zip(report.labels, ro.stream_probability)
        )
        print(
            f"rollouts: n={ro.n_rollouts} no_event={fmt(ro.no_event_probability)} "
            f"next-stream {shares}"
        )
    return 0


def _read_ladder(path) -> ImpactLadder:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["offset", "volume"]:
            raise InputError("ladder file must have header 'offset,volume'")
        offsets, volumes = [], []
        for k, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                offsets.append(int(row[0]))
                volumes.append(float(row[1]))
            except (ValueError, IndexError) as e:
                raise InputError(f"ladder file line {k}: {e}") from e
    return ImpactLadder(offsets=offsets, volumes=volumes)


def _cmd_cost(args) -> int:
    ladder = _read_ladder(args.ladder)
    report = market_impact_cost(ladder, args.quantity, args.tick_size)
    print(
        f"cost={fmt(report.cost)} filled={fmt(report.filled)} "
        f"unfilled={fmt(report.unfilled)}"
    )
    if args.output:
        write_table(
            args.output,
            ["offset", "quantity"],
            [(x, q) for x, q in report.fills],
        )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lobhawkes",
        description="Marked Hawkes modeling of best bid/ask order book events.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common_ingest(sp):
        sp.add_argument("--input", required=True, help="event CSV to load")
        sp.add_argument("--assets", help="comma-separated symbol order")
        sp.add_argument("--tick-size", type=float, default=None,
                        help="tick size for the price-lattice check")
        sp.add_argument("--strict", action="store_true",
                        help="drop off-lattice rows; escalate warnings")
        sp.add_argument("--burn-in", type=float, default=0.0,
                        help="fraction of the horizon to discard from the start")

    sp = sub.add_parser("simulate", help="generate events from a parameter file")
    sp.add_argument("--params", required=True)
    sp.add_argument("--horizon", type=float, required=True, help="end time in seconds")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", required=True, help="event CSV to write")
    sp.add_argument("--prices", help="optional quote-path CSV to write")
    sp.add_argument("--assets", help="symbols for the output file")
    sp.add_argument("--p0", type=float, default=1.0, help="opening bid price")
    sp.add_argument("--tick-size", type=float, default=1e-5)
    sp.add_argument("--spread-ticks", type=int, default=1, help="opening spread in ticks")
    sp.add_argument("--max-events", type=int, default=1_000_000)
    sp.add_argument("--allow-nonstationary", action="store_true")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("fit", help="estimate parameters from events")
    common_ingest(sp)
    sp.add_argument("--output", help="fit report JSON to write")
    sp.add_argument("--params", help="fitted parameter JSON to write")
    sp.add_argument("--tie-impact", action="store_true",
                    help="share one impact exponent across streams")
    sp.add_argument("--window", type=float, default=0.0,
                    help="fit in windows of this length and average")
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("gof", help="time-rescaling goodness of fit")
    common_ingest(sp)
    sp.add_argument("--params", required=True, help="parameter JSON to test")
    sp.add_argument("--output", help="per-stream KS table CSV")
    sp.add_argument("--level", type=float, default=0.01)
    sp.set_defaults(func=_cmd_gof)

    sp = sub.add_parser("analyze", help="signature plot, lag correlation, durations")
    common_ingest(sp)
    sp.add_argument("--output", required=True, help="directory for the tables")
    sp.add_argument("--grid-step", type=float, default=0.1, help="base sampling step")
    sp.add_argument("--taus", help="comma-separated sampling lags")
    sp.add_argument("--window", type=float, default=0.0,
                    help="average statistics over windows of this length")
    sp.set_defaults(func=_cmd_analyze)

    sp = sub.add_parser("forecast", help="next-event survival from frozen history")
    common_ingest(sp)
    sp.add_argument("--params", required=True)
    sp.add_argument("--horizon", type=float, required=True, help="forecast span")
    sp.add_argument("--output", required=True, help="survival table CSV")
    sp.add_argument("--points", type=int, default=101, help="grid points on [0, horizon]")
    sp.add_argument("--rollouts", type=int, default=0,
                    help="Monte Carlo continuations (0 = closed form only)")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_forecast)

    sp = sub.add_parser("cost", help="market-impact cost of sweeping a ladder")
    sp.add_argument("--ladder", required=True, help="CSV with columns offset,volume")
    sp.add_argument("--quantity", type=float, required=True)
    sp.add_argument("--tick-size", type=float, default=1e-5)
    sp.add_argument("--output", help="optional fills table CSV")
    sp.set_defaults(func=_cmd_cost)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NonStationaryError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())

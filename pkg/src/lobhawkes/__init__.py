"""Marked multivariate Hawkes modeling of best bid/ask order books.

Four event streams per asset (ask up, ask down, bid up, bid down) with
exponential decay kernels and power-law volume impact, plus the tools
around the model: exact-likelihood estimation, thinning simulation,
time-rescaling goodness of fit, microstructure analytics, next-event
forecasting, and transaction-cost accounting.
"""

from ._backend import BACKEND, backend_name
from .analytics import (
    RegularGrid,
    default_taus,
    duration_volume_table,
    durations,
    empirical_rates,
    epps_correlation,
    power_law_fit,
    previous_tick_sample,
    sample_path,
    signature_plot,
)
from .book import PricePath, prices_from_counts, spread_series
from .errors import InputError, NonStationaryError, NumericalError
from .estimate import (
    FitOptions,
    FitReport,
    MarkFit,
    WindowedFit,
    fit,
    fit_marks,
    fit_windows,
    log_likelihood,
    mark_log_likelihood,
)
from .events import EventStream, MarkedEvent
from .forecast import (
    CostReport,
    ForecastReport,
    ImpactLadder,
    market_impact_cost,
    next_event_forecast,
    round_trip_cost,
    survival,
    survival_curve,
)
from .gof import GofReport, gof_report, ks_exponential, rescaled_residuals, time_change
from .intensity import (
    IntensityTrace,
    RecursionState,
    compensator,
    compensator_curve,
    intensities_at,
    intensity,
    intensity_trace,
    is_stationary,
    spectral_radius,
)
from .io import (
    IngestResult,
    deserialize_params,
    ingest,
    load_params,
    save_params,
    serialize_params,
    write_events,
)
from .params import (
    Direction,
    ExpKernel,
    ParameterSet,
    PowerImpact,
    Side,
    StreamId,
    stream_label,
    symmetric_params,
)
from .pattern import InteractionPattern, build_pattern
from .simulate import SimConfig, SimResult, continue_from, make_rng, simulate, simulate_many

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "backend_name",
    "RegularGrid",
    "default_taus",
    "duration_volume_table",
    "durations",
    "empirical_rates",
    "epps_correlation",
    "power_law_fit",
    "previous_tick_sample",
    "sample_path",
    "signature_plot",
    "PricePath",
    "prices_from_counts",
    "spread_series",
    "InputError",
    "NonStationaryError",
    "NumericalError",
    "FitOptions",
    "FitReport",
    "MarkFit",
    "WindowedFit",
    "fit",
    "fit_marks",
    "fit_windows",
    "log_likelihood",
    "mark_log_likelihood",
    "EventStream",
    "MarkedEvent",
    "CostReport",
    "ForecastReport",
    "ImpactLadder",
    "market_impact_cost",
    "next_event_forecast",
    "round_trip_cost",
    "survival",
    "survival_curve",
    "GofReport",
    "gof_report",
    "ks_exponential",
    "rescaled_residuals",
    "time_change",
    "IntensityTrace",
    "RecursionState",
    "compensator",
    "compensator_curve",
    "intensities_at",
    "intensity",
    "intensity_trace",
    "is_stationary",
    "spectral_radius",
    "IngestResult",
    "deserialize_params",
    "ingest",
    "load_params",
    "save_params",
    "serialize_params",
    "write_events",
    "Direction",
    "ExpKernel",
    "ParameterSet",
    "PowerImpact",
    "Side",
    "StreamId",
    "stream_label",
    "symmetric_params",
    "InteractionPattern",
    "build_pattern",
    "SimConfig",
    "SimResult",
    "continue_from",
    "make_rng",
    "simulate",
    "simulate_many",
    "__version__",
]

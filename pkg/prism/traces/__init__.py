"""
Job traces → demand series, synthetic workloads, supervised windows and statistics.
"""

from prism.traces.records import Priority, TraceRecord, read_trace_csv, records_to_frame, validate_records
from prism.traces.series import (
    HOURLY,
    DemandSeries,
    SeriesKey,
    aggregate,
    aggregate_by_key,
    calendar_stamps,
    read_series_by_key,
    read_series_csv,
    write_series_csv,
)
from prism.traces.stats import SeriesStats, dominant_periods, stats
from prism.traces.synth import (
    SynthComponents,
    SynthConfig,
    TenantArchetype,
    synthesize,
    synthesize_components,
    synthesize_records,
)
from prism.traces.windows import WindowBatch, WindowSplits, forecast_window, make_windows, window_count

__all__ = [
    "HOURLY",
    "DemandSeries",
    "Priority",
    "SeriesKey",
    "SeriesStats",
    "SynthComponents",
    "SynthConfig",
    "TenantArchetype",
    "TraceRecord",
    "WindowBatch",
    "WindowSplits",
    "aggregate",
    "aggregate_by_key",
    "calendar_stamps",
    "dominant_periods",
    "forecast_window",
    "make_windows",
    "read_series_by_key",
    "read_series_csv",
    "read_trace_csv",
    "records_to_frame",
    "stats",
    "synthesize",
    "synthesize_components",
    "synthesize_records",
    "validate_records",
    "window_count",
]

import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from prism.errors import EmptySeriesError, RecordValidationError, SeriesFormatError
from prism.traces import (
    DemandSeries,
    Priority,
    SeriesKey,
    TraceRecord,
    aggregate,
    aggregate_by_key,
    read_series_by_key,
    read_series_csv,
    read_trace_csv,
    records_to_frame,
    write_series_csv,
)

HOUR = 3600.0


def _job(job_id, start_h, end_h, gpus, priority=Priority.HP, org="org-a") -> TraceRecord:
    return TraceRecord(job_id, start_h * HOUR, start_h * HOUR, end_h * HOUR, gpus, priority, org)


class TestAggregate(unittest.TestCase):
    """
    Time-weighted bucket aggregation of job records.
    """

    def test_overlapping_jobs(self):
        """
        2 GPUs over [0h,3h) plus 1 GPU over [1h,2h) aggregate hourly to [2,3,2].
        """
        series = aggregate([_job("a", 0, 3, 2.0), _job("b", 1, 2, 1.0)])
        np.testing.assert_allclose(series.values, [2.0, 3.0, 2.0])
        self.assertEqual(series.start, pd.Timestamp(0, tz="UTC"))

    def test_zero_request_gives_zero_series(self):
        """
        A single job requesting 0 GPUs yields an all-zero series.
        """
        series = aggregate([_job("a", 0, 4, 0.0)])
        np.testing.assert_array_equal(series.values, np.zeros(4))

    def test_half_bucket_overlap(self):
        """
        A 4-GPU job covering half a bucket contributes 2 to it.
        """
        series = aggregate([_job("a", 0, 0.5, 4.0)])
        np.testing.assert_allclose(series.values, [2.0])

    def test_reversed_interval_lists_job_ids(self):
        """
        Records ending before they start are rejected with their job ids.
        """
        with self.assertRaises(RecordValidationError) as ctx:
            aggregate([_job("ok", 0, 1, 1.0), _job("bad-1", 3, 2, 1.0), _job("bad-2", 5, 4, 1.0)])
        self.assertEqual(ctx.exception.job_ids, ["bad-1", "bad-2"])

    def test_empty_after_filter(self):
        """
        A key that matches no record raises EmptySeriesError.
        """
        with self.assertRaises(EmptySeriesError):
            aggregate([_job("a", 0, 1, 1.0)], series_key="Spot/*")

    def test_filter_by_key(self):
        """
        Priority and org filters select matching records only.
        """
        records = [
            _job("a", 0, 2, 1.0, Priority.HP, "org-a"),
            _job("b", 0, 2, 3.0, Priority.SPOT, "org-b"),
        ]
        np.testing.assert_allclose(aggregate(records, series_key="Spot").values, [3.0, 3.0])
        np.testing.assert_allclose(aggregate(records, series_key="*/org-a").values, [1.0, 1.0])
        np.testing.assert_allclose(aggregate(records).values, [4.0, 4.0])

    def test_linearity(self):
        """
        aggregate(A ∪ B) equals aggregate(A) + aggregate(B) on a shared grid within 1e-9.
        """
        rng = np.random.default_rng(0)
        starts = rng.uniform(0, 40, size=60)
        records = [
            _job(f"j{i}", s, s + d, g)
            for i, (s, d, g) in enumerate(zip(starts, rng.uniform(0, 10, 60), rng.uniform(0, 8, 60), strict=True))
        ]
        bounds = {"start": pd.Timestamp(0, tz="UTC"), "end": pd.Timestamp(0, tz="UTC") + pd.Timedelta(hours=60)}
        union = aggregate(records, **bounds).values
        parts = aggregate(records[:25], **bounds).values + aggregate(records[25:], **bounds).values
        np.testing.assert_allclose(union, parts, atol=1e-9)

    def test_order_independence(self):
        """
        Shuffling the record list does not change the aggregated values.
        """
        records = [_job(f"j{i}", i * 0.3, i * 0.3 + 2.5, 1.0 + i) for i in range(20)]
        shuffled = list(reversed(records))
        np.testing.assert_allclose(aggregate(records).values, aggregate(shuffled).values, atol=1e-9)

    def test_by_key_series_are_aligned(self):
        """
        Per-key series share one grid and add up to the total.
        """
        records = [
            _job("a", 0, 3, 2.0, Priority.HP, "org-a"),
            _job("b", 1, 5, 1.0, Priority.SPOT, "org-b"),
        ]
        groups = aggregate_by_key(records)
        self.assertEqual(sorted(groups), ["HP/org-a", "Spot/org-b"])
        lengths = {len(s) for s in groups.values()}
        self.assertEqual(lengths, {5})
        total = sum(s.values for s in groups.values())
        np.testing.assert_allclose(total, aggregate(records).values)


class TestSeriesKey(unittest.TestCase):
    """
    Parsing and matching of priority/org selectors.
    """

    def test_parse_forms(self):
        """
        Full, wildcard and bare-priority keys all parse.
        """
        self.assertEqual(SeriesKey.parse("HP/org-a"), SeriesKey(Priority.HP, "org-a"))
        self.assertEqual(SeriesKey.parse("*/org-a"), SeriesKey(None, "org-a"))
        self.assertEqual(SeriesKey.parse("Spot"), SeriesKey(Priority.SPOT, None))
        self.assertEqual(str(SeriesKey.parse("Spot")), "Spot/*")

    def test_malformed_key(self):
        """
        Unknown priorities are rejected.
        """
        with self.assertRaises(SeriesFormatError):
            SeriesKey.parse("LP/org-a")


class TestSeriesFiles(unittest.TestCase):
    """
    Trace and series CSV round trips through the declared formats.
    """

    def setUp(self):
        """
        Create a scratch directory.
        """
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        """
        Remove the scratch directory.
        """
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_trace_csv_accepts_iso_and_unix_times(self):
        """
        ISO-8601 and unix-second timestamps parse to the same instants.
        """
        path = self.tmp / "trace.csv"
        path.write_text(
            "job_id,submit_time,start_time,end_time,gpu_request,priority,org\n"
            "a,2024-04-01T00:00:00Z,2024-04-01T00:00:00Z,2024-04-01T02:00:00Z,2,HP,org-a\n",
            encoding="utf-8",
        )
        records = read_trace_csv(path)
        unix = self.tmp / "unix.csv"
        records_to_frame(records).to_csv(unix, index=False)
        again = read_trace_csv(unix)
        self.assertEqual(records, again)
        self.assertEqual(records[0].end_time - records[0].start_time, 7200.0)

    def test_trace_missing_column(self):
        """
        A trace without the org column is a format error.
        """
        path = self.tmp / "trace.csv"
        path.write_text("job_id,submit_time,start_time,end_time,gpu_request,priority\n", encoding="utf-8")
        with self.assertRaises(SeriesFormatError):
            read_trace_csv(path)

    def test_single_series_roundtrip(self):
        """
        write_series_csv then read_series_csv preserves values and grid.
        """
        series = DemandSeries(pd.Timestamp("2024-04-01", tz="UTC"), np.array([1.0, 2.5, 0.0, 4.0]))
        path = write_series_csv(series, self.tmp / "series.csv")
        header = path.read_text(encoding="utf-8").splitlines()[0]
        self.assertEqual(header, "timestamp,value")
        back = read_series_csv(path)
        np.testing.assert_array_equal(back.values, series.values)
        self.assertEqual(back.start, series.start)
        self.assertEqual(back.bucket_width, pd.Timedelta(hours=1))

    def test_multi_series_selection(self):
        """
        A keyed file sums matching keys, or every key without a selector.
        """
        start = pd.Timestamp("2024-04-01", tz="UTC")
        groups = {
            "HP/org-a": DemandSeries(start, np.array([1.0, 2.0])),
            "Spot/org-b": DemandSeries(start, np.array([3.0, 5.0])),
        }
        path = write_series_csv(groups, self.tmp / "multi.csv")
        np.testing.assert_array_equal(read_series_csv(path).values, [4.0, 7.0])
        np.testing.assert_array_equal(read_series_csv(path, "HP").values, [1.0, 2.0])
        with self.assertRaises(EmptySeriesError):
            read_series_csv(path, "*/org-z")

    def test_keyed_file_splits_by_key(self):
        """
        read_series_by_key returns one series per key with its parsed key attached.
        """
        start = pd.Timestamp("2024-04-01", tz="UTC")
        groups = {
            "HP/org-a": DemandSeries(start, np.array([1.0, 2.0, 3.0])),
            "Spot/org-b": DemandSeries(start, np.array([3.0, 5.0, 0.0])),
        }
        path = write_series_csv(groups, self.tmp / "multi.csv")
        loaded = read_series_by_key(path)
        self.assertEqual(list(loaded), ["HP/org-a", "Spot/org-b"])
        np.testing.assert_array_equal(loaded["Spot/org-b"].values, [3.0, 5.0, 0.0])
        self.assertEqual(loaded["HP/org-a"].series_key, SeriesKey(Priority.HP, "org-a"))
        with self.assertRaises(SeriesFormatError):
            read_series_by_key(write_series_csv(groups["HP/org-a"], self.tmp / "single.csv"))

    def test_uneven_timestamps_rejected(self):
        """
        Gaps in the timestamp grid are a format error.
        """
        path = self.tmp / "gappy.csv"
        path.write_text(
            "timestamp,value\n2024-04-01T00:00:00Z,1\n2024-04-01T01:00:00Z,1\n2024-04-01T03:00:00Z,1\n",
            encoding="utf-8",
        )
        with self.assertRaises(SeriesFormatError):
            read_series_csv(path)


if __name__ == "__main__":
    unittest.main()

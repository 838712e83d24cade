import unittest

import numpy as np
import pandas as pd

from prism.errors import ConfigError, SizingError
from prism.traces import DemandSeries, forecast_window, make_windows, window_count

START = pd.Timestamp("2024-04-01", tz="UTC")


def _ramp(length: int) -> DemandSeries:
    return DemandSeries(START, np.arange(length, dtype=float))


class TestMakeWindows(unittest.TestCase):
    """
    Window enumeration, split boundaries and calendar stamps.
    """

    def test_single_window(self):
        """
        len=100, L=96, H=4, stride=1 and an all-train split yields exactly one window.
        """
        splits = make_windows(_ramp(100), 96, 4, 1, (1.0, 0.0, 0.0))
        self.assertEqual(len(splits.train), 1)
        self.assertEqual(len(splits.val), 0)
        self.assertEqual(len(splits.test), 0)

    def test_too_short(self):
        """
        L+H beyond the series length is a sizing error naming the minimum.
        """
        with self.assertRaises(SizingError) as ctx:
            make_windows(_ramp(50), 48, 4, 1, (1.0, 0.0, 0.0))
        self.assertIn("52", str(ctx.exception))

    def test_stride_equal_to_horizon(self):
        """
        stride=H gives floor((len−L−H)/H)+1 windows with non-overlapping targets.
        """
        length, lookback, horizon = 203, 24, 12
        splits = make_windows(_ramp(length), lookback, horizon, horizon, (1.0, 0.0, 0.0))
        self.assertEqual(len(splits.train), (length - lookback - horizon) // horizon + 1)
        targets = splits.train.Y.reshape(-1)
        self.assertEqual(len(np.unique(targets)), len(targets))

    def test_split_fractions_must_sum_to_one(self):
        """
        Fractions that do not sum to 1 are a config error.
        """
        with self.assertRaises(ConfigError):
            make_windows(_ramp(100), 10, 2, 1, (0.5, 0.2, 0.2))

    def test_no_leakage_and_no_boundary_crossing(self):
        """
        Targets follow history, and windows stay inside chronological segments.
        """
        length = 400
        splits = make_windows(_ramp(length), 24, 6, 1, (0.7, 0.15, 0.15))
        bounds = [(0, 280), (280, 340), (340, 400)]
        for batch, (begin, end) in zip(splits, bounds, strict=True):
            self.assertGreater(len(batch), 0)
            self.assertTrue(np.all(batch.X.max(axis=1) < batch.Y.min(axis=1)))
            self.assertGreaterEqual(int(batch.X.min()), begin)
            self.assertLess(int(batch.Y.max()), end)
        self.assertLess(splits.train.Y.max(), splits.val.X.min())
        self.assertLess(splits.val.Y.max(), splits.test.X.min())

    def test_reconstruction_with_full_stride(self):
        """
        Concatenating stride=L+H windows reproduces the source segment exactly.
        """
        values = np.random.default_rng(0).uniform(0, 10, size=90)
        series = DemandSeries(START, values)
        batch = make_windows(series, 20, 10, 30, (1.0, 0.0, 0.0)).train
        rebuilt = np.concatenate([np.concatenate([x, y]) for x, y in zip(batch.X, batch.Y, strict=True)])
        np.testing.assert_array_equal(rebuilt, values[: len(rebuilt)])
        self.assertEqual(len(rebuilt), 90)

    def test_stamps_follow_calendar(self):
        """
        Stamps carry hour-of-day and Monday-based day-of-week for all L+H positions.
        """
        batch = make_windows(_ramp(200), 30, 6, 5, (1.0, 0.0, 0.0)).train
        self.assertEqual(batch.stamps.shape, (len(batch), 36, 2))
        origin = int(batch.origins[3])
        hours = (origin + np.arange(36)) % 24
        days = ((origin + np.arange(36)) // 24) % 7
        np.testing.assert_array_equal(batch.stamps[3, :, 0], hours)
        np.testing.assert_array_equal(batch.stamps[3, :, 1], days)

    def test_norm_stats(self):
        """
        Per-window mean and standard deviation describe the history rows.
        """
        batch = make_windows(_ramp(50), 10, 2, 7, (1.0, 0.0, 0.0)).train
        mu, sigma = batch.norm_stats
        np.testing.assert_allclose(mu, batch.X.mean(axis=1))
        np.testing.assert_allclose(sigma, batch.X.std(axis=1))

    def test_window_count_helper(self):
        """
        window_count is zero for segments shorter than L+H.
        """
        self.assertEqual(window_count(10, 8, 4, 1), 0)
        self.assertEqual(window_count(12, 8, 4, 1), 1)


class TestForecastWindow(unittest.TestCase):
    """
    The trailing window used for out-of-sample prediction.
    """

    def test_stamps_extend_past_series_end(self):
        """
        The last L values are taken and stamps continue H buckets beyond the end.
        """
        window = forecast_window(_ramp(100), 24, 6)
        np.testing.assert_array_equal(window.X[0], np.arange(76, 100))
        self.assertEqual(window.stamps.shape, (1, 30, 2))
        self.assertEqual(int(window.stamps[0, -1, 0]), (100 + 5) % 24)


if __name__ == "__main__":
    unittest.main()

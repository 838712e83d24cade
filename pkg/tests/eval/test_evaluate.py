import unittest

import numpy as np
import pandas as pd

from prism.errors import DimensionError, SizingError
from prism.eval import diurnal_profile, evaluate_model, horizon_sweep, per_key_evaluations, train_scale
from prism.eval.evaluate import Evaluation
from prism.eval.metrics import metrics
from prism.model import PrismConfig, PrismModel
from prism.traces import DemandSeries, SynthConfig, make_windows, synthesize
from prism.training import TrainConfig

SMALL = PrismConfig(
    lookback=32, horizon=4, patch_len=8, patch_stride=4, d_model=16, n_layers=1, n_heads=2, n_primitives=4
)


class TestEvaluateModel(unittest.TestCase):
    """
    Scoring a model on held-out windows.
    """

    @classmethod
    def setUpClass(cls):
        cls.series = synthesize(SynthConfig(horizon_days=14, seed=2))
        cls.splits = make_windows(cls.series, 32, 4, stride=4)
        cls.model = PrismModel(SMALL, seed=0)

    def test_scores_match_predictions(self):
        """
        Raw metrics are computed from the model's own denormalized predictions.
        """
        evaluation = evaluate_model(self.model, self.splits.test)
        expected = self.model.predict(self.splits.test.X, self.splits.test.stamps)
        np.testing.assert_allclose(evaluation.predicted, expected)
        self.assertAlmostEqual(evaluation.raw.mse, metrics(evaluation.predicted, evaluation.actual).mse)
        self.assertIsNone(evaluation.zscored)

    def test_zscored_uses_train_segment(self):
        """
        With a training-segment scale, z-scored MSE is raw MSE over spread² and R² matches.
        """
        scale = train_scale(self.series, (0.7, 0.15, 0.15))
        evaluation = evaluate_model(self.model, self.splits.test, scale)
        self.assertAlmostEqual(evaluation.zscored.mse, evaluation.raw.mse / scale.spread**2)
        self.assertAlmostEqual(evaluation.zscored.r2, evaluation.raw.r2)

    def test_horizon_mismatch(self):
        """
        Windows cut for another horizon are rejected.
        """
        other = make_windows(self.series, 32, 8, stride=4).test
        with self.assertRaises(DimensionError):
            evaluate_model(self.model, other)

    def test_empty_windows(self):
        """
        Nothing to evaluate is a sizing error.
        """
        with self.assertRaises(SizingError):
            evaluate_model(self.model, self.splits.test.subset(np.arange(0)))

    def test_plot_frame_one_row_per_time(self):
        """
        Overlapping windows collapse to one row per target time, taken from the latest origin.
        """
        windows = make_windows(self.series, 32, 4, stride=1).test
        evaluation = evaluate_model(self.model, windows)
        frame = evaluation.plot_frame()
        self.assertEqual(list(frame.columns), ["time", "actual", "predicted"])
        self.assertTrue(frame["time"].is_unique)
        self.assertEqual(len(frame), len(windows) + windows.horizon - 1)
        last = evaluation.predicted[-1, -1]
        self.assertAlmostEqual(frame["predicted"].iloc[-1], last)
        # Every time except the final H-1 comes from a lead-1 forecast.
        np.testing.assert_allclose(frame["predicted"].iloc[: len(windows)], evaluation.predicted[:, 0])

    def test_plot_frame_series_key(self):
        """
        A keyed evaluation adds the series_key column.
        """
        evaluation = evaluate_model(self.model, self.splits.test, series_key="HP/org-a")
        frame = evaluation.plot_frame()
        self.assertEqual(list(frame.columns), ["time", "actual", "predicted", "series_key"])
        self.assertEqual(set(frame["series_key"]), {"HP/org-a"})


class TestDiurnalProfile(unittest.TestCase):
    """
    Mean actual and predicted demand per hour of day.
    """

    def test_profile_by_hour(self):
        """
        Each hour's mean is taken over exactly the points that fall in it.
        """
        start = pd.Timestamp("2024-04-01", tz="UTC")
        values = np.tile(np.arange(24, dtype=float), 10)
        series = DemandSeries(start, values)
        windows = make_windows(series, 24, 6, stride=6, split=(1.0, 0.0, 0.0)).train
        predicted = windows.Y + 1.0
        evaluation = Evaluation(windows, predicted, metrics(predicted, windows.Y))
        profile = diurnal_profile(evaluation)
        self.assertEqual(len(profile), 24)
        self.assertEqual(list(profile.columns), ["hour", "actual", "predicted", "abs_error", "count"])
        covered = profile[profile["count"] > 0]
        np.testing.assert_allclose(covered["actual"], covered["hour"].astype(float))
        np.testing.assert_allclose(covered["abs_error"], 1.0)
        self.assertEqual(int(profile["count"].sum()), windows.Y.size)


class TestPerKeyAndSweep(unittest.TestCase):
    """
    Per-series-key evaluation and the horizon sweep.
    """

    def test_per_key_skips_short_series(self):
        """
        Keys long enough are scored; keys shorter than L+H are skipped.
        """
        long = synthesize(SynthConfig(horizon_days=14, seed=4))
        short = DemandSeries(long.start, long.values[:20])
        results = per_key_evaluations(PrismModel(SMALL), {"HP/a": long, "Spot/b": short}, stride=4)
        self.assertEqual(list(results), ["HP/a"])
        self.assertEqual(results["HP/a"].series_key, "HP/a")

    def test_horizon_sweep(self):
        """
        One trained model per requested horizon, each scored at its own H.
        """
        series = synthesize(SynthConfig(horizon_days=14, seed=6))
        results = horizon_sweep(series, SMALL, TrainConfig(max_epochs=1, batch_size=16), horizons=(2, 4), stride=4)
        self.assertEqual(sorted(results), [2, 4])
        self.assertEqual(results[2].predicted.shape[1], 2)
        self.assertEqual(results[4].predicted.shape[1], 4)
        self.assertIsNotNone(results[4].zscored)


if __name__ == "__main__":
    unittest.main()

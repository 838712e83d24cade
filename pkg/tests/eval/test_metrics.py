import math
import unittest

import numpy as np

from prism.errors import DegenerateVarianceError, DimensionError, NumericError, SizingError
from prism.eval import MetricSet, ZScale, metrics, percent_delta, zscored_metrics


class TestMetrics(unittest.TestCase):
    """
    MSE, MAE, RMSE and global R².
    """

    def test_perfect_prediction(self):
        """
        Ŷ = Y scores mse=mae=rmse=0 and r2=1.
        """
        y = np.array([[1.0, 4.0], [2.0, 8.0]])
        self.assertEqual(metrics(y, y), MetricSet(0.0, 0.0, 0.0, 1.0))

    def test_mean_predictor(self):
        """
        Predicting the target mean everywhere gives r2 = 0.
        """
        y = np.array([1.0, 2.0, 3.0, 6.0])
        self.assertAlmostEqual(metrics(np.full(4, y.mean()), y).r2, 0.0, places=12)

    def test_hand_computed(self):
        """
        Y=[1,2,3,4], Ŷ=[2,2,2,2]: SS_res=6, SS_tot=5.
        """
        score = metrics(np.full(4, 2.0), np.array([1.0, 2.0, 3.0, 4.0]))
        self.assertAlmostEqual(score.mse, 1.5)
        self.assertAlmostEqual(score.mae, 1.0)
        self.assertAlmostEqual(score.rmse, 1.2247, places=4)
        self.assertAlmostEqual(score.r2, -0.2)

    def test_rmse_squares_to_mse(self):
        """
        rmse² equals mse within 1e-9 on random data, and r2 never exceeds 1.
        """
        rng = np.random.default_rng(4)
        for _ in range(20):
            y, p = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
            score = metrics(p, y)
            self.assertLess(abs(score.rmse**2 - score.mse), 1e-9)
            self.assertLessEqual(score.r2, 1.0)

    def test_permutation_invariance(self):
        """
        Reordering the evaluation set leaves every metric unchanged.
        """
        rng = np.random.default_rng(5)
        y, p = rng.normal(size=40), rng.normal(size=40)
        order = rng.permutation(40)
        first, second = metrics(p, y), metrics(p[order], y[order])
        for name in ("mse", "mae", "rmse", "r2"):
            self.assertAlmostEqual(first.get(name), second.get(name), places=12)

    def test_constant_target(self):
        """
        R² of a constant target raises unless explicitly allowed.
        """
        y = np.full(6, 3.0)
        with self.assertRaises(DegenerateVarianceError):
            metrics(y + 1.0, y)
        score = metrics(y + 1.0, y, require_variance=False)
        self.assertIsNone(score.r2)
        self.assertEqual(score.mse, 1.0)

    def test_invalid_inputs(self):
        """
        Shape mismatch, empty sets and NaN are rejected.
        """
        with self.assertRaises(DimensionError):
            metrics(np.zeros(3), np.zeros(4))
        with self.assertRaises(SizingError):
            metrics(np.zeros(0), np.zeros(0))
        with self.assertRaises(NumericError):
            metrics(np.array([np.nan, 1.0]), np.array([0.0, 1.0]))

    def test_dict_round_trip(self):
        """
        A metric set survives conversion to a plain dict.
        """
        score = MetricSet(1.0, 0.5, 1.0, 0.25)
        self.assertEqual(MetricSet.from_dict(score.as_dict()), score)


class TestZScored(unittest.TestCase):
    """
    Metrics on the z-scored scale.
    """

    def test_scale_divides_mse_by_variance(self):
        """
        Errors shrink by spread² while R² is unchanged.
        """
        y = np.array([10.0, 20.0, 30.0, 40.0])
        p = y + np.array([2.0, -2.0, 2.0, -2.0])
        scale = ZScale(center=25.0, spread=2.0)
        raw, scaled = metrics(p, y), zscored_metrics(p, y, scale)
        self.assertAlmostEqual(scaled.mse, raw.mse / 4.0)
        self.assertAlmostEqual(scaled.mae, raw.mae / 2.0)
        self.assertAlmostEqual(scaled.r2, raw.r2)

    def test_from_values(self):
        """
        The reference scale uses the mean and population standard deviation.
        """
        scale = ZScale.from_values(np.array([1.0, 3.0]))
        self.assertEqual(scale, ZScale(2.0, 1.0))
        with self.assertRaises(DegenerateVarianceError):
            ZScale.from_values(np.ones(5))


class TestPercentDelta(unittest.TestCase):
    """
    Relative change against a reference value.
    """

    def test_values(self):
        """
        Identity is 0%, +10% and −50% changes, undefined for a zero reference.
        """
        self.assertEqual(percent_delta(0.0753, 0.0753), 0.0)
        self.assertTrue(math.isclose(percent_delta(1.1, 1.0), 10.0))
        self.assertEqual(percent_delta(0.5, 1.0), -50.0)
        self.assertIsNone(percent_delta(1.0, 0.0))
        self.assertIsNone(percent_delta(None, 1.0))


if __name__ == "__main__":
    unittest.main()

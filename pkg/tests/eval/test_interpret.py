import unittest

import numpy as np

from prism.errors import SizingError
from prism.eval import NO_DOMINANT, NO_DOMINANT_LABEL, dominant_primitive, interpretability_report, separation_score
from prism.model import PrismConfig, PrismModel
from prism.numcore import Tensor, softmax
from prism.traces import SynthConfig, forecast_window, make_windows, synthesize

SMALL = PrismConfig(
    lookback=32, horizon=4, patch_len=8, patch_stride=4, d_model=16, n_layers=2, n_heads=2, n_primitives=4
)


class TestDominantPrimitive(unittest.TestCase):
    """
    The argmax rule with its uniform-recipe threshold.
    """

    def test_argmax(self):
        """
        A clear winner is reported by index.
        """
        alpha = np.array([[0.7, 0.1, 0.1, 0.1], [0.1, 0.1, 0.2, 0.6]])
        np.testing.assert_array_equal(dominant_primitive(alpha), [0, 3])

    def test_uniform_recipe_has_no_dominant(self):
        """
        max α below 1/K + 0.05 means no dominant primitive.
        """
        alpha = np.array([[0.25, 0.25, 0.25, 0.25], [0.29, 0.24, 0.24, 0.23], [0.31, 0.23, 0.23, 0.23]])
        np.testing.assert_array_equal(dominant_primitive(alpha), [NO_DOMINANT, NO_DOMINANT, 0])

    def test_shift_invariance(self):
        """
        Adding a constant to every logit leaves each window's label unchanged.
        """
        rng = np.random.default_rng(2)
        logits = rng.normal(scale=2.0, size=(50, 6))
        base = dominant_primitive(softmax(Tensor(logits), axis=-1).data)
        shifted = dominant_primitive(softmax(Tensor(logits + 7.5), axis=-1).data)
        np.testing.assert_array_equal(base, shifted)

    def test_empty_dictionary(self):
        """
        A model without primitives yields no dominant primitive anywhere.
        """
        np.testing.assert_array_equal(dominant_primitive(np.zeros((3, 0))), [NO_DOMINANT] * 3)


class TestSeparationScore(unittest.TestCase):
    """
    Consistency of labels between two groups of windows.
    """

    def test_perfect_and_partial(self):
        """
        Distinct majority labels score their agreeing share; one shared label scores 0.
        """
        self.assertEqual(separation_score(np.array([1, 1, 1]), np.array([2, 2, 2])), 1.0)
        self.assertEqual(separation_score(np.array([1, 1, 2, 1]), np.array([2, 2, 2, 1])), 0.75)
        self.assertEqual(separation_score(np.array([1, 1]), np.array([1, 1])), 0.0)

    def test_no_dominant_counts_against(self):
        """
        Windows without a dominant primitive never count as separated.
        """
        score = separation_score(np.array([0, NO_DOMINANT]), np.array([1, 1]))
        self.assertEqual(score, 0.75)


class TestInterpretabilityReport(unittest.TestCase):
    """
    Recipes, signatures and spectral statistics of a model over windows.
    """

    @classmethod
    def setUpClass(cls):
        cls.series = synthesize(SynthConfig(horizon_days=14, seed=9))
        cls.windows = make_windows(cls.series, 32, 4, stride=4).test
        cls.model = PrismModel(SMALL, seed=3)
        cls.report = interpretability_report(cls.model, cls.windows, batch_size=3)

    def test_shapes(self):
        """
        One recipe per window and layer, one signature per primitive, stats per layer.
        """
        b, k = len(self.windows), SMALL.n_primitives
        self.assertEqual(self.report.alpha.shape, (b, k))
        self.assertEqual(self.report.layer_alpha.shape, (SMALL.n_layers, b, k))
        self.assertEqual(self.report.signatures.shape, (k, SMALL.horizon))
        self.assertEqual(len(self.report.gate_means), SMALL.n_layers)
        self.assertEqual(len(self.report.high_band_fractions()), SMALL.n_layers)

    def test_recipes_are_distributions(self):
        """
        Every recipe row sums to 1 and the dominant label is its argmax or none.
        """
        np.testing.assert_allclose(self.report.alpha.sum(axis=1), 1.0, atol=1e-5)
        for row, label in zip(self.report.alpha, self.report.dominant, strict=True):
            if label != NO_DOMINANT:
                self.assertEqual(label, int(np.argmax(row)))

    def test_chunking_matches_single_pass(self):
        """
        Processing windows in small chunks gives the same recipes as one pass.
        """
        single = interpretability_report(self.model, self.windows)
        np.testing.assert_allclose(single.alpha, self.report.alpha, atol=1e-6)
        np.testing.assert_allclose(single.signatures, self.report.signatures, atol=1e-5)
        np.testing.assert_allclose(single.gate_means, self.report.gate_means, atol=1e-5)

    def test_predictions_match_model(self):
        """
        Reported predictions are the model's forecasts.
        """
        expected = self.model.predict(self.windows.X, self.windows.stamps)
        np.testing.assert_allclose(self.report.predicted, expected, atol=1e-5)
        self.assertIsNotNone(self.report.scores)

    def test_untrained_symmetric_dictionary(self):
        """
        With all primitive queries at zero every recipe is uniform: no dominant primitive.
        """
        model = PrismModel(SMALL, seed=3)
        for layer in range(SMALL.n_layers):
            query = model.params[f"layers.{layer}.pdd.Q_p"]
            query.data = np.zeros_like(query.data)
        report = interpretability_report(model, self.windows)
        self.assertTrue(np.all(report.dominant == NO_DOMINANT))
        self.assertEqual(report.dominance_shares(), {NO_DOMINANT_LABEL: 1.0})

    def test_frames(self):
        """
        Heatmap data has one column per primitive; signatures one row per lead.
        """
        alpha = self.report.alpha_frame()
        self.assertEqual(
            list(alpha.columns), ["time", "origin", "alpha_0", "alpha_1", "alpha_2", "alpha_3", "dominant"]
        )
        self.assertEqual(len(alpha), len(self.windows))
        signatures = self.report.signature_frame()
        self.assertEqual(signatures["lead"].tolist(), [1, 2, 3, 4])
        summary = self.report.summary()
        self.assertAlmostEqual(sum(summary["dominance_shares"].values()), 1.0)

    def test_variant_without_components(self):
        """
        A baseline variant still reports predictions, with empty recipes and spectral stats.
        """
        model = PrismModel(SMALL.variant("w/o-prim-spec"))
        report = interpretability_report(model, self.windows)
        self.assertEqual(report.alpha.shape, (len(self.windows), 0))
        self.assertEqual(report.gate_means, [])
        self.assertTrue(np.all(report.dominant == NO_DOMINANT))

    def test_live_forecast_without_scores(self):
        """
        A forecast window has no targets, so no metrics are attached.
        """
        window = forecast_window(self.series, 32, 4)
        report = interpretability_report(self.model, window, score=False)
        self.assertIsNone(report.scores)
        self.assertEqual(report.predicted.shape, (1, 4))

    def test_empty_windows(self):
        """
        Explaining nothing is a sizing error.
        """
        with self.assertRaises(SizingError):
            interpretability_report(self.model, self.windows.subset(np.arange(0)))


if __name__ == "__main__":
    unittest.main()

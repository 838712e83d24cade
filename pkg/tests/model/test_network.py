import unittest

import numpy as np

from prism.errors import ContractError, DimensionError, NumericError
from prism.model import VARIANTS, PrismConfig, PrismModel, complexity, estimate_flops, forward
from prism.numcore import count_flops, mse, no_grad, precision
from prism.numcore.gradcheck import check_gradients
from prism.training import forecast_loss, normalized_targets, total_loss


def _config(**overrides) -> PrismConfig:
    settings = {"lookback": 32, "horizon": 4, "patch_len": 8, "patch_stride": 4, "d_model": 16}
    settings.update({"n_heads": 2, "n_primitives": 4, "n_layers": 1, "dropout": 0.0})
    settings.update(overrides)
    return PrismConfig(**settings)


def _batch(config: PrismConfig, batch: int = 3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Random positive histories with hourly stamps starting at random offsets.
    """
    rng = np.random.default_rng(seed)
    span = config.lookback + config.horizon
    history = rng.uniform(5.0, 50.0, size=(batch, config.lookback))
    origins = rng.integers(0, 1000, size=batch)
    hours = origins[:, None] + np.arange(span)[None, :]
    stamps = np.stack([hours % 24, (hours // 24) % 7], axis=-1)
    return history, stamps


class TestForward(unittest.TestCase):
    """
    Shapes, diagnostics and determinism of a full forward pass.
    """

    def test_output_and_diagnostics(self):
        """
        A forward pass yields [B, H] forecasts and one diagnostics record per layer.
        """
        cfg = _config(n_layers=2)
        history, stamps = _batch(cfg)
        result = PrismModel(cfg).forward(history, stamps)
        self.assertEqual(result.prediction.shape, (3, 4))
        self.assertEqual(len(result.diagnostics.layers), 2)
        self.assertEqual(len(result.diversity_losses), 2)
        for layer in result.diagnostics.layers:
            np.testing.assert_allclose(layer.alpha.sum(axis=1), 1.0, atol=1e-6)
            np.testing.assert_allclose(layer.local_attention.sum(axis=-1), 1.0, atol=1e-6)
            self.assertTrue(0.0 < layer.gate_mean < 1.0)
        self.assertEqual(result.diagnostics.mean_alpha().shape, (3, 4))

    def test_deterministic(self):
        """
        Two forwards with the same weights and input are bit-identical.
        """
        cfg = _config()
        history, stamps = _batch(cfg)
        model = PrismModel(cfg, seed=3)
        a = model.forward(history, stamps).prediction.data
        b = model.forward(history, stamps).prediction.data
        self.assertEqual(a.tobytes(), b.tobytes())
        self.assertEqual(a.tobytes(), model.clone().forward(history, stamps).prediction.data.tobytes())

    def test_predict_matches_forward(self):
        """
        Chunked tape-free prediction equals a single forward.
        """
        cfg = _config()
        history, stamps = _batch(cfg, batch=7)
        model = PrismModel(cfg)
        prediction, diagnostics = forward(model, history, stamps)
        np.testing.assert_array_equal(model.predict(history, stamps, batch_size=3), prediction.data)
        self.assertEqual(len(diagnostics.layers), 1)

    def test_baseline_is_plain_attention(self):
        """
        The baseline variant owns no dictionary or spectral parameters and reports none.
        """
        cfg = _config().variant("baseline")
        model = PrismModel(cfg)
        self.assertFalse(any(".pdd." in name or ".spectral." in name for name in model.params))
        history, stamps = _batch(cfg)
        result = model.forward(history, stamps)
        self.assertEqual(result.diversity_losses, [])
        self.assertIsNone(result.diagnostics.mean_alpha())
        self.assertEqual(result.diagnostics.layers[0].attention.shape, (3, 2, 32, 32))

    def test_bad_history(self):
        """
        Wrong history width is a dimension error; NaN history is a numeric error.
        """
        cfg = _config()
        history, stamps = _batch(cfg)
        model = PrismModel(cfg)
        with self.assertRaises(DimensionError):
            model.forward(history[:, :-1], stamps)
        history[0, 3] = np.nan
        with self.assertRaises(NumericError):
            model.forward(history, stamps)

    def test_alpha_override_validation(self):
        """
        Overrides must match K and be distributions.
        """
        cfg = _config()
        history, stamps = _batch(cfg)
        model = PrismModel(cfg)
        with self.assertRaises(DimensionError):
            model.forward(history, stamps, alpha_override=np.ones(3) / 3)
        with self.assertRaises(ContractError):
            model.forward(history, stamps, alpha_override=np.array([0.5, 0.5, 0.5, 0.0]))

    def test_dropout_only_in_training(self):
        """
        Dropout perturbs training forwards and leaves inference untouched.
        """
        cfg = _config(dropout=0.5)
        history, stamps = _batch(cfg)
        model = PrismModel(cfg)
        plain = model.forward(history, stamps).prediction.data
        again = model.forward(history, stamps, rng=np.random.default_rng(0)).prediction.data
        dropped = model.forward(
            history, stamps, training=True, rng=np.random.default_rng(0)
        ).prediction.data
        np.testing.assert_array_equal(plain, again)
        self.assertFalse(np.array_equal(plain, dropped))


class TestGradients(unittest.TestCase):
    """
    Reverse-mode gradients of the whole network.
    """

    def test_composite_gradient_check(self):
        """
        The training objective (MSE plus λ1·MAE plus λ_div times the diversity
        terms) matches finite differences to 1e-4 at 64-bit for every parameter.
        """
        cfg = _config(lookback=32, patch_len=8, patch_stride=8, n_primitives=4)
        model = PrismModel(cfg, seed=1, bits=64)
        history, stamps = _batch(cfg, batch=2, seed=2)
        future = np.random.default_rng(3).uniform(5.0, 50.0, size=(2, 4))

        def loss():
            result = model.forward(history, stamps)
            targets = normalized_targets(future, result.stats.mu.data, result.stats.scale.data)
            pre = forecast_loss(result.normalized, targets, 0.5)
            return total_loss(pre, result.diversity_losses, 0.3)

        with precision(64):
            worst = check_gradients(loss, model.params, atol=1e-8)
        failing = {name: err for name, err in worst.items() if err >= 1e-4}
        self.assertEqual(failing, {})

    def test_every_parameter_gets_gradient(self):
        """
        For each ablation variant, one random batch gives every parameter a nonzero gradient.
        """
        base = _config()
        for name in VARIANTS:
            cfg = base.variant(name)
            model = PrismModel(cfg, seed=0, bits=64)
            history, stamps = _batch(cfg, batch=4, seed=1)
            targets = np.random.default_rng(2).normal(size=(4, cfg.horizon))
            result = model.forward(history, stamps)
            total = mse(result.normalized, targets)
            for term in result.diversity_losses:
                total = total + term
            total.backward()
            dead = [p for p, t in model.params.items() if t.grad is None or not np.any(t.grad)]
            self.assertEqual(dead, [], name)


class TestComplexity(unittest.TestCase):
    """
    FLOP accounting and its scaling with the patch count.
    """

    def test_estimate_matches_measured(self):
        """
        The closed-form estimate equals the FLOPs counted during a forward pass.
        """
        cfg = _config(n_layers=2)
        history, stamps = _batch(cfg, batch=2)
        model = PrismModel(cfg)
        with no_grad(), count_flops() as counter:
            model.forward(history, stamps)
        self.assertEqual(counter.total, estimate_flops(cfg, batch=2))

    def test_quadratic_scaling(self):
        """
        Doubling N_p at fixed small D multiplies forward FLOPs by 3.5 to 4.5.
        """
        totals = []
        for lookback in (512, 1024):
            cfg = PrismConfig(
                lookback=lookback, horizon=4, patch_len=1, patch_stride=1, d_model=8,
                n_heads=2, n_primitives=2, n_layers=1, dropout=0.0,
            )
            history, stamps = _batch(cfg, batch=1)
            with no_grad(), count_flops() as counter:
                PrismModel(cfg).forward(history, stamps)
            totals.append(counter.total)
        ratio = totals[1] / totals[0]
        self.assertGreaterEqual(ratio, 3.5)
        self.assertLessEqual(ratio, 4.5)

    def test_summary(self):
        """
        The complexity summary reports the parameter count of the instantiated model.
        """
        cfg = PrismConfig()
        summary = complexity(cfg)
        self.assertEqual(summary.n_patches, 11)
        self.assertEqual(summary.parameters, PrismModel(cfg).parameter_count())
        self.assertLess(summary.attention_flops, summary.flops)


if __name__ == "__main__":
    unittest.main()

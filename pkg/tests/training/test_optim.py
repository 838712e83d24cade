import unittest

import numpy as np

from prism.errors import ContractError
from prism.model import PrismConfig, PrismModel
from prism.numcore import Tensor
from prism.traces import SynthConfig, make_windows, synthesize
from prism.training import Adam, TrainConfig, Trainer


def _small_model(seed: int = 0) -> PrismModel:
    config = PrismConfig(
        lookback=32, horizon=4, patch_len=8, patch_stride=4, d_model=16, n_layers=1, n_heads=2, n_primitives=4
    )
    return PrismModel(config, seed=seed)


def _train_windows():
    series = synthesize(SynthConfig(horizon_days=14, seed=3))
    return make_windows(series, 32, 4, stride=4).train


class TestAdam(unittest.TestCase):
    """
    Bias-corrected Adam with global norm clipping.
    """

    def test_first_step_moves_by_lr(self):
        """
        The first bias-corrected step moves each weight by lr·sign(g) up to eps.
        """
        w = Tensor(np.array([1.0, -2.0, 3.0]), dtype=np.float64)
        w.grad = np.array([0.5, -4.0, 0.0])
        Adam({"w": w}, lr=0.1).step()
        np.testing.assert_allclose(w.data, [0.9, -1.9, 3.0], atol=1e-6)

    def test_parameters_without_gradient_untouched(self):
        """
        A parameter that received no gradient keeps its values and moments.
        """
        w = Tensor(np.array([1.0, 2.0]), dtype=np.float64)
        optimizer = Adam({"w": w}, lr=0.1)
        optimizer.step()
        np.testing.assert_array_equal(w.data, [1.0, 2.0])
        np.testing.assert_array_equal(optimizer.m["w"], [0.0, 0.0])

    def test_clip_caps_global_norm(self):
        """
        Gradients of global norm 5 are rescaled to norm ≈ 1; the raw norm is returned.
        """
        a = Tensor(np.zeros(1), dtype=np.float64)
        b = Tensor(np.zeros(1), dtype=np.float64)
        a.grad, b.grad = np.array([3.0]), np.array([4.0])
        optimizer = Adam({"a": a, "b": b}, grad_clip=1.0)
        self.assertAlmostEqual(optimizer.clip(), 5.0)
        self.assertAlmostEqual(optimizer.grad_norm(), 1.0, places=5)

    def test_clip_leaves_small_gradients(self):
        """
        Gradients already under the threshold are not rescaled.
        """
        a = Tensor(np.zeros(2), dtype=np.float64)
        a.grad = np.array([0.3, 0.4])
        Adam({"a": a}, grad_clip=1.0).clip()
        np.testing.assert_array_equal(a.grad, [0.3, 0.4])

    def test_negative_lr_rejected(self):
        """
        A negative learning rate is a contract violation.
        """
        with self.assertRaises(ContractError):
            Adam({}, lr=-1.0)

    def test_state_round_trip(self):
        """
        Moments and the step counter carry over to a fresh optimizer.
        """
        w = Tensor(np.array([1.0, 2.0]), dtype=np.float64)
        first = Adam({"w": w}, lr=0.1)
        w.grad = np.array([1.0, -1.0])
        first.step()
        second = Adam({"w": w}, lr=0.1)
        second.load_state_arrays(first.state_arrays(), first.t)
        self.assertEqual(second.t, 1)
        np.testing.assert_array_equal(second.m["w"], first.m["w"])
        np.testing.assert_array_equal(second.v["w"], first.v["w"])


class TestTrainerStep(unittest.TestCase):
    """
    One optimization step of the full model.
    """

    def setUp(self):
        self.windows = _train_windows().subset(np.arange(8))

    def test_zero_learning_rate_leaves_parameters_bit_identical(self):
        """
        Repeated steps at lr=0 change no parameter bit.
        """
        model = _small_model()
        before = model.state_arrays()
        trainer = Trainer(model, TrainConfig(seed=1))
        for _ in range(3):
            trainer.step(self.windows, lr=0.0)
        for name, values in model.state_arrays().items():
            np.testing.assert_array_equal(values, before[name], err_msg=name)

    def test_positive_learning_rate_updates_parameters(self):
        """
        A step at the configured lr changes the head weights and reports a finite loss.
        """
        model = _small_model()
        before = model.params["head.W_2"].data.copy()
        outcome = Trainer(model, TrainConfig(lr=1e-2)).step(self.windows)
        self.assertTrue(np.isfinite(outcome.loss))
        self.assertGreater(outcome.grad_norm, 0.0)
        self.assertFalse(np.array_equal(model.params["head.W_2"].data, before))

    def test_step_reports_one_diversity_loss_per_layer(self):
        """
        The outcome lists the diversity loss of every encoder layer.
        """
        config = _small_model().config.model_copy(update={"n_layers": 2})
        outcome = Trainer(PrismModel(config), TrainConfig()).step(self.windows)
        self.assertEqual(len(outcome.diversity), 2)
        self.assertTrue(all(-1.0 - 1e-5 <= d <= 1.0 + 1e-5 for d in outcome.diversity))


if __name__ == "__main__":
    unittest.main()

"""Loss values against hand-computed anchors; loss gradients against both
finite differences and the closed-form softmax/cross-entropy identity."""
import math

import numpy as np
import pytest

from esgnews import neuro
from esgnews.neuro import Tensor


class TestScce:
    def test_uniform_prediction_anchor(self):
        probs = np.full((4, 100), 0.01)
        classes = np.array([0, 17, 50, 99])
        assert neuro.scce(probs, classes) == pytest.approx(math.log(100.0), abs=1e-9)

    def test_perfect_prediction_is_zero(self):
        probs = np.eye(3)
        assert neuro.scce(probs, np.array([0, 1, 2])) == pytest.approx(0.0, abs=1e-12)

    def test_floor_caps_the_penalty(self):
        probs = np.array([[1.0, 0.0]])
        got = neuro.scce(probs, np.array([1]))
        assert got == pytest.approx(-math.log(neuro.PROB_FLOOR), rel=1e-12)

    def test_class_out_of_range(self):
        with pytest.raises(ValueError):
            neuro.scce(np.ones((2, 3)) / 3, np.array([0, 3]))
        with pytest.raises(ValueError):
            neuro.scce(np.ones((2, 3)) / 3, np.array([-1, 0]))

    def test_mean_over_rows(self):
        probs = np.array([[0.5, 0.5], [0.25, 0.75]])
        want = -(math.log(0.5) + math.log(0.75)) / 2.0
        assert neuro.scce(probs, np.array([1, 1])) == pytest.approx(want, abs=1e-12)


class TestScceGradient:
    def test_matches_softmax_cross_entropy_identity(self):
        # d scce(softmax(z)) / dz = (softmax(z) - onehot) / batch
        rng = np.random.default_rng(0)
        z = Tensor(rng.normal(size=(5, 7)), requires_grad=True)
        classes = rng.integers(0, 7, size=5)
        loss = neuro.scce_loss(neuro.softmax(z), classes)
        loss.backward()
        p = neuro.softmax(Tensor(z.data)).data
        onehot = np.zeros((5, 7))
        onehot[np.arange(5), classes] = 1.0
        np.testing.assert_allclose(z.grad, (p - onehot) / 5.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(100 + seed)
        z = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
        classes = rng.integers(0, 6, size=4)

        def f():
            return neuro.scce_loss(neuro.softmax(z), classes)

        assert neuro.max_relative_error(f, [z]) <= 1e-3


class TestMse:
    def test_anchor(self):
        assert neuro.mse(np.array([1.0, 3.0]), np.array([0.0, 0.0])) == 5.0

    def test_zero_at_perfect(self):
        x = np.array([2.0, 4.0])
        assert neuro.mse(x, x) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            neuro.mse(np.ones(3), np.ones(4))

    def test_loss_value_matches_metric(self):
        rng = np.random.default_rng(1)
        pred = rng.normal(size=(6, 1))
        targets = rng.normal(size=(6, 1))
        loss = neuro.mse_loss(Tensor(pred), targets)
        assert float(loss.data) == pytest.approx(neuro.mse(pred, targets), abs=1e-12)

    def test_loss_gradient_closed_form(self):
        rng = np.random.default_rng(2)
        pred = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
        targets = rng.normal(size=(4, 1))
        neuro.mse_loss(pred, targets).backward()
        np.testing.assert_allclose(pred.grad, 2.0 * (pred.data - targets) / 4.0, atol=1e-12)


class TestMape:
    def test_anchor(self):
        got = neuro.mape(np.array([110.0, 90.0]), np.array([100.0, 100.0]))
        assert got == pytest.approx(10.0, abs=1e-12)

    def test_zero_targets_excluded_and_counted(self):
        value, excluded = neuro.mape_details(
            np.array([110.0, 5.0]), np.array([100.0, 0.0])
        )
        assert value == pytest.approx(10.0, abs=1e-12)
        assert excluded == 1

    def test_all_zero_targets_undefined(self):
        with pytest.raises(ValueError, match="every target is zero"):
            neuro.mape_details(np.ones(2), np.zeros(2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            neuro.mape(np.ones(2), np.ones(3))


def test_sparse_accuracy():
    probs = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4], [0.3, 0.7]])
    assert neuro.sparse_accuracy(probs, np.array([0, 1, 1, 1])) == 0.75

import math

import numpy as np
import pytest

from numerics import (
    KL_FLOOR,
    Adam,
    cross_entropy,
    entropy,
    grad_check,
    is_distribution,
    kl_divergence,
    log_softmax_rows,
    numeric_gradient,
    sharpen,
    softmax,
)


class TestSoftmax:
    def test_normalized_and_shift_invariant(self):
        z = np.array([1.0, -2.0, 0.5, 3.0])
        p = softmax(z)
        assert is_distribution(p)
        np.testing.assert_allclose(p, softmax(z + 1000.0))

    def test_mask_gives_exact_zeros(self):
        p = softmax(np.array([5.0, 1.0, 2.0]), mask=np.array([False, True, True]))
        assert p[0] == 0.0
        assert is_distribution(p)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            softmax(np.array([1.0, 2.0]), mask=np.array([False, False]))
        with pytest.raises(FloatingPointError):
            softmax(np.array([1.0, np.nan]))

    def test_log_softmax_rows_matches_softmax(self):
        z = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, -1.0]])
        np.testing.assert_allclose(np.exp(log_softmax_rows(z))[0], softmax(z[0]))
        np.testing.assert_allclose(np.exp(log_softmax_rows(z)).sum(axis=1), 1.0)


class TestSharpen:
    def test_temperature_one_is_identity(self):
        p = np.array([0.2, 0.5, 0.3])
        np.testing.assert_array_equal(sharpen(p, 1.0), p)

    def test_lowers_entropy_and_keeps_argmax(self):
        p = np.array([0.2, 0.5, 0.3])
        q = sharpen(p, 0.5)
        assert is_distribution(q)
        assert np.argmax(q) == np.argmax(p)
        assert entropy(q) < entropy(p)
        np.testing.assert_allclose(q, p ** 2 / np.sum(p ** 2))

    def test_tiny_temperature_does_not_underflow(self):
        q = sharpen(np.array([0.6, 0.4]), 0.001)
        assert is_distribution(q)
        assert q[0] == pytest.approx(1.0)

    def test_zero_entries_stay_zero(self):
        q = sharpen(np.array([0.0, 0.7, 0.3]), 0.5)
        assert q[0] == 0.0

    @pytest.mark.parametrize("T", [0.0, -1.0])
    def test_non_positive_temperature(self, T):
        with pytest.raises(ValueError):
            sharpen(np.array([0.5, 0.5]), T)


class TestKL:
    def test_zero_on_equal_inputs(self):
        p = np.array([0.1, 0.2, 0.7])
        assert kl_divergence(p, p) == 0.0

    def test_known_value(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0))

    def test_clamps_second_argument(self):
        value = kl_divergence([1.0, 0.0], [0.0, 1.0])
        assert math.isfinite(value)
        assert value == pytest.approx(-math.log(KL_FLOOR))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_cross_entropy_is_kl_against_one_hot(self):
        p = np.array([0.1, 0.6, 0.3])
        assert cross_entropy(p, 1) == pytest.approx(kl_divergence([0.0, 1.0, 0.0], p))
        with pytest.raises(ValueError):
            cross_entropy(p, 3)


class TestGradCheck:
    def test_quadratic(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        x = np.array([0.3, -0.7])
        err = grad_check(lambda v: 0.5 * v @ A @ v, x, A @ x)
        assert err < 1e-6

    def test_detects_wrong_gradient(self):
        x = np.array([1.0, 2.0])
        assert grad_check(lambda v: float(np.sum(v ** 2)), x, x) > 0.1

    def test_numeric_gradient_restores_input(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        g = numeric_gradient(lambda v: float(np.sum(np.sin(v))), x)
        np.testing.assert_allclose(g, np.cos(x), rtol=1e-8)
        np.testing.assert_array_equal(x, [[1.0, 2.0], [3.0, 4.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            grad_check(lambda v: float(v.sum()), np.zeros(3), np.zeros(2))


class TestAdam:
    def test_minimizes_quadratic(self):
        params = {"w": np.array([3.0, -2.0])}
        opt = Adam(lr=0.1)
        for _ in range(500):
            opt.step(params, {"w": 2.0 * params["w"]})
        np.testing.assert_allclose(params["w"], 0.0, atol=5e-2)

    def test_first_step_moves_by_lr(self):
        params = {"w": np.array([1.0])}
        Adam(lr=0.01).step(params, {"w": np.array([5.0])})
        assert params["w"][0] == pytest.approx(0.99, abs=1e-6)

    def test_frozen_and_non_finite(self):
        params = {"a": np.array([1.0]), "b": np.array([1.0])}
        opt = Adam(lr=0.1)
        opt.step(params, {"a": np.array([1.0]), "b": np.array([1.0])}, frozen=["b"])
        assert params["b"][0] == 1.0
        assert params["a"][0] < 1.0
        with pytest.raises(FloatingPointError, match="'a'"):
            opt.step(params, {"a": np.array([np.inf])})

import math

import numpy as np
import pytest

from lpdmi.elm import (
    ACTIVATIONS,
    ElmModel,
    hidden_matrix,
    load_model,
    one_hot,
    pinv,
    predict,
    save_model,
    train,
)
from lpdmi.errors import ConfigError, DataError, NumericError


def penrose_holds(h, h_dag, tol=1e-8):
    # Backward-error normalization: float64 residuals of these products
    # scale with ||h|| ||h_dag||; well-conditioned inputs keep it O(1).
    scale = max(1.0, np.linalg.norm(h, 2) * np.linalg.norm(h_dag, 2))
    return (
        np.max(np.abs(h @ h_dag @ h - h)) / scale < tol
        and np.max(np.abs(h_dag @ h @ h_dag - h_dag)) / scale < tol
        and np.max(np.abs((h @ h_dag) - (h @ h_dag).T)) / scale < tol
        and np.max(np.abs((h_dag @ h) - (h_dag @ h).T)) / scale < tol
    )


class TestHiddenMatrix:
    def test_sigmoid_midpoint(self):
        h = hidden_matrix(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros(1), "sigmoid")
        assert h[0, 0] == 0.5

    def test_single_node_single_dim(self):
        h = hidden_matrix(np.array([[0.0]]), np.array([[1.0]]), np.array([0.0]))
        assert h.shape == (1, 1) and h[0, 0] == ACTIVATIONS["sigmoid"](0.0)

    def test_matches_elementwise_loop(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(5, 3))
        w = rng.normal(size=(4, 3))
        b = rng.normal(size=4)
        for name in ACTIVATIONS:
            h = hidden_matrix(x, w, b, name)
            for i in range(5):
                for j in range(4):
                    z = float(np.dot(w[j], x[i]) + b[j])
                    if name == "sigmoid":
                        want = 1.0 / (1.0 + math.exp(-z))
                    elif name == "radial-basis":
                        want = math.exp(-z * z)
                    else:
                        want = math.sin(z)
                    assert abs(h[i, j] - want) < 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(NumericError):
            hidden_matrix(np.array([[np.nan]]), np.ones((1, 1)), np.zeros(1))

    def test_unknown_activation(self):
        with pytest.raises(ConfigError):
            hidden_matrix(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros(1), "relu")


class TestPinv:
    def test_identity(self):
        assert np.allclose(pinv(np.eye(4)), np.eye(4), atol=1e-12)

    def test_rank_deficient_diagonal(self):
        got = pinv(np.diag([2.0, 0.0]))
        assert np.allclose(got, np.diag([0.5, 0.0]), atol=1e-12)

    def test_penrose_conditions_random(self):
        rng = np.random.default_rng(1)
        h = rng.normal(size=(6, 4))
        assert penrose_holds(h, pinv(h))

    def test_penrose_property_up_to_50(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            shape = (int(rng.integers(1, 51)), int(rng.integers(1, 51)))
            h = rng.normal(size=shape)
            if rng.random() < 0.3 and min(shape) > 1:
                h[:, -1] = h[:, 0]  # force rank deficiency sometimes
            assert penrose_holds(h, pinv(h))

    def test_tolerance_zeroes_small_singulars(self):
        h = np.diag([1.0, 1e-14])
        got = pinv(h, tol=1e-10)
        assert got[1, 1] == 0.0


class TestTrain:
    def test_interpolates_when_wide(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            n, d = int(rng.integers(4, 10)), int(rng.integers(2, 6))
            x = rng.normal(size=(n, d))
            labels = rng.integers(0, 3, size=n)
            labels[:3] = [0, 1, 2]
            model = train(x, labels, hidden_count=n + 20, seed=int(rng.integers(1 << 30)))
            h = hidden_matrix(x, model.weights, model.biases, model.activation)
            y = one_hot(labels, model.classes)
            assert np.max(np.abs(h @ model.beta - y)) <= 1e-6

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(8, 3))
        labels = [0, 0, 1, 1, 2, 2, 0, 1]
        a = train(x, labels, hidden_count=16, seed=99)
        b = train(x, labels, hidden_count=16, seed=99)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.biases, b.biases)
        assert np.array_equal(a.beta, b.beta)

    def test_weights_reproducible_from_seed(self):
        model = train(np.random.default_rng(5).normal(size=(6, 4)),
                      [0, 1, 0, 1, 0, 1], hidden_count=7, seed=1234)
        rng = np.random.default_rng(1234)
        assert np.array_equal(model.weights, rng.uniform(-1, 1, size=(7, 4)))
        assert np.array_equal(model.biases, rng.uniform(-1, 1, size=7))

    def test_residual_optimality_probe(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(12, 4))
        labels = rng.integers(0, 3, size=12)
        labels[:3] = [0, 1, 2]
        model = train(x, labels, hidden_count=5, seed=7)
        h = hidden_matrix(x, model.weights, model.biases, model.activation)
        y = one_hot(labels, model.classes)
        best = np.linalg.norm(h @ model.beta - y)
        for _ in range(100):
            other = model.beta + rng.normal(scale=0.1, size=model.beta.shape)
            assert best <= np.linalg.norm(h @ other - y) + 1e-8

    def test_residual_matches_lstsq(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(15, 5))
        labels = rng.integers(0, 4, size=15)
        labels[:4] = [0, 1, 2, 3]
        model = train(x, labels, hidden_count=6, seed=8)
        h = hidden_matrix(x, model.weights, model.biases, model.activation)
        y = one_hot(labels, model.classes)
        beta_ref = np.linalg.lstsq(h, y, rcond=None)[0]
        assert abs(np.linalg.norm(h @ model.beta - y)
                   - np.linalg.norm(h @ beta_ref - y)) < 1e-8

    def test_minimum_norm_among_minimizers(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(4, 3))
        labels = [0, 1, 0, 1]
        model = train(x, labels, hidden_count=10, seed=9)  # wide: null space exists
        h = hidden_matrix(x, model.weights, model.biases, model.activation)
        _, _, vt = np.linalg.svd(h)
        null_basis = vt[np.linalg.matrix_rank(h):]
        for _ in range(20):
            shift = (rng.normal(size=null_basis.shape[0]) @ null_basis).reshape(-1, 1)
            other = model.beta + shift
            assert np.linalg.norm(model.beta) <= np.linalg.norm(other) + 1e-8

    def test_needs_two_classes(self):
        with pytest.raises(DataError):
            train(np.zeros((4, 2)), [1, 1, 1, 1])

    def test_needs_enough_samples(self):
        with pytest.raises(DataError):
            train(np.zeros((2, 2)), [0, 1, 2][:2] + [2])  # 3 labels, 2 samples
        with pytest.raises(DataError):
            train(np.zeros((2, 2)), [0, 1, 2])


class TestPredict:
    def test_training_samples_get_their_labels(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(9, 4))
        labels = np.array([5, 7, 9] * 3)
        model = train(x, labels, hidden_count=40, seed=11)
        _, predicted = predict(model, x)
        assert np.array_equal(predicted, labels)

    def test_zero_beta_ties_break_low(self):
        model = ElmModel(weights=np.zeros((3, 2)), biases=np.zeros(3),
                         beta=np.zeros((3, 4)), classes=np.array([2, 4, 6, 8]),
                         activation="sigmoid", seed=0)
        scores, label = predict(model, np.ones(2))
        assert np.abs(scores).max() == 0.0
        assert label == 2

    def test_scores_match_double_loop(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(3, 4))
        model = train(rng.normal(size=(6, 4)), [0, 1, 2, 0, 1, 2],
                      hidden_count=5, seed=12)
        scores, _ = predict(model, x)
        for i in range(3):
            for c in range(3):
                acc = 0.0
                for j in range(model.hidden_count):
                    z = float(np.dot(model.weights[j], x[i]) + model.biases[j])
                    acc += model.beta[j, c] / (1.0 + math.exp(-z))
                assert abs(scores[i, c] - acc) < 1e-10

    def test_dim_mismatch(self):
        model = train(np.random.default_rng(13).normal(size=(4, 3)),
                      [0, 1, 0, 1], hidden_count=4, seed=14)
        with pytest.raises(DataError):
            predict(model, np.zeros(5))

    def test_single_vector_shape(self):
        model = train(np.random.default_rng(14).normal(size=(4, 3)),
                      [0, 1, 0, 1], hidden_count=4, seed=15)
        scores, label = predict(model, np.zeros(3))
        assert scores.shape == (2,) and label in (0, 1)


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        model = train(np.random.default_rng(15).normal(size=(6, 3)),
                      [0, 1, 2, 0, 1, 2], hidden_count=8, seed=16)
        save_model(model, tmp_path / "model")
        loaded = load_model(tmp_path / "model")
        assert np.array_equal(loaded.weights, model.weights)
        assert np.array_equal(loaded.biases, model.biases)
        assert np.array_equal(loaded.beta, model.beta)
        assert np.array_equal(loaded.classes, model.classes)
        assert loaded.activation == model.activation
        assert loaded.seed == model.seed

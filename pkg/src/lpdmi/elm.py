"""Extreme learning machine: a single hidden layer with frozen random
weights and closed-form least-squares output weights.

Hidden weights and biases are drawn i.i.d. uniform on [-1, 1] from a
seeded PCG64 generator with a fixed stream order (weight matrix row-major,
then biases), so a (seed, input_dim, hidden_count) triple reproduces them
bit-exactly. The output weights are the minimum-norm least-squares
solution beta = pinv(H) @ Y against one-hot targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .features import load_matrix, save_matrix


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _radial_basis(z):
    return np.exp(-np.square(z))


ACTIVATIONS = {
    "sigmoid": _sigmoid,
    "radial-basis": _radial_basis,
    "sine": np.sin,
}


@dataclass
class ElmModel:
    weights: np.ndarray  # (hidden_count, input_dim)
    biases: np.ndarray  # (hidden_count,)
    beta: np.ndarray  # (hidden_count, n_classes)
    classes: np.ndarray  # sorted class ids, length n_classes
    activation: str
    seed: int

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def hidden_count(self) -> int:
        return self.weights.shape[0]


def hidden_matrix(x: np.ndarray, weights: np.ndarray, biases: np.ndarray,
                  activation: str = "sigmoid") -> np.ndarray:
    """H(i, j) = g(w_j . x_i + b_j) for every sample row and hidden node."""
    if activation not in ACTIVATIONS:
        raise ConfigError(f"unknown activation {activation!r}, "
                          f"expected one of {sorted(ACTIVATIONS)}")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if not np.isfinite(x).all():
        raise NumericError("hidden layer input contains non-finite values")
    if x.shape[1] != weights.shape[1]:
        raise DataError(f"input dim {x.shape[1]} does not match weight dim {weights.shape[1]}")
    return ACTIVATIONS[activation](x @ weights.T + biases)


def pinv(matrix: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD; singular values below
    tol * sigma_max are treated as zero."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if not np.isfinite(matrix).all():
        raise NumericError("cannot invert a matrix with non-finite entries")
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((matrix.shape[1], matrix.shape[0]))
    inv_s = np.where(s >= tol * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (vt.T * inv_s) @ u.T


def one_hot(labels, classes: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    index = {int(c): i for i, c in enumerate(classes)}
    try:
        cols = np.array([index[int(l)] for l in labels])
    except KeyError as exc:
        raise DataError(f"label {exc.args[0]} outside the class map {list(classes)}") from None
    y = np.zeros((labels.size, classes.size))
    y[np.arange(labels.size), cols] = 1.0
    return y


def train(x: np.ndarray, labels, hidden_count: int = 1000,
          activation: str = "sigmoid", seed: int = 42,
          pinv_tol: float = 1e-10) -> ElmModel:
    """Fit the output weights in closed form; deterministic for a fixed seed."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0]:
        raise DataError(f"{x.shape[0]} samples but {labels.shape[0]} labels")
    classes = np.unique(labels)
    if classes.size < 2:
        raise DataError(f"training needs at least 2 classes, got {classes.size}")
    if x.shape[0] < classes.size:
        raise DataError(
            f"training needs at least as many samples ({x.shape[0]}) "
            f"as classes ({classes.size})"
        )
    if hidden_count < 1:
        raise ConfigError(f"hidden_count must be >= 1, got {hidden_count}")

    rng = np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=(hidden_count, x.shape[1]))
    biases = rng.uniform(-1.0, 1.0, size=hidden_count)
    h = hidden_matrix(x, weights, biases, activation)
    beta = pinv(h, tol=pinv_tol) @ one_hot(labels, classes)
    return ElmModel(weights=weights, biases=biases, beta=beta,
                    classes=classes, activation=activation, seed=seed)


def predict(model: ElmModel, x: np.ndarray):
    """Scores h(x) @ beta and the argmax label (ties break to the lowest
    class id). A single vector yields (scores, label); a matrix of rows
    yields (score matrix, label array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = hidden_matrix(x, model.weights, model.biases, model.activation)
    scores = h @ model.beta
    labels = model.classes[np.argmax(scores, axis=1)]
    if single:
        return scores[0], labels[0]
    return scores, labels


def _part(stem: Path, suffix: str) -> Path:
    return stem.parent / (stem.name + suffix)


def save_model(model: ElmModel, stem) -> None:
    """Persist as binary tensors plus JSON metadata under `stem`.*"""
    stem = Path(stem)
    save_matrix(_part(stem, ".weights.bin"), model.weights)
    save_matrix(_part(stem, ".biases.bin"), model.biases.reshape(1, -1))
    save_matrix(_part(stem, ".beta.bin"), model.beta)
    meta = {
        "activation": model.activation,
        "seed": model.seed,
        "hidden_count": model.hidden_count,
        "input_dim": model.input_dim,
        "classes": [int(c) for c in model.classes],
    }
    _part(stem, ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_model(stem) -> ElmModel:
    stem = Path(stem)
    meta = json.loads(_part(stem, ".json").read_text())
    return ElmModel(
        weights=load_matrix(_part(stem, ".weights.bin")),
        biases=load_matrix(_part(stem, ".biases.bin")).ravel(),
        beta=load_matrix(_part(stem, ".beta.bin")),
        classes=np.array(meta["classes"]),
        activation=meta["activation"],
        seed=int(meta["seed"]),
    )

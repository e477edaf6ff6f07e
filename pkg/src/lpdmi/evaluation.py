"""Experiment protocols, metrics, and the end-to-end evaluation run.

Protocols: the cross-subject test trains on odd-numbered subjects and
tests on even ones; the subset tests restrict to one of three fixed
8-action subsets and take the first third (test1) or two thirds (test2)
of each class as training, ordered by (subject, repetition), or run the
cross-subject rule inside the subset (test3).

Scaler and PCA statistics are fit on training descriptors only.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import elm
from .depth_io import DepthSequence, load_sequence
from .errors import DataError, LpdmiError
from .features import (
    FeatureVector,
    assemble_descriptor,
    minmax_apply,
    minmax_fit,
    pca_apply,
    pca_fit,
)
from .projection import VIEWS, compute_dmi
from .pyramid import GAUSSIAN, build_gaussian, build_laplacian

PROTOCOLS = (
    "cross_subject_odd_even",
    "subset_test1",
    "subset_test2",
    "subset_test3",
)
SUBSET_PROTOCOLS = ("subset_test1", "subset_test2", "subset_test3")

ACTION_SUBSETS = {
    "AS1": frozenset({2, 3, 5, 6, 10, 13, 18, 20}),
    "AS2": frozenset({1, 4, 7, 8, 9, 11, 14, 12}),
    "AS3": frozenset({6, 4, 15, 16, 17, 18, 19, 20}),
}

SEQUENCE_GLOB = "*.lpd"


@dataclass(frozen=True)
class SplitSpec:
    protocol: str
    subset: str | None = None

    def validate(self) -> list[str]:
        problems = []
        if self.protocol not in PROTOCOLS:
            problems.append(
                f"split.protocol must be one of {PROTOCOLS}, got {self.protocol!r}"
            )
        needs_subset = self.protocol in SUBSET_PROTOCOLS
        if needs_subset and self.subset not in ACTION_SUBSETS:
            problems.append(
                f"split.protocol {self.protocol!r} needs split.subset in "
                f"{sorted(ACTION_SUBSETS)}, got {self.subset!r}"
            )
        if not needs_subset and self.subset:
            problems.append(
                f"split.subset is only meaningful for subset protocols, "
                f"got {self.subset!r} with {self.protocol!r}"
            )
        return problems


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def split(metadata, spec: SplitSpec, seed: int | None = None):
    """Partition sample indices into (train, test) per the protocol.

    `metadata` is any sequence of objects carrying subject_id,
    action_label, and repetition. The split is a pure function of the
    metadata and spec; `seed` is accepted for interface stability but no
    protocol draws randomness.
    """
    problems = spec.validate()
    if problems:
        raise DataError("; ".join(problems))

    indices = list(range(len(metadata)))
    if spec.subset is not None:
        keep = ACTION_SUBSETS[spec.subset]
        indices = [i for i in indices if metadata[i].action_label in keep]
    if not indices:
        raise DataError("no samples left after subset filtering")

    if spec.protocol in ("cross_subject_odd_even", "subset_test3"):
        train = [i for i in indices if metadata[i].subject_id % 2 == 1]
        test = [i for i in indices if metadata[i].subject_id % 2 == 0]
    else:
        fraction_num = 1 if spec.protocol == "subset_test1" else 2
        by_class: dict[int, list[int]] = {}
        for i in indices:
            by_class.setdefault(metadata[i].action_label, []).append(i)
        train, test = [], []
        for label in sorted(by_class):
            group = sorted(
                by_class[label],
                key=lambda i: (metadata[i].subject_id, metadata[i].repetition, i),
            )
            n_train = _ceil_div(fraction_num * len(group), 3)
            train += group[:n_train]
            test += group[n_train:]
        train.sort()
        test.sort()

    if not train:
        raise DataError(f"split {spec.protocol} left the training side empty")
    if not test:
        raise DataError(f"split {spec.protocol} left the test side empty")
    return train, test


@dataclass
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    classes: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def per_class_accuracy(self) -> dict[int, float | None]:
        out = {}
        for i, c in enumerate(self.classes):
            row = self.counts[i].sum()
            out[int(c)] = float(self.counts[i, i] / row) if row else None
        return out


def confusion(predictions, truths, classes=None) -> ConfusionMatrix:
    """Tally a confusion matrix; labels outside the class map are errors."""
    predictions = np.asarray(predictions)
    truths = np.asarray(truths)
    if predictions.shape != truths.shape:
        raise DataError(
            f"{predictions.size} predictions vs {truths.size} ground-truth labels"
        )
    if classes is None:
        classes = np.unique(np.concatenate([truths, predictions]))
    classes = np.asarray(classes)
    index = {int(c): i for i, c in enumerate(classes)}
    counts = np.zeros((classes.size, classes.size), dtype=np.int64)
    for p, t in zip(predictions, truths):
        if int(t) not in index:
            raise DataError(f"true label {int(t)} outside the class map {list(classes)}")
        if int(p) not in index:
            raise DataError(f"predicted label {int(p)} outside the class map {list(classes)}")
        counts[index[int(t)], index[int(p)]] += 1
    return ConfusionMatrix(classes=classes, counts=counts)


# --- the pipeline itself ---------------------------------------------------


def sequence_pyramids(seq: DepthSequence, cfg) -> dict:
    """Per-view pyramids of the config's kind for one sequence."""
    dmi = compute_dmi(seq, cfg.projection)
    out = {}
    for view in VIEWS:
        gp = build_gaussian(dmi[view], cfg.layers)
        out[view] = gp if cfg.pyramid_kind == GAUSSIAN else build_laplacian(gp)
    return out


def sequence_descriptor(seq: DepthSequence, cfg) -> FeatureVector:
    """Full raw descriptor (before scaling/PCA) for one sequence."""
    return assemble_descriptor(sequence_pyramids(seq, cfg), cfg.norm, cfg.hog)


def _descriptor_values(args) -> np.ndarray:
    seq, cfg = args
    return sequence_descriptor(seq, cfg).values


def descriptor_matrix(seqs, cfg, jobs: int = 1) -> np.ndarray:
    """Stack raw descriptors, optionally extracting in parallel processes.

    Ordering follows the input ordering regardless of job count, so the
    result is identical for any `jobs`.
    """
    if jobs > 1 and len(seqs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_descriptor_values, ((s, cfg) for s in seqs)))
    else:
        rows = [sequence_descriptor(s, cfg).values for s in seqs]
    return np.vstack(rows)


def load_dataset(dataset_dir) -> list[DepthSequence]:
    """All raw_lpdmi sequences under a directory, in sorted file order."""
    paths = sorted(Path(dataset_dir).glob(SEQUENCE_GLOB))
    if not paths:
        raise DataError(f"no {SEQUENCE_GLOB} sequence files under {dataset_dir}")
    return [load_sequence(p) for p in paths]


def fit_transforms(x_train: np.ndarray, cfg):
    """Fit the min-max scaler and PCA on training descriptors only."""
    scaler = minmax_fit(x_train)
    pca = pca_fit(minmax_apply(scaler, x_train), cfg.pca_components)
    return scaler, pca


@dataclass
class ExperimentReport:
    """Everything needed to read off and rerun one experiment.

    The canonical body excludes wall-clock timings so identical
    config+seed reruns serialize byte-identically; timings live alongside.
    """

    protocol: str
    subset: str | None
    classes: list[int]
    train_count: int
    test_count: int
    descriptor_dims: int
    pca_components: int
    accuracy: float
    per_class: dict[int, float | None]
    matrix: ConfusionMatrix
    config_echo: dict[str, str]
    timings: dict[str, float] = field(default_factory=dict)

    def body(self) -> dict:
        return {
            "protocol": self.protocol,
            "subset": self.subset,
            "classes": self.classes,
            "train_count": self.train_count,
            "test_count": self.test_count,
            "descriptor_dims": self.descriptor_dims,
            "pca_components": self.pca_components,
            "accuracy": self.accuracy,
            "per_class_accuracy": {str(k): v for k, v in self.per_class.items()},
            "confusion": self.matrix.counts.tolist(),
            "config": dict(sorted(self.config_echo.items())),
        }


class _Stage:
    """Tags escaping pipeline errors with the stage they came from."""

    def __init__(self, report_timings: dict, name: str):
        self.timings = report_timings
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and isinstance(exc, LpdmiError) and not hasattr(exc, "stage"):
            exc.stage = self.name
        return False


def evaluate(cfg, dataset_dir=None, spec: SplitSpec | None = None) -> ExperimentReport:
    """Run the full pipeline under one config and report the outcome.

    Projection, pyramids, and descriptors run per sequence; min-max
    scaling and PCA are fit on the training rows only; the classifier's
    hidden layer is drawn from the config seed.
    """
    cfg.validate()
    dataset_dir = cfg.dataset if dataset_dir is None else dataset_dir
    spec = cfg.split if spec is None else spec
    timings: dict[str, float] = {}

    with _Stage(timings, "load"):
        seqs = load_dataset(dataset_dir)
    with _Stage(timings, "split"):
        train_idx, test_idx = split(seqs, spec)
    with _Stage(timings, "features"):
        x_all = descriptor_matrix(seqs, cfg, jobs=cfg.jobs)
    labels = np.array([s.action_label for s in seqs])
    x_train, y_train = x_all[train_idx], labels[train_idx]
    x_test, y_test = x_all[test_idx], labels[test_idx]

    with _Stage(timings, "fit-transforms"):
        scaler, pca = fit_transforms(x_train, cfg)
        z_train = pca_apply(pca, minmax_apply(scaler, x_train))
        z_test = pca_apply(pca, minmax_apply(scaler, x_test))
    with _Stage(timings, "train"):
        model = elm.train(z_train, y_train, hidden_count=cfg.elm_hidden,
                          activation=cfg.elm_activation, seed=cfg.seed)
    with _Stage(timings, "predict"):
        _, predicted = elm.predict(model, z_test)

    all_classes = np.unique(labels[sorted(train_idx + test_idx)])
    matrix = confusion(predicted, y_test, classes=all_classes)
    return ExperimentReport(
        protocol=spec.protocol,
        subset=spec.subset,
        classes=[int(c) for c in all_classes],
        train_count=len(train_idx),
        test_count=len(test_idx),
        descriptor_dims=int(x_all.shape[1]),
        pca_components=pca.k,
        accuracy=matrix.accuracy,
        per_class=matrix.per_class_accuracy(),
        matrix=matrix,
        config_echo=cfg.to_flat(),
        timings=timings,
    )

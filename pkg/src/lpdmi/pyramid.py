"""Gaussian and Laplacian image pyramids.

The smoothing kernel is the classic 5x5 binomial window: the integer
matrix below divided by 256, which factors as the outer product of
[1, 4, 6, 4, 1]/16 with itself. It approximates a Gaussian window whose
standard deviation is fixed by that choice; the explicit matrix is
authoritative and sigma is not independently configurable. Reduce blurs
and keeps every second sample; expand interleaves zeros, blurs, and
scales by 4 so constants survive both directions. Borders replicate the
source sample grid, which is what makes constant preservation exact
rather than approximate.

A Laplacian pyramid stores, per level, the difference between a Gaussian
level and the expansion of the next-coarser one; the top level is copied
from the Gaussian pyramid, so the stack folds back into the original
image exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

_KERNEL_INT = np.array(
    [
        [1, 4, 6, 4, 1],
        [4, 16, 24, 16, 4],
        [6, 24, 36, 24, 6],
        [4, 16, 24, 16, 4],
        [1, 4, 6, 4, 1],
    ],
    dtype=np.float64,
)

KERNEL = _KERNEL_INT / 256.0
KERNEL_1D = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
KERNEL_RADIUS = 2

GAUSSIAN = "gaussian"
LAPLACIAN = "laplacian"


@dataclass
class Pyramid:
    """Ordered levels, largest first; `kind` is "gaussian" or "laplacian"."""

    kind: str
    levels: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def base_shape(self) -> tuple[int, int]:
        return self.levels[0].shape


def max_levels(shape) -> int:
    """Largest legal level count for a base image of this shape:
    floor(log2(min(rows, cols)))."""
    smallest = min(int(shape[0]), int(shape[1]))
    if smallest < 1:
        raise DataError(f"image dimensions must be positive, got {tuple(shape)}")
    return smallest.bit_length() - 1


def _reduce_axis(a: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    centers = 2 * np.arange((n + 1) // 2)
    out = np.zeros((centers.size,) + a.shape[1:])
    for offset, weight in zip(range(-2, 3), KERNEL_1D):
        out += weight * a[np.clip(centers + offset, 0, n - 1)]
    return np.moveaxis(out, 0, axis)


def reduce(image: np.ndarray) -> np.ndarray:
    """Blur with the 5x5 kernel (replicate borders) and keep even-indexed
    samples; output dims are ceil(input/2) per axis."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DataError(f"reduce needs a 2D image, got shape {image.shape}")
    if image.shape[0] < 2 or image.shape[1] < 2:
        raise DataError(f"image too small to reduce: {image.shape}, need >= 2x2")
    return _reduce_axis(_reduce_axis(image, 0), 1)


def _expand_axis(a: np.ndarray, target: int, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    if target not in (2 * n - 1, 2 * n):
        raise DataError(
            f"expand target {target} incompatible with source extent {n} "
            f"(must be {2 * n - 1} or {2 * n})"
        )
    out = np.empty((target,) + a.shape[1:])
    # Even outputs sit on source samples, odd ones between; per-phase
    # weights already include the x2 upsampling gain, so each sums to 1.
    p = np.arange((target + 1) // 2)
    out[0::2] = (a[np.clip(p - 1, 0, n - 1)] + 6.0 * a[p] + a[np.clip(p + 1, 0, n - 1)]) / 8.0
    q = np.arange(target // 2)
    out[1::2] = (a[q] + a[np.clip(q + 1, 0, n - 1)]) / 2.0
    return np.moveaxis(out, 0, axis)


def expand(image: np.ndarray, target_dims) -> np.ndarray:
    """Zero-insertion upsampling, 5x5 blur scaled by 4, replicate borders.

    `target_dims` must be (2d-1) or (2d) of each source extent d, i.e. a
    shape `reduce` could have produced this image from.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DataError(f"expand needs a 2D image, got shape {image.shape}")
    rows, cols = int(target_dims[0]), int(target_dims[1])
    return _expand_axis(_expand_axis(image, rows, 0), cols, 1)


def build_gaussian(image: np.ndarray, levels: int) -> Pyramid:
    """Stack [image, reduce(image), reduce^2(image), ...] of length `levels`.

    `levels` must satisfy 1 <= levels <= floor(log2(min(rows, cols))).
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DataError(f"pyramid base must be 2D, got shape {image.shape}")
    bound = max_levels(image.shape)
    if not 1 <= levels <= bound:
        raise ConfigError(
            f"level count {levels} out of range: 1 <= L <= "
            f"floor(log2(min(M, N))) = {bound} for a "
            f"{image.shape[0]}x{image.shape[1]} image"
        )
    stack = [image]
    for _ in range(levels - 1):
        stack.append(reduce(stack[-1]))
    return Pyramid(GAUSSIAN, stack)


def build_laplacian(gp: Pyramid) -> Pyramid:
    """Per level, Gaussian minus the expanded next-coarser Gaussian; the
    top level is the Gaussian top. Levels carry signed values."""
    if gp.kind != GAUSSIAN:
        raise DataError(f"need a gaussian pyramid, got kind {gp.kind!r}")
    levels = [
        gp.levels[l] - expand(gp.levels[l + 1], gp.levels[l].shape)
        for l in range(len(gp) - 1)
    ]
    levels.append(gp.levels[-1].copy())
    return Pyramid(LAPLACIAN, levels)


def reconstruct(lp: Pyramid) -> np.ndarray:
    """Fold a Laplacian pyramid back into its base image."""
    if lp.kind != LAPLACIAN:
        raise DataError(f"need a laplacian pyramid, got kind {lp.kind!r}")
    acc = lp.levels[-1]
    for l in range(len(lp) - 2, -1, -1):
        acc = lp.levels[l] + expand(acc, lp.levels[l].shape)
    return acc

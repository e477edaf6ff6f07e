"""Multi-granularity gradient descriptors and feature-space reductions.

Each pyramid level is resized per view to a fixed target by pixel
replication, described with dense oriented-gradient histograms, and the
per-layer, per-view descriptors are concatenated in a fixed order
(ascending layer; front, side, top within a layer). Min-max scaling and
PCA are fit on training data only and applied unchanged elsewhere.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .projection import VIEWS
from .pyramid import Pyramid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-view target sizes, in pixels.

    `width` and `height` are the front extents; `depth` is the side
    horizontal / top vertical extent, so the targets are front
    height x width, side height x depth, top depth x width.
    """

    width: int = 60
    height: int = 100
    depth: int = 80

    def target_dims(self, view: str) -> tuple[int, int]:
        if view == "front":
            return (self.height, self.width)
        if view == "side":
            return (self.height, self.depth)
        if view == "top":
            return (self.depth, self.width)
        raise ConfigError(f"unknown view {view!r}")

    def validate(self, cell: int) -> list[str]:
        problems = []
        for name, value in (("width", self.width), ("height", self.height),
                            ("depth", self.depth)):
            if value <= 0 or value % cell != 0:
                problems.append(
                    f"normalization {name} = {value} must be a positive multiple "
                    f"of the HOG cell size {cell}"
                )
        return problems


@dataclass(frozen=True)
class HogConfig:
    """Dense oriented-gradient histogram parameters.

    cell/stride are in pixels, block in cells per side; bins cover the
    unsigned orientation range [0, 180). `l2_epsilon` guards the block
    normalizer so all-flat blocks stay zero.
    """

    cell: int = 10
    bins: int = 9
    block: int = 2
    stride: int = 10
    l2_epsilon: float = 1e-5

    def validate(self) -> list[str]:
        problems = []
        if self.cell < 1:
            problems.append(f"cell size must be >= 1 px, got {self.cell}")
        if self.bins < 2:
            problems.append(f"orientation bins must be >= 2, got {self.bins}")
        if self.block < 1:
            problems.append(f"block size must be >= 1 cell, got {self.block}")
        if self.stride < 1 or self.cell < 1 or self.stride % max(self.cell, 1) != 0:
            problems.append(
                f"stride ({self.stride} px) must be a positive multiple of the "
                f"cell size ({self.cell} px) so blocks stay cell-aligned"
            )
        if not self.l2_epsilon > 0:
            problems.append(f"l2_epsilon must be positive, got {self.l2_epsilon}")
        return problems

    def blocks_along(self, extent: int) -> int:
        cells = extent // self.cell
        step = self.stride // self.cell
        span = cells - self.block
        if span < 0:
            return 0
        return span // step + 1

    def block_grid(self, dims) -> tuple[int, int]:
        return (self.blocks_along(dims[0]), self.blocks_along(dims[1]))

    def descriptor_length(self, dims) -> int:
        by, bx = self.block_grid(dims)
        return by * bx * self.block * self.block * self.bins


def resize_replicate(image: np.ndarray, target_dims) -> np.ndarray:
    """Nearest-neighbor resize: out(i, j) = in(floor(i*rows/R), floor(j*cols/C)).

    Introduces no new values; integer-factor upsizing replicates each
    source pixel into a block.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise DataError(f"resize needs a 2D image, got shape {image.shape}")
    rows, cols = int(target_dims[0]), int(target_dims[1])
    if rows < 1 or cols < 1:
        raise ConfigError(f"target dims must be positive, got {(rows, cols)}")
    row_idx = np.arange(rows) * image.shape[0] // rows
    col_idx = np.arange(cols) * image.shape[1] // cols
    return image[np.ix_(row_idx, col_idx)]


def _gradients(image: np.ndarray):
    # Centered differences [-1, 0, 1] with replicated borders.
    gx = np.empty_like(image)
    gx[:, 1:-1] = image[:, 2:] - image[:, :-2]
    gx[:, 0] = image[:, 1] - image[:, 0]
    gx[:, -1] = image[:, -1] - image[:, -2]
    gy = np.empty_like(image)
    gy[1:-1, :] = image[2:, :] - image[:-2, :]
    gy[0, :] = image[1, :] - image[0, :]
    gy[-1, :] = image[-1, :] - image[-2, :]
    return gx, gy


def hog(image: np.ndarray, cfg: HogConfig = HogConfig()) -> np.ndarray:
    """Dense HOG descriptor.

    Unsigned orientations vote, magnitude-weighted and linearly split
    between the two nearest bins, into per-cell histograms; overlapping
    block windows of cells are L2-normalized and concatenated row-major.
    """
    problems = cfg.validate()
    if problems:
        raise ConfigError(problems)
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DataError(f"hog needs a 2D image, got shape {image.shape}")
    h, w = image.shape
    if h % cfg.cell != 0 or w % cfg.cell != 0:
        raise ConfigError(
            f"image dims {h}x{w} must be multiples of the cell size {cfg.cell}"
        )
    cells_y, cells_x = h // cfg.cell, w // cfg.cell

    gx, gy = _gradients(image)
    magnitude = np.hypot(gx, gy)
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0

    # Continuous bin coordinate; centers sit mid-bin, neighbors wrap at 180.
    coord = angle * cfg.bins / 180.0 - 0.5
    lower = np.floor(coord)
    frac = coord - lower
    lo_bin = lower.astype(np.intp) % cfg.bins
    hi_bin = (lo_bin + 1) % cfg.bins

    rows, cols = np.indices(image.shape)
    cell_index = (rows // cfg.cell) * cells_x + (cols // cfg.cell)
    n_hist = cells_y * cells_x * cfg.bins
    hist = np.bincount((cell_index * cfg.bins + lo_bin).ravel(),
                       weights=(magnitude * (1.0 - frac)).ravel(), minlength=n_hist)
    hist += np.bincount((cell_index * cfg.bins + hi_bin).ravel(),
                        weights=(magnitude * frac).ravel(), minlength=n_hist)
    hist = hist.reshape(cells_y, cells_x, cfg.bins)

    by, bx = cfg.block_grid((h, w))
    step = cfg.stride // cfg.cell
    blocks = np.empty((by, bx, cfg.block * cfg.block * cfg.bins))
    for i in range(by):
        for j in range(bx):
            window = hist[i * step:i * step + cfg.block, j * step:j * step + cfg.block]
            v = window.reshape(-1)
            blocks[i, j] = v / np.sqrt(np.sum(v * v) + cfg.l2_epsilon ** 2)
    return blocks.reshape(-1)


@dataclass
class FeatureVector:
    """Cascaded descriptor plus the (layer, view) span bookkeeping."""

    values: np.ndarray
    layout: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return self.values.size


def descriptor_length(norm: NormalizationSpec, cfg: HogConfig, levels: int) -> int:
    per_layer = sum(cfg.descriptor_length(norm.target_dims(v)) for v in VIEWS)
    return levels * per_layer


def assemble_descriptor(pyramids: dict[str, Pyramid], norm: NormalizationSpec,
                        cfg: HogConfig = HogConfig()) -> FeatureVector:
    """Cascade per-level, per-view HOG descriptors into one vector.

    Layer order is ascending (largest level first); views go front, side,
    top within a layer. All three pyramids must have the same depth.
    """
    missing = [v for v in VIEWS if v not in pyramids]
    if missing:
        raise DataError(f"missing pyramids for views: {missing}")
    depths = {v: len(pyramids[v]) for v in VIEWS}
    if len(set(depths.values())) != 1:
        raise DataError(f"pyramids must share a level count, got {depths}")
    problems = cfg.validate() + norm.validate(cfg.cell)
    if problems:
        raise ConfigError(problems)

    pieces = []
    layout = []
    offset = 0
    for layer in range(1, len(pyramids["front"]) + 1):
        for view in VIEWS:
            level = pyramids[view].levels[layer - 1]
            dims = norm.target_dims(view)
            piece = hog(resize_replicate(level, dims), cfg)
            by, bx = cfg.block_grid(dims)
            layout.append({
                "layer": layer,
                "view": view,
                "blocks": [by, bx],
                "offset": offset,
                "length": int(piece.size),
            })
            pieces.append(piece)
            offset += piece.size
    return FeatureVector(values=np.concatenate(pieces), layout=layout)


# --- train-time feature-space transforms ---------------------------------


@dataclass
class MinMaxScaler:
    """Per-dimension train minima and maxima."""

    mins: np.ndarray
    maxs: np.ndarray


def minmax_fit(train: np.ndarray) -> MinMaxScaler:
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 2:
        raise DataError(
            f"min-max scaling needs a 2D matrix with >= 2 rows, got shape {train.shape}"
        )
    return MinMaxScaler(mins=train.min(axis=0), maxs=train.max(axis=0))


def minmax_apply(scaler: MinMaxScaler, x: np.ndarray) -> np.ndarray:
    """(x - min) / (max - min) per dimension; constant dimensions map to 0.
    Values outside the train range land outside [0, 1] unclipped."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != scaler.mins.shape[0]:
        raise DataError(
            f"dimension mismatch: scaler has {scaler.mins.shape[0]} dims, "
            f"input has {x.shape[-1]}"
        )
    span = scaler.maxs - scaler.mins
    safe = np.where(span > 0, span, 1.0)
    scaled = (x - scaler.mins) / safe
    return np.where(span > 0, scaled, 0.0)


@dataclass
class PcaModel:
    """Mean vector, orthonormal component columns, covariance eigenvalues."""

    mean: np.ndarray
    components: np.ndarray  # (dims, k)
    explained_variance: np.ndarray  # (k,)

    @property
    def k(self) -> int:
        return self.components.shape[1]


def pca_fit(train: np.ndarray, k: int) -> PcaModel:
    """Top-k principal axes of the train covariance, via SVD of the
    centered data (exact, and tractable when dims far exceed samples).

    A `k` above min(samples, dims) is capped with a logged warning.
    """
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 2:
        raise DataError(f"PCA needs a 2D matrix with >= 2 rows, got shape {train.shape}")
    if k < 1:
        raise ConfigError(f"PCA component count must be >= 1, got {k}")
    cap = min(train.shape)
    if k > cap:
        log.warning("PCA components capped: requested %d, keeping %d "
                    "(min of %d samples and %d dims)", k, cap, *train.shape)
        k = cap
    mean = train.mean(axis=0)
    _, singular, vt = np.linalg.svd(train - mean, full_matrices=False)
    variance = singular ** 2 / (train.shape[0] - 1)
    return PcaModel(mean=mean, components=vt[:k].T.copy(),
                    explained_variance=variance[:k].copy())


def pca_apply(model: PcaModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.mean.shape[0]:
        raise DataError(
            f"dimension mismatch: PCA was fit on {model.mean.shape[0]} dims, "
            f"input has {x.shape[-1]}"
        )
    return (x - model.mean) @ model.components


# --- binary tensor persistence --------------------------------------------
#
# Little-endian: u32 rows | u32 cols | f64 row-major payload. Callers pair
# matrices with a JSON sidecar describing what the rows and columns mean.

def save_matrix(path, matrix: np.ndarray) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if matrix.ndim != 2:
        raise DataError(f"can only persist 2D matrices, got shape {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", matrix.shape[0], matrix.shape[1]))
        fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())


def load_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise DataError(f"matrix file too short: {len(data)} bytes")
    rows, cols = struct.unpack_from("<II", data)
    expected = 8 + rows * cols * 8
    if len(data) < expected:
        raise DataError(
            f"matrix payload truncated: header promises {rows}x{cols} "
            f"({expected} bytes), file holds {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=8)
    return values.reshape(rows, cols).astype(np.float64)


def save_sidecar(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_sidecar(path) -> dict:
    return json.loads(Path(path).read_text())

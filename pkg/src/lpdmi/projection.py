"""Three-view depth motion images.

Every depth frame projects onto three orthogonal planes: the front map is
the scaled depth itself, while the side and top maps record, per (row,
depth-bin) and (depth-bin, column) cell, the minimum scaled spatial
coordinate of the pixels that land there. Background cells hold 255, so
the temporal minimum underlying the motion image is driven by foreground
only. A motion image is then 255 minus the per-pixel temporal minimum,
cropped to its region of interest and normalized to unit maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth_io import DepthSequence
from .errors import AllBackgroundError, ConfigError

VIEWS = ("front", "side", "top")

BACKGROUND = 255.0


@dataclass(frozen=True)
class ProjectionConfig:
    """How raw sensor units become byte-range map intensities.

    Raw depth is clamped to [depth_min, depth_max] and mapped affinely to
    [0, 255]; the same clamped range is cut into `depth_bins` equal slots
    that serve as the side/top depth axis.
    """

    depth_bins: int = 64
    depth_min: float = 0.0
    depth_max: float = 4000.0

    def validate(self) -> list[str]:
        problems = []
        if self.depth_bins < 8:
            problems.append(f"depth_bins must be >= 8, got {self.depth_bins}")
        if not self.depth_max > self.depth_min:
            problems.append(
                f"depth_max ({self.depth_max}) must exceed depth_min ({self.depth_min})"
            )
        return problems

    def scale_depth(self, depth):
        clamped = np.clip(depth, self.depth_min, self.depth_max)
        return (clamped - self.depth_min) * (255.0 / (self.depth_max - self.depth_min))

    def depth_bin(self, depth):
        clamped = np.clip(depth, self.depth_min, self.depth_max)
        frac = (clamped - self.depth_min) / (self.depth_max - self.depth_min)
        return np.minimum((frac * self.depth_bins).astype(np.intp), self.depth_bins - 1)


def _axis_coordinate(n: int) -> np.ndarray:
    # Spatial index scaled to [0, 255]; a single row/column maps to 0.
    if n == 1:
        return np.zeros(1)
    return np.arange(n) * (255.0 / (n - 1))


def project_frame(frame: np.ndarray, cfg: ProjectionConfig):
    """Project one depth frame onto the front, side, and top planes.

    Returns (front, side, top) float arrays of shapes (h, w), (h, D),
    (D, w). Cells no foreground pixel reaches hold 255.
    """
    problems = cfg.validate()
    if problems:
        raise ConfigError(problems)
    frame = np.asarray(frame)
    if frame.ndim != 2 or frame.shape[0] < 1 or frame.shape[1] < 1:
        raise ConfigError(f"frame must be a non-empty 2D grid, got shape {frame.shape}")

    h, w = frame.shape
    d = cfg.depth_bins
    fg = frame > 0

    front = np.full((h, w), BACKGROUND)
    front[fg] = cfg.scale_depth(frame[fg].astype(np.float64))

    side = np.full((h, d), BACKGROUND)
    top = np.full((d, w), BACKGROUND)
    if fg.any():
        rows, cols = np.nonzero(fg)
        bins = cfg.depth_bin(frame[rows, cols].astype(np.float64))
        np.minimum.at(side, (rows, bins), _axis_coordinate(w)[cols])
        np.minimum.at(top, (bins, cols), _axis_coordinate(h)[rows])
    return front, side, top


def crop_roi(image: np.ndarray) -> np.ndarray:
    """Tight bounding box of pixels > 0; values unchanged.

    Raises AllBackgroundError on an all-zero image.
    """
    image = np.asarray(image)
    nonzero_rows = np.nonzero((image > 0).any(axis=1))[0]
    nonzero_cols = np.nonzero((image > 0).any(axis=0))[0]
    if nonzero_rows.size == 0:
        raise AllBackgroundError("image has no pixels above the background threshold")
    return image[nonzero_rows[0]:nonzero_rows[-1] + 1,
                 nonzero_cols[0]:nonzero_cols[-1] + 1]


def compute_dmi(seq: DepthSequence, cfg: ProjectionConfig) -> dict[str, np.ndarray]:
    """Depth motion image per view: 255 minus the temporal minimum of the
    per-frame maps, ROI-cropped, then divided by its maximum pixel.

    Returns {"front": ..., "side": ..., "top": ...} with values in [0, 1].
    Raises AllBackgroundError when a view never sees foreground.
    """
    mins = None
    for t in range(seq.n_frames):
        maps = project_frame(seq.frames[t], cfg)
        if mins is None:
            mins = list(maps)
        else:
            for acc, m in zip(mins, maps):
                np.minimum(acc, m, out=acc)

    out = {}
    for view, acc in zip(VIEWS, mins):
        inverted = BACKGROUND - acc
        try:
            cropped = crop_roi(inverted)
        except AllBackgroundError:
            raise AllBackgroundError(
                f"{view} view is all background over the whole sequence"
            ) from None
        out[view] = cropped / cropped.max()
    return out

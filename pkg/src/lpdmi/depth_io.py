"""Depth sequence storage, synthetic test data, and image dumps.

Native file format ``raw_lpdmi`` (little-endian throughout)::

    magic "LPD1" | u32 frame_count | u32 width | u32 height
    | u32 subject_id | u32 action_label | u32 repetition
    | frame_count blocks of width*height u32 depth samples,
      row-major, top-left origin

Depth samples are opaque non-negative integers in sensor units; 0 marks
background / no-return. The frame-index origin ``start_index`` is a runtime
attribute (defaults to 0) and is not persisted.
"""

from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ParseError

MAGIC = b"LPD1"
_HEADER = struct.Struct("<4s6I")
HEADER_SIZE = _HEADER.size  # 28 bytes
BYTES_PER_SAMPLE = 4

# Offsets of the header fields, for parse diagnostics.
_OFF_MAGIC = 0
_OFF_FRAME_COUNT = 4
_OFF_WIDTH = 8
_OFF_HEIGHT = 12


@dataclass(eq=False)
class DepthSequence:
    """Ordered depth frames plus the metadata the split protocols need.

    ``frames`` is a (n_frames, height, width) uint32 array; every frame
    shares the same dimensions by construction.
    """

    frames: np.ndarray
    subject_id: int = 1
    action_label: int = 0
    repetition: int = 1
    start_index: int = 0

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.uint32)
        if frames.ndim != 3:
            raise DataError(f"frames must be 3-dimensional, got shape {frames.shape}")
        if frames.shape[0] < 1:
            raise DataError("a sequence needs at least one frame")
        if frames.shape[1] < 1 or frames.shape[2] < 1:
            raise DataError(f"frame dimensions must be positive, got {frames.shape[1:]}")
        if self.subject_id < 1:
            raise DataError(f"subject_id must be >= 1, got {self.subject_id}")
        if self.repetition < 1:
            raise DataError(f"repetition must be >= 1, got {self.repetition}")
        self.frames = frames

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def __eq__(self, other):
        if not isinstance(other, DepthSequence):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.action_label == other.action_label
            and self.repetition == other.repetition
            and self.start_index == other.start_index
            and self.frames.shape == other.frames.shape
            and bool(np.array_equal(self.frames, other.frames))
        )


def load_sequence(path, format: str = "raw_lpdmi") -> DepthSequence:
    """Load a depth sequence from a ``raw_lpdmi`` file.

    Raises :class:`ParseError` naming the byte offset on a malformed header,
    zero dimensions, or a truncated payload.
    """
    if format != "raw_lpdmi":
        raise ConfigError(f"unknown sequence format {format!r}")
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise ParseError(
            f"file too short for header: {len(data)} < {HEADER_SIZE} bytes",
            offset=len(data),
        )
    magic, n_frames, width, height, subject, action, repetition = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=_OFF_MAGIC)
    if n_frames == 0:
        raise ParseError("frame_count is zero", offset=_OFF_FRAME_COUNT)
    if width == 0:
        raise ParseError("width is zero", offset=_OFF_WIDTH)
    if height == 0:
        raise ParseError("height is zero", offset=_OFF_HEIGHT)
    frame_bytes = width * height * BYTES_PER_SAMPLE
    expected = HEADER_SIZE + n_frames * frame_bytes
    if len(data) < expected:
        raise ParseError(
            f"payload truncated: header promises {n_frames} frames "
            f"({expected} bytes total), file ends early",
            offset=len(data),
        )
    samples = np.frombuffer(data, dtype="<u4", count=n_frames * width * height, offset=HEADER_SIZE)
    frames = samples.reshape(n_frames, height, width).astype(np.uint32)
    return DepthSequence(
        frames=frames,
        subject_id=int(subject),
        action_label=int(action),
        repetition=int(repetition),
    )


def save_sequence(seq: DepthSequence, path) -> None:
    """Write `seq` as a ``raw_lpdmi`` file; round-trips bit-exactly.

    Writes to a temporary sibling and renames, so a failed write leaves no
    partial file behind.
    """
    path = Path(path)
    header = _HEADER.pack(
        MAGIC, seq.n_frames, seq.width, seq.height,
        seq.subject_id, seq.action_label, seq.repetition,
    )
    payload = np.ascontiguousarray(seq.frames, dtype="<u4").tobytes()
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


CLASS_KINDS = (
    "blob-translate-up",
    "blob-translate-right",
    "blob-diagonal",
    "blob-grow",
)


@dataclass(frozen=True)
class SyntheticSpec:
    """Deterministic moving-blob sequence for tests and demos.

    The blob is a dome: depth is highest at the rim and lowest at the
    center, so its projection spans several depth bins instead of a single
    flat slice. ``noise_amplitude`` > 0 perturbs blob depths by +-amplitude
    and sprinkles background speckle of depth 1..amplitude; at 0 the
    nonzero support is exactly the blob.
    """

    class_kind: str
    n_frames: int = 8
    width: int = 48
    height: int = 48
    blob_radius: int = 6
    blob_depth: int = 2000
    dome_amplitude: int = 800
    noise_amplitude: int = 0
    seed: int = 0

    def validate(self) -> list[str]:
        problems = []
        if self.class_kind not in CLASS_KINDS:
            problems.append(f"unknown class_kind {self.class_kind!r}, expected one of {CLASS_KINDS}")
        if self.n_frames < 2:
            problems.append(f"n_frames must be >= 2, got {self.n_frames}")
        if self.width < 16 or self.height < 16:
            problems.append(f"frame dims must be >= 16x16, got {self.width}x{self.height}")
        if self.blob_radius < 1:
            problems.append(f"blob_radius must be >= 1, got {self.blob_radius}")
        if self.blob_depth <= self.dome_amplitude:
            problems.append("blob_depth must exceed dome_amplitude so depths stay positive")
        if 2 * self.blob_radius + 1 > min(self.width, self.height):
            problems.append(
                f"blob of radius {self.blob_radius} does not fit in a "
                f"{self.width}x{self.height} frame"
            )
        return problems


def _stamp_blob(frame: np.ndarray, row: float, col: float, radius: float,
                base_depth: float, dome: float) -> None:
    """Draw a dome-profiled disk: depth rises from base at the center to
    base + dome at the rim. Values overwrite whatever was underneath."""
    h, w = frame.shape
    rr, cc = np.ogrid[:h, :w]
    dist2 = (rr - row) ** 2 + (cc - col) ** 2
    mask = dist2 <= radius * radius
    depth = base_depth + dome * dist2 / (radius * radius)
    frame[mask] = np.maximum(1, np.rint(depth[mask])).astype(np.uint32)


def synth_sequence(spec: SyntheticSpec) -> DepthSequence:
    """Generate a deterministic synthetic sequence; pure function of `spec`."""
    problems = spec.validate()
    if problems:
        raise ConfigError(problems)

    rng = np.random.default_rng(spec.seed)
    h, w, n = spec.height, spec.width, spec.n_frames
    r = spec.blob_radius
    margin = r + 1
    # Rigid per-sequence jitter: motion direction is unaffected.
    jr = rng.integers(-2, 3)
    jc = rng.integers(-2, 3)

    rows = np.full(n, (h - 1) / 2)
    cols = np.full(n, (w - 1) / 2)
    radii = np.full(n, float(r))
    if spec.class_kind == "blob-translate-up":
        rows = np.linspace(h - 1 - margin, margin, n)
    elif spec.class_kind == "blob-translate-right":
        cols = np.linspace(margin, w - 1 - margin, n)
    elif spec.class_kind == "blob-diagonal":
        rows = np.linspace(h - 1 - margin, margin, n)
        cols = np.linspace(margin, w - 1 - margin, n)
    elif spec.class_kind == "blob-grow":
        max_r = (min(h, w) - 1) // 2 - 1
        radii = np.linspace(r, max(r + 1, max_r), n)

    # Centers quantize to the pixel grid so the stamped disk is symmetric.
    rows = np.rint(np.clip(rows + jr, margin, h - 1 - margin)).astype(int)
    cols = np.rint(np.clip(cols + jc, margin, w - 1 - margin)).astype(int)
    base = spec.blob_depth - spec.dome_amplitude + rng.integers(-100, 101)

    frames = np.zeros((n, h, w), dtype=np.uint32)
    for t in range(n):
        _stamp_blob(frames[t], rows[t], cols[t], radii[t], base, spec.dome_amplitude)
        if spec.noise_amplitude > 0:
            blob = frames[t] > 0
            wobble = rng.integers(-spec.noise_amplitude, spec.noise_amplitude + 1,
                                  size=int(blob.sum()))
            frames[t][blob] = np.maximum(1, frames[t][blob].astype(np.int64) + wobble)
            speckle = (rng.random((h, w)) < 0.02) & ~blob
            frames[t][speckle] = rng.integers(1, spec.noise_amplitude + 1,
                                              size=int(speckle.sum()))
    return DepthSequence(frames=frames)


def write_pgm(image: np.ndarray, path, signed: bool = False) -> None:
    """Dump a 2D array as binary PGM (P5), for visual inspection only.

    Unit-range images are scaled by 255; `signed` affinely maps
    [min, max] -> [0, 255] so Laplacian levels are displayable.
    """
    a = np.asarray(image, dtype=np.float64)
    if a.ndim != 2:
        raise DataError(f"PGM dump needs a 2D image, got shape {a.shape}")
    if signed:
        lo, hi = float(a.min()), float(a.max())
        a = np.zeros_like(a) if hi == lo else (a - lo) * (255.0 / (hi - lo))
    elif a.size and a.max() <= 1.0:
        a = a * 255.0
    out = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{out.shape[1]} {out.shape[0]}\n255\n".encode("ascii"))
        fh.write(out.tobytes())


# --- documented converter for the common MSR-style depth binary ----------
#
# Layout: i32 frame_count | i32 width | i32 height | frame_count blocks of
# width*height i32 depth samples, row-major. Metadata is parsed from file
# names shaped like a01_s01_e01_sdepth.bin (action, subject, episode).

_MSR_NAME = re.compile(r"a(\d+)_s(\d+)_e(\d+)", re.IGNORECASE)


def load_msr_depth_bin(path) -> DepthSequence:
    """Adapter: read an MSR-style depth .bin into a DepthSequence."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12:
        raise ParseError("file too short for MSR header", offset=len(data))
    n_frames, width, height = struct.unpack_from("<3i", data)
    if n_frames <= 0 or width <= 0 or height <= 0:
        raise ParseError(
            f"implausible MSR header (frames={n_frames}, w={width}, h={height})",
            offset=0,
        )
    expected = 12 + n_frames * width * height * 4
    if len(data) < expected:
        raise ParseError(
            f"MSR payload truncated: expected {expected} bytes", offset=len(data)
        )
    samples = np.frombuffer(data, dtype="<i4", count=n_frames * width * height, offset=12)
    frames = np.maximum(samples, 0).reshape(n_frames, height, width).astype(np.uint32)
    m = _MSR_NAME.search(path.stem)
    action, subject, rep = (int(g) for g in m.groups()) if m else (0, 1, 1)
    return DepthSequence(frames=frames, subject_id=subject, action_label=action,
                         repetition=rep)

"""Latent tensor container, grid arithmetic, and the LTV1 file format.

A video latent is a dense float32 tensor of shape (channels, frames,
height, width), stored row-major so each per-frame spatial slice is
contiguous. The on-disk container is deliberately minimal -- a 4-byte
magic, four little-endian uint32 dims, then the raw little-endian
float32 payload -- so any language can read it back bit-exactly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    IoFailureError,
    MalformedHeaderError,
    NonFinitePayloadError,
    NonFiniteResultError,
)

LTV1_MAGIC = b"LTV1"
_HEADER = struct.Struct("<4sIIII")

# Targets below this get clamped back up when the source grid allows it;
# spectral demand estimation needs at least a 4x4 spatial grid.
MIN_SPATIAL = 4


class GridShape(NamedTuple):
    """A spatio-temporal grid: frame count and latent rows/columns."""

    frames: int
    height: int
    width: int


@dataclass(frozen=True)
class BaseGrid:
    """Full-resolution reference grid plus the total denoising steps."""

    frames: int
    height: int
    width: int
    steps: int

    def __post_init__(self):
        for name in ("frames", "height", "width", "steps"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"BaseGrid.{name} must be a positive integer, got {v!r}")

    @property
    def grid(self) -> GridShape:
        return GridShape(self.frames, self.height, self.width)

    @property
    def tokens(self) -> int:
        return self.frames * self.height * self.width


@dataclass(frozen=True, eq=False)
class VideoLatent:
    """Immutable float32 video latent of shape (C, F, H, W).

    The wrapped array is copied on construction and marked read-only, so
    instances are safe to share across threads. All values are checked
    finite; any operation that would produce NaN/Inf fails instead of
    propagating poison.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 4:
            raise ValueError(f"latent must be 4-D (C,F,H,W), got ndim={arr.ndim}")
        if any(s < 1 for s in arr.shape):
            raise ValueError(f"latent dims must be positive, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        if not np.isfinite(arr).all():
            raise NonFiniteResultError("latent contains NaN or Inf values")
        if arr is self.data:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def grid(self) -> GridShape:
        return GridShape(self.frames, self.height, self.width)


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def _scaled_dim(dim: int, ratio: float) -> int:
    """dim * ratio rounded half-away-from-zero.

    Ratios that sit on the 0.05 grid (the only values the planner ever
    emits) are evaluated in exact integer arithmetic so results never
    depend on binary-float representation; e.g. 0.7 * 125 is exactly
    87.5 and rounds up to 88. Off-grid ratios fall back to the float
    product.
    """
    twentieths = round(ratio * 20)
    if 1 <= twentieths <= 20 and abs(ratio - twentieths / 20.0) <= 1e-9:
        q, rem = divmod(dim * twentieths, 20)
        return q + (1 if 2 * rem >= 20 else 0)
    return round_half_away(dim * ratio)


def apply_ratios(shape: GridShape, r_s: float, r_t: float) -> GridShape:
    """Scale a grid by a spatial ratio r_s and a temporal ratio r_t.

    Each output dim is clamped to >= 1; height/width are additionally
    clamped to >= 4 whenever the source grid is itself at least 4 wide,
    keeping scaled grids usable for spectral estimation.
    """
    if not (0.0 < r_s <= 1.0) or not (0.0 < r_t <= 1.0):
        raise ValueError(f"ratios must lie in (0, 1], got r_s={r_s}, r_t={r_t}")
    frames = max(1, _scaled_dim(shape.frames, r_t))
    min_h = MIN_SPATIAL if shape.height >= MIN_SPATIAL else 1
    min_w = MIN_SPATIAL if shape.width >= MIN_SPATIAL else 1
    height = max(min_h, _scaled_dim(shape.height, r_s))
    width = max(min_w, _scaled_dim(shape.width, r_s))
    return GridShape(frames, height, width)


def save_latent(latent: VideoLatent, path) -> None:
    """Write a latent to ``path`` in the LTV1 container format."""
    c, f, h, w = latent.shape
    header = _HEADER.pack(LTV1_MAGIC, c, f, h, w)
    payload = np.ascontiguousarray(latent.data, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def load_latent(path) -> VideoLatent:
    """Read an LTV1 container back into a validated latent."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailureError(f"cannot read {path}: {exc}") from exc

    if len(blob) < _HEADER.size:
        raise MalformedHeaderError(f"{path}: file shorter than the 20-byte header")
    magic, c, f, h, w = _HEADER.unpack_from(blob)
    if magic != LTV1_MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}, expected {LTV1_MAGIC!r}")
    if min(c, f, h, w) < 1:
        raise MalformedHeaderError(f"{path}: zero dimension in header ({c},{f},{h},{w})")

    expected = c * f * h * w * 4
    actual = len(blob) - _HEADER.size
    if actual != expected:
        raise DimensionMismatchError(
            f"{path}: header promises {expected} payload bytes, found {actual}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    if not np.isfinite(values).all():
        raise NonFinitePayloadError(f"{path}: payload contains NaN or Inf")
    return VideoLatent(values.reshape(c, f, h, w).astype(np.float32))

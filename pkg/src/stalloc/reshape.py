"""Stage-transition primitives: anchor resizing, coordinate-hashed noise,
and schedule-weighted renoising.

The resize rule is separable 1-D linear interpolation between "anchor"
positions: when an axis grows from K to N, each source index i anchors
at round(i*(N-1)/(K-1)) and target positions between consecutive
anchors blend the two source values linearly; when an axis shrinks, the
dual rule subsamples the source at each target position's rounded
anchor. Both directions quantize to the same anchor lattice, so
shrinking and re-growing an axis reproduces linear fields exactly.
Unlike pooled 2x down- or up-sampling this supports arbitrary target
lengths on every axis.

Noise is addressed by coordinate, not by grid: hashing (t, h, w, c, seed)
through a splitmix64-style finalizer yields two uniforms that feed a
Box-Muller transform. A coordinate therefore always receives the same
Gaussian sample no matter which grid shape it is evaluated on, which is
what makes renoising consistent across resolution switches. The integer
pipeline below is normative and must be reproduced bit-for-bit by any
other implementation; the float tail is ordinary IEEE-754 double math.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeInconsistencyError
from .latent import GridShape, VideoLatent, apply_ratios

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
# 2 * golden ratio constant, reduced mod 2**64 ahead of time so no scalar
# overflow warnings fire when building the second-round key.
_GOLDEN2 = _U64((2 * 0x9E3779B97F4A7C15) % 2**64)
_MULT1 = _U64(0xBF58476D1CE4E5B9)
_MULT2 = _U64(0x94D049BB133111EB)
_COORD_LIMIT = 1 << 16
_SEED_LIMIT = 1 << 64
_INV_2_53 = 2.0**-53


@dataclass(frozen=True)
class NoiseSchedule:
    """Noise level per timestep boundary, nonincreasing toward the end.

    ``sigmas[k]`` is the level remaining after k completed denoising
    steps; index 0 is the start of sampling. Continuous lookups treat
    tau in [0, 1] as the remaining-time fraction (tau=1 start, tau=0
    end) and interpolate linearly between boundaries.
    """

    sigmas: tuple[float, ...]

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigmas)
        if len(sig) < 2:
            raise ValueError("schedule needs at least two boundaries (one step)")
        if any(not np.isfinite(s) or s < 0 for s in sig):
            raise ValueError("sigma values must be finite and nonnegative")
        if any(a < b for a, b in zip(sig, sig[1:])):
            raise ValueError("sigma values must be nonincreasing")
        object.__setattr__(self, "sigmas", sig)

    @classmethod
    def linear(cls, steps: int, start: float = 1.0, end: float = 0.0) -> "NoiseSchedule":
        if steps < 1:
            raise ValueError("steps must be >= 1")
        return cls(tuple(start + (end - start) * k / steps for k in range(steps + 1)))

    @property
    def num_steps(self) -> int:
        return len(self.sigmas) - 1

    def sigma(self, tau) -> float:
        """Noise level at a boundary index (int) or remaining-time fraction (float)."""
        if isinstance(tau, (int, np.integer)):
            if not 0 <= tau < len(self.sigmas):
                raise ValueError(f"boundary index {tau} outside schedule of {self.num_steps} steps")
            return self.sigmas[tau]
        tau = float(tau)
        if not 0.0 <= tau <= 1.0:
            raise ValueError(f"continuous tau must lie in [0, 1], got {tau}")
        pos = (1.0 - tau) * self.num_steps
        lo = min(int(pos), self.num_steps - 1)
        frac = pos - lo
        return self.sigmas[lo] * (1.0 - frac) + self.sigmas[lo + 1] * frac

    def step_size(self, k: int) -> float:
        """Time advanced by step k (sigma drop from boundary k to k+1)."""
        if not 0 <= k < self.num_steps:
            raise ValueError(f"step index {k} outside schedule of {self.num_steps} steps")
        return self.sigmas[k] - self.sigmas[k + 1]


@dataclass(frozen=True)
class NoiseCoordinate:
    """One addressable noise sample: grid position plus stream seed."""

    t: int
    h: int
    w: int
    c: int
    seed: int

    def __post_init__(self):
        for name in ("t", "h", "w", "c"):
            v = getattr(self, name)
            if not 0 <= v < _COORD_LIMIT:
                raise ValueError(f"coordinate {name}={v} outside [0, 2^16)")
        if not 0 <= self.seed < _SEED_LIMIT:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array (wrapping mod 2**64)."""
    z = z ^ (z >> _U64(30))
    z = z * _MULT1
    z = z ^ (z >> _U64(27))
    z = z * _MULT2
    return z ^ (z >> _U64(31))


def _gaussian_from_keys(keys: np.ndarray) -> np.ndarray:
    """Map packed coordinate keys to standard-normal float64 samples.

    Round r uses state key + r*GOLDEN (r = 1, 2), i.e. two successive
    splitmix64 outputs of the stream seeded at the key. u1 is mapped
    into (0, 1] so the log never sees zero; only the cosine branch of
    Box-Muller is kept.
    """
    z1 = _mix64(keys + _GOLDEN)
    z2 = _mix64(keys + _GOLDEN2)
    u1 = ((z1 >> _U64(11)).astype(np.float64) + 1.0) * _INV_2_53
    u2 = (z2 >> _U64(11)).astype(np.float64) * _INV_2_53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _pack_key(t: int, h: int, w: int, c: int, seed: int) -> int:
    return (t | (h << 16) | (w << 32) | (c << 48)) ^ seed


def coord_noise(coord: NoiseCoordinate) -> float:
    """Deterministic standard-normal sample for one coordinate."""
    key = np.array([_pack_key(coord.t, coord.h, coord.w, coord.c, coord.seed)], dtype=np.uint64)
    return float(_gaussian_from_keys(key)[0])


def noise_field(channels: int, grid: GridShape, seed: int) -> np.ndarray:
    """Full (C, F, H, W) float64 field of coordinate-addressed noise.

    Values depend only on (t, h, w, c, seed): a sub-grid of this field
    equals the field generated directly at the smaller shape.
    """
    if channels < 1:
        raise ValueError("channels must be >= 1")
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if channels >= _COORD_LIMIT or any(d >= _COORD_LIMIT for d in grid):
        raise ValueError("grid dims and channels must stay below 2^16 for key packing")
    c = np.arange(channels, dtype=np.uint64)[:, None, None, None]
    t = np.arange(grid.frames, dtype=np.uint64)[None, :, None, None]
    h = np.arange(grid.height, dtype=np.uint64)[None, None, :, None]
    w = np.arange(grid.width, dtype=np.uint64)[None, None, None, :]
    keys = (t | (h << _U64(16)) | (w << _U64(32)) | (c << _U64(48))) ^ _U64(seed)
    return _gaussian_from_keys(np.ascontiguousarray(keys))


def _rounded_anchors(count: int, span_num: int, span_den: int) -> np.ndarray:
    """round_half_away(i * span_num / span_den) for i in range(count), exactly."""
    anchors = np.empty(count, dtype=np.int64)
    for i in range(count):
        q, rem = divmod(i * span_num, span_den)
        anchors[i] = q + (1 if 2 * rem >= span_den else 0)
    return anchors


def _resize_axis(arr: np.ndarray, axis: int, target_len: int) -> np.ndarray:
    """Anchor-based 1-D resize along one axis.

    Upscale: source index i anchors at round(i*(N-1)/(K-1)) in target
    space (strictly increasing when N > K), and positions between
    consecutive anchors blend the two source values linearly.
    Downscale: the dual rule, subsampling the source at the rounded
    anchor of every target position; this makes down-then-up an exact
    identity on linear ramps.
    """
    source_len = arr.shape[axis]
    if source_len == target_len:
        return arr
    if source_len == 1:
        return np.repeat(arr, target_len, axis=axis)
    if target_len == 1:
        return np.take(arr, [0], axis=axis)

    if target_len < source_len:
        picks = _rounded_anchors(target_len, source_len - 1, target_len - 1)
        return np.take(arr, picks, axis=axis)

    anchors = _rounded_anchors(source_len, target_len - 1, source_len - 1)
    positions = np.arange(target_len, dtype=np.int64)
    lo = np.searchsorted(anchors, positions, side="right") - 1
    hi = np.minimum(lo + 1, source_len - 1)
    span = anchors[hi] - anchors[lo]
    beta = np.where(span > 0, (positions - anchors[lo]) / np.where(span > 0, span, 1), 0.0)

    shape = [1] * arr.ndim
    shape[axis] = target_len
    beta = beta.reshape(shape)
    lo_vals = np.take(arr, lo, axis=axis)
    hi_vals = np.take(arr, hi, axis=axis)
    return (1.0 - beta) * lo_vals + beta * hi_vals


def anchor_resize(latent: VideoLatent, target: GridShape) -> VideoLatent:
    """Resample a latent to ``target`` along t, then h, then w.

    An exact identity when the target equals the source grid. Output
    values are convex combinations of inputs, so constant fields stay
    constant and the range [min, max] is preserved.
    """
    if any(d < 1 for d in target):
        raise ValueError(f"target grid must be positive, got {target}")
    if latent.grid == target:
        return latent
    arr = latent.data.astype(np.float64)
    arr = _resize_axis(arr, 1, target.frames)
    arr = _resize_axis(arr, 2, target.height)
    arr = _resize_axis(arr, 3, target.width)
    return VideoLatent(arr.astype(np.float32))


def renoise(latent: VideoLatent, tau, schedule: NoiseSchedule, seed: int) -> VideoLatent:
    """Add schedule-weighted coordinate noise: latent + sigma(tau) * eps."""
    level = schedule.sigma(tau)
    if level == 0.0:
        return latent
    field = noise_field(latent.channels, latent.grid, seed)
    out = latent.data.astype(np.float64) + level * field
    return VideoLatent(out.astype(np.float32))


def transition(
    latent: VideoLatent,
    from_stage,
    to_stage,
    base: GridShape,
    tau,
    schedule: NoiseSchedule,
    seed: int,
) -> VideoLatent:
    """Move a latent from one stage grid to the next and renoise it.

    ``from_stage``/``to_stage`` carry (r_s, r_t) compression ratios that
    are resolved against ``base`` with the same rounding the planner
    uses, so predicted and executed grids always agree.
    """
    expected = apply_ratios(base, from_stage.r_s, from_stage.r_t)
    if latent.grid != expected:
        raise ShapeInconsistencyError(
            f"latent grid {tuple(latent.grid)} does not match source stage grid {tuple(expected)}"
        )
    target = apply_ratios(base, to_stage.r_s, to_stage.r_t)
    return renoise(anchor_resize(latent, target), tau, schedule, seed)

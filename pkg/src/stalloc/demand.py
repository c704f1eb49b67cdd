"""Content demand estimation directly in latent space.

Spatial demand is the share of spectral energy above a radial cutoff,
averaged over frames: rich texture concentrates energy at high spatial
frequencies. Temporal demand is the mean optical-flow magnitude between
adjacent frames, via a fixed-iteration Horn-Schunck solver. Both raw
quantities pass through an affine clamp onto [0, 1], and a two-way
softmax turns them into allocation weights.

Everything here is a pure function of its inputs with fixed-order
reductions, so results are reproducible to the bit across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGridError, ShapeMismatchError, TooFewFramesError
from .latent import VideoLatent

MIN_SPECTRAL_DIM = 4


@dataclass(frozen=True)
class DemandConfig:
    """Tunables for the two estimators and the softmax sharpness.

    ``highpass_cutoff`` is a fraction of the Nyquist radius; spectral
    coefficients at or below it count as "low frequency". The norm
    bounds are the (lo, hi) affine clamp applied to raw spatial energy
    ratio and raw flow magnitude (latent px/frame) respectively.
    """

    highpass_cutoff: float = 0.25
    flow_regularization: float = 0.1
    flow_iterations: int = 50
    norm_bounds_spatial: tuple[float, float] = (0.0, 0.6)
    norm_bounds_temporal: tuple[float, float] = (0.0, 2.0)
    sharpness: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.highpass_cutoff < 1.0:
            raise ValueError("highpass_cutoff must lie in (0, 1)")
        if self.flow_regularization <= 0.0:
            raise ValueError("flow_regularization must be positive")
        if not isinstance(self.flow_iterations, int) or self.flow_iterations < 1:
            raise ValueError("flow_iterations must be a positive integer")
        for name in ("norm_bounds_spatial", "norm_bounds_temporal"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy lo < hi, got ({lo}, {hi})")
        if self.sharpness <= 0.0:
            raise ValueError("sharpness must be positive")


@dataclass(frozen=True)
class DemandProfile:
    """Normalized demands plus the softmax allocation weights.

    The raw (pre-normalization) quantities ride along for reporting:
    raw_spatial is a dimensionless energy ratio, raw_temporal is in
    latent pixels per frame.
    """

    d_s: float
    d_t: float
    m_s: float
    m_t: float
    raw_spatial: float
    raw_temporal: float

    def __post_init__(self):
        if not (0.0 <= self.d_s <= 1.0 and 0.0 <= self.d_t <= 1.0):
            raise ValueError("normalized demands must lie in [0, 1]")
        if not (0.0 < self.m_s < 1.0 and 0.0 < self.m_t < 1.0):
            raise ValueError("allocation weights must lie in (0, 1)")
        if self.m_s + self.m_t != 1.0:
            raise ValueError("allocation weights must sum to exactly 1")


def _norm(raw: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return min(1.0, max(0.0, (raw - lo) / (hi - lo)))


def _frame_fields(latent: VideoLatent) -> np.ndarray:
    """Channel-mean per frame: (F, H, W) float64 fields."""
    return latent.data.mean(axis=0, dtype=np.float64)


def raw_spatial_energy(sketch: VideoLatent, cfg: DemandConfig) -> float:
    """High-frequency share of spectral energy, averaged over frames.

    Per frame: 2-D DFT of the channel-mean field, zero everything whose
    centered radial frequency (cycles/sample) is <= cutoff * Nyquist,
    then take ||high|| / ||all||. The ratio form makes the estimate
    invariant to positive scaling of the latent.
    """
    if sketch.height < MIN_SPECTRAL_DIM or sketch.width < MIN_SPECTRAL_DIM:
        raise DegenerateGridError(
            f"spectral estimation needs H, W >= {MIN_SPECTRAL_DIM}, got "
            f"{sketch.height}x{sketch.width}"
        )
    fields = _frame_fields(sketch)
    spectrum = np.fft.fft2(fields, axes=(-2, -1))
    freq_h = np.fft.fftfreq(sketch.height)
    freq_w = np.fft.fftfreq(sketch.width)
    radius = np.hypot(freq_h[:, None], freq_w[None, :])
    keep = radius > cfg.highpass_cutoff * 0.5

    power = spectrum.real**2 + spectrum.imag**2
    total = np.sqrt(power.sum(axis=(-2, -1)))
    high = np.sqrt(power.sum(axis=(-2, -1), where=keep))
    safe = np.where(total > 0.0, total, 1.0)
    ratios = np.where(total > 0.0, high / safe, 0.0)
    return float(ratios.mean())


def spatial_demand(sketch: VideoLatent, cfg: DemandConfig) -> float:
    """Normalized spatial demand d_s in [0, 1]."""
    return _norm(raw_spatial_energy(sketch, cfg), cfg.norm_bounds_spatial)


def _neighbor_mean_into(field: np.ndarray, out: np.ndarray) -> np.ndarray:
    """4-neighbor average with edge replication, written into ``out``."""
    out[..., 1:, :] = field[..., :-1, :]
    out[..., 0, :] = field[..., 0, :]
    out[..., :-1, :] += field[..., 1:, :]
    out[..., -1, :] += field[..., -1, :]
    out[..., :, 1:] += field[..., :, :-1]
    out[..., :, 0] += field[..., :, 0]
    out[..., :, :-1] += field[..., :, 1:]
    out[..., :, -1] += field[..., :, -1]
    out *= 0.25
    return out


def _flow_batch(a: np.ndarray, b: np.ndarray, cfg: DemandConfig) -> np.ndarray:
    """Horn-Schunck flow for a batch of frame pairs.

    a, b: (P, H, W). Returns (2, P, H, W) with [0] the h-component and
    [1] the w-component. Spatial gradients are central differences of
    the two-frame average; the temporal derivative is b - a. Exactly
    ``flow_iterations`` Jacobi updates from zero initialization, with
    the regularization weight added to the data-term denominator.
    Float32 throughout: the inputs are float32 latents and the solver
    has to fit the sub-10ms planning budget.
    """
    a = a.astype(np.float32)
    b = b.astype(np.float32)
    avg = 0.5 * (a + b)
    grad_w = np.gradient(avg, axis=-1).astype(np.float32)
    grad_h = np.gradient(avg, axis=-2).astype(np.float32)
    grad_t = b - a
    denom = np.float32(cfg.flow_regularization) + grad_w * grad_w + grad_h * grad_h

    flow = np.zeros((2,) + avg.shape, dtype=np.float32)
    smoothed = np.empty_like(flow)
    resid = np.empty_like(avg)
    tmp = np.empty_like(avg)
    for _ in range(cfg.flow_iterations):
        _neighbor_mean_into(flow, smoothed)
        np.multiply(grad_h, smoothed[0], out=resid)
        np.multiply(grad_w, smoothed[1], out=tmp)
        resid += tmp
        resid += grad_t
        resid /= denom
        np.multiply(grad_h, resid, out=tmp)
        np.subtract(smoothed[0], tmp, out=flow[0])
        np.multiply(grad_w, resid, out=tmp)
        np.subtract(smoothed[1], tmp, out=flow[1])
    return flow


def optical_flow(frame_a: np.ndarray, frame_b: np.ndarray, cfg: DemandConfig) -> np.ndarray:
    """Dense flow from frame_a to frame_b: (2, H, W), [h, w] components.

    A frame shifted one pixel toward +w yields flow with positive w
    component. Identical frames are a fixed point of the solver and
    return exactly zero flow.
    """
    frame_a = np.asarray(frame_a)
    frame_b = np.asarray(frame_b)
    if frame_a.ndim != 2 or frame_b.ndim != 2:
        raise ShapeMismatchError("optical flow expects 2-D fields")
    if frame_a.shape != frame_b.shape:
        raise ShapeMismatchError(
            f"frame shapes differ: {frame_a.shape} vs {frame_b.shape}"
        )
    if min(frame_a.shape) < MIN_SPECTRAL_DIM:
        raise DegenerateGridError(f"flow needs H, W >= {MIN_SPECTRAL_DIM}, got {frame_a.shape}")
    return _flow_batch(frame_a[None], frame_b[None], cfg)[:, 0]


def raw_flow_magnitude(sketch: VideoLatent, cfg: DemandConfig) -> float:
    """Mean per-pixel flow magnitude over all adjacent frame pairs."""
    if sketch.frames < 2:
        raise TooFewFramesError(f"temporal demand needs F >= 2, got F={sketch.frames}")
    if sketch.height < MIN_SPECTRAL_DIM or sketch.width < MIN_SPECTRAL_DIM:
        raise DegenerateGridError(
            f"flow needs H, W >= {MIN_SPECTRAL_DIM}, got {sketch.height}x{sketch.width}"
        )
    fields = _frame_fields(sketch)
    flow = _flow_batch(fields[:-1], fields[1:], cfg)
    magnitude = np.sqrt(
        flow[0].astype(np.float64) ** 2 + flow[1].astype(np.float64) ** 2
    )
    per_pair = magnitude.mean(axis=(-2, -1))
    return float(per_pair.mean())


def temporal_demand(sketch: VideoLatent, cfg: DemandConfig) -> float:
    """Normalized temporal demand d_t in [0, 1]."""
    return _norm(raw_flow_magnitude(sketch, cfg), cfg.norm_bounds_temporal)


def allocation_weights(d_s: float, d_t: float, alpha: float) -> tuple[float, float]:
    """Two-way softmax over sharpened demands; returns (m_s, m_t).

    The losing weight is computed once from the demand gap (the
    max-subtracted stable form) and the winner gets exactly 1 minus it,
    so swapping the demands swaps the weights bit-for-bit and the pair
    always sums to exactly 1. The losing side is floored at 1e-16 to
    keep both weights strictly inside (0, 1) even when alpha times the
    gap saturates the exponential.
    """
    if not (math.isfinite(d_s) and math.isfinite(d_t)):
        raise ValueError("demands must be finite")
    if alpha <= 0.0:
        raise ValueError("sharpness alpha must be positive")
    if d_s == d_t:
        return (0.5, 0.5)
    gap = math.exp(-abs(alpha * (d_s - d_t)))
    loser = max(gap / (1.0 + gap), 1e-16)
    winner = 1.0 - loser
    return (winner, loser) if d_s > d_t else (loser, winner)


def estimate_demand(sketch: VideoLatent, cfg: DemandConfig) -> DemandProfile:
    """Full demand profile for a sketch latent."""
    raw_s = raw_spatial_energy(sketch, cfg)
    raw_t = raw_flow_magnitude(sketch, cfg)
    d_s = _norm(raw_s, cfg.norm_bounds_spatial)
    d_t = _norm(raw_t, cfg.norm_bounds_temporal)
    m_s, m_t = allocation_weights(d_s, d_t, cfg.sharpness)
    return DemandProfile(d_s=d_s, d_t=d_t, m_s=m_s, m_t=m_t, raw_spatial=raw_s, raw_temporal=raw_t)

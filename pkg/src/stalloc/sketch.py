"""Coarse clean-latent sketching via cheap low-resolution denoising.

A handful of denoising steps run on a downscaled latent, then a single
extrapolation along the current flow prediction yields a rough clean
latent -- enough signal to estimate texture and motion demands without
paying for full-resolution sampling. The denoiser itself stays behind
the ``DenoiserOracle`` callable so the planner is model-agnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, runtime_checkable

import numpy as np

from .errors import OracleError, ShapeMismatchError
from .latent import VideoLatent, apply_ratios
from .reshape import NoiseSchedule, anchor_resize


@runtime_checkable
class DenoiserOracle(Protocol):
    """Flow/denoiser prediction: same-shape velocity for (latent, step)."""

    def __call__(self, latent: VideoLatent, step: int) -> VideoLatent: ...


@dataclass(frozen=True)
class SketchConfig:
    """Settings for the sketch phase.

    ``alpha_schedule`` maps a timestep index to the extrapolation
    strength; when omitted, the remaining noise level sigma(k) is used,
    which is the exact clean-sample extrapolation for rectified-flow
    style models.
    """

    sketch_steps: int = 4
    sketch_ratios: tuple[float, float] = (0.5, 0.5)
    alpha_schedule: Mapping[int, float] | Callable[[int], float] | None = None

    def __post_init__(self):
        if not isinstance(self.sketch_steps, int) or self.sketch_steps < 1:
            raise ValueError("sketch_steps must be a positive integer")
        r_s, r_t = self.sketch_ratios
        if not (0.0 < r_s <= 1.0 and 0.0 < r_t <= 1.0):
            raise ValueError(f"sketch ratios must lie in (0, 1], got {self.sketch_ratios}")

    def resolve_alpha(self, step: int, schedule: NoiseSchedule) -> float:
        if self.alpha_schedule is None:
            alpha = schedule.sigma(step)
        elif callable(self.alpha_schedule):
            alpha = float(self.alpha_schedule(step))
        else:
            try:
                alpha = float(self.alpha_schedule[step])
            except KeyError as exc:
                raise ValueError(f"alpha schedule has no entry for step {step}") from exc
        if not (math.isfinite(alpha) and alpha > 0.0):
            raise ValueError(f"extrapolation strength at step {step} must be positive, got {alpha}")
        return alpha


def _call_oracle(oracle: DenoiserOracle, latent: VideoLatent, step: int) -> VideoLatent:
    try:
        prediction = oracle(latent, step)
    except Exception as exc:
        raise OracleError(f"denoiser oracle failed at step {step}: {exc}") from exc
    if isinstance(prediction, np.ndarray):
        prediction = VideoLatent(prediction)
    if not isinstance(prediction, VideoLatent):
        raise OracleError(f"oracle returned {type(prediction).__name__}, expected a latent")
    if prediction.shape != latent.shape:
        raise ShapeMismatchError(
            f"oracle returned shape {prediction.shape}, expected {latent.shape}"
        )
    return prediction


def extrapolate_sketch(x_k: VideoLatent, v: VideoLatent, alpha_k: float) -> VideoLatent:
    """One-step clean-latent estimate: x_k + alpha_k * v, elementwise."""
    if x_k.shape != v.shape:
        raise ShapeMismatchError(f"latent {x_k.shape} and prediction {v.shape} differ in shape")
    if not (math.isfinite(alpha_k) and alpha_k > 0.0):
        raise ValueError(f"alpha_k must be a positive finite scalar, got {alpha_k}")
    return VideoLatent(x_k.data + np.float32(alpha_k) * v.data)


def run_sketch(
    oracle: DenoiserOracle,
    x_0: VideoLatent,
    cfg: SketchConfig,
    schedule: NoiseSchedule,
) -> VideoLatent:
    """Produce the demand-estimation sketch from an initial latent.

    Downscales x_0 by the sketch ratios, runs ``sketch_steps`` explicit
    Euler updates along the oracle's flow field, then extrapolates the
    remaining distance in one step. The result stays on the sketch grid.
    """
    if cfg.sketch_steps > schedule.num_steps:
        raise ValueError(
            f"sketch needs {cfg.sketch_steps} steps but the schedule only has {schedule.num_steps}"
        )
    r_s, r_t = cfg.sketch_ratios
    x = anchor_resize(x_0, apply_ratios(x_0.grid, r_s, r_t))
    for k in range(cfg.sketch_steps):
        v = _call_oracle(oracle, x, k)
        dt = schedule.step_size(k)
        x = VideoLatent(x.data + np.float32(dt) * v.data)
    v = _call_oracle(oracle, x, cfg.sketch_steps)
    alpha = cfg.resolve_alpha(cfg.sketch_steps, schedule)
    return extrapolate_sketch(x, v, alpha)

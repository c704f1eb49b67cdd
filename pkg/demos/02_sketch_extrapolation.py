"""Sketching: a few cheap low-resolution steps plus one-step extrapolation.

The denoiser stays behind a plain callable, so any model (or a toy one,
as here) can drive the sketch. Run: python demos/02_sketch_extrapolation.py
"""

import numpy as np

from stalloc import NoiseSchedule, SketchConfig, VideoLatent, run_sketch

rng = np.random.default_rng(1)

# Pretend the clean video is a smooth moving blob and the current state
# is that plus heavy noise (the usual situation early in sampling).
t = np.arange(8, dtype=np.float64)[:, None, None]
h = np.arange(16, dtype=np.float64)[None, :, None]
w = np.arange(16, dtype=np.float64)[None, None, :]
clean = np.exp(-((h - 8) ** 2 + (w - (3 + t)) ** 2) / 18.0)
noisy = clean + rng.standard_normal(clean.shape)
x0 = VideoLatent(noisy[None].astype(np.float32))


def toy_oracle(latent, step):
    """A denoiser that knows the answer: velocity points at the clean clip.

    Real models predict this from data; the planner only needs the
    callable contract (same-shape output for (latent, step)).
    """
    target = clean[None]
    # downscaled states get a downscaled target
    if latent.shape != target.shape:
        from stalloc import anchor_resize

        target = anchor_resize(VideoLatent(clean[None].astype(np.float32)), latent.grid).data
    return VideoLatent((target - latent.data) / max(schedule.sigma(step), 1e-6))


schedule = NoiseSchedule.linear(20)
cfg = SketchConfig(sketch_steps=4, sketch_ratios=(0.5, 0.5))

sketch = run_sketch(toy_oracle, x0, cfg, schedule)
print("input grid:  ", x0.grid)
print("sketch grid: ", sketch.grid, "(downscaled by the sketch ratios)")

# The sketch should be far closer to the clean clip than the noisy input.
from stalloc import anchor_resize

clean_small = anchor_resize(VideoLatent(clean[None].astype(np.float32)), sketch.grid)
noisy_small = anchor_resize(x0, sketch.grid)
err_before = float(np.abs(noisy_small.data - clean_small.data).mean())
err_after = float(np.abs(sketch.data - clean_small.data).mean())
print(f"mean abs error vs clean: before sketch {err_before:.3f}, after {err_after:.3f}")

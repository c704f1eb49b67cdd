"""Stage transitions: anchor resizing and coordinate-addressed renoising.

The noise is a pure function of (t, h, w, c, seed), so values at shared
coordinates agree across grid shapes -- renoising stays consistent when
the resolution changes mid-sampling. Run: python demos/05_reshape_and_noise.py
"""

import numpy as np

from stalloc import (
    GridShape,
    NoiseCoordinate,
    NoiseSchedule,
    VideoLatent,
    anchor_resize,
    coord_noise,
    noise_field,
    renoise,
)

# Anchor resize on a tiny 1-D example: K=3 values [0, 2, 4] -> N=5.
line = VideoLatent(np.array([0.0, 2.0, 4.0], dtype=np.float32).reshape(1, 1, 1, 3))
up = anchor_resize(line, GridShape(1, 1, 5))
print("resize [0, 2, 4] to length 5:", up.data.flatten().tolist())

# Downscale then upscale of a linear ramp is exact: both directions
# quantize to the same anchor lattice.
w = np.arange(16, dtype=np.float32).reshape(1, 1, 1, 16)
ramp = VideoLatent(np.broadcast_to(w, (1, 4, 8, 16)).copy())
down = anchor_resize(ramp, GridShape(2, 4, 8))
back = anchor_resize(down, ramp.grid)
print("ramp down+up max error:", float(np.abs(back.data - ramp.data).max()))

# Coordinate-addressed noise: the same (t,h,w,c,seed) always produces
# the same Gaussian sample, whatever grid it is evaluated on.
seed = 12345
small = noise_field(1, GridShape(1, 16, 16), seed)
large = noise_field(1, GridShape(1, 32, 32), seed)
print("shared coords identical across grids:", np.array_equal(small, large[:, :, :16, :16]))
print("scalar lookup:", coord_noise(NoiseCoordinate(t=0, h=3, w=7, c=0, seed=seed)))
print("  field value:", large[0, 0, 3, 7])

sample = noise_field(2, GridShape(8, 64, 64), seed)
print(f"field moments over {sample.size} samples: mean {sample.mean():+.4f}, var {sample.var():.4f}")

# Renoising adds schedule-weighted noise; sigma(tau)=0 is an exact no-op.
sched = NoiseSchedule.linear(10)
lat = VideoLatent(np.zeros((1, 2, 8, 8), dtype=np.float32))
print("sigma(boundary 4) =", sched.sigma(4))
noisy = renoise(lat, 4, sched, seed)
print("renoised std (expect ~sigma):", float(noisy.data.std()))

"""Latent containers: building a tensor, the LTV1 file format, and grid math.

Run: python demos/01_latent_files.py
"""

import tempfile
from pathlib import Path

import numpy as np

from stalloc import GridShape, VideoLatent, apply_ratios, load_latent, save_latent

# A video latent is channels x frames x height x width, float32.
rng = np.random.default_rng(0)
latent = VideoLatent(rng.standard_normal((4, 10, 16, 24)).astype(np.float32))
print("latent shape (C,F,H,W):", latent.shape)
print("grid:", latent.grid)

# Round-trip through the LTV1 container. The format is 20 bytes of
# header (magic + four uint32 dims) plus the raw little-endian payload,
# so the round trip is bit-exact.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "clip.ltv"
    save_latent(latent, path)
    print("file size:", path.stat().st_size, "bytes")
    print("          =", 20, "+", latent.data.size * 4, "(header + payload)")
    back = load_latent(path)
    print("bit-exact round trip:", back.data.tobytes() == latent.data.tobytes())

# Compression ratios scale a grid with half-away-from-zero rounding and
# floor clamps; ratios on the 0.05 grid resolve in exact arithmetic.
base = GridShape(frames=125, height=90, width=160)
print("\nbase grid:", base)
for r_s, r_t in [(1.0, 1.0), (0.5, 0.7), (0.05, 0.05)]:
    print(f"  apply_ratios(r_s={r_s}, r_t={r_t}) ->", apply_ratios(base, r_s, r_t))

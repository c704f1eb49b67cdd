"""End to end: sketch -> demand -> plan -> simulate -> execute.

Run: python demos/06_end_to_end_plan.py
"""

import numpy as np

from stalloc import (
    BaseGrid,
    BudgetSpec,
    CostModel,
    DemandConfig,
    NoiseSchedule,
    SketchConfig,
    VideoLatent,
    default_enumeration,
    effective_gains,
    execute_plan,
    make_plan,
    plan_to_json,
    simulate_cost,
)

rng = np.random.default_rng(7)
base = BaseGrid(frames=16, height=64, width=64, steps=20)

# A motion-heavy sketch: smooth content translating 2 latent px/frame.
h = np.arange(32, dtype=np.float64)[:, None]
w = np.arange(32, dtype=np.float64)[None, :]
frames = [
    8.0 * np.exp(-((h - 16) ** 2 + (w - (6 + 2 * t)) ** 2) / 200.0) for t in range(8)
]
sketch = VideoLatent(np.stack(frames)[None].astype(np.float32))

spec = BudgetSpec(target_density=0.5, tolerance=0.05, matcher_weight=0.5, steps=base.steps)
sketch_cfg = SketchConfig(sketch_steps=4, sketch_ratios=(0.5, 0.5))
plan = make_plan(
    sketch, base, spec, DemandConfig(), default_enumeration(base, sketch_cfg), seed=42
)

print("demand:", f"m_s={plan.demand.m_s:.3f}", f"m_t={plan.demand.m_t:.3f}")
print("selected stages:", [(s.r_s, s.r_t, s.steps) for s in plan.action.stages])
print("stage grids:   ", [tuple(g) for g in plan.stage_grids])
g_s, g_t = effective_gains(plan.action)
print(f"gains: g_s={g_s:.3f} g_t={g_t:.3f} (motion clip leans temporal)")
print(f"predicted density: {plan.predicted_density:.4f}")

for mode in ("linear", "quadratic"):
    cost, speedup = simulate_cost(plan, CostModel(mode))
    print(f"{mode:>9} cost model: cost={cost:.3e}, speedup {speedup:.2f}x")

# Execute the plan with a toy contraction oracle. Stage boundaries
# resize the latent and renoise it with the plan's derived seeds.
schedule = NoiseSchedule.linear(base.steps)


def decay_oracle(latent, step):
    return VideoLatent(-0.5 * latent.data)


x_init = VideoLatent(
    rng.standard_normal((1, *plan.stage_grids[0])).astype(np.float32)
)
out = execute_plan(plan, decay_oracle, x_init, schedule)
print("executed output grid:", tuple(out.grid), "== base:", out.grid == base.grid)

print("\nplan JSON (deterministic, 17-digit floats):")
print(plan_to_json(plan)[:300] + "...")

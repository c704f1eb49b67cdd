"""The action space: enumeration, compute density, budget filtering, and
demand matching. Run: python demos/04_action_space.py
"""

from stalloc import (
    BaseGrid,
    BudgetSpec,
    DemandProfile,
    density,
    effective_gains,
    enumerate_actions,
    filter_by_budget,
    select_action,
)

base = BaseGrid(frames=81, height=60, width=104, steps=40)
print("base grid:", base.grid, "tokens:", base.tokens, "steps:", base.steps)

# Two stages: one free compressed stage over the 0.05 ratio grid, then a
# mandatory full-resolution refinement stage -> 20 x 20 = 400 actions.
actions = enumerate_actions(base, step_split=(20, 20))
print("enumerated actions:", len(actions))

rhos = [density(a, base) for a in actions]
print(f"density range: {min(rhos):.4f} .. {max(rhos):.4f}")

spec = BudgetSpec(target_density=0.5, tolerance=0.05, matcher_weight=0.5, steps=40)
feasible = filter_by_budget(actions, spec, base)
print(f"feasible at D={spec.target_density} +- {spec.tolerance}: {len(feasible)} actions")

# A texture-heavy profile pulls the choice toward high spatial ratios,
# a motion-heavy one toward high temporal ratios -- same budget band.
for name, m_s in [("texture-heavy", 0.85), ("motion-heavy", 0.15)]:
    profile = DemandProfile(
        d_s=m_s, d_t=1 - m_s, m_s=m_s, m_t=1 - m_s, raw_spatial=0.0, raw_temporal=0.0
    )
    choice = select_action(feasible, profile, spec.matcher_weight, base)
    g_s, g_t = effective_gains(choice)
    stages = [(s.r_s, s.r_t, s.steps) for s in choice.stages]
    print(f"\n{name} profile (m_s={m_s}):")
    print("  selected stages:", stages)
    print(f"  gains g_s={g_s:.3f} g_t={g_t:.3f}, density {density(choice, base):.4f}")

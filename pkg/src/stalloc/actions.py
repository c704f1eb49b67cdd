"""Spatio-temporal action space: enumeration, compute density, budget
filtering, and demand matching.

An action is an ordered list of per-stage (spatial ratio, temporal
ratio, step count) settings; the final stage always runs at full
resolution and frame-rate. Ratios live on a 0.05 grid. Density is
computed on the *rounded integer* grids each stage actually executes
at, so predicted cost matches executed cost exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import EmptyFeasibleSetError, EmptyInputError, InvalidStepSplitError
from .latent import BaseGrid, apply_ratios

RATIO_GRID_STEPS = 20
FINE_RATIO_GRID = tuple(k / 20.0 for k in range(1, 21))
COARSE_RATIO_GRID = tuple(k / 10.0 for k in range(1, 11))


def _snap_ratio(value: float, name: str) -> float:
    k = round(value * RATIO_GRID_STEPS)
    if not 1 <= k <= RATIO_GRID_STEPS or abs(value - k / RATIO_GRID_STEPS) > 1e-9:
        raise ValueError(f"{name}={value!r} is not on the 0.05 ratio grid in (0, 1]")
    return k / RATIO_GRID_STEPS


@dataclass(frozen=True)
class Stage:
    """One denoising stage: compression ratios and its step budget."""

    r_s: float
    r_t: float
    steps: int

    def __post_init__(self):
        object.__setattr__(self, "r_s", _snap_ratio(self.r_s, "r_s"))
        object.__setattr__(self, "r_t", _snap_ratio(self.r_t, "r_t"))
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ValueError(f"stage steps must be a positive integer, got {self.steps!r}")

    def key(self) -> tuple[float, float, int]:
        return (self.r_s, self.r_t, self.steps)


@dataclass(frozen=True)
class Action:
    """Ordered stages ending in a full-resolution refinement stage."""

    stages: tuple[Stage, ...]

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages:
            raise ValueError("action needs at least one stage")
        last = stages[-1]
        if last.r_s != 1.0 or last.r_t != 1.0:
            raise ValueError("final stage must run at full resolution and frame-rate (1.0, 1.0)")
        object.__setattr__(self, "stages", stages)

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    @property
    def total_steps(self) -> int:
        return sum(s.steps for s in self.stages)

    def key(self) -> tuple[tuple[float, float, int], ...]:
        return tuple(s.key() for s in self.stages)


@dataclass(frozen=True)
class BudgetSpec:
    """Target compute density with tolerance, plus matcher settings."""

    target_density: float
    tolerance: float
    matcher_weight: float
    steps: int

    def __post_init__(self):
        if not 0.0 < self.target_density <= 1.0:
            raise ValueError(f"target density must lie in (0, 1], got {self.target_density}")
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be nonnegative")
        if self.target_density - self.tolerance <= 0.0:
            raise ValueError("target density minus tolerance must stay positive")
        if not 0.0 <= self.matcher_weight <= 1.0:
            raise ValueError("matcher weight must lie in [0, 1]")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ValueError("total steps must be a positive integer")


def density(action: Action, base: BaseGrid) -> float:
    """Relative compute cost of an action against full-grid sampling.

    Token counts come from the integer grids of apply_ratios, so the
    returned value is a ratio of two exact integer token-step counts.
    """
    numer = 0
    for stage in action.stages:
        f, h, w = apply_ratios(base.grid, stage.r_s, stage.r_t)
        numer += f * h * w * stage.steps
    denom = base.tokens * base.steps
    return numer / denom


def enumerate_actions(
    base: BaseGrid,
    step_split: Sequence[int],
    ratio_grid: Iterable[float] = FINE_RATIO_GRID,
    fixed_stages: Mapping[int, tuple[float, float]] | None = None,
) -> list[Action]:
    """All actions for a stage template, in lexicographic stage order.

    ``step_split`` fixes the per-stage step counts (and its length L).
    Stages 0..L-2 range over the ratio grid, except indices pinned in
    ``fixed_stages``; the final stage is always (1.0, 1.0). The result
    is deduplicated and sorted, so equal inputs give identical lists.
    """
    split = [int(n) for n in step_split]
    if len(split) < 2:
        raise InvalidStepSplitError("need at least two stages (one compressed, one refinement)")
    if any(n < 1 for n in split):
        raise InvalidStepSplitError(f"every stage needs at least one step, got {split}")
    if sum(split) != base.steps:
        raise InvalidStepSplitError(
            f"step split {split} sums to {sum(split)}, expected total {base.steps}"
        )

    grid = sorted({_snap_ratio(r, "ratio_grid entry") for r in ratio_grid})
    if not grid:
        raise ValueError("ratio grid is empty")
    fixed = dict(fixed_stages or {})
    for idx, (r_s, r_t) in fixed.items():
        if not 0 <= idx < len(split) - 1:
            raise ValueError(f"fixed stage index {idx} outside non-final stages")
        fixed[idx] = (_snap_ratio(r_s, "fixed r_s"), _snap_ratio(r_t, "fixed r_t"))

    free = [i for i in range(len(split) - 1) if i not in fixed]
    pair_choices = [(r_s, r_t) for r_s in grid for r_t in grid]

    seen = set()
    actions = []
    for combo in itertools.product(pair_choices, repeat=len(free)):
        ratios = dict(zip(free, combo))
        ratios.update(fixed)
        stages = tuple(
            Stage(*ratios[i], steps=split[i]) for i in range(len(split) - 1)
        ) + (Stage(1.0, 1.0, steps=split[-1]),)
        action = Action(stages)
        key = action.key()
        if key not in seen:
            seen.add(key)
            actions.append(action)
    actions.sort(key=Action.key)
    return actions


def filter_by_budget(actions: Sequence[Action], spec: BudgetSpec, base: BaseGrid) -> list[Action]:
    """Keep actions whose density lands within tolerance of the target."""
    if not actions:
        raise EmptyInputError("no actions to filter")
    kept = []
    nearest = None
    for action in actions:
        rho = density(action, base)
        if abs(rho - spec.target_density) <= spec.tolerance:
            kept.append(action)
        elif nearest is None or abs(rho - spec.target_density) < abs(nearest - spec.target_density):
            nearest = rho
    if not kept:
        raise EmptyFeasibleSetError(
            f"no action reaches density {spec.target_density} +/- {spec.tolerance}; "
            f"nearest achievable is {nearest}",
            nearest_density=nearest,
        )
    return kept


def effective_gains(action: Action) -> tuple[float, float]:
    """Mean spatial and temporal ratio over all stages (refinement included)."""
    n = action.num_stages
    g_s = sum(s.r_s for s in action.stages) / n
    g_t = sum(s.r_t for s in action.stages) / n
    return (g_s, g_t)


def select_action(feasible: Sequence[Action], profile, matcher_weight: float, base: BaseGrid) -> Action:
    """Pick the feasible action whose gains best match the demand weights.

    Maximizes -w*(g_s - m_s)^2 - (1-w)*(g_t - m_t)^2. Exact ties fall
    back to lower density, then lexicographic stage order, so the result
    never depends on input ordering.
    """
    if not feasible:
        raise EmptyInputError("feasible action set is empty")
    if not 0.0 <= matcher_weight <= 1.0:
        raise ValueError("matcher weight must lie in [0, 1]")

    def rank(action: Action):
        g_s, g_t = effective_gains(action)
        mismatch = matcher_weight * (g_s - profile.m_s) ** 2 + (1.0 - matcher_weight) * (
            g_t - profile.m_t
        ) ** 2
        return (mismatch, density(action, base), action.key())

    return min(feasible, key=rank)

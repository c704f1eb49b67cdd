"""End-to-end planning: demand estimation, budget-constrained action
selection, stage-grid resolution, and theoretical cost accounting.

A plan is fully deterministic given its inputs (including the master
seed) and serializes to byte-identical JSON: floats are written with 17
significant digits so a parsed plan reconstructs the exact same doubles
on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .actions import (
    Action,
    BudgetSpec,
    FINE_RATIO_GRID,
    Stage,
    density,
    enumerate_actions,
    filter_by_budget,
    select_action,
)
from .demand import DemandConfig, DemandProfile, estimate_demand
from .errors import (
    DegenerateSketchError,
    InvalidStepSplitError,
    ShapeInconsistencyError,
)
from .latent import BaseGrid, GridShape, VideoLatent, apply_ratios, round_half_away
from .reshape import NoiseSchedule, transition
from .sketch import SketchConfig, _call_oracle

_SEED_LIMIT = 1 << 64


class Transition(NamedTuple):
    """A grid switch: after which step, to which grid, renoised how."""

    after_step: int
    target: GridShape
    tau: int
    seed: int


@dataclass(frozen=True)
class CostModel:
    """Per-step cost as a function of the stage's token count.

    linear: cost = tokens * token_cost per step.
    quadratic: cost = (tokens * token_cost + tokens^2 * pair_cost) per
    step, the attention-style model. ``pair_cost=None`` defaults to
    1 / base-tokens, which prices an identity plan at 2 * tokens * steps.
    """

    mode: str
    token_cost: float = 1.0
    pair_cost: float | None = None

    def __post_init__(self):
        if self.mode not in ("linear", "quadratic"):
            raise ValueError(f"cost model mode must be 'linear' or 'quadratic', got {self.mode!r}")
        if self.token_cost <= 0.0:
            raise ValueError("token_cost must be positive")
        if self.pair_cost is not None and self.pair_cost <= 0.0:
            raise ValueError("pair_cost must be positive when given")


@dataclass(frozen=True)
class EnumerationParams:
    """How to build the candidate action list for a plan."""

    step_split: tuple[int, ...]
    ratio_grid: tuple[float, ...] = FINE_RATIO_GRID
    fixed_stages: Mapping[int, tuple[float, float]] = field(default_factory=dict)


def default_enumeration(
    base: BaseGrid,
    sketch_cfg: SketchConfig | None = None,
    ratio_grid: tuple[float, ...] = FINE_RATIO_GRID,
) -> EnumerationParams:
    """Standard stage template for a plan.

    With a sketch config: [sketch stage (pinned ratios, its step count),
    one free compressed stage, refinement], the remaining steps split
    60/40. Without: [free compressed stage, refinement] splitting the
    whole budget 60/40. The sketch stage is part of the action so its
    compute is counted in the density like everything else.
    """
    if sketch_cfg is None:
        rest = base.steps
        prefix: tuple[int, ...] = ()
        fixed: dict[int, tuple[float, float]] = {}
    else:
        rest = base.steps - sketch_cfg.sketch_steps
        prefix = (sketch_cfg.sketch_steps,)
        fixed = {0: sketch_cfg.sketch_ratios}
    if rest < 2:
        raise InvalidStepSplitError(
            f"{base.steps} total steps leave {rest} for the compressed and refinement stages; "
            "need at least 2"
        )
    mid = min(max(1, round_half_away(0.6 * rest)), rest - 1)
    return EnumerationParams(
        step_split=prefix + (mid, rest - mid),
        ratio_grid=tuple(ratio_grid),
        fixed_stages=fixed,
    )


@dataclass(frozen=True)
class SchedulePlan:
    """The planner's output: what to run where, and what it should cost."""

    action: Action
    base: BaseGrid
    stage_grids: tuple[GridShape, ...]
    transitions: tuple[Transition, ...]
    predicted_density: float
    predicted_speedup_linear: float
    predicted_speedup_quadratic: float
    demand: DemandProfile

    def __post_init__(self):
        if len(self.stage_grids) != self.action.num_stages:
            raise ValueError("one resolved grid per stage required")
        if self.stage_grids[-1] != self.base.grid:
            raise ValueError("final stage must run at the full base grid")
        if len(self.transitions) != self.action.num_stages - 1:
            raise ValueError("expected one transition per stage boundary")
        if self.action.total_steps != self.base.steps:
            raise InvalidStepSplitError(
                f"action spends {self.action.total_steps} steps, base expects {self.base.steps}"
            )


def make_plan(
    sketch: VideoLatent,
    base: BaseGrid,
    spec: BudgetSpec,
    demand_cfg: DemandConfig,
    action_source: EnumerationParams | Sequence[Action],
    seed: int,
) -> SchedulePlan:
    """Select the budget-feasible action best matching the sketch's demands.

    Deterministic: the same sketch, base, spec, candidates, and seed
    always produce the identical plan. Per-transition noise seeds are
    derived as master-seed XOR the 1-based index of the stage being
    left, so one user-facing seed decorrelates all stage boundaries.
    """
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if sketch.frames < 2:
        raise DegenerateSketchError(
            f"demand estimation needs at least 2 sketch frames, got {sketch.frames}"
        )
    if spec.steps != base.steps:
        raise InvalidStepSplitError(
            f"budget expects {spec.steps} steps but base carries {base.steps}"
        )

    profile = estimate_demand(sketch, demand_cfg)

    if isinstance(action_source, EnumerationParams):
        candidates = enumerate_actions(
            base,
            action_source.step_split,
            action_source.ratio_grid,
            action_source.fixed_stages,
        )
    else:
        candidates = list(action_source)
        for action in candidates:
            if action.total_steps != base.steps:
                raise InvalidStepSplitError(
                    f"action spends {action.total_steps} steps, base expects {base.steps}"
                )

    feasible = filter_by_budget(candidates, spec, base)
    chosen = select_action(feasible, profile, spec.matcher_weight, base)

    stage_grids = tuple(apply_ratios(base.grid, s.r_s, s.r_t) for s in chosen.stages)
    transitions = []
    completed = 0
    for i, stage in enumerate(chosen.stages[:-1]):
        completed += stage.steps
        transitions.append(
            Transition(
                after_step=completed,
                target=stage_grids[i + 1],
                tau=completed,
                seed=seed ^ (i + 1),
            )
        )

    rho = density(chosen, base)
    return SchedulePlan(
        action=chosen,
        base=base,
        stage_grids=stage_grids,
        transitions=tuple(transitions),
        predicted_density=rho,
        predicted_speedup_linear=1.0 / rho,
        predicted_speedup_quadratic=simulate_stage_costs(
            stage_grids, chosen, base, CostModel("quadratic")
        )[1],
        demand=profile,
    )


def simulate_stage_costs(
    stage_grids: Sequence[GridShape],
    action: Action,
    base: BaseGrid,
    model: CostModel,
) -> tuple[float, float]:
    """(absolute cost, speedup vs the full-grid baseline at equal steps)."""
    base_tokens = base.tokens
    pair_cost = model.pair_cost if model.pair_cost is not None else 1.0 / base_tokens

    if model.mode == "linear":
        token_steps = 0
        for grid, stage in zip(stage_grids, action.stages):
            token_steps += grid.frames * grid.height * grid.width * stage.steps
        cost = token_steps * model.token_cost
        # With uniform per-token cost the baseline/plan ratio is exactly
        # the inverse of the compute density.
        rho = token_steps / (base_tokens * base.steps)
        return (cost, 1.0 / rho)

    cost = 0.0
    for grid, stage in zip(stage_grids, action.stages):
        tokens = grid.frames * grid.height * grid.width
        cost += (tokens * model.token_cost + tokens * tokens * pair_cost) * stage.steps
    baseline = (base_tokens * model.token_cost + base_tokens * base_tokens * pair_cost) * base.steps
    return (cost, baseline / cost)


def simulate_cost(plan: SchedulePlan, model: CostModel) -> tuple[float, float]:
    """Theoretical cost and speedup of a plan under a cost model."""
    return simulate_stage_costs(plan.stage_grids, plan.action, plan.base, model)


def execute_plan(
    plan: SchedulePlan,
    oracle,
    x_init: VideoLatent,
    schedule: NoiseSchedule,
) -> VideoLatent:
    """Run the plan's sampling loop with a user oracle.

    Each stage advances the latent with explicit Euler steps along the
    oracle's flow prediction (steps indexed globally across stages), and
    each stage boundary resizes + renoises via ``transition``. The
    result sits on the full base grid.
    """
    if x_init.grid != plan.stage_grids[0]:
        raise ShapeInconsistencyError(
            f"initial latent grid {tuple(x_init.grid)} does not match "
            f"stage-1 grid {tuple(plan.stage_grids[0])}"
        )
    if schedule.num_steps < plan.base.steps:
        raise ValueError(
            f"schedule has {schedule.num_steps} steps, plan needs {plan.base.steps}"
        )
    x = x_init
    step = 0
    for i, stage in enumerate(plan.action.stages):
        for _ in range(stage.steps):
            v = _call_oracle(oracle, x, step)
            x = VideoLatent(x.data + np.float32(schedule.step_size(step)) * v.data)
            step += 1
        if i < plan.action.num_stages - 1:
            boundary = plan.transitions[i]
            x = transition(
                x,
                plan.action.stages[i],
                plan.action.stages[i + 1],
                plan.base.grid,
                boundary.tau,
                schedule,
                boundary.seed,
            )
    return x


def _json_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_json_text(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json_text(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _grid_dict(grid: GridShape) -> dict:
    return {"frames": grid.frames, "height": grid.height, "width": grid.width}


def stages_to_obj(stages: Sequence[Stage]) -> list[dict]:
    return [{"r_s": s.r_s, "r_t": s.r_t, "steps": s.steps} for s in stages]


def stages_from_obj(items: Sequence[dict]) -> tuple[Stage, ...]:
    return tuple(Stage(r_s=float(d["r_s"]), r_t=float(d["r_t"]), steps=int(d["steps"])) for d in items)


def actions_to_json(actions: Sequence[Action]) -> str:
    """Serialize a candidate list as a JSON array of stage arrays."""
    return _json_text([stages_to_obj(a.stages) for a in actions]) + "\n"


def actions_from_json(text: str) -> list[Action]:
    return [Action(stages_from_obj(item)) for item in json.loads(text)]


def plan_to_dict(plan: SchedulePlan) -> dict:
    return {
        "version": 1,
        "base": {
            "frames": plan.base.frames,
            "height": plan.base.height,
            "width": plan.base.width,
            "steps": plan.base.steps,
        },
        "demand": {
            "d_s": plan.demand.d_s,
            "d_t": plan.demand.d_t,
            "m_s": plan.demand.m_s,
            "m_t": plan.demand.m_t,
            "raw_spatial": plan.demand.raw_spatial,
            "raw_temporal": plan.demand.raw_temporal,
        },
        "action": stages_to_obj(plan.action.stages),
        "stage_grids": [_grid_dict(g) for g in plan.stage_grids],
        "transitions": [
            {
                "after_step": t.after_step,
                "target": _grid_dict(t.target),
                "tau": t.tau,
                "seed": t.seed,
            }
            for t in plan.transitions
        ],
        "predicted_density": plan.predicted_density,
        "predicted_speedup": {
            "linear": plan.predicted_speedup_linear,
            "quadratic": plan.predicted_speedup_quadratic,
        },
    }


def plan_to_json(plan: SchedulePlan) -> str:
    """Deterministic JSON text: fixed key order, 17-significant-digit floats."""
    return _json_text(plan_to_dict(plan)) + "\n"


def plan_from_json(text: str) -> SchedulePlan:
    """Reconstruct a plan from its JSON form (exact float round-trip)."""
    obj = json.loads(text)
    if obj.get("version") != 1:
        raise ValueError(f"unsupported plan version {obj.get('version')!r}")
    base = BaseGrid(
        frames=int(obj["base"]["frames"]),
        height=int(obj["base"]["height"]),
        width=int(obj["base"]["width"]),
        steps=int(obj["base"]["steps"]),
    )
    demand = DemandProfile(
        d_s=float(obj["demand"]["d_s"]),
        d_t=float(obj["demand"]["d_t"]),
        m_s=float(obj["demand"]["m_s"]),
        m_t=float(obj["demand"]["m_t"]),
        raw_spatial=float(obj["demand"]["raw_spatial"]),
        raw_temporal=float(obj["demand"]["raw_temporal"]),
    )
    action = Action(stages_from_obj(obj["action"]))
    grids = tuple(
        GridShape(int(g["frames"]), int(g["height"]), int(g["width"])) for g in obj["stage_grids"]
    )
    transitions = tuple(
        Transition(
            after_step=int(t["after_step"]),
            target=GridShape(
                int(t["target"]["frames"]), int(t["target"]["height"]), int(t["target"]["width"])
            ),
            tau=int(t["tau"]),
            seed=int(t["seed"]),
        )
        for t in obj["transitions"]
    )
    return SchedulePlan(
        action=action,
        base=base,
        stage_grids=grids,
        transitions=transitions,
        predicted_density=float(obj["predicted_density"]),
        predicted_speedup_linear=float(obj["predicted_speedup"]["linear"]),
        predicted_speedup_quadratic=float(obj["predicted_speedup"]["quadratic"]),
        demand=demand,
    )

"""Command-line interface.

Subcommands:
  plan        select a budget-feasible compression action for a sketch
  simulate    price an existing plan under a cost model
  demand      print the demand profile of a latent
  resize      anchor-resize a latent file to a target grid
  noise       write a coordinate-addressed Gaussian noise tensor
  transition  resize + renoise a latent between two stages

A config file of ``key = value`` lines (keys matching the long flag
names) can preset any flag; explicit flags win. All output is
deterministic: floats print with 17 significant digits.
"""

from __future__ import annotations

import argparse
import sys

from .actions import (
    Action,
    BudgetSpec,
    COARSE_RATIO_GRID,
    FINE_RATIO_GRID,
    Stage,
)
from .demand import DemandConfig, estimate_demand
from .errors import EmptyFeasibleSetError, StallocError
from .latent import BaseGrid, GridShape, VideoLatent, load_latent, save_latent
from .planner import (
    CostModel,
    EnumerationParams,
    actions_from_json,
    default_enumeration,
    make_plan,
    plan_from_json,
    plan_to_json,
    simulate_cost,
    _json_text,
)
from .reshape import NoiseSchedule, anchor_resize, noise_field, transition
from .sketch import SketchConfig

import numpy as np


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _grid3(text: str) -> GridShape:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected F,H,W, got {text!r}")
    return GridShape(int(parts[0]), int(parts[1]), int(parts[2]))


def _shape4(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"expected C,F,H,W, got {text!r}")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _add_demand_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--cutoff", type=float, default=0.25, help="high-pass cutoff, fraction of Nyquist")
    sub.add_argument("--flow-reg", type=float, default=0.1, help="flow smoothness weight")
    sub.add_argument("--flow-iters", type=int, default=50, help="flow solver iterations")
    sub.add_argument("--norm-spatial", type=_pair, default=(0.0, 0.6), help="lo,hi clamp for spatial energy")
    sub.add_argument("--norm-temporal", type=_pair, default=(0.0, 2.0), help="lo,hi clamp for flow magnitude")
    sub.add_argument("--sharpness", type=float, default=2.0, help="softmax sharpness")


def _demand_config(args: argparse.Namespace) -> DemandConfig:
    return DemandConfig(
        highpass_cutoff=args.cutoff,
        flow_regularization=args.flow_reg,
        flow_iterations=args.flow_iters,
        norm_bounds_spatial=args.norm_spatial,
        norm_bounds_temporal=args.norm_temporal,
        sharpness=args.sharpness,
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="stalloc", description=__doc__.split("\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    p = subs.add_parser("plan", help="select a compression action for a sketch latent")
    p.add_argument("--sketch", default=None, help="sketch latent (.ltv)")
    p.add_argument("--frames", type=int, default=None, help="full-resolution frame count")
    p.add_argument("--height", type=int, default=None, help="full-resolution latent rows")
    p.add_argument("--width", type=int, default=None, help="full-resolution latent columns")
    p.add_argument("--steps", type=int, default=None, help="total denoising steps")
    p.add_argument("--budget", type=float, default=0.5, help="target compute density D")
    p.add_argument("--tolerance", type=float, default=0.05, help="density tolerance")
    p.add_argument("--lambda", dest="matcher_weight", type=float, default=0.5,
                   help="spatial-vs-temporal matching weight")
    p.add_argument("--seed", type=int, default=0, help="master noise seed")
    p.add_argument("--out", default=None, help="output plan JSON path")
    p.add_argument("--grid", choices=("coarse", "fine"), default="fine",
                   help="ratio grid: multiples of 0.10 (coarse) or 0.05 (fine)")
    p.add_argument("--stages", type=int, choices=(2, 3), default=3,
                   help="stage template: with (3) or without (2) a pinned sketch stage")
    p.add_argument("--sketch-steps", type=int, default=4, help="steps spent in the sketch stage")
    p.add_argument("--sketch-ratios", type=_pair, default=(0.5, 0.5),
                   help="r_s,r_t used by the sketch stage")
    p.add_argument("--actions", default=None, help="explicit action list JSON (skips enumeration)")
    p.add_argument("--auto-widen", action="store_true",
                   help="double the tolerance (up to 4x) if no action fits the budget")
    _add_demand_flags(p)
    registry["plan"] = p

    p = subs.add_parser("simulate", help="price a plan under a cost model")
    p.add_argument("--plan", required=True, help="plan JSON path")
    p.add_argument("--model", choices=("linear", "quadratic"), default="linear")
    p.add_argument("--token-cost", type=float, default=1.0)
    p.add_argument("--pair-cost", type=float, default=None)
    registry["simulate"] = p

    p = subs.add_parser("demand", help="print the demand profile of a latent")
    p.add_argument("latent", help="latent file (.ltv)")
    _add_demand_flags(p)
    registry["demand"] = p

    p = subs.add_parser("resize", help="anchor-resize a latent to a target grid")
    p.add_argument("--in", dest="input", required=True, help="input latent (.ltv)")
    p.add_argument("--target", type=_grid3, required=True, help="target grid F,H,W")
    p.add_argument("--out", required=True, help="output latent (.ltv)")
    registry["resize"] = p

    p = subs.add_parser("noise", help="write a coordinate-addressed noise tensor")
    p.add_argument("--shape", type=_shape4, required=True, help="tensor shape C,F,H,W")
    p.add_argument("--seed", type=int, required=True, help="noise seed")
    p.add_argument("--out", required=True, help="output latent (.ltv)")
    registry["noise"] = p

    p = subs.add_parser("transition", help="resize + renoise a latent between stages")
    p.add_argument("--in", dest="input", required=True, help="input latent (.ltv)")
    p.add_argument("--base", type=_grid3, required=True, help="full-resolution grid F,H,W")
    p.add_argument("--from", dest="from_ratios", type=_pair, required=True,
                   help="source stage ratios r_s,r_t")
    p.add_argument("--to", dest="to_ratios", type=_pair, required=True,
                   help="target stage ratios r_s,r_t")
    p.add_argument("--steps", type=int, required=True, help="linear schedule length")
    p.add_argument("--tau", type=int, required=True, help="renoise boundary index")
    p.add_argument("--seed", type=int, required=True, help="noise seed")
    p.add_argument("--out", required=True, help="output latent (.ltv)")
    registry["transition"] = p

    for sub in registry.values():
        sub.add_argument("--config", default=None, help="key=value file presetting any flag")
    return parser, registry


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return values


def _apply_config(sub: argparse.ArgumentParser, values: dict[str, str]) -> None:
    known = {}
    for action in sub._actions:
        if action.dest in values:
            raw = values[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                known[action.dest] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                known[action.dest] = action.type(raw)
            elif isinstance(action.default, int) and not isinstance(action.default, bool):
                known[action.dest] = int(raw)
            else:
                known[action.dest] = raw
    unknown = set(values) - {a.dest for a in sub._actions}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**known)


def _find_config_path(argv: list[str]) -> str | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [name for name in names if getattr(args, name) is None]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        raise ValueError(f"missing required arguments (flag or config): {flags}")


def _cmd_plan(args: argparse.Namespace) -> int:
    _require(args, "sketch", "frames", "height", "width", "steps", "out")
    sketch = load_latent(args.sketch)
    base = BaseGrid(frames=args.frames, height=args.height, width=args.width, steps=args.steps)
    demand_cfg = _demand_config(args)
    ratio_grid = FINE_RATIO_GRID if args.grid == "fine" else COARSE_RATIO_GRID

    if args.actions is not None:
        with open(args.actions, "r", encoding="utf-8") as fh:
            source: EnumerationParams | list[Action] = actions_from_json(fh.read())
    elif args.stages == 3:
        sketch_cfg = SketchConfig(sketch_steps=args.sketch_steps, sketch_ratios=args.sketch_ratios)
        source = default_enumeration(base, sketch_cfg, ratio_grid)
    else:
        source = default_enumeration(base, None, ratio_grid)

    tolerance = args.tolerance
    widen_limit = args.tolerance * 4
    while True:
        spec = BudgetSpec(
            target_density=args.budget,
            tolerance=tolerance,
            matcher_weight=args.matcher_weight,
            steps=args.steps,
        )
        try:
            plan = make_plan(sketch, base, spec, demand_cfg, source, args.seed)
            break
        except EmptyFeasibleSetError:
            if not args.auto_widen or tolerance >= widen_limit or tolerance <= 0.0:
                raise
            tolerance = min(tolerance * 2, widen_limit)

    text = plan_to_json(plan)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan = plan_from_json(fh.read())
    model = CostModel(mode=args.model, token_cost=args.token_cost, pair_cost=args.pair_cost)
    cost, speedup = simulate_cost(plan, model)
    sys.stdout.write(_json_text({"model": args.model, "cost": cost, "speedup": speedup}) + "\n")
    return 0


def _cmd_demand(args: argparse.Namespace) -> int:
    profile = estimate_demand(load_latent(args.latent), _demand_config(args))
    sys.stdout.write(
        _json_text(
            {
                "d_s": profile.d_s,
                "d_t": profile.d_t,
                "m_s": profile.m_s,
                "m_t": profile.m_t,
                "raw_spatial": profile.raw_spatial,
                "raw_temporal": profile.raw_temporal,
            }
        )
        + "\n"
    )
    return 0


def _cmd_resize(args: argparse.Namespace) -> int:
    latent = load_latent(args.input)
    save_latent(anchor_resize(latent, args.target), args.out)
    return 0


def _cmd_noise(args: argparse.Namespace) -> int:
    c, f, h, w = args.shape
    field = noise_field(c, GridShape(f, h, w), args.seed)
    save_latent(VideoLatent(field.astype(np.float32)), args.out)
    return 0


def _cmd_transition(args: argparse.Namespace) -> int:
    latent = load_latent(args.input)
    schedule = NoiseSchedule.linear(args.steps)
    out = transition(
        latent,
        Stage(args.from_ratios[0], args.from_ratios[1], 1),
        Stage(args.to_ratios[0], args.to_ratios[1], 1),
        args.base,
        args.tau,
        schedule,
        args.seed,
    )
    save_latent(out, args.out)
    return 0


_COMMANDS = {
    "plan": _cmd_plan,
    "simulate": _cmd_simulate,
    "demand": _cmd_demand,
    "resize": _cmd_resize,
    "noise": _cmd_noise,
    "transition": _cmd_transition,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()

    try:
        config_path = _find_config_path(argv)
        if config_path is not None:
            command = next((tok for tok in argv if not tok.startswith("-")), None)
            if command in registry:
                _apply_config(registry[command], _read_config(config_path))
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except StallocError as exc:
        sys.stderr.write(f"error: {exc.code}: {exc}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"error: invalid-argument: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

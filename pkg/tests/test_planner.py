import numpy as np
import pytest

from stalloc import (
    Action,
    BaseGrid,
    BudgetSpec,
    CostModel,
    DemandConfig,
    DemandProfile,
    DegenerateSketchError,
    GridShape,
    InvalidStepSplitError,
    NoiseSchedule,
    SchedulePlan,
    ShapeInconsistencyError,
    SketchConfig,
    Stage,
    Transition,
    VideoLatent,
    allocation_weights,
    anchor_resize,
    apply_ratios,
    default_enumeration,
    effective_gains,
    enumerate_actions,
    execute_plan,
    make_plan,
    noise_field,
    plan_from_json,
    plan_to_json,
    select_action,
    simulate_cost,
)

DEMAND_CFG = DemandConfig()


def neutral_profile():
    return DemandProfile(d_s=0.5, d_t=0.5, m_s=0.5, m_t=0.5, raw_spatial=0.0, raw_temporal=0.0)


def manual_plan(action, base, profile=None):
    grids = tuple(apply_ratios(base.grid, s.r_s, s.r_t) for s in action.stages)
    transitions = []
    done = 0
    for i, stage in enumerate(action.stages[:-1]):
        done += stage.steps
        transitions.append(Transition(done, grids[i + 1], done, 1000 ^ (i + 1)))
    from stalloc import density, simulate_cost as _sim

    rho = density(action, base)
    plan = SchedulePlan(
        action=action,
        base=base,
        stage_grids=grids,
        transitions=tuple(transitions),
        predicted_density=rho,
        predicted_speedup_linear=1.0 / rho,
        predicted_speedup_quadratic=1.0,
        demand=profile or neutral_profile(),
    )
    _, quad = _sim(plan, CostModel("quadratic"))
    return SchedulePlan(
        action=plan.action,
        base=plan.base,
        stage_grids=plan.stage_grids,
        transitions=plan.transitions,
        predicted_density=plan.predicted_density,
        predicted_speedup_linear=plan.predicted_speedup_linear,
        predicted_speedup_quadratic=quad,
        demand=plan.demand,
    )


def checkerboard_clip(frames=8, size=32):
    h = np.arange(size)[:, None]
    w = np.arange(size)[None, :]
    board = ((-1.0) ** (h + w)).astype(np.float32)
    return VideoLatent(np.stack([board] * frames)[None])


def moving_bump_clip(frames=8, size=32, speed=2.0, sigma=10.0, amplitude=8.0):
    h = np.arange(size, dtype=np.float64)[:, None]
    w = np.arange(size, dtype=np.float64)[None, :]
    frames_list = []
    for t in range(frames):
        cw = 6.0 + speed * t
        frames_list.append(amplitude * np.exp(-((h - size / 2) ** 2 + (w - cw) ** 2) / (2 * sigma**2)))
    return VideoLatent(np.stack(frames_list)[None].astype(np.float32))


class TestMakePlan:
    BASE = BaseGrid(frames=16, height=64, width=64, steps=20)
    SPEC = BudgetSpec(target_density=0.5, tolerance=0.05, matcher_weight=0.5, steps=20)

    def enum(self):
        return default_enumeration(self.BASE, SketchConfig(sketch_steps=4, sketch_ratios=(0.5, 0.5)))

    def test_plan_shape_and_invariants(self):
        plan = make_plan(checkerboard_clip(), self.BASE, self.SPEC, DEMAND_CFG, self.enum(), seed=7)
        assert plan.stage_grids[-1] == self.BASE.grid
        assert len(plan.transitions) == plan.action.num_stages - 1
        assert abs(plan.predicted_density - 0.5) <= 0.05
        assert plan.action.total_steps == 20
        # transition metadata: boundaries at cumulative steps, derived seeds
        done = 0
        for i, tr in enumerate(plan.transitions):
            done += plan.action.stages[i].steps
            assert tr.after_step == done == tr.tau
            assert tr.seed == 7 ^ (i + 1)
            assert tr.target == plan.stage_grids[i + 1]

    def test_determinism_byte_identical_json(self):
        a = make_plan(checkerboard_clip(), self.BASE, self.SPEC, DEMAND_CFG, self.enum(), seed=3)
        b = make_plan(checkerboard_clip(), self.BASE, self.SPEC, DEMAND_CFG, self.enum(), seed=3)
        assert plan_to_json(a) == plan_to_json(b)

    def test_high_texture_static_clip_favors_spatial(self):
        plan = make_plan(checkerboard_clip(), self.BASE, self.SPEC, DEMAND_CFG, self.enum(), seed=0)
        assert plan.demand.m_s > 0.5
        g_s, g_t = effective_gains(plan.action)
        assert g_s >= g_t

    def test_fast_motion_smooth_clip_favors_temporal(self):
        plan = make_plan(moving_bump_clip(), self.BASE, self.SPEC, DEMAND_CFG, self.enum(), seed=0)
        assert plan.demand.m_t > 0.5
        g_s, g_t = effective_gains(plan.action)
        assert g_t >= g_s

    def test_explicit_action_list(self):
        actions = enumerate_actions(self.BASE, (12, 8), ratio_grid=(0.4, 0.6, 0.8, 1.0))
        plan = make_plan(
            checkerboard_clip(),
            self.BASE,
            BudgetSpec(target_density=0.6, tolerance=0.2, matcher_weight=0.5, steps=20),
            DEMAND_CFG,
            actions,
            seed=1,
        )
        assert plan.action in actions

    def test_rejects_wrong_step_totals(self):
        bad = [Action((Stage(0.5, 0.5, 5), Stage(1.0, 1.0, 5)))]
        with pytest.raises(InvalidStepSplitError):
            make_plan(checkerboard_clip(), self.BASE, self.SPEC, DEMAND_CFG, bad, seed=0)

    def test_rejects_single_frame_sketch(self):
        sketch = VideoLatent(np.zeros((1, 1, 8, 8), dtype=np.float32))
        with pytest.raises(DegenerateSketchError):
            make_plan(sketch, self.BASE, self.SPEC, DEMAND_CFG, self.enum(), seed=0)

    def test_monotone_temporal_response(self):
        # over a symmetric candidate set, raising d_t never lowers the
        # selected action's temporal gain
        actions = enumerate_actions(self.BASE, (12, 8))
        feasible = [
            a
            for a in actions
            if abs(
                sum(apply_ratios(self.BASE.grid, s.r_s, s.r_t).frames
                    * apply_ratios(self.BASE.grid, s.r_s, s.r_t).height
                    * apply_ratios(self.BASE.grid, s.r_s, s.r_t).width
                    * s.steps
                    for s in a.stages)
                / (self.BASE.tokens * self.BASE.steps)
                - 0.5
            )
            <= 0.05
        ]
        d_s = 0.4
        last_gt = -1.0
        for d_t in np.linspace(0.0, 1.0, 21):
            m_s, m_t = allocation_weights(d_s, float(d_t), 2.0)
            prof = DemandProfile(
                d_s=d_s, d_t=float(d_t), m_s=m_s, m_t=m_t, raw_spatial=0.0, raw_temporal=0.0
            )
            g_t = effective_gains(select_action(feasible, prof, 0.5, self.BASE))[1]
            assert g_t >= last_gt - 1e-12
            last_gt = g_t


class TestDefaultEnumeration:
    def test_three_stage_template(self):
        base = BaseGrid(frames=16, height=64, width=64, steps=20)
        params = default_enumeration(base, SketchConfig(sketch_steps=4))
        assert params.step_split == (4, 10, 6)
        assert params.fixed_stages == {0: (0.5, 0.5)}

    def test_two_stage_template(self):
        base = BaseGrid(frames=16, height=64, width=64, steps=20)
        params = default_enumeration(base, None)
        assert params.step_split == (12, 8)
        assert params.fixed_stages == {}

    def test_too_few_steps(self):
        base = BaseGrid(frames=16, height=64, width=64, steps=5)
        with pytest.raises(InvalidStepSplitError):
            default_enumeration(base, SketchConfig(sketch_steps=4))


class TestSimulateCost:
    BASE = BaseGrid(frames=16, height=24, width=40, steps=25)

    def test_identity_plan_speedup_is_one(self):
        base = BaseGrid(frames=10, height=12, width=12, steps=8)
        plan = manual_plan(Action((Stage(1.0, 1.0, 8),)), base)
        for mode in ("linear", "quadratic"):
            cost, speedup = simulate_cost(plan, CostModel(mode))
            assert speedup == 1.0
            assert cost > 0.0

    def test_linear_speedup_inverts_density_exactly(self):
        import random

        rng = random.Random(13)
        from stalloc import FINE_RATIO_GRID

        for _ in range(50):
            n1 = rng.randint(1, 24)
            action = Action(
                (
                    Stage(rng.choice(FINE_RATIO_GRID), rng.choice(FINE_RATIO_GRID), n1),
                    Stage(1.0, 1.0, 25 - n1),
                )
            )
            plan = manual_plan(action, self.BASE)
            _, speedup = simulate_cost(plan, CostModel("linear", token_cost=3.7))
            assert speedup == 1.0 / plan.predicted_density

    def test_quadratic_dominant_aggressive_plan(self):
        # density-0.4 plan over 25 steps vs a 50-step full-grid baseline
        action = Action((Stage(0.25, 1.0, 16), Stage(1.0, 1.0, 9)))
        plan = manual_plan(action, self.BASE)
        assert plan.predicted_density == pytest.approx(0.4)
        model = CostModel("quadratic", token_cost=1e-9, pair_cost=1.0)
        cost_plan, _ = simulate_cost(plan, model)
        baseline = manual_plan(
            Action((Stage(1.0, 1.0, 50),)), BaseGrid(frames=16, height=24, width=40, steps=50)
        )
        cost_full, _ = simulate_cost(baseline, model)
        assert cost_full / cost_plan >= 5.0

    def test_cost_model_validation(self):
        with pytest.raises(ValueError):
            CostModel("cubic")
        with pytest.raises(ValueError):
            CostModel("linear", token_cost=0.0)
        with pytest.raises(ValueError):
            CostModel("quadratic", pair_cost=-1.0)


class TestExecutePlan:
    def test_zero_oracle_zero_sigma_identity_plan(self):
        base = BaseGrid(frames=4, height=8, width=8, steps=3)
        plan = manual_plan(Action((Stage(1.0, 1.0, 3),)), base)
        x = VideoLatent(np.random.default_rng(0).standard_normal((1, 4, 8, 8)).astype(np.float32))
        sched = NoiseSchedule((0.0, 0.0, 0.0, 0.0))

        def oracle(lat, step):
            return VideoLatent(np.zeros_like(lat.data))

        out = execute_plan(plan, oracle, x, sched)
        assert out.data.tobytes() == x.data.tobytes()

    def test_single_transition_reduces_to_resize(self):
        base = BaseGrid(frames=4, height=8, width=8, steps=2)
        action = Action((Stage(0.5, 0.5, 1), Stage(1.0, 1.0, 1)))
        plan = manual_plan(action, base)
        rng = np.random.default_rng(1)
        x = VideoLatent(rng.standard_normal((1, 2, 4, 4)).astype(np.float32))
        sched = NoiseSchedule((0.0, 0.0, 0.0))

        def oracle(lat, step):
            return VideoLatent(np.zeros_like(lat.data))

        out = execute_plan(plan, oracle, x, sched)
        want = anchor_resize(x, base.grid)
        assert np.array_equal(out.data, want.data)

    def test_matches_hand_simulation_with_decay_oracle(self):
        base = BaseGrid(frames=2, height=4, width=4, steps=4)
        action = Action((Stage(0.5, 0.5, 2), Stage(1.0, 1.0, 2)))
        plan = manual_plan(action, base)
        sched = NoiseSchedule.linear(4)
        rng = np.random.default_rng(2)
        x0 = VideoLatent(rng.standard_normal((1, 1, 4, 4)).astype(np.float32))

        def oracle(lat, step):
            return VideoLatent(-lat.data)

        got = execute_plan(plan, oracle, x0, sched)

        # independent step-by-step replay
        x = x0.data.copy()
        for step in (0, 1):
            dt = np.float32(sched.sigmas[step] - sched.sigmas[step + 1])
            x = x + dt * (-x)
        # transition: broadcast frame axis 1 -> 2, then renoise at tau=2
        x = np.repeat(x, 2, axis=1)
        x = (x.astype(np.float64) + sched.sigma(2) * noise_field(1, GridShape(2, 4, 4), plan.transitions[0].seed)).astype(np.float32)
        for step in (2, 3):
            dt = np.float32(sched.sigmas[step] - sched.sigmas[step + 1])
            x = x + dt * (-x)
        assert got.data.tobytes() == x.tobytes()

    def test_rejects_wrong_initial_grid(self):
        base = BaseGrid(frames=4, height=8, width=8, steps=2)
        plan = manual_plan(Action((Stage(0.5, 0.5, 1), Stage(1.0, 1.0, 1))), base)
        x = VideoLatent(np.zeros((1, 4, 8, 8), dtype=np.float32))
        with pytest.raises(ShapeInconsistencyError):
            execute_plan(plan, lambda l, s: l, x, NoiseSchedule.linear(2))


class TestFullPipeline:
    def test_sketch_to_plan_to_execution(self):
        from stalloc import run_sketch

        base = BaseGrid(frames=16, height=64, width=64, steps=20)
        schedule = NoiseSchedule.linear(base.steps)
        sketch_cfg = SketchConfig(sketch_steps=4, sketch_ratios=(0.5, 0.5))

        # clean target: smooth content translating 2 latent px/frame
        h = np.arange(64, dtype=np.float64)[:, None]
        w = np.arange(64, dtype=np.float64)[None, :]
        clean_full = np.stack(
            [8.0 * np.exp(-((h - 32) ** 2 + (w - (10 + 2 * t)) ** 2) / 400.0) for t in range(16)]
        )[None].astype(np.float32)

        def oracle(lat, step):
            target = VideoLatent(clean_full)
            if lat.grid != target.grid:
                target = anchor_resize(target, lat.grid)
            sigma = max(schedule.sigma(step), 1e-6)
            return VideoLatent((target.data - lat.data) / np.float32(sigma))

        rng = np.random.default_rng(0)
        x0 = VideoLatent(rng.standard_normal(clean_full.shape).astype(np.float32))
        sketch = run_sketch(oracle, x0, sketch_cfg, schedule)
        assert sketch.grid == GridShape(8, 32, 32)

        spec = BudgetSpec(target_density=0.5, tolerance=0.05, matcher_weight=0.5, steps=20)
        plan = make_plan(
            sketch, base, spec, DEMAND_CFG, default_enumeration(base, sketch_cfg), seed=5
        )
        # a motion-dominated sketch steers the plan toward temporal gain
        assert plan.demand.m_t > 0.5
        g_s, g_t = effective_gains(plan.action)
        assert g_t >= g_s

        x_init = VideoLatent(
            rng.standard_normal((1, *plan.stage_grids[0])).astype(np.float32)
        )
        out_a = execute_plan(plan, oracle, x_init, schedule)
        out_b = execute_plan(plan, oracle, x_init, schedule)
        assert out_a.grid == base.grid
        assert out_a.data.tobytes() == out_b.data.tobytes()
        # the executed clip should resemble the clean target far more
        # than the starting noise does
        err_in = float(np.abs(x0.data - clean_full).mean())
        err_out = float(np.abs(out_a.data - clean_full).mean())
        assert err_out < 0.25 * err_in


class TestPlanJson:
    def test_round_trip_identity(self):
        base = BaseGrid(frames=16, height=64, width=64, steps=20)
        spec = BudgetSpec(target_density=0.5, tolerance=0.05, matcher_weight=0.5, steps=20)
        params = default_enumeration(base, SketchConfig())
        plan = make_plan(moving_bump_clip(), base, spec, DEMAND_CFG, params, seed=123456789)
        text = plan_to_json(plan)
        parsed = plan_from_json(text)
        assert parsed == plan
        assert plan_to_json(parsed) == text

    def test_top_level_keys_fixed(self):
        import json

        base = BaseGrid(frames=16, height=64, width=64, steps=20)
        spec = BudgetSpec(target_density=0.5, tolerance=0.05, matcher_weight=0.5, steps=20)
        plan = make_plan(
            checkerboard_clip(), base, spec, DEMAND_CFG, default_enumeration(base, SketchConfig()), seed=0
        )
        obj = json.loads(plan_to_json(plan))
        assert list(obj.keys()) == [
            "version",
            "base",
            "demand",
            "action",
            "stage_grids",
            "transitions",
            "predicted_density",
            "predicted_speedup",
        ]

    def test_floats_carry_17_significant_digits(self):
        base = BaseGrid(frames=16, height=64, width=64, steps=20)
        spec = BudgetSpec(target_density=0.5, tolerance=0.05, matcher_weight=0.5, steps=20)
        plan = make_plan(
            moving_bump_clip(), base, spec, DEMAND_CFG, default_enumeration(base, SketchConfig()), seed=0
        )
        text = plan_to_json(plan)
        # a reparse must reproduce the exact doubles
        assert plan_from_json(text).demand.raw_temporal == plan.demand.raw_temporal

    def test_rejects_unknown_version(self):
        with pytest.raises(ValueError):
            plan_from_json('{"version": 9}')

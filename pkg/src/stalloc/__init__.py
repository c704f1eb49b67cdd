"""Content-aware spatio-temporal compute allocation for video diffusion.

The library plans how a fixed denoising-step budget should be spent
across spatial resolution and temporal frame-rate: it estimates texture
and motion demands from a cheap latent sketch, picks the budget-feasible
compression action that best matches them, and provides the exact latent
resizing and renoising primitives needed to execute the plan.
"""

from .actions import (
    Action,
    BudgetSpec,
    COARSE_RATIO_GRID,
    FINE_RATIO_GRID,
    Stage,
    density,
    effective_gains,
    enumerate_actions,
    filter_by_budget,
    select_action,
)
from .demand import (
    DemandConfig,
    DemandProfile,
    allocation_weights,
    estimate_demand,
    optical_flow,
    raw_flow_magnitude,
    raw_spatial_energy,
    spatial_demand,
    temporal_demand,
)
from .errors import (
    DegenerateGridError,
    DegenerateSketchError,
    DimensionMismatchError,
    EmptyFeasibleSetError,
    EmptyInputError,
    InvalidStepSplitError,
    IoFailureError,
    MalformedHeaderError,
    NonFinitePayloadError,
    NonFiniteResultError,
    OracleError,
    ShapeInconsistencyError,
    ShapeMismatchError,
    StallocError,
    TooFewFramesError,
)
from .latent import (
    BaseGrid,
    GridShape,
    VideoLatent,
    apply_ratios,
    load_latent,
    round_half_away,
    save_latent,
)
from .planner import (
    CostModel,
    EnumerationParams,
    SchedulePlan,
    Transition,
    actions_from_json,
    actions_to_json,
    default_enumeration,
    execute_plan,
    make_plan,
    plan_from_json,
    plan_to_json,
    simulate_cost,
)
from .reshape import (
    NoiseCoordinate,
    NoiseSchedule,
    anchor_resize,
    coord_noise,
    noise_field,
    renoise,
    transition,
)
from .sketch import DenoiserOracle, SketchConfig, extrapolate_sketch, run_sketch

__version__ = "0.1.0"

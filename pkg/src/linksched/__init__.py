"""linksched: wireless link scheduling under drifting, unknown channel stats.

A discrete-time simulator for single-hop wireless networks with generalized
interference, plus the schedulers it studies: frame-restarted max-weight with
sliding-window optimism (implementable under partial observability), its
whole-frame-window restart variant, and the full-knowledge max-weight
benchmark.
"""

from .engine import (
    CouplingViolation,
    MetricsLog,
    SimConfig,
    SimState,
    coupled_run,
    frame_regret,
    queue_update,
    run,
    step,
)
from .kernels import compiled_available, default_backend
from .policies import (
    Feedback,
    IdealizedMaxWeight,
    MaxWeightUCB,
    PolicyConfig,
    RestartUCB,
    SlidingWindowStats,
    default_hyperparams,
    default_window,
    frame_reset,
    make_policy,
    ucb_weights,
    window_update,
)
from .solver import (
    ActivationTable,
    activation_table,
    enumerate_activations,
    max_weight_activation,
    max_weight_matching_exact,
)
from .stochastic import (
    AdaptivePoisson,
    ConstantDelta,
    Environment,
    FixedPoisson,
    RngStream,
    TimeInvariantDelta,
    TimeVaryingDelta,
    adaptive_rate,
    channel_step,
    delta_at,
    rayleigh_scale,
    sample_arrivals,
    sample_service,
    total_variation,
)
from .topology import (
    ConflictGraph,
    ExplicitSet,
    NetworkTopology,
    NodeExclusive,
    adjacent_links,
    build_grid,
    from_edges,
    is_admissible,
)

__version__ = "0.1.0"

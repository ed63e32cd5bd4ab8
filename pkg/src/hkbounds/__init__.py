"""Bounded-confidence opinion dynamics toolkit.

Simulation of the synchronous averaging dynamics, closed-form
consensus-probability bounds for uniform initial opinions, and reproducible
Monte Carlo estimation that cross-validates the two.
"""

from .bounds import (
    BoundName,
    BoundValue,
    consensus_exact_1d,
    cube_ball_lower_bound,
    eps_trivial_prob_1d,
    evaluate_bound,
    half_eps_ball_prob_1d,
    unit_ball_volume,
)
from .dynamics import Outcome, TrajectoryResult, counterexample_config, default_cap, run_trajectory
from .graph import (
    OrderStatistics,
    Profile,
    build_profile,
    connected_components,
    is_connected,
    is_delta_trivial,
    order_statistics,
    satisfies_star,
    satisfies_star_star,
)
from .model import (
    Configuration,
    NeighborSet,
    ScalarMode,
    diameter,
    neighbors,
    squared_distance,
    update_step,
)
from .montecarlo import (
    EventKind,
    McEstimate,
    McRequest,
    estimate_consensus,
    estimate_event,
    event_holds,
    event_indicators,
    sample_initial,
)
from .sweep import Row, SweepSpec, emit_csv, emit_jsonl, run_figure_sweep

__version__ = "0.1.0"

__all__ = [
    "BoundName",
    "BoundValue",
    "Configuration",
    "EventKind",
    "McEstimate",
    "McRequest",
    "NeighborSet",
    "OrderStatistics",
    "Outcome",
    "Profile",
    "Row",
    "ScalarMode",
    "SweepSpec",
    "TrajectoryResult",
    "build_profile",
    "connected_components",
    "consensus_exact_1d",
    "counterexample_config",
    "cube_ball_lower_bound",
    "default_cap",
    "diameter",
    "emit_csv",
    "emit_jsonl",
    "eps_trivial_prob_1d",
    "estimate_consensus",
    "estimate_event",
    "evaluate_bound",
    "event_holds",
    "event_indicators",
    "half_eps_ball_prob_1d",
    "is_connected",
    "is_delta_trivial",
    "neighbors",
    "order_statistics",
    "run_figure_sweep",
    "run_trajectory",
    "sample_initial",
    "satisfies_star",
    "satisfies_star_star",
    "squared_distance",
    "unit_ball_volume",
    "update_step",
]

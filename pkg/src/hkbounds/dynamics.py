"""Trajectory iteration, outcome classification, and the failure construction.

The synchronous update has the finite-time convergence property, so a
trajectory is iterated until a fixed point (exact equality in rational mode,
displacement below tolerance in float mode) and then classified by the
connected components of the final profile. In one dimension a disconnected
profile can never reconnect, so disconnection ends the run early as
Fragmented. A step cap bounds the loop; hitting it is reported as its own
outcome (CapReached), never silently folded into the others.

`counterexample_config` builds the classic configuration whose profile is
connected at t=0 but disconnected at t=1, witnessing that connectivity is
not preserved once n exceeds 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .graph import build_profile, connected_components, is_connected
from .model import Configuration, ScalarMode, equal_opinions, max_squared_distance, update_step


class Outcome(Enum):
    CONSENSUS = "consensus"
    FRAGMENTED = "fragmented"
    CAP_REACHED = "cap_reached"


HISTORY_LIMIT = 10_000


@dataclass(frozen=True)
class TrajectoryResult:
    outcome: Outcome
    steps: int
    final: Configuration
    cluster_count: int
    history_len: int = 0
    history: Optional[tuple[Configuration, ...]] = None


def default_cap(n: int) -> int:
    """Safety-net step cap: generous relative to observed termination times."""
    return max(1000, n**3)


def _converged(previous: Configuration, current: Configuration, tol: float) -> bool:
    if previous.scalar_mode is ScalarMode.EXACT_RATIONAL:
        return previous.opinions == current.opinions
    threshold = tol * max(1.0, float(previous.epsilon))
    return all(
        abs(a - b) <= threshold
        for prev_row, cur_row in zip(previous.opinions, current.opinions)
        for a, b in zip(prev_row, cur_row)
    )


def _is_point_cluster(config: Configuration, tol: float) -> bool:
    # Terminal consensus means the single cluster has collapsed: diameter 0
    # exactly in rational mode, at most tol*epsilon in float mode.
    if config.scalar_mode is ScalarMode.EXACT_RATIONAL:
        return equal_opinions(config)
    bound = tol * float(config.epsilon)
    return max_squared_distance(config) <= bound * bound


def run_trajectory(
    config: Configuration,
    cap: Optional[int] = None,
    tol: float = 1e-12,
    record: bool = False,
) -> TrajectoryResult:
    """Iterate the update map until a terminal state, early exit, or the cap.

    tol controls both the float fixed-point test (max per-coordinate
    displacement <= tol*max(1, epsilon)) and the float consensus-diameter
    test (<= tol*epsilon); it is ignored in rational mode, where equality is
    exact. `record` keeps the visited states (first HISTORY_LIMIT of them).

    A float state that stops moving while its single cluster still has
    diameter above tol*epsilon is treated as not yet terminal and iteration
    continues; the cap then surfaces the stall as CapReached instead of
    guessing an outcome.
    """
    if cap is None:
        cap = default_cap(config.n)
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")

    one_dim = config.d == 1
    x = config
    history = [x] if record else None
    t = 0
    while True:
        profile = build_profile(x)
        if one_dim and not is_connected(profile):
            return _result(Outcome.FRAGMENTED, t, x, history)
        if t == cap:
            return _result(Outcome.CAP_REACHED, cap, x, history)
        x_next = update_step(x)
        if history is not None and len(history) < HISTORY_LIMIT:
            history.append(x_next)
        if _converged(x, x_next, tol):
            final_profile = build_profile(x_next)
            clusters = len(connected_components(final_profile))
            if clusters == 1:
                if _is_point_cluster(x_next, tol):
                    return _result(Outcome.CONSENSUS, t, x_next, history, clusters)
                # single slow-contracting cluster: keep iterating
            else:
                return _result(Outcome.FRAGMENTED, t, x_next, history, clusters)
        x = x_next
        t += 1


def _result(outcome, steps, final, history, clusters=None):
    if clusters is None:
        clusters = len(connected_components(build_profile(final)))
    hist = tuple(history) if history is not None else None
    return TrajectoryResult(
        outcome=outcome,
        steps=steps,
        final=final,
        cluster_count=clusters,
        history_len=len(hist) if hist is not None else 0,
        history=hist,
    )


def counterexample_config(n: int) -> Configuration:
    """Configuration (epsilon=1, d=1) whose profile loses connectivity in one
    step: (-1, 0, 1, 2, 2) for n=5, with further agents alternating between
    -1 and 2. No such configuration exists for n <= 4, so those are rejected.

    The advertised property is verified on the constructed instance in exact
    arithmetic before returning.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 5:
        raise ValueError(f"connectivity is preserved for n <= 4; need n >= 5, got {n!r}")
    values = [-1, 0, 1, 2, 2]
    extras = [-1 if i % 2 == 0 else 2 for i in range(n - 5)]
    config = Configuration(
        tuple((v,) for v in values + extras), 1, ScalarMode.EXACT_RATIONAL
    )
    if not is_connected(build_profile(config)):
        raise AssertionError(f"construction broken: profile not connected at t=0 for n={n}")
    if is_connected(build_profile(update_step(config))):
        raise AssertionError(f"construction broken: profile still connected at t=1 for n={n}")
    return config

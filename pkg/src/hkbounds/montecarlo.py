"""Reproducible Monte Carlo estimation of initial-profile events and consensus.

Sampling is counter-based: trial t of a run with master seed s reads the
Philox stream keyed by s starting at counter block t*ceil(n*d/4) (one block
is four 64-bit draws). A trial's coordinates therefore depend only on
(s, t, n, d), never on which worker produced them or how trials were
batched, so estimates are bit-identical for any worker count and any batch
split. Aggregation is integer success counting, which is order-insensitive.

Events are evaluated on the initial configuration except Consensus, which
runs the full dynamics per trial. Both a scalar route (Configuration in,
bool out) and a vectorized route (numpy batch) exist; they make identical
edge decisions because every threshold is compared on squared distances
with the same float expressions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .dynamics import Outcome, default_cap, run_trajectory
from .graph import build_profile, is_connected, is_delta_trivial, satisfies_star, satisfies_star_star
from .model import Configuration, squared_distance

# Trials per vectorized batch. Fixed: results must not depend on worker
# count, and batches are the unit of work handed to workers.
BATCH_TRIALS = 16384

_SEED_LIMIT = 1 << 64


class EventKind(Enum):
    CONSENSUS = "consensus"
    CONNECTED0 = "connected0"
    EPS_TRIVIAL0 = "eps_trivial0"
    STAR0 = "star0"
    STAR_STAR0 = "star_star0"
    EPS_TRIVIAL_OR_STAR_STAR0 = "eps_trivial_or_star_star0"
    HALF_EPS_BALL0 = "half_eps_ball0"


_ORDER_STATISTIC_EVENTS = {
    EventKind.STAR0,
    EventKind.STAR_STAR0,
    EventKind.EPS_TRIVIAL_OR_STAR_STAR0,
}


@dataclass(frozen=True)
class McRequest:
    n: int
    d: int
    eps: float
    trials: int
    master_seed: int
    event: EventKind
    cap: Optional[int] = None  # Consensus only; None means max(1000, n^3)
    tol: float = 1e-12  # Consensus only

    def validate(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.d, int) or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if not 0.0 < float(self.eps) < 1.0:
            raise ValueError(f"eps must lie in (0,1), got {self.eps!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        _check_seed(self.master_seed)
        if self.event in _ORDER_STATISTIC_EVENTS and (self.d != 1 or self.n < 4):
            raise ValueError(
                f"event {self.event.value} needs d=1 and n>=4, got n={self.n}, d={self.d}"
            )
        if self.cap is not None and self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")

    def resolved_cap(self) -> int:
        return self.cap if self.cap is not None else default_cap(self.n)


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    trials: int
    successes: int
    stderr: float
    ci95: tuple[float, float]
    cap_reached_count: int = 0


def _check_seed(seed: int) -> None:
    if not isinstance(seed, int) or not 0 <= seed < _SEED_LIMIT:
        raise ValueError(f"master_seed must be an integer in [0, 2^64), got {seed!r}")


def _blocks_per_trial(n: int, d: int) -> int:
    return -(-(n * d) // 4)


def _uniform_batch(n: int, d: int, start_trial: int, count: int, master_seed: int) -> np.ndarray:
    """Uniform [0,1] coordinates for trials start_trial..start_trial+count-1,
    shape (count, n, d). Each trial occupies its own counter window, so any
    split of a trial range reproduces the same values."""
    bpt = _blocks_per_trial(n, d)
    gen = np.random.Generator(np.random.Philox(key=master_seed))
    gen.bit_generator.advance(start_trial * bpt)
    raw = gen.random(count * bpt * 4)
    return raw.reshape(count, bpt * 4)[:, : n * d].reshape(count, n, d)


def sample_initial(
    n: int,
    d: int,
    trial_index: int,
    master_seed: int,
    eps: float,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Configuration:
    """Initial configuration for one trial: n*d i.i.d. uniform [0,1]
    coordinates, deterministic in (master_seed, trial_index, n, d).

    `transform` maps the (n, d) array of uniforms to coordinates under some
    other initial law; the default is the uniform cube itself.
    """
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be >= 1, got n={n!r}, d={d!r}")
    if trial_index < 0:
        raise ValueError(f"trial_index must be >= 0, got {trial_index!r}")
    _check_seed(master_seed)
    coords = _uniform_batch(n, d, trial_index, 1, master_seed)[0]
    if transform is not None:
        coords = np.asarray(transform(coords), dtype=np.float64)
        if coords.shape != (n, d):
            raise ValueError(f"transform must preserve the (n, d) shape, got {coords.shape}")
    return Configuration(tuple(tuple(row) for row in coords.tolist()), float(eps))


# ---------------------------------------------------------------------------
# scalar (per-Configuration) event route


def _half_ball_holds(config: Configuration) -> bool:
    half = config.epsilon / 2
    anchor = config.opinions[0]
    return all(squared_distance(anchor, row) <= half * half for row in config.opinions)


def event_holds(
    config: Configuration,
    event: EventKind,
    cap: Optional[int] = None,
    tol: float = 1e-12,
) -> bool:
    """Evaluate one event on one configuration (dynamics run for Consensus)."""
    if event is EventKind.CONSENSUS:
        return run_trajectory(config, cap=cap, tol=tol).outcome is Outcome.CONSENSUS
    if event is EventKind.CONNECTED0:
        return is_connected(build_profile(config))
    if event is EventKind.EPS_TRIVIAL0:
        return is_delta_trivial(config, config.epsilon)
    if event is EventKind.HALF_EPS_BALL0:
        return _half_ball_holds(config)
    if event is EventKind.STAR0:
        return satisfies_star(config)
    if event is EventKind.STAR_STAR0:
        return satisfies_star_star(config)[0]
    if event is EventKind.EPS_TRIVIAL_OR_STAR_STAR0:
        return is_delta_trivial(config, config.epsilon) or satisfies_star_star(config)[0]
    raise AssertionError(f"unhandled event {event!r}")


# ---------------------------------------------------------------------------
# vectorized event route


def _pairwise_sq(X: np.ndarray) -> np.ndarray:
    diff = X[:, :, None, :] - X[:, None, :, :]
    return np.einsum("bijk,bijk->bij", diff, diff)


def _component_counts(adj: np.ndarray) -> np.ndarray:
    """Number of connected components per trial; adj is (m, n, n) boolean."""
    m, n, _ = adj.shape
    reach = adj | np.eye(n, dtype=bool)
    hops = 1
    while hops < n - 1:
        r = reach.astype(np.int32)
        reach = (r @ r) > 0
        hops *= 2
    below_diag = np.tril(np.ones((n, n), dtype=bool), k=-1)
    linked_to_smaller = (reach & below_diag).any(axis=2)
    return (~linked_to_smaller).sum(axis=1)


def _indicator_batch(X: np.ndarray, eps: float, event: EventKind) -> np.ndarray:
    """Boolean indicator of a t=0 event for a batch of states (B, n, d)."""
    B, n, d = X.shape
    eps2 = eps * eps
    if event is EventKind.CONNECTED0:
        if d == 1:
            gaps = np.diff(np.sort(X[:, :, 0], axis=1), axis=1)
            return (gaps * gaps <= eps2).all(axis=1)
        return _component_counts(_pairwise_sq(X) <= eps2) == 1
    if event is EventKind.EPS_TRIVIAL0:
        if d == 1:
            s = np.sort(X[:, :, 0], axis=1)
            spread = s[:, -1] - s[:, 0]
            return spread * spread <= eps2
        return _pairwise_sq(X).max(axis=(1, 2)) <= eps2
    if event is EventKind.HALF_EPS_BALL0:
        half = eps / 2
        diff = X - X[:, :1, :]
        sq = np.einsum("bik,bik->bi", diff, diff)
        return (sq <= half * half).all(axis=1)
    if event in _ORDER_STATISTIC_EVENTS:
        v = np.sort(X[:, :, 0], axis=1)
        if event is EventKind.STAR0:
            return _star_batch(v, eps)
        if event is EventKind.STAR_STAR0:
            return _star_star_batch(v, eps)
        s = v[:, -1] - v[:, 0]
        return (s * s <= eps2) | _star_star_batch(v, eps)
    raise AssertionError(f"no t=0 indicator for event {event!r}")


def _star_batch(v: np.ndarray, eps: float) -> np.ndarray:
    n = v.shape[1]
    m = (n - 4) // 3
    k = n - m - 1
    inner = v[:, k - 1] - v[:, m + 1] <= eps
    outer = (v[:, n - 1] - v[:, k - 1]) + (v[:, m + 1] - v[:, 0]) <= eps
    return inner & outer


def _star_star_batch(v: np.ndarray, eps: float) -> np.ndarray:
    n = v.shape[1]
    m = (n - 4) // 3
    half = eps / 2
    hit = np.zeros(v.shape[0], dtype=bool)
    for i in range(m + 1):
        top = v[:, n - 1] - v[:, n - i - 2]
        middle = v[:, n - i - 2] - v[:, i + 1]
        bottom = v[:, i + 1] - v[:, 0]
        hit |= (top <= half) & (middle <= half) & (bottom <= half)
    return hit


# outcome codes used by the vectorized dynamics
_CODE_CONSENSUS = 1
_CODE_FRAGMENTED = 2
_CODE_CAP = 3


def _trajectory_batch(X0: np.ndarray, eps: float, cap: int, tol: float) -> np.ndarray:
    """Classify a batch of trajectories; returns outcome codes (B,).

    Mirrors run_trajectory exactly: disconnection early exit in d=1, fixed
    point when the max per-coordinate displacement drops to tol*max(1,eps),
    consensus only for a single component that has collapsed to diameter
    tol*eps, stalls kept running until the cap.
    """
    B, n, d = X0.shape
    eps2 = eps * eps
    thresh = tol * max(1.0, eps)
    collapse2 = (tol * eps) ** 2
    codes = np.zeros(B, dtype=np.uint8)
    X = X0.astype(np.float64, copy=True)
    active = np.arange(B)
    t = 0
    while active.size:
        Xa = X[active]
        if d == 1:
            gaps = np.diff(np.sort(Xa[:, :, 0], axis=1), axis=1)
            if gaps.size:
                disconnected = (gaps * gaps > eps2).any(axis=1)
                if disconnected.any():
                    codes[active[disconnected]] = _CODE_FRAGMENTED
                    active = active[~disconnected]
                    if not active.size:
                        break
                    Xa = X[active]
        if t == cap:
            codes[active] = _CODE_CAP
            break
        adj = _pairwise_sq(Xa) <= eps2
        counts = adj.sum(axis=2)
        Xn = (adj.astype(np.float64) @ Xa) / counts[..., None]
        displacement = np.abs(Xn - Xa).max(axis=(1, 2))
        X[active] = Xn
        converged = displacement <= thresh
        if converged.any():
            Xc = Xn[converged]
            sq = _pairwise_sq(Xc)
            comps = _component_counts(sq <= eps2)
            collapsed = sq.max(axis=(1, 2)) <= collapse2
            idx = active[converged]
            codes[idx[(comps == 1) & collapsed]] = _CODE_CONSENSUS
            codes[idx[comps >= 2]] = _CODE_FRAGMENTED
            # single cluster that has not collapsed yet: stays active
        active = active[codes[active] == 0]
        t += 1
    return codes


# ---------------------------------------------------------------------------
# estimation


def _batch_ranges(trials: int) -> list[tuple[int, int]]:
    return [(s, min(BATCH_TRIALS, trials - s)) for s in range(0, trials, BATCH_TRIALS)]


def _map_batches(fn, trials: int, workers: int) -> list:
    ranges = _batch_ranges(trials)
    if workers <= 1 or len(ranges) == 1:
        return [fn(s, c) for s, c in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda rc: fn(*rc), ranges))


def _finalize(successes: int, trials: int, cap_reached: int = 0) -> McEstimate:
    p = successes / trials
    se = math.sqrt(p * (1 - p) / trials)
    lo = max(0.0, p - 1.96 * se)
    hi = min(1.0, p + 1.96 * se)
    return McEstimate(
        p_hat=p,
        trials=trials,
        successes=successes,
        stderr=se,
        ci95=(lo, hi),
        cap_reached_count=cap_reached,
    )


def estimate_event(req: McRequest, workers: int = 1) -> McEstimate:
    """Frequency estimate of a t=0 event over req.trials sampled initials.

    The result depends only on (master_seed, trials, request): batches are a
    fixed size and each batch is a pure function of its trial range.
    """
    req.validate()
    if req.event is EventKind.CONSENSUS:
        raise ValueError("consensus is a trajectory event; use estimate_consensus")

    def one_batch(start: int, count: int) -> int:
        X = _uniform_batch(req.n, req.d, start, count, req.master_seed)
        return int(_indicator_batch(X, float(req.eps), req.event).sum())

    successes = sum(_map_batches(one_batch, req.trials, workers))
    return _finalize(successes, req.trials)


def estimate_consensus(req: McRequest, workers: int = 1) -> McEstimate:
    """Estimate the consensus probability by running the dynamics per trial.

    Trials that hit the step cap are counted in cap_reached_count and are
    not successes; they are surfaced so cap-induced bias stays measurable.
    """
    req.validate()
    if req.event is not EventKind.CONSENSUS:
        raise ValueError(f"estimate_consensus needs event=consensus, got {req.event.value}")
    cap = req.resolved_cap()

    def one_batch(start: int, count: int) -> tuple[int, int]:
        X = _uniform_batch(req.n, req.d, start, count, req.master_seed)
        codes = _trajectory_batch(X, float(req.eps), cap, req.tol)
        return int((codes == _CODE_CONSENSUS).sum()), int((codes == _CODE_CAP).sum())

    parts = _map_batches(one_batch, req.trials, workers)
    successes = sum(p[0] for p in parts)
    capped = sum(p[1] for p in parts)
    return _finalize(successes, req.trials, capped)


def event_indicators(req: McRequest) -> np.ndarray:
    """Per-trial boolean indicators for req.event, in trial order.

    Same sampling and edge decisions as the estimators; mainly for paired
    per-trial comparisons between events at matching seeds.
    """
    req.validate()
    out = np.empty(req.trials, dtype=bool)
    for start, count in _batch_ranges(req.trials):
        X = _uniform_batch(req.n, req.d, start, count, req.master_seed)
        if req.event is EventKind.CONSENSUS:
            codes = _trajectory_batch(X, float(req.eps), req.resolved_cap(), req.tol)
            out[start : start + count] = codes == _CODE_CONSENSUS
        else:
            out[start : start + count] = _indicator_batch(X, float(req.eps), req.event)
    return out

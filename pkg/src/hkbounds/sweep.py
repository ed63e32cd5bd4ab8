"""Parameter sweeps that regenerate the bound-vs-simulation figure data.

A sweep evaluates, for every (n, eps) cell of a grid, the requested Monte
Carlo events and closed-form bounds, and emits one fully attributed row per
value: Monte Carlo rows carry trials, seed, and standard error; bound rows
carry the branch label when the formula is piecewise. Row order is fixed by
the spec (n order, then eps order, events before bounds), output is
deterministic given the spec, and repeated runs produce byte-identical
files.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from typing import Optional

from .bounds import BoundName, evaluate_bound
from .montecarlo import EventKind, McRequest, estimate_consensus, estimate_event

logger = logging.getLogger("hkbounds")

CSV_COLUMNS = ("kind", "name", "n", "d", "eps", "value", "stderr", "trials", "seed", "branch")

# bounds usable only in one dimension, and the exact formula's n range
_ONE_D_BOUNDS = {BoundName.CONSENSUS_EXACT_1D, BoundName.EPS_TRIVIAL_1D, BoundName.HALF_EPS_BALL_1D}
_EXACT_NS = (2, 3, 4)


@dataclass(frozen=True)
class SweepSpec:
    n_list: tuple[int, ...]
    d: int
    eps_grid: tuple[float, ...]
    trials: int
    master_seed: int
    events: tuple[EventKind, ...] = ()
    bounds: tuple[BoundName, ...] = ()
    cap: Optional[int] = None
    tol: float = 1e-12
    output_path: Optional[str] = None
    format: str = "csv"


@dataclass(frozen=True)
class Row:
    kind: str  # "mc" or "bound"
    name: str
    n: int
    d: int
    eps: float
    value: float
    stderr: Optional[float] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    branch: Optional[str] = None
    cap_reached: int = 0  # not a CSV column; drives the cap-exhaustion exit


def validate_spec(spec: SweepSpec) -> None:
    """Reject a spec before any sampling happens, naming the offending cell."""
    if not spec.n_list:
        raise ValueError("n_list must not be empty")
    if any(not isinstance(n, int) or n < 1 for n in spec.n_list):
        raise ValueError(f"n_list entries must be positive integers, got {spec.n_list!r}")
    if spec.d < 1:
        raise ValueError(f"d must be >= 1, got {spec.d!r}")
    if not spec.eps_grid:
        raise ValueError("eps_grid must not be empty")
    if any(not 0.0 < e < 1.0 for e in spec.eps_grid):
        raise ValueError(f"eps_grid values must lie in (0,1), got {spec.eps_grid!r}")
    if any(b >= a for a, b in zip(spec.eps_grid[1:], spec.eps_grid)):
        raise ValueError("eps_grid must be strictly increasing")
    if spec.trials < 1:
        raise ValueError(f"trials must be >= 1, got {spec.trials!r}")
    if not spec.events and not spec.bounds:
        raise ValueError("nothing to do: no events and no bounds requested")
    if spec.format not in ("csv", "jsonl"):
        raise ValueError(f"format must be csv or jsonl, got {spec.format!r}")
    for n in spec.n_list:
        for event in spec.events:
            # McRequest carries the per-event domain rules; eps choice is immaterial
            probe = McRequest(
                n=n, d=spec.d, eps=spec.eps_grid[0], trials=spec.trials,
                master_seed=spec.master_seed, event=event, cap=spec.cap, tol=spec.tol,
            )
            try:
                probe.validate()
            except ValueError as exc:
                raise ValueError(f"cell (n={n}, d={spec.d}, event={event.value}): {exc}") from exc
        for bound in spec.bounds:
            if bound in _ONE_D_BOUNDS and spec.d != 1:
                raise ValueError(
                    f"cell (n={n}, d={spec.d}, bound={bound.value}): one-dimensional formula"
                )
            if bound is BoundName.CONSENSUS_EXACT_1D and n not in _EXACT_NS:
                raise ValueError(
                    f"cell (n={n}, d={spec.d}, bound={bound.value}): exact formula exists "
                    f"only for n in {{2,3,4}}"
                )


def run_figure_sweep(spec: SweepSpec, workers: int = 1) -> list[Row]:
    """Evaluate every cell of the sweep; rows come back in spec order.

    All Monte Carlo cells share spec.master_seed, so different events in the
    same cell see the same sampled initial configurations and per-trial event
    nesting carries over to the counts.
    """
    validate_spec(spec)
    rows: list[Row] = []
    for n in spec.n_list:
        for eps in spec.eps_grid:
            for event in spec.events:
                req = McRequest(
                    n=n, d=spec.d, eps=eps, trials=spec.trials,
                    master_seed=spec.master_seed, event=event, cap=spec.cap, tol=spec.tol,
                )
                if event is EventKind.CONSENSUS:
                    est = estimate_consensus(req, workers=workers)
                else:
                    est = estimate_event(req, workers=workers)
                logger.info(
                    "cell n=%d d=%d eps=%g event=%s p_hat=%.6f stderr=%.2e cap_reached=%d",
                    n, spec.d, eps, event.value, est.p_hat, est.stderr, est.cap_reached_count,
                )
                rows.append(Row(
                    kind="mc", name=event.value, n=n, d=spec.d, eps=eps,
                    value=est.p_hat, stderr=est.stderr, trials=spec.trials,
                    seed=spec.master_seed, cap_reached=est.cap_reached_count,
                ))
            for bound in spec.bounds:
                bv = evaluate_bound(bound, n, spec.d, eps)
                logger.info(
                    "cell n=%d d=%d eps=%g bound=%s value=%.6f",
                    n, spec.d, eps, bound.value, bv.value,
                )
                rows.append(Row(
                    kind="bound", name=bound.value, n=n, d=spec.d, eps=eps,
                    value=bv.value, branch=bv.branch,
                ))
    return rows


def _sig17(x: float) -> str:
    return format(float(x), ".17g")


def _row_cells(row: Row) -> list[str]:
    return [
        row.kind,
        row.name,
        str(row.n),
        str(row.d),
        _sig17(row.eps),
        _sig17(row.value),
        _sig17(row.stderr) if row.stderr is not None else "",
        str(row.trials) if row.trials is not None else "",
        str(row.seed) if row.seed is not None else "",
        row.branch or "",
    ]


def _write_atomically(path: str, text: str) -> None:
    # Assemble first, then replace: an interrupted write never leaves a
    # truncated file at the destination.
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(rows: list[Row], path: str) -> None:
    """Write the sweep table as CSV: fixed header, 17-significant-digit
    numbers for round-trip fidelity, single-newline line endings."""
    if not rows:
        raise ValueError("refusing to write an empty table")
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(_row_cells(row))
    _write_atomically(path, buf.getvalue())


def emit_jsonl(rows: list[Row], path: str) -> None:
    if not rows:
        raise ValueError("refusing to write an empty table")
    lines = []
    for row in rows:
        obj = {
            "kind": row.kind, "name": row.name, "n": row.n, "d": row.d,
            "eps": row.eps, "value": row.value, "stderr": row.stderr,
            "trials": row.trials, "seed": row.seed, "branch": row.branch,
        }
        lines.append(json.dumps(obj))
    _write_atomically(path, "\n".join(lines) + "\n")

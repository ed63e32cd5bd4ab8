"""Agent opinion configurations and the synchronous bounded-confidence update.

A configuration holds n opinion vectors in R^d together with the confidence
bound epsilon. Two agents influence each other when their Euclidean distance
is at most epsilon (inclusive: a pair at distance exactly epsilon counts).
One update step replaces every opinion by the arithmetic mean of its
neighbors' opinions, all agents simultaneously.

Arithmetic comes in two modes. FLOAT64 is the throughput mode used by the
Monte Carlo estimators. EXACT_RATIONAL keeps every coordinate a Fraction, so
averaging is closed and structural checks that rest on strict inequalities
can be made tolerance-free.

Agent indices are 1-based on the public surface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence, Union

Scalar = Union[float, Fraction]


class ScalarMode(Enum):
    FLOAT64 = "float"
    EXACT_RATIONAL = "rational"


def _coerce(value, mode: ScalarMode) -> Scalar:
    if mode is ScalarMode.FLOAT64:
        return float(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value)


@dataclass(frozen=True)
class Configuration:
    """Immutable snapshot of all n opinions plus the confidence bound."""

    opinions: tuple[tuple[Scalar, ...], ...]
    epsilon: Scalar
    scalar_mode: ScalarMode = ScalarMode.FLOAT64

    def __post_init__(self):
        mode = self.scalar_mode
        if not isinstance(mode, ScalarMode):
            raise ValueError(f"scalar_mode must be a ScalarMode, got {mode!r}")
        rows = tuple(tuple(_coerce(v, mode) for v in row) for row in self.opinions)
        if len(rows) < 1:
            raise ValueError("need at least one agent")
        d = len(rows[0])
        if d < 1:
            raise ValueError("opinions must have at least one coordinate")
        if any(len(row) != d for row in rows):
            raise ValueError("all opinions must have the same dimension")
        eps = _coerce(self.epsilon, mode)
        if not eps > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        object.__setattr__(self, "opinions", rows)
        object.__setattr__(self, "epsilon", eps)

    @property
    def n(self) -> int:
        return len(self.opinions)

    @property
    def d(self) -> int:
        return len(self.opinions[0])

    def opinion(self, i: int) -> tuple[Scalar, ...]:
        """Opinion vector of agent i (1-based)."""
        _check_index(self, i)
        return self.opinions[i - 1]

    def as_exact(self) -> "Configuration":
        """Exact-rational copy. Float coordinates convert exactly (every
        float is a dyadic rational), so no information is lost."""
        if self.scalar_mode is ScalarMode.EXACT_RATIONAL:
            return self
        return Configuration(self.opinions, self.epsilon, ScalarMode.EXACT_RATIONAL)

    def as_float(self) -> "Configuration":
        if self.scalar_mode is ScalarMode.FLOAT64:
            return self
        return Configuration(
            tuple(tuple(float(v) for v in row) for row in self.opinions),
            float(self.epsilon),
            ScalarMode.FLOAT64,
        )

    def as_json(self) -> dict:
        """JSON object {"epsilon": ..., "dim": d, "opinions": [[...], ...]}.
        Exact-rational values serialize as "p/q" strings."""
        if self.scalar_mode is ScalarMode.EXACT_RATIONAL:
            enc = _fraction_str
        else:
            enc = float
        return {
            "epsilon": enc(self.epsilon),
            "dim": self.d,
            "opinions": [[enc(v) for v in row] for row in self.opinions],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Configuration":
        try:
            eps = obj["epsilon"]
            dim = obj["dim"]
            rows = obj["opinions"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed configuration object: {exc}") from exc
        values = [eps] + [v for row in rows for v in row]
        if any(isinstance(v, str) for v in values):
            if not all(isinstance(v, str) for v in values):
                raise ValueError("mixed rational and float values in configuration")
            mode = ScalarMode.EXACT_RATIONAL
        else:
            mode = ScalarMode.FLOAT64
        config = cls(tuple(tuple(row) for row in rows), eps, mode)
        if config.d != dim:
            raise ValueError(f"declared dim {dim} but opinions have {config.d} coordinates")
        return config

    def dumps(self) -> str:
        return json.dumps(self.as_json())

    @classmethod
    def loads(cls, text: str) -> "Configuration":
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class NeighborSet:
    """Agents within the confidence bound of one agent (itself included)."""

    agent: int
    members: tuple[int, ...]


def _fraction_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def _check_index(config: Configuration, i: int) -> None:
    if not isinstance(i, int) or isinstance(i, bool) or not 1 <= i <= config.n:
        raise ValueError(f"agent index {i!r} out of range 1..{config.n}")


def squared_distance(a: Sequence[Scalar], b: Sequence[Scalar]) -> Scalar:
    """Squared Euclidean distance; exact when the inputs are Fractions."""
    return sum((x - y) * (x - y) for x, y in zip(a, b))


def neighbors(config: Configuration, i: int) -> NeighborSet:
    """All agents j with ||x_j - x_i|| <= epsilon, inclusive at the bound.

    Comparison is done on squared distances, which avoids square-root
    rounding in float mode and is exact in rational mode.
    """
    _check_index(config, i)
    eps_sq = config.epsilon * config.epsilon
    xi = config.opinions[i - 1]
    members = tuple(
        j + 1
        for j, xj in enumerate(config.opinions)
        if squared_distance(xi, xj) <= eps_sq
    )
    return NeighborSet(agent=i, members=members)


def update_step(config: Configuration) -> Configuration:
    """One synchronous step: every agent moves to the mean of its neighbors.

    The input is not mutated; epsilon and the arithmetic mode carry through.
    """
    eps_sq = config.epsilon * config.epsilon
    ops = config.opinions
    n, d = config.n, config.d
    new_rows = []
    for i in range(n):
        xi = ops[i]
        members = [j for j in range(n) if squared_distance(xi, ops[j]) <= eps_sq]
        k = len(members)
        row = []
        for c in range(d):
            values = [ops[j][c] for j in members]
            first = values[0]
            # the mean of k equal values is that value; taking it directly
            # keeps exact fixed points exact in float arithmetic too
            row.append(first if all(v == first for v in values) else sum(values) / k)
        new_rows.append(tuple(row))
    return Configuration(tuple(new_rows), config.epsilon, config.scalar_mode)


def max_squared_distance(config: Configuration) -> Scalar:
    """Largest squared pairwise distance; 0 for a single agent. Exact in
    rational mode, which is what inclusive threshold checks compare against."""
    ops = config.opinions
    zero = ops[0][0] - ops[0][0]
    best = zero
    for i in range(config.n):
        for j in range(i + 1, config.n):
            sq = squared_distance(ops[i], ops[j])
            if sq > best:
                best = sq
    return best


def diameter(config: Configuration) -> float:
    """Largest pairwise Euclidean distance, as a float."""
    return math.sqrt(max_squared_distance(config))


def pairwise_within(config: Configuration, bound: Scalar) -> bool:
    """True iff every pairwise distance is <= bound (inclusive), compared on
    squares in the configuration's own arithmetic."""
    b = _coerce(bound, config.scalar_mode)
    if b < 0:
        raise ValueError(f"bound must be nonnegative, got {bound!r}")
    return max_squared_distance(config) <= b * b


def equal_opinions(config: Configuration) -> bool:
    first = config.opinions[0]
    return all(row == first for row in config.opinions)

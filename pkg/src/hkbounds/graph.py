"""Profile graphs and the structural predicates evaluated on them.

The profile of a configuration is the undirected graph on agents 1..n with
an edge wherever two opinions are within epsilon of each other. Consensus
certificates for one-dimensional configurations are decided on order
statistics of the opinions:

* delta-trivial: every pair within delta.
* bridge condition (star): for n >= 4 with m = floor((n-4)/3) and
  k = n-m-1, the agents holding the (m+2)-th and k-th smallest opinions are
  adjacent, and the two outer spreads together fit inside epsilon:
  (x_(n) - x_(k)) + (x_(m+2) - x_(1)) <= epsilon.
* half-width bands (star-star): some i in 0..m splits the sorted opinions
  into three consecutive bands each of width at most epsilon/2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .model import Configuration, Scalar, _coerce, max_squared_distance


@dataclass(frozen=True)
class Profile:
    """Edge-set snapshot of which agents are within the confidence bound."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("profile needs at least one vertex")
        for i, j in self.edges:
            if not (1 <= i < j <= self.n):
                raise ValueError(f"bad edge ({i},{j}) for n={self.n}")

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def as_json(self) -> dict:
        return {"n": self.n, "edges": sorted([i, j] for i, j in self.edges)}

    @classmethod
    def from_json(cls, obj: dict) -> "Profile":
        return cls(obj["n"], frozenset((int(i), int(j)) for i, j in obj["edges"]))

    def dumps(self) -> str:
        return json.dumps(self.as_json())


def build_profile(config: Configuration) -> Profile:
    """Profile of a configuration: edge (i,j) iff ||x_i - x_j|| <= epsilon."""
    eps_sq = config.epsilon * config.epsilon
    ops = config.opinions
    edges = set()
    for i in range(config.n):
        for j in range(i + 1, config.n):
            delta = sum((a - b) * (a - b) for a, b in zip(ops[i], ops[j]))
            if delta <= eps_sq:
                edges.add((i + 1, j + 1))
    return Profile(config.n, frozenset(edges))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def connected_components(profile: Profile) -> tuple[tuple[int, ...], ...]:
    """Components as sorted 1-based vertex tuples, ordered by smallest member."""
    uf = _UnionFind(profile.n)
    for i, j in profile.edges:
        uf.union(i - 1, j - 1)
    groups: dict[int, list[int]] = {}
    for v in range(profile.n):
        groups.setdefault(uf.find(v), []).append(v + 1)
    return tuple(tuple(g) for g in sorted(groups.values()))


def is_connected(profile: Profile) -> bool:
    """True iff the profile has exactly one component (n=1 counts)."""
    return len(connected_components(profile)) == 1


def is_delta_trivial(config: Configuration, delta) -> bool:
    """True iff every pair of opinions is within delta (inclusive)."""
    d = _coerce(delta, config.scalar_mode)
    if d < 0:
        raise ValueError(f"delta must be nonnegative, got {delta!r}")
    return max_squared_distance(config) <= d * d


@dataclass(frozen=True)
class OrderStatistics:
    """Ranking of one-dimensional opinions.

    permutation[r-1] is the agent holding the r-th smallest opinion; ties
    break by ascending agent index (stable sort), so the ranking is a
    deterministic function of the configuration.
    """

    permutation: tuple[int, ...]
    values: tuple[Scalar, ...]


def order_statistics(config: Configuration) -> OrderStatistics:
    if config.d != 1:
        raise ValueError("order statistics are defined for d=1 only")
    ranked = sorted(range(config.n), key=lambda idx: config.opinions[idx][0])
    return OrderStatistics(
        permutation=tuple(idx + 1 for idx in ranked),
        values=tuple(config.opinions[idx][0] for idx in ranked),
    )


def _star_indices(n: int) -> tuple[int, int]:
    m = (n - 4) // 3
    k = n - m - 1
    return m, k


def _require_star_domain(config: Configuration) -> None:
    if config.d != 1:
        raise ValueError("certificate conditions are defined for d=1 only")
    if config.n < 4:
        raise ValueError(f"certificate conditions need n >= 4, got n={config.n}")


def satisfies_star(config: Configuration) -> bool:
    """Bridge condition on the sorted opinions (see module docstring).

    Both comparisons are inclusive and evaluated in the configuration's own
    arithmetic, so rational configurations are decided exactly.
    """
    _require_star_domain(config)
    n = config.n
    m, k = _star_indices(n)
    v = order_statistics(config).values
    eps = config.epsilon
    inner_edge = v[k - 1] - v[m + 1] <= eps
    outer_sum = (v[n - 1] - v[k - 1]) + (v[m + 1] - v[0]) <= eps
    return inner_edge and outer_sum


def satisfies_star_star(config: Configuration) -> tuple[bool, Optional[int]]:
    """Half-width band condition; returns (holds, witness).

    The witness is the smallest i in 0..m for which the three bands
    [x_(1), x_(i+2)], [x_(i+2), x_(n-i-1)], [x_(n-i-1), x_(n)] all have
    width at most epsilon/2; None when no i works.
    """
    _require_star_domain(config)
    n = config.n
    m, _ = _star_indices(n)
    v = order_statistics(config).values
    half = config.epsilon / 2
    for i in range(m + 1):
        top = v[n - 1] - v[n - i - 2]
        middle = v[n - i - 2] - v[i + 1]
        bottom = v[i + 1] - v[0]
        if top <= half and middle <= half and bottom <= half:
            return True, i
    return False, None

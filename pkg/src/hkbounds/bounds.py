"""Closed-form consensus probabilities and bounds for uniform initial opinions.

All formulas assume the n opinions start i.i.d. uniform on the unit cube
[0,1]^d (d=1 for everything except the cube-ball bound) with confidence
bound epsilon in (0,1):

* cube_ball_lower_bound: probability that every opinion lands in the ball of
  radius epsilon/2 around the first one, lower-bounded by restricting the
  center to the inner cube. Valid in any dimension; a lower bound on the
  consensus probability.
* consensus_exact_1d: the exact consensus probability for n = 2, 3, 4,
  piecewise polynomial in epsilon.
* eps_trivial_prob_1d: probability that all n opinions span at most epsilon
  (the one-step-collapse event).
* half_eps_ball_prob_1d: probability that all opinions lie within epsilon/2
  of the first agent's opinion.

The n=3 and n=4 consensus polynomials are written out branch by branch with
no algebraic simplification, so a defect in any coefficient would surface as
a Monte Carlo mismatch instead of being absorbed silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional


class BoundName(Enum):
    CUBE_BALL_LOWER = "cube_ball_lower"
    CONSENSUS_EXACT_1D = "consensus_exact_1d"
    EPS_TRIVIAL_1D = "eps_trivial_1d"
    HALF_EPS_BALL_1D = "half_eps_ball_1d"


@dataclass(frozen=True)
class BoundValue:
    name: BoundName
    n: int
    d: int
    eps: float
    value: float
    branch: Optional[str] = None


@dataclass(frozen=True)
class PiecewiseBranch:
    label: str
    lower: float  # inclusive unless it is the overall domain edge 0
    upper: float  # exclusive
    evaluate: Callable[[float], float]


def _check_n_d(n: int, d: int = 1) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in the open interval (0,1), got {eps!r}")
    return eps


def unit_ball_volume(d: int) -> float:
    """Volume pi^(d/2) / Gamma(d/2 + 1) of the d-dimensional unit ball.

    Gamma at the half-integer argument is built by the recurrence
    Gamma(x+1) = x*Gamma(x) from Gamma(1) = 1 and Gamma(1/2) = sqrt(pi).
    """
    _check_n_d(1, d)
    if d % 2 == 0:
        gamma = 1.0  # Gamma(1)
        x = 1.0
    else:
        gamma = math.sqrt(math.pi)  # Gamma(1/2)
        x = 0.5
    target = d / 2 + 1
    while x < target:
        gamma *= x
        x += 1
    return math.pi ** (d / 2) / gamma


def cube_ball_lower_bound(n: int, d: int, eps: float) -> float:
    """((eps/2)^d * V_d)^(n-1) * (1-eps)^d with V_d the unit-ball volume."""
    _check_n_d(n, d)
    eps = _check_eps(eps)
    return ((eps / 2) ** d * unit_ball_volume(d)) ** (n - 1) * (1 - eps) ** d


def _n3_low(e: float) -> float:
    return 6 * e**2 * (1 - e)


def _n3_high(e: float) -> float:
    return 1 - 2 * (1 - e) ** 3


def _n4_low(e: float) -> float:
    return 24 * e**3 * (1 - 3 * e) + 36 * e**4


def _n4_mid(e: float) -> float:
    return (
        19 * e**4
        - 4 * e**3 * (1 - 2 * e)
        + (1 - 2 * e) ** 4
        - 6 * e**2 * (3 * e - 1) ** 2
        - 4 * e * (1 - 2 * e) ** 3
        + 12 * e**3 * (1 - 2 * e)
        + 12 * e**2 * (1 - 2 * e) ** 2
    )


def _n4_high(e: float) -> float:
    return (
        e**4
        + 4 * e**3 * (1 - e)
        + 6 * e**2 * (1 - e) ** 2
        + 4 * e * (1 - e) ** 3
        - 2 * (1 - e) ** 4
    )


CONSENSUS_1D_BRANCHES: dict[int, tuple[PiecewiseBranch, ...]] = {
    2: (PiecewiseBranch("eps in (0,1)", 0.0, 1.0, lambda e: e * (2 - e)),),
    3: (
        PiecewiseBranch("eps in (0,1/2)", 0.0, 0.5, _n3_low),
        PiecewiseBranch("eps in [1/2,1)", 0.5, 1.0, _n3_high),
    ),
    4: (
        PiecewiseBranch("eps in (0,1/3)", 0.0, 1 / 3, _n4_low),
        PiecewiseBranch("eps in [1/3,1/2)", 1 / 3, 0.5, _n4_mid),
        PiecewiseBranch("eps in [1/2,1)", 0.5, 1.0, _n4_high),
    ),
}


def consensus_exact_1d(n: int, eps: float) -> BoundValue:
    """Exact consensus probability in one dimension; closed forms exist only
    for n = 2, 3, 4. The piecewise branches own their breakpoints on the
    left-closed side; the formulas are continuous across them anyway."""
    eps = _check_eps(eps)
    branches = CONSENSUS_1D_BRANCHES.get(n)
    if branches is None:
        raise ValueError(f"no exact consensus formula for n={n!r}; only n in {{2,3,4}}")
    for branch in branches:
        if eps < branch.upper:
            label = branch.label if len(branches) > 1 else None
            return BoundValue(
                name=BoundName.CONSENSUS_EXACT_1D,
                n=n,
                d=1,
                eps=eps,
                value=branch.evaluate(eps),
                branch=label,
            )
    raise AssertionError("unreachable: eps validated to lie in (0,1)")


def eps_trivial_prob_1d(n: int, eps: float) -> float:
    """eps^(n-1) * (n - (n-1)*eps): probability the n opinions span <= eps."""
    _check_n_d(n)
    eps = _check_eps(eps)
    return eps ** (n - 1) * (n - (n - 1) * eps)


def half_eps_ball_prob_1d(n: int, eps: float) -> float:
    """(2/n)*eps^n*(1 - 2^-n) + eps^(n-1)*(1-eps): probability all opinions
    lie within eps/2 of the first one."""
    _check_n_d(n)
    eps = _check_eps(eps)
    return (2 / n) * eps**n * (1 - 0.5**n) + eps ** (n - 1) * (1 - eps)


def evaluate_bound(name: BoundName, n: int, d: int, eps: float) -> BoundValue:
    """Uniform entry point used by the CLI table and sweep emitters."""
    name = BoundName(name)
    if name is BoundName.CUBE_BALL_LOWER:
        return BoundValue(name, n, d, float(eps), cube_ball_lower_bound(n, d, eps))
    if d != 1:
        raise ValueError(f"{name.value} is a one-dimensional formula, got d={d}")
    if name is BoundName.CONSENSUS_EXACT_1D:
        return consensus_exact_1d(n, eps)
    if name is BoundName.EPS_TRIVIAL_1D:
        return BoundValue(name, n, 1, float(eps), eps_trivial_prob_1d(n, eps))
    if name is BoundName.HALF_EPS_BALL_1D:
        return BoundValue(name, n, 1, float(eps), half_eps_ball_prob_1d(n, eps))
    raise AssertionError(f"unhandled bound {name!r}")

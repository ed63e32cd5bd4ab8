import random
from fractions import Fraction

from hkbounds import Configuration, ScalarMode


def rational_config(rng: random.Random, n: int, d: int, eps=Fraction(1),
                    denom: int = 12, span: int = 3) -> Configuration:
    """Random exact-rational configuration on [0, span]^d with coordinates on
    a denom-grid, so exact-epsilon ties actually occur."""
    ops = tuple(
        tuple(Fraction(rng.randint(0, denom * span), denom) for _ in range(d))
        for _ in range(n)
    )
    return Configuration(ops, eps, ScalarMode.EXACT_RATIONAL)


def dyadic_config(rng: random.Random, n: int, d: int, eps=Fraction(1),
                  power: int = 7, span: int = 3) -> Configuration:
    """Rational configuration whose coordinates are exactly float-representable."""
    q = 1 << power
    ops = tuple(
        tuple(Fraction(rng.randint(0, q * span), q) for _ in range(d))
        for _ in range(n)
    )
    return Configuration(ops, eps, ScalarMode.EXACT_RATIONAL)


def float_config(rng: random.Random, n: int, d: int, eps: float = 0.3,
                 span: float = 1.0) -> Configuration:
    ops = tuple(tuple(rng.random() * span for _ in range(d)) for _ in range(n))
    return Configuration(ops, eps, ScalarMode.FLOAT64)

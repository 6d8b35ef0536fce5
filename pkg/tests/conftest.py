import random
from fractions import Fraction

import pytest

from cakecut.valuation import Valuation


def three_pocket() -> Valuation:
    """Uniform value on [0, 0.1] u [0.4, 0.6] u [0.9, 1], density 5/2."""
    d = Fraction(5, 2)
    return Valuation.from_blocks(
        [(0, Fraction(1, 10), d),
         (Fraction(2, 5), Fraction(3, 5), d),
         (Fraction(9, 10), 1, d)]
    )


def random_valuation(rng: random.Random, max_cells: int = 5,
                     grid: int = 40) -> Valuation:
    """A random normalized piecewise-constant valuation.

    Breakpoints are multiples of 1/grid and cell masses are small random
    integers, so densities stay exact rationals of modest size.
    """
    k = rng.randint(1, max_cells)
    points = sorted(rng.sample(range(1, grid), k))
    bounds = [Fraction(0)] + [Fraction(p, grid) for p in points] + [Fraction(1)]
    masses = [rng.randint(0, 5) for _ in range(len(bounds) - 1)]
    if sum(masses) == 0:
        masses[rng.randrange(len(masses))] = 1
    total = sum(masses)
    segs = []
    for (a, b), m in zip(zip(bounds, bounds[1:]), masses):
        segs.append((a, b, Fraction(m, total) / (b - a)))
    return Valuation.from_segments(segs)


@pytest.fixture
def pocket_type() -> Valuation:
    return three_pocket()


@pytest.fixture
def uniform() -> Valuation:
    return Valuation.uniform()

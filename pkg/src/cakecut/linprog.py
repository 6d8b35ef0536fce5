"""A small exact simplex solver over rationals.

Solves  max c.x  subject to  A x = b,  x >= 0  with ``Fraction``
arithmetic throughout.  Problems in this package are tiny (tens of
variables), so a dense two-phase tableau with Bland's pivoting rule is
plenty: Bland's rule guarantees termination and exact arithmetic makes
degeneracy harmless.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LpResult:
    status: str
    x: list[Fraction] | None
    value: Fraction | None


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int):
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    for r, line in enumerate(tableau):
        if r != row and line[col] != ZERO:
            factor = line[col]
            tableau[r] = [v - factor * w for v, w in zip(line, tableau[row])]
    basis[row] = col


def _solve_phase(tableau: list[list[Fraction]], basis: list[int],
                 ncols: int) -> str:
    """Run simplex iterations on a tableau whose last row is the objective
    (stored as reduced costs for maximization)."""
    obj = len(tableau) - 1
    while True:
        col = next(
            (j for j in range(ncols) if tableau[obj][j] > ZERO), None
        )
        if col is None:
            return OPTIMAL
        ratios = [
            (tableau[r][-1] / tableau[r][col], basis[r], r)
            for r in range(obj)
            if tableau[r][col] > ZERO
        ]
        if not ratios:
            return UNBOUNDED
        # Bland: smallest ratio, ties by smallest basis index.
        _, _, row = min(ratios)
        _pivot(tableau, basis, row, col)


def maximize(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]],
             b: Sequence[Fraction]) -> LpResult:
    """Maximize ``c.x`` subject to ``A x = b`` and ``x >= 0``."""
    m, n = len(A), len(c)
    rows = [[Fraction(v) for v in line] for line in A]
    rhs = [Fraction(v) for v in b]
    for r in range(m):
        if rhs[r] < ZERO:
            rows[r] = [-v for v in rows[r]]
            rhs[r] = -rhs[r]

    # Phase 1: minimize the sum of artificial variables.
    ncols = n + m
    tableau = [rows[r] + [ONE if j == r else ZERO for j in range(m)] + [rhs[r]]
               for r in range(m)]
    basis = [n + r for r in range(m)]
    obj = [ZERO] * (ncols + 1)
    for r in range(m):  # reduced costs of max(-sum artificials)
        obj = [o + v for o, v in zip(obj, tableau[r])]
    obj = [o if j < n else ZERO for j, o in enumerate(obj[:-1])] + [obj[-1]]
    tableau.append(obj)
    _solve_phase(tableau, basis, n)
    if tableau[-1][-1] != ZERO:
        return LpResult(INFEASIBLE, None, None)

    # Drive any artificial variables out of the basis (degenerate rows).
    for r in range(m):
        if basis[r] >= n:
            col = next((j for j in range(n) if tableau[r][j] != ZERO), None)
            if col is not None:
                _pivot(tableau, basis, r, col)

    # Phase 2 on the original objective.
    tableau.pop()
    keep = list(range(n)) + [ncols]
    tableau = [[line[j] for j in keep] for line in tableau]
    drop = [r for r in range(m) if basis[r] >= n]
    for r in reversed(drop):  # all-zero redundant rows
        tableau.pop(r)
        basis.pop(r)
    obj = [Fraction(v) for v in c] + [ZERO]
    for r, line in enumerate(tableau):
        if obj[basis[r]] != ZERO:
            factor = obj[basis[r]]
            obj = [o - factor * w for o, w in zip(obj, line)]
    tableau.append(obj)
    status = _solve_phase(tableau, basis, n)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None)
    x = [ZERO] * n
    for r, j in enumerate(basis):
        x[j] = tableau[r][-1]
    value = sum(ci * xi for ci, xi in zip(c, x))
    return LpResult(OPTIMAL, x, value)


def feasible(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction],
             n: int) -> bool:
    """Does ``A x = b, x >= 0`` admit a solution?"""
    return maximize([ZERO] * n, A, b).status == OPTIMAL

"""Maximize the product of utilities over piecewise-constant profiles.

The cake is refined into the cells induced by all agents' segment
breakpoints; within a cell every agent's density is constant, so an
allocation is described by a matrix of cell fractions.  Maximizing the
product of utilities over such fractional allocations is a convex
program; this module solves it with damped proportional-response
dynamics for the equivalent equal-budget linear market and certifies
the result with the bang-per-buck optimality condition:

    prices p_c exist with  f[i, c] > tol  =>  v[i, c] / u_i = max_j v[j, c] / u_j

up to relative tolerance ``tol``.  A certified solution is (within
tolerance) envy-free, proportional and Pareto-optimal.

Floating point is confined to this solver; cell values are exact and
:func:`materialize` converts fractions back into exact interval pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from cakecut.valuation import ONE, ZERO, Allocation, Piece, Valuation


class NonConvergence(RuntimeError):
    """The bang-per-buck certificate still fails after the iteration cap."""

    def __init__(self, residual: float, iterations: int):
        self.residual, self.iterations = residual, iterations
        super().__init__(
            f"certificate residual {residual:.3e} after {iterations} iterations"
        )


class DegenerateProfile(ValueError):
    """An agent reported the zero measure (impossible for valid valuations)."""


@dataclass(frozen=True)
class CellProfile:
    """A fractional allocation over the common refinement of a profile."""

    cells: tuple[tuple[Fraction, Fraction], ...]
    values: tuple[tuple[Fraction, ...], ...]  # values[i][c], rows sum to 1
    fractions: tuple[tuple[float, ...], ...]  # fractions[i][c], cols sum to 1
    utilities: tuple[float, ...]
    residual: float
    iterations: int

    @property
    def n_agents(self) -> int:
        return len(self.values)


def refine(profile: Sequence[Valuation]) -> tuple[
    tuple[tuple[Fraction, Fraction], ...], tuple[tuple[Fraction, ...], ...]
]:
    """Common refinement cells and exact per-agent cell values."""
    points: set[Fraction] = {ZERO, ONE}
    for v in profile:
        if v.domain != (ZERO, ONE):
            raise ValueError("profiles must consist of full-cake valuations")
        points.update(v.breakpoints)
    grid = sorted(points)
    cells = tuple(zip(grid, grid[1:]))
    values = tuple(
        tuple(v.eval_interval(a, b) for a, b in cells) for v in profile
    )
    for i, row in enumerate(values):
        if sum(row, ZERO) == ZERO:
            raise DegenerateProfile(f"agent {i} reported the zero measure")
    return cells, values


def _residual(V: np.ndarray, x: np.ndarray, u: np.ndarray, tol: float) -> float:
    """Worst relative bang-per-buck gap over allocated (agent, cell) pairs."""
    ratios = V / u[:, None]
    prices = ratios.max(axis=0)
    active = prices > 0
    if not active.any():
        return 0.0
    gaps = (prices[None, active] - ratios[:, active]) / prices[None, active]
    gaps = np.where(x[:, active] > tol, gaps, 0.0)
    return float(gaps.max(initial=0.0))


def solve_cells(V: np.ndarray, tol: float = 1e-9, max_iter: int = 10**6,
                damping: float = 0.5) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Proportional response on a raw value matrix (rows: agents).

    Returns ``(fractions, utilities, residual, iterations)``.  Row scale
    does not matter (the optimum is invariant to positive rescaling of
    any agent's values); callers normally pass rows summing to 1.

    Spending on a strictly dominated cell decays only like 1/t, which
    would never reach the certificate tolerance when the optimum sits on
    the boundary.  Bids on pairs that are clearly dominated once the
    dynamics have settled are therefore zeroed out ("pruned"); the final
    bang-per-buck check makes this safe, since prices take the maximum
    ratio over *all* agents and a wrongly pruned pair shows up as an
    uncertifiable gap.
    """
    n, m = V.shape
    active = V.sum(axis=0) > 0
    Va = V[:, active]
    row_totals = Va.sum(axis=1)
    if np.any(row_totals <= 0):
        raise DegenerateProfile("an agent values no cell")
    b = Va / row_totals[:, None]  # initial bids, budget 1 per agent
    inner = max(tol * 1e-3, 5e-14)
    residual = np.inf
    it = 0
    x = np.zeros_like(Va)
    u = np.zeros(n)
    for it in range(1, max_iter + 1):
        p = b.sum(axis=0)
        x = b / p
        u = (x * Va).sum(axis=1)
        if it % 8 == 0 or it == 1:
            residual = _residual(Va, x, u, tol)
            if residual <= inner:
                break
        nb = Va * x / u[:, None]
        b = damping * nb + (1.0 - damping) * b
        if it % 512 == 0 and residual < 1e-4:
            ratios = Va / u[:, None]
            prices = ratios.max(axis=0)
            with np.errstate(invalid="ignore", divide="ignore"):
                gaps = np.where(prices > 0, (prices - ratios) / prices, 0.0)
            doomed = (gaps > max(residual * 0.9, 100.0 * inner)) & (x < 0.01)
            if doomed.any():
                b = np.where(doomed, 0.0, b)
                b /= b.sum(axis=1)[:, None]  # restore unit budgets
    residual = _residual(Va, x, u, tol)
    if residual > tol:
        raise NonConvergence(residual, it)
    fractions = np.zeros((n, m))
    fractions[:, active] = x
    if (~active).any():
        fractions[0, ~active] = 1.0  # worthless cells: deterministic owner
    utilities = (fractions * V).sum(axis=1)
    return fractions, utilities, residual, it


def solve_nash(profile: Sequence[Valuation], tol: float = 1e-9,
               max_iter: int = 10**6, damping: float = 0.5) -> CellProfile:
    """Nash-welfare optimum of a profile, certified by bang-per-buck."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    cells, values = refine(profile)
    V = np.array([[float(v) for v in row] for row in values])
    fractions, utilities, residual, it = solve_cells(
        V, tol=tol, max_iter=max_iter, damping=damping
    )
    return CellProfile(
        cells=cells,
        values=values,
        fractions=tuple(tuple(map(float, row)) for row in fractions),
        utilities=tuple(map(float, utilities)),
        residual=residual,
        iterations=it,
    )


def materialize(cp: CellProfile) -> Allocation:
    """Concrete intervals for a fractional cell allocation.

    Each cell is split left to right in agent-index order, proportionally
    to the fractions.  Densities are constant within a cell, so agents'
    utilities are preserved exactly relative to the (exact) fractions.
    """
    n = cp.n_agents
    intervals: list[list[tuple[Fraction, Fraction]]] = [[] for _ in range(n)]
    for c, (a, b) in enumerate(cp.cells):
        width = b - a
        pos = a
        for i in range(n):
            if i == n - 1:
                end = b
            else:
                end = pos + width * Fraction(cp.fractions[i][c])
                end = min(max(end, pos), b)
            if end > pos:
                intervals[i].append((pos, end))
            pos = end
    return Allocation(tuple(Piece(tuple(iv)) for iv in intervals))


def nash_product(utilities: Sequence[float]) -> float:
    out = 1.0
    for u in utilities:
        out *= u
    return out

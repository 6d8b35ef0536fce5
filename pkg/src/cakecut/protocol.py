"""Query/answer plumbing for the two-primitive interaction model.

Mechanisms talk to agents only through cut and eval queries.  An agent's
behaviour is a :class:`Strategy`, which answers every query truthfully
for some *reported* valuation; playing one's true valuation is honest
play, playing any other valuation is a manipulation.  Because answers
always come from a single concrete valuation, they are dynamically
consistent by construction.

:func:`check_consistency` is the converse tool: given a recorded trace
of queries and answers (possibly from an external source), decide
whether any piecewise-constant valuation could have produced it.  It is
used to validate replayed traces and as a test oracle, not as a runtime
gate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from cakecut import linprog
from cakecut.valuation import ONE, ZERO, Piece, Valuation, frac

RationalLike = Union[Fraction, int, str]


@dataclass(frozen=True)
class CutQuery:
    """Ask an agent for the minimum y with value(x, y) == alpha."""

    agent: int
    x: Fraction
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", frac(self.x))
        object.__setattr__(self, "alpha", frac(self.alpha))


@dataclass(frozen=True)
class EvalQuery:
    """Ask an agent for its value of the interval [x, y]."""

    agent: int
    x: Fraction
    y: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", frac(self.x))
        object.__setattr__(self, "y", frac(self.y))


Query = Union[CutQuery, EvalQuery]


@dataclass(frozen=True)
class Strategy:
    """Truthful answers for ``reported``; a manipulation reports a type
    different from the agent's true one."""

    reported: Valuation

    def answer(self, query: Query) -> Fraction:
        if isinstance(query, CutQuery):
            return self.reported.cut(query.x, query.alpha)
        return self.reported.eval_interval(query.x, query.y)


class QueryTrace:
    """The recorded query/answer sequence of one mechanism run.

    Records enforce the structural rules of the interaction model:
    query endpoints must be 0, 1 or previously created cut points, cut
    answers must land in [x, 1] (and become cut points), eval answers
    must lie in [0, 1].
    """

    def __init__(self, cut_points: tuple[RationalLike, ...] = ()):
        """``cut_points`` seeds points created before this trace begins,
        for replaying a protocol from mid-run."""
        self.entries: list[tuple[Query, Fraction]] = []
        self.cut_points: set[Fraction] = {ZERO, ONE}
        self.cut_points.update(frac(p) for p in cut_points)

    def _check_endpoint(self, value: Fraction, query: Query):
        if value not in self.cut_points:
            raise ValueError(
                f"{query} uses endpoint {value}, which is neither 0, 1 "
                "nor a previously created cut point"
            )

    def record(self, query: Query, answer: RationalLike) -> Fraction:
        answer = frac(answer)
        if isinstance(query, CutQuery):
            self._check_endpoint(query.x, query)
            if not (query.x <= answer <= ONE):
                raise ValueError(
                    f"cut answer {answer} outside [{query.x}, 1]"
                )
            self.cut_points.add(answer)
        else:
            self._check_endpoint(query.x, query)
            self._check_endpoint(query.y, query)
            if not (ZERO <= answer <= ONE):
                raise ValueError(f"eval answer {answer} outside [0, 1]")
        self.entries.append((query, answer))
        return answer

    def for_agent(self, agent: int) -> list[tuple[Query, Fraction]]:
        return [(q, a) for q, a in self.entries if q.agent == agent]

    @property
    def agents(self) -> list[int]:
        return sorted({q.agent for q, _ in self.entries})

    def __len__(self) -> int:
        return len(self.entries)


def _agent_consistent(entries: list[tuple[Query, Fraction]]) -> bool:
    """Feasibility of one agent's answers for some piecewise-constant type.

    Build the refinement induced by every query endpoint and every cut
    answer, and solve a linear program over non-negative cell masses:

    * total mass 1 (types are normalized),
    * each eval answer pins the mass of its interval,
    * each cut answer pins the mass of [x, y] to alpha *and* requires
      strictly positive density just left of y (otherwise some y' < y
      would already accumulate alpha, contradicting minimality).

    Strictness is handled by maximizing a slack t with mass >= t on each
    "just left of a cut" cell; the answers are consistent iff the LP is
    feasible with t > 0.
    """
    points = {ZERO, ONE}
    strict_cells: list[tuple[Fraction, Fraction]] = []
    for q, a in entries:
        points.add(q.x)
        if isinstance(q, CutQuery):
            if a <= q.x or a > ONE:
                if q.alpha == ZERO and a == q.x:
                    continue
                return False  # minimality: zero demand is met exactly at x
            if q.alpha == ZERO:
                return False
            points.add(a)
        else:
            points.add(q.y)
            if a < ZERO or a > ONE:
                return False
            if q.y <= q.x and a != ZERO:
                return False  # degenerate intervals are worth exactly 0
    grid = sorted(points)
    cells = list(zip(grid, grid[1:]))
    index = {cell: i for i, cell in enumerate(cells)}
    ncells = len(cells)

    def cover(x: Fraction, y: Fraction) -> list[int]:
        return [i for i, (a, b) in enumerate(cells) if x <= a and b <= y]

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    strict: set[int] = set()
    rows.append([ONE] * ncells)
    rhs.append(ONE)
    for q, a in entries:
        if isinstance(q, EvalQuery):
            if q.y <= q.x:
                continue
            row = [ZERO] * ncells
            for i in cover(q.x, q.y):
                row[i] = ONE
            rows.append(row)
            rhs.append(a)
        elif q.alpha != ZERO:
            row = [ZERO] * ncells
            for i in cover(q.x, a):
                row[i] = ONE
            rows.append(row)
            rhs.append(q.alpha)
            left_cell = next(i for i, (s, e) in enumerate(cells) if e == a)
            strict.add(left_cell)

    # Variables: cell masses, t, one surplus per strict cell, cap slack.
    strict = sorted(strict)
    nvars = ncells + 1 + len(strict) + 1
    t_col = ncells
    full_rows = [row + [ZERO] * (nvars - ncells) for row in rows]
    for k, i in enumerate(strict):  # m_i - t - s_k = 0
        row = [ZERO] * nvars
        row[i] = ONE
        row[t_col] = -ONE
        row[ncells + 1 + k] = -ONE
        full_rows.append(row)
        rhs.append(ZERO)
    cap = [ZERO] * nvars  # t <= 1 keeps the LP bounded
    cap[t_col] = ONE
    cap[-1] = ONE
    full_rows.append(cap)
    rhs.append(ONE)

    objective = [ZERO] * nvars
    objective[t_col] = ONE
    result = linprog.maximize(objective, full_rows, rhs)
    return result.status == linprog.OPTIMAL and result.value > ZERO


def check_consistency(trace: QueryTrace) -> bool:
    """True iff every agent's answers are truthful for some type."""
    return all(_agent_consistent(trace.for_agent(i)) for i in trace.agents)

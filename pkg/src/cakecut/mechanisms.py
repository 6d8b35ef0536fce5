"""Executors for the division mechanisms.

Every indirect mechanism here maps a profile of strategies to an
allocation using only cut and eval queries; the full query/answer
sequence is recorded in a :class:`~cakecut.protocol.QueryTrace` (pass
``record=False`` to skip recording in hot sweeps).  The one
direct-revelation mechanism, ``nash-optimal``, takes reported valuations
instead of strategies.

Determinism rules applied uniformly:

* every round-based mechanism breaks cut ties in favour of the agent
  with the smallest index;
* the cut-and-choose chooser takes the piece with weakly higher reported
  value, the left one on ties;
* pick steps (Selfridge-Conway) take the reported-best piece, lowest
  piece index on ties.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from cakecut import nash as nash_solver
from cakecut.protocol import CutQuery, EvalQuery, QueryTrace
from cakecut.valuation import (
    ONE,
    ZERO,
    Allocation,
    Piece,
    Unsatisfiable,
    Valuation,
)


class Mechanism(str, enum.Enum):
    CUT_AND_CHOOSE = "cut-and-choose"
    CUT_MIDDLE = "cut-middle"
    LAST_DIMINISHER = "last-diminisher"
    MOVING_KNIFE = "moving-knife"
    LEFTMOST_LEAVES = "leftmost-leaves"
    LEFTMOST_LEAVES_EVEN_PAZ = "leftmost-leaves-even-paz"
    LEFTMOST_LEAVES_MODIFIED = "leftmost-leaves-modified"
    SELFRIDGE_CONWAY = "selfridge-conway"
    NASH_OPTIMAL = "nash-optimal"

    def __str__(self) -> str:  # pragma: no cover
        return self.value


#: (min agents, max agents or None for unbounded)
ARITY: dict[Mechanism, tuple[int, Optional[int]]] = {
    Mechanism.CUT_AND_CHOOSE: (2, 2),
    Mechanism.CUT_MIDDLE: (2, 2),
    Mechanism.LAST_DIMINISHER: (2, None),
    Mechanism.MOVING_KNIFE: (2, None),
    Mechanism.LEFTMOST_LEAVES: (2, None),
    Mechanism.LEFTMOST_LEAVES_EVEN_PAZ: (2, None),
    Mechanism.LEFTMOST_LEAVES_MODIFIED: (2, None),
    Mechanism.SELFRIDGE_CONWAY: (3, 3),
    Mechanism.NASH_OPTIMAL: (1, None),
}

CONNECTED_MECHANISMS = frozenset(
    m for m in Mechanism
    if m not in (Mechanism.SELFRIDGE_CONWAY, Mechanism.NASH_OPTIMAL)
)


@dataclass(frozen=True)
class RoundRecord:
    """One elimination period of a round-based mechanism."""

    period: int
    cuts: tuple[tuple[int, Fraction], ...]  # (agent, cut point), agent order
    winner: int
    winning_cut: Fraction


@dataclass
class MechanismRun:
    mechanism: Mechanism
    allocation: Allocation
    trace: Optional[QueryTrace]
    rounds: tuple[RoundRecord, ...] = ()
    extras: dict = field(default_factory=dict)


class _Asker:
    """Issue queries to strategies, optionally recording the trace."""

    def __init__(self, strategies: Sequence, record: bool):
        self.strategies = strategies
        self.trace = QueryTrace() if record else None

    def cut(self, agent: int, x: Fraction, alpha: Fraction) -> Fraction:
        answer = self.strategies[agent].answer(CutQuery(agent, x, alpha))
        if self.trace is not None:
            self.trace.record(CutQuery(agent, x, alpha), answer)
        return answer

    def eval(self, agent: int, x: Fraction, y: Fraction) -> Fraction:
        answer = self.strategies[agent].answer(EvalQuery(agent, x, y))
        if self.trace is not None:
            self.trace.record(EvalQuery(agent, x, y), answer)
        return answer


def _check_arity(mechanism: Mechanism, n: int):
    lo, hi = ARITY[mechanism]
    if n < lo or (hi is not None and n > hi):
        bound = f"exactly {lo}" if hi == lo else f"at least {lo}"
        raise ValueError(f"{mechanism.value} needs {bound} agents, got {n}")


# -- two-agent one-shot mechanisms ------------------------------------------

def run_cut_and_choose(strategies: Sequence, record: bool = True) -> MechanismRun:
    """Agent 0 cuts the cake in half by its reported value; agent 1 takes
    the piece its reported value weakly prefers (the left one on ties)."""
    _check_arity(Mechanism.CUT_AND_CHOOSE, len(strategies))
    ask = _Asker(strategies, record)
    x = ask.cut(0, ZERO, Fraction(1, 2))
    left_value = ask.eval(1, ZERO, x)
    if left_value >= Fraction(1, 2):
        pieces = (Piece.interval(x, ONE), Piece.interval(ZERO, x))
    else:
        pieces = (Piece.interval(ZERO, x), Piece.interval(x, ONE))
    return MechanismRun(
        Mechanism.CUT_AND_CHOOSE, Allocation(pieces), ask.trace,
        extras={"cut": x, "chooser_took_left": left_value >= Fraction(1, 2)},
    )


def run_cut_middle(strategies: Sequence, record: bool = True) -> MechanismRun:
    """Both agents cut at their reported half; the cake splits at the
    midpoint of the two cuts and each agent gets the side holding its own
    cut.  Equal cuts give agent 0 the left part."""
    _check_arity(Mechanism.CUT_MIDDLE, len(strategies))
    ask = _Asker(strategies, record)
    x0 = ask.cut(0, ZERO, Fraction(1, 2))
    x1 = ask.cut(1, ZERO, Fraction(1, 2))
    mid = (x0 + x1) / 2
    left, right = Piece.interval(ZERO, mid), Piece.interval(mid, ONE)
    if x0 <= x1:
        pieces = (left, right)
    else:
        pieces = (right, left)
    return MechanismRun(
        Mechanism.CUT_MIDDLE, Allocation(pieces), ask.trace,
        extras={"cuts": (x0, x1), "division_point": mid},
    )


# -- round-based elimination mechanisms ---------------------------------------

def _eliminate_by_smallest_cut(
    mechanism: Mechanism,
    strategies: Sequence,
    alpha_rule: Callable[["_Asker", int, Fraction, int, int], Fraction],
    record: bool,
    total_unsatisfiable_to_one: bool = False,
) -> MechanismRun:
    """Shared engine: per period every remaining agent answers one cut
    query from the current left edge; the smallest cut (ties to the
    smallest index) wins that piece and leaves."""
    n = len(strategies)
    ask = _Asker(strategies, record)
    remaining = list(range(n))
    left = ZERO
    pieces: list[Piece] = [Piece(())] * n
    rounds: list[RoundRecord] = []
    for period in range(1, n):
        k = len(remaining)
        cuts: list[tuple[int, Fraction]] = []
        for i in remaining:
            alpha = alpha_rule(ask, i, left, k, n)
            try:
                y = ask.cut(i, left, alpha)
            except Unsatisfiable:
                if not total_unsatisfiable_to_one:
                    raise
                y = ONE  # cannot meet the target: never wins this round
            cuts.append((i, y))
        winner, winning_cut = min(cuts, key=lambda item: (item[1], item[0]))
        pieces[winner] = Piece.interval(left, winning_cut)
        rounds.append(RoundRecord(period, tuple(cuts), winner, winning_cut))
        remaining.remove(winner)
        left = winning_cut
    pieces[remaining[0]] = Piece.interval(left, ONE)
    return MechanismRun(
        mechanism, Allocation(tuple(pieces)), ask.trace, tuple(rounds)
    )


def _proportional_share_alpha(ask: "_Asker", agent: int, left: Fraction,
                              k: int, n: int) -> Fraction:
    remaining_value = ask.eval(agent, left, ONE)
    return remaining_value / k


def run_leftmost_leaves(strategies: Sequence, record: bool = True) -> MechanismRun:
    """Per period, each remaining agent cuts a 1/(remaining)-share of its
    reported remaining value from the current left edge; the smallest cut
    leaves with that piece, ties to the smallest index.  The last agent
    takes the remainder."""
    _check_arity(Mechanism.LEFTMOST_LEAVES, len(strategies))
    return _eliminate_by_smallest_cut(
        Mechanism.LEFTMOST_LEAVES, strategies, _proportional_share_alpha, record
    )


def run_moving_knife(strategies: Sequence, record: bool = True) -> MechanismRun:
    """Continuous-knife division, executed through its outcome function.

    A knife sweeping from 0 with each remaining agent stopping it at the
    point covering 1/(remaining) of its reported remaining value yields,
    play by play, the same stop points and winners as the simultaneous
    cut protocol, so this executor shares that outcome function.  The
    mechanisms differ only in what an agent can observe mid-sweep, which
    matters to the strategy analysis, not to the outcome.
    """
    _check_arity(Mechanism.MOVING_KNIFE, len(strategies))
    return _eliminate_by_smallest_cut(
        Mechanism.MOVING_KNIFE, strategies, _proportional_share_alpha, record
    )


def run_leftmost_leaves_modified(strategies: Sequence,
                                 record: bool = True) -> MechanismRun:
    """Variant asking for an absolute 1/n share in every period.

    An agent whose reported remaining value cannot meet the 1/n target
    is assigned cut point 1 (it can never win that round), keeping the
    executor total.
    """
    _check_arity(Mechanism.LEFTMOST_LEAVES_MODIFIED, len(strategies))
    n = len(strategies)
    return _eliminate_by_smallest_cut(
        Mechanism.LEFTMOST_LEAVES_MODIFIED,
        strategies,
        lambda ask, i, left, k, n_=n: Fraction(1, n_),
        record,
        total_unsatisfiable_to_one=True,
    )


def run_last_diminisher(strategies: Sequence, record: bool = True) -> MechanismRun:
    """Banach-Knaster elimination.

    Agents answer in index order; the holder of the tentative piece is
    displaced only by a strictly smaller cut, which is equivalent to the
    smallest cut winning with ties to the smallest index.  The first
    round targets an absolute 1/n value; later rounds re-target to
    1/(remaining) of each agent's reported value of the remainder.
    """
    _check_arity(Mechanism.LAST_DIMINISHER, len(strategies))
    n = len(strategies)

    def alpha_rule(ask: "_Asker", agent: int, left: Fraction,
                   k: int, n_: int) -> Fraction:
        if left == ZERO and k == n:
            return Fraction(1, n)
        return _proportional_share_alpha(ask, agent, left, k, n_)

    return _eliminate_by_smallest_cut(
        Mechanism.LAST_DIMINISHER, strategies, alpha_rule, record
    )


# -- recursive halving ---------------------------------------------------------

def run_leftmost_leaves_even_paz(strategies: Sequence,
                                 record: bool = True) -> MechanismRun:
    """Recursive median-split halving.

    On a sub-cake [y, z], each participating agent cuts at half of its
    reported value of [y, z].  The floor(k/2)-th smallest cut splits the
    problem: the agents with the lower cuts (ties to the smaller index)
    recurse on the left part, the rest on the right part.  A singleton
    receives the whole sub-cake.  For two agents this coincides with the
    one-period smallest-cut rule.
    """
    _check_arity(Mechanism.LEFTMOST_LEAVES_EVEN_PAZ, len(strategies))
    n = len(strategies)
    ask = _Asker(strategies, record)
    pieces: list[Piece] = [Piece(())] * n

    def divide(agents: list[int], y: Fraction, z: Fraction):
        if len(agents) == 1:
            pieces[agents[0]] = Piece.interval(y, z)
            return
        cuts = {}
        for i in agents:
            half = ask.eval(i, y, z) / 2
            cuts[i] = ask.cut(i, y, half)
        order = sorted(agents, key=lambda i: (cuts[i], i))
        k = len(agents) // 2
        xstar = cuts[order[k - 1]]
        divide(order[:k], y, xstar)
        divide(order[k:], xstar, z)

    divide(list(range(n)), ZERO, ONE)
    return MechanismRun(
        Mechanism.LEFTMOST_LEAVES_EVEN_PAZ, Allocation(tuple(pieces)), ask.trace
    )


# -- three-agent envy-free procedure -------------------------------------------

def _argmax_piece(values: Sequence[Fraction], candidates: Sequence[int]) -> int:
    best = max(values[j] for j in candidates)
    return next(j for j in candidates if values[j] == best)


def run_selfridge_conway(strategies: Sequence, record: bool = True) -> MechanismRun:
    """The classical three-agent envy-free procedure, query by query.

    Agent 0 cuts three reported-equal pieces.  Agent 1 trims its reported
    best piece to tie its second best (the shaving comes off the right
    end; the trim is set aside).  Agents pick in the order 2, 1, 0, with
    agent 1 obliged to take the trimmed piece if agent 2 left it.  If a
    trim exists, whichever of agents 1 and 2 took the trimmed piece picks
    first from the trim thirds cut by the other one, then agent 0, then
    the divider.
    """
    _check_arity(Mechanism.SELFRIDGE_CONWAY, len(strategies))
    ask = _Asker(strategies, record)

    total = ask.eval(0, ZERO, ONE)
    a = ask.cut(0, ZERO, total / 3)
    b = ask.cut(0, a, total / 3)
    bounds = [(ZERO, a), (a, b), (b, ONE)]

    one_values = [ask.eval(1, lo, hi) for lo, hi in bounds]
    order = sorted(range(3), key=lambda j: (-one_values[j], j))
    best, second = order[0], order[1]
    trim: Optional[tuple[Fraction, Fraction]] = None
    trimmed_index: Optional[int] = None
    if one_values[best] > one_values[second]:
        lo, hi = bounds[best]
        w = ask.cut(1, lo, one_values[second])
        bounds[best] = (lo, w)
        trim = (w, hi)
        trimmed_index = best

    main_pieces = [Piece.interval(lo, hi) for lo, hi in bounds]
    available = [0, 1, 2]

    two_values = [ask.eval(2, lo, hi) for lo, hi in bounds]
    pick2 = _argmax_piece(two_values, available)
    available.remove(pick2)

    if trimmed_index is not None and trimmed_index in available:
        pick1 = trimmed_index  # obliged to take the trimmed piece
    else:
        pick1 = _argmax_piece(one_values, available)
    available.remove(pick1)
    pick0 = available[0]
    assert trimmed_index is None or pick0 != trimmed_index, \
        "the first cutter never receives the trimmed piece"

    assignment = {2: main_pieces[pick2], 1: main_pieces[pick1],
                  0: main_pieces[pick0]}
    extras = {"cuts": (a, b), "trim": trim, "picks": (pick0, pick1, pick2)}

    if trim is not None and trim[0] < trim[1]:
        taker = 2 if pick2 == trimmed_index else 1
        divider = 3 - taker  # the other of agents 1 and 2
        w, hi = trim
        tval = ask.eval(divider, w, hi)
        z1 = ask.cut(divider, w, tval / 3)
        z2 = ask.cut(divider, z1, tval / 3)
        thirds = [(w, z1), (z1, z2), (z2, hi)]
        remaining = [0, 1, 2]
        for agent in (taker, 0, divider):
            vals = {j: ask.eval(agent, *thirds[j]) for j in remaining}
            top = max(vals.values())
            choice = next(j for j in remaining if vals[j] == top)
            remaining.remove(choice)
            assignment[agent] = assignment[agent].union(
                Piece.interval(*thirds[choice])
            )
        extras["trim_thirds"] = tuple(thirds)

    allocation = Allocation((assignment[0], assignment[1], assignment[2]))
    return MechanismRun(Mechanism.SELFRIDGE_CONWAY, allocation, ask.trace,
                        extras=extras)


# -- direct revelation -----------------------------------------------------------

def run_nash_optimal(reported_types: Sequence[Valuation], tol: float = 1e-9,
                     record: bool = True) -> MechanismRun:
    """Allocation maximizing the product of reported utilities.

    Direct revelation: the inputs are full reported valuations, not
    strategies, and no cut/eval queries are issued.  Pieces may be
    disconnected.
    """
    _check_arity(Mechanism.NASH_OPTIMAL, len(reported_types))
    cp = nash_solver.solve_nash(list(reported_types), tol=tol)
    allocation = nash_solver.materialize(cp)
    return MechanismRun(
        Mechanism.NASH_OPTIMAL, allocation,
        QueryTrace() if record else None,
        extras={"cell_profile": cp},
    )


_RUNNERS = {
    Mechanism.CUT_AND_CHOOSE: run_cut_and_choose,
    Mechanism.CUT_MIDDLE: run_cut_middle,
    Mechanism.LAST_DIMINISHER: run_last_diminisher,
    Mechanism.MOVING_KNIFE: run_moving_knife,
    Mechanism.LEFTMOST_LEAVES: run_leftmost_leaves,
    Mechanism.LEFTMOST_LEAVES_EVEN_PAZ: run_leftmost_leaves_even_paz,
    Mechanism.LEFTMOST_LEAVES_MODIFIED: run_leftmost_leaves_modified,
    Mechanism.SELFRIDGE_CONWAY: run_selfridge_conway,
}


def run(mechanism: Mechanism, strategies: Sequence, record: bool = True,
        **kwargs) -> MechanismRun:
    """Dispatch by mechanism id.

    For ``nash-optimal``, ``strategies`` must be the reported valuations
    themselves (it is a direct-revelation rule).
    """
    if mechanism == Mechanism.NASH_OPTIMAL:
        return run_nash_optimal(strategies, record=record, **kwargs)
    return _RUNNERS[mechanism](strategies, record=record, **kwargs)

"""Mechanism executors: worked examples, fairness and structural checks."""

import random
from fractions import Fraction

import pytest

from cakecut.mechanisms import (
    CONNECTED_MECHANISMS,
    Mechanism,
    run,
    run_cut_and_choose,
    run_cut_middle,
    run_last_diminisher,
    run_leftmost_leaves,
    run_leftmost_leaves_even_paz,
    run_leftmost_leaves_modified,
    run_moving_knife,
    run_selfridge_conway,
)
from cakecut.protocol import Strategy, check_consistency
from cakecut.valuation import Piece, Valuation

from conftest import random_valuation, three_pocket

F = Fraction


def truthful(*valuations):
    return [Strategy(v) for v in valuations]


def block(a, b):
    """All value uniform on [a, b]."""
    return Valuation.from_blocks([(F(a), F(b), 1 / (F(b) - F(a)))])


# -- cut and choose ------------------------------------------------------------

def test_cut_and_choose_truthful_pocket_cutter(pocket_type):
    chooser = block(0, F(2, 5))
    res = run_cut_and_choose(truthful(pocket_type, chooser))
    assert res.extras["cut"] == F(1, 2)
    assert res.allocation[1] == Piece.interval(0, F(1, 2))
    assert pocket_type.eval(res.allocation[0]) == F(1, 2)


def test_cut_and_choose_manipulated_cutter(pocket_type):
    # cutter plays a type cutting at 0.4; a left-loving chooser leaves it
    # the remainder worth 3/4 of its true value
    fake = block(0, F(4, 5))
    assert fake.cut(0, F(1, 2)) == F(2, 5)
    chooser = block(0, F(3, 10))
    res = run_cut_and_choose([Strategy(fake), Strategy(chooser)])
    assert res.allocation[0] == Piece.interval(F(2, 5), 1)
    assert pocket_type.eval(res.allocation[0]) == F(3, 4)


def test_cut_and_choose_identical_uniform(uniform):
    res = run_cut_and_choose(truthful(uniform, uniform))
    for piece in res.allocation.pieces:
        assert uniform.eval(piece) == F(1, 2)


# -- cut middle -----------------------------------------------------------------

def test_cut_middle_truthful_vs_early_cutter(pocket_type):
    opponent = block(0, F(1, 50))  # cuts at 0.01
    res = run_cut_middle(truthful(pocket_type, opponent))
    assert res.extras["division_point"] == F(51, 200)  # 0.255
    assert res.allocation[0] == Piece.interval(F(51, 200), 1)
    assert pocket_type.eval(res.allocation[0]) == F(3, 4)


def test_cut_middle_uniform_pair(uniform):
    res = run_cut_middle(truthful(uniform, uniform))
    assert res.extras["division_point"] == F(1, 2)
    assert all(uniform.eval(p) == F(1, 2) for p in res.allocation.pieces)


def test_cut_middle_undercutting_both(pocket_type):
    # reported cuts 0.02 and 0.01; division at 0.015 and the first agent
    # keeps everything right of it, worth 77/80 of its true value
    res = run_cut_middle([Strategy(block(0, F(1, 25))),
                          Strategy(block(0, F(1, 50)))])
    assert res.extras["division_point"] == F(3, 200)
    assert res.allocation[0] == Piece.interval(F(3, 200), 1)
    assert pocket_type.eval(res.allocation[0]) == F(77, 80)
    assert pocket_type.eval(res.allocation[0]) >= 1 - F(5, 2) * F(3, 200)


# -- last diminisher --------------------------------------------------------------

def test_last_diminisher_two_agents(uniform):
    half_lover = block(0, F(1, 2))
    res = run_last_diminisher(truthful(uniform, half_lover))
    assert res.allocation[1] == Piece.interval(0, F(1, 4))
    assert half_lover.eval(res.allocation[1]) == F(1, 2)
    assert uniform.eval(res.allocation[0]) == F(3, 4)


def test_last_diminisher_undercut(uniform):
    half_lover = block(0, F(1, 2))  # the true preferences
    undercutter = block(0, F(49, 50))  # reported type cutting at 0.49
    assert undercutter.cut(0, F(1, 2)) == F(49, 100)
    res = run_last_diminisher([Strategy(uniform), Strategy(undercutter)])
    assert res.allocation[1] == Piece.interval(0, F(49, 100))
    assert half_lover.eval(res.allocation[1]) == F(49, 50)


def test_last_diminisher_three_uniform(uniform):
    res = run_last_diminisher(truthful(uniform, uniform, uniform))
    expected = [Piece.interval(0, F(1, 3)), Piece.interval(F(1, 3), F(2, 3)),
                Piece.interval(F(2, 3), 1)]
    assert list(res.allocation.pieces) == expected
    assert len(res.rounds) == 2


# -- leftmost leaves ---------------------------------------------------------------

def test_leftmost_leaves_tie_goes_to_smaller_index(pocket_type, uniform):
    res = run_leftmost_leaves(truthful(pocket_type, uniform))
    assert res.rounds[0].winner == 0
    assert res.rounds[0].winning_cut == F(1, 2)
    assert res.allocation[0] == Piece.interval(0, F(1, 2))


def test_leftmost_leaves_three_uniform(uniform):
    res = run_leftmost_leaves(truthful(uniform, uniform, uniform))
    assert [r.winning_cut for r in res.rounds] == [F(1, 3), F(2, 3)]
    assert [r.winner for r in res.rounds] == [0, 1]
    assert uniform.eval(res.allocation[2]) == F(1, 3)


def test_leftmost_leaves_five_uniform_first_cut(uniform):
    res = run_leftmost_leaves(truthful(*[uniform] * 5))
    assert res.rounds[0].cuts[0] == (0, F(1, 5))
    assert res.rounds[0].winning_cut == F(1, 5)


# -- modified variant ---------------------------------------------------------------

def test_modified_truthful_period_two_cut(uniform):
    # against an opponent taking [0, 0.1] first, a truthful uniform agent
    # cuts at 0.3 in period 2 (an absolute 1/5 from 0.1)
    early = block(0, F(1, 5))  # cuts at 1/25... choose so period-1 cut is 0.1
    # a type with all value on [0, 1/2] cuts 1/5 of it at 0.1
    early = block(0, F(1, 2))
    strategies = truthful(early, uniform, uniform, uniform, uniform)
    res = run_leftmost_leaves_modified(strategies)
    assert res.rounds[0].winning_cut == F(1, 10)
    assert res.rounds[0].winner == 0
    period2 = dict(res.rounds[1].cuts)
    assert period2[1] == F(3, 10)


def test_modified_equals_plain_for_two_agents(uniform):
    rng = random.Random(3)
    for _ in range(25):
        a, b = random_valuation(rng), random_valuation(rng)
        plain = run_leftmost_leaves(truthful(a, b)).allocation
        modified = run_leftmost_leaves_modified(truthful(a, b)).allocation
        assert plain == modified


def test_modified_unsatisfiable_late_round_assigns_one():
    # reported type runs dry: all value on [0, 0.2], absolute 1/3 targets
    dry = block(0, F(1, 5))
    uniform = Valuation.uniform()
    res = run_leftmost_leaves_modified(truthful(dry, uniform, uniform))
    assert res.allocation.is_complete()


# -- Even-Paz variant -----------------------------------------------------------------

def test_even_paz_matches_leftmost_leaves_for_two(uniform, pocket_type):
    lhs = run_leftmost_leaves_even_paz(truthful(pocket_type, uniform))
    rhs = run_leftmost_leaves(truthful(pocket_type, uniform))
    assert lhs.allocation == rhs.allocation


def test_even_paz_four_uniform(uniform):
    res = run_leftmost_leaves_even_paz(truthful(*[uniform] * 4))
    assert [p.intervals[0] for p in res.allocation.pieces] == [
        (F(0), F(1, 4)), (F(1, 4), F(1, 2)),
        (F(1, 2), F(3, 4)), (F(3, 4), F(1)),
    ]


def test_even_paz_split_groups(uniform):
    enders = block(F(9, 10), 1)
    res = run_leftmost_leaves_even_paz(
        truthful(uniform, uniform, enders, enders)
    )
    # agents 0, 1 divide [0, 0.5); agents 2, 3 divide [0.5, 1]
    assert res.allocation[0] == Piece.interval(0, F(1, 4))
    assert res.allocation[1] == Piece.interval(F(1, 4), F(1, 2))
    assert res.allocation[2] == Piece.interval(F(1, 2), F(19, 20))
    assert res.allocation[3] == Piece.interval(F(19, 20), 1)


# -- Selfridge-Conway ---------------------------------------------------------------

def test_selfridge_conway_uniform_thirds(uniform):
    res = run_selfridge_conway(truthful(uniform, uniform, uniform))
    assert res.extras["trim"] is None
    assert all(uniform.eval(p) == F(1, 3) for p in res.allocation.pieces)


def test_selfridge_conway_truthful_envy_free_random():
    rng = random.Random(11)
    for _ in range(30):
        vals = [random_valuation(rng) for _ in range(3)]
        res = run_selfridge_conway(truthful(*vals))
        assert res.allocation.is_complete()
        for i, vi in enumerate(vals):
            mine = vi.eval(res.allocation[i])
            for j in range(3):
                assert mine >= vi.eval(res.allocation[j])


def test_selfridge_conway_trim_bookkeeping(uniform):
    left_heavy = Valuation.from_blocks([(0, F(1, 2), F(3, 2)),
                                        (F(1, 2), 1, F(1, 2))])
    res = run_selfridge_conway(truthful(uniform, left_heavy, uniform))
    trim = res.extras["trim"]
    if trim is not None:
        assert res.allocation.is_complete()


# -- structural invariants across mechanisms -------------------------------------------

MECHS = [
    (Mechanism.CUT_AND_CHOOSE, 2),
    (Mechanism.CUT_MIDDLE, 2),
    (Mechanism.LAST_DIMINISHER, 4),
    (Mechanism.MOVING_KNIFE, 3),
    (Mechanism.LEFTMOST_LEAVES, 4),
    (Mechanism.LEFTMOST_LEAVES_EVEN_PAZ, 5),
    (Mechanism.LEFTMOST_LEAVES_MODIFIED, 3),
    (Mechanism.SELFRIDGE_CONWAY, 3),
]


@pytest.mark.parametrize("mechanism,n", MECHS)
def test_complete_connected_and_consistent(mechanism, n):
    rng = random.Random(hash(mechanism.value) % 10**6)
    for _ in range(10):
        strategies = truthful(*(random_valuation(rng) for _ in range(n)))
        res = run(mechanism, strategies)
        assert res.allocation.is_complete()
        if mechanism in CONNECTED_MECHANISMS:
            for piece in res.allocation.pieces:
                assert len(piece.intervals) <= 1
        assert check_consistency(res.trace)


def test_arity_errors(uniform):
    with pytest.raises(ValueError, match="exactly 2"):
        run_cut_and_choose(truthful(uniform, uniform, uniform))
    with pytest.raises(ValueError, match="at least 2"):
        run_leftmost_leaves(truthful(uniform))
    with pytest.raises(ValueError, match="exactly 3"):
        run_selfridge_conway(truthful(uniform, uniform))


def test_moving_knife_equals_leftmost_leaves_allocations():
    rng = random.Random(23)
    for _ in range(40):
        n = rng.randint(2, 5)
        strategies = [Strategy(random_valuation(rng)) for _ in range(n)]
        a = run_moving_knife(strategies, record=False).allocation
        b = run_leftmost_leaves(strategies, record=False).allocation
        assert a == b

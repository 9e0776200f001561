from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from luba.core import AuctionConfig, bidder_payoffs, resolve
from luba.equilibrium import asymmetric_example_profile, two_bidder_symmetric
from luba.errors import BudgetExceededError, PreconditionError
from luba.oracle import (MixedStrategy, StrategySpace, best_response, epsilon_nash_check, expected_payoffs,
                         expected_seller_payoff, is_monotone, monotone_dominance_transform, pure_payoff)

CFG = AuctionConfig(2, 4, 1)
SIGMA = two_bidder_symmetric(4, 1, exact=True).to_mixed()
EXAMPLE = asymmetric_example_profile(2, 4, 1)


def test_mixed_strategy_validation():
    with pytest.raises(PreconditionError):
        MixedStrategy.of([((1,), 0.5), ((2,), 0.4)])
    with pytest.raises(PreconditionError):
        MixedStrategy(((frozenset({1}), 0.5), (frozenset({1}), 0.5)))


def test_space_enumeration():
    space = StrategySpace(3, 2)
    sets = [tuple(sorted(s)) for s in space]
    assert sets == [(), (1,), (1, 2), (1, 3), (2,), (2, 3), (3,)]
    assert space.size() == 7
    assert [tuple(sorted(s)) for s in StrategySpace(5, 3, monotone_only=True)] == [(), (1,), (1, 2), (1, 2, 3)]


def test_symmetric_strategy_earns_zero():
    assert expected_payoffs([SIGMA, SIGMA], CFG) == [0, 0]
    floats = two_bidder_symmetric(4, 1).to_mixed()
    assert all(abs(u) < 1e-9 for u in expected_payoffs([floats, floats], CFG))


def test_point_masses_match_core():
    profile = [{1}, {1, 2}]
    mixed = [MixedStrategy.pure(s) for s in profile]
    assert expected_payoffs(mixed, CFG) == bidder_payoffs(profile, CFG)


def test_example_payoffs():
    assert expected_payoffs(EXAMPLE, CFG) == [F(1, 2), 0]
    assert expected_seller_payoff(EXAMPLE, CFG) == F(-1, 2)


def test_budget_guard():
    wide = MixedStrategy.of([((i,), F(1, 10)) for i in range(1, 11)])
    with pytest.raises(BudgetExceededError) as info:
        expected_payoffs([wide] * 3, AuctionConfig(3, 20, 1), budget=999)
    assert info.value.terms == 1000


def test_best_response_to_symmetric_strategy():
    value, argmax = best_response(0, [SIGMA], StrategySpace(5, 5), CFG)
    assert value == 0
    assert {frozenset(), frozenset({1}), frozenset({1, 2})} <= set(argmax)


def test_best_response_to_absent_opponent():
    value, argmax = best_response(0, [MixedStrategy.pure([])], StrategySpace(5, 5), CFG)
    assert value == 2 and argmax == [frozenset({1})]


def test_best_response_to_example_mixture():
    value, argmax = best_response(0, [EXAMPLE[1]], StrategySpace(5, 5), CFG)
    assert value == F(1, 2) and argmax == [frozenset({1})]


def test_nash_checks():
    assert epsilon_nash_check([SIGMA, SIGMA], StrategySpace(6, 6), CFG, eps=1e-9).is_eq
    assert epsilon_nash_check(EXAMPLE, StrategySpace(5, 5), CFG, eps=1e-9).is_eq
    rep = epsilon_nash_check([MixedStrategy.pure([1])] * 2, StrategySpace(5, 5), CFG, eps=1e-9)
    assert not rep.is_eq
    assert rep.worst_gain == pytest.approx(1)
    assert rep.deviation == frozenset()


@pytest.mark.parametrize("bids, shifted, truncated", [
    ({2}, {1}, set()),
    ({1, 3, 4}, {1, 2, 4}, {1}),
    ({1, 2, 4, 7}, {1, 2, 3, 7}, {1, 2}),
])
def test_dominance_transform(bids, shifted, truncated):
    assert monotone_dominance_transform(bids) == (frozenset(shifted), frozenset(truncated))


def test_dominance_transform_rejects_monotone():
    with pytest.raises(PreconditionError):
        monotone_dominance_transform({1, 2, 3})
    with pytest.raises(PreconditionError):
        monotone_dominance_transform(set())


# --- property tests ---------------------------------------------------------

weights = st.lists(st.integers(0, 6), min_size=1, max_size=5).filter(lambda w: sum(w) > 0)


def monotone_from(w):
    total = sum(w)
    return MixedStrategy.of([(range(1, k + 1), F(x, total)) for k, x in enumerate(w)])


def mixed_from(sets, w):
    total = sum(w)
    return MixedStrategy.of([(s, F(x, total)) for s, x in zip(sets, w)])


@settings(max_examples=150, deadline=None)
@given(weights, st.frozensets(st.integers(1, 7), min_size=1, max_size=5), st.integers(5, 12), st.integers(1, 3))
def test_dominance_property(w, bids, v, c):
    assume(not is_monotone(bids))
    tau = monotone_from(w)
    cfg = AuctionConfig(2, v, c)
    shifted, truncated = monotone_dominance_transform(bids)
    base = pure_payoff(0, bids, [tau], cfg)
    best = max(pure_payoff(0, shifted, [tau], cfg), pure_payoff(0, truncated, [tau], cfg))
    assert best >= base
    gap = min(set(range(1, max(bids) + 1)) - bids)
    # winning probability at a bid of gap+1 or more
    outcomes = [(resolve([bids, s]), p) for s, p in tau.support]
    high_win = sum(p for out, p in outcomes if out.winner == 0 and out.winning_bid > gap)
    if high_win > 0:
        assert best > base


set_lists = st.lists(st.frozensets(st.integers(1, 5), max_size=4), min_size=1, max_size=3, unique=True)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(set_lists, weights), min_size=1, max_size=3), st.integers(2, 9), st.integers(1, 3),
       st.integers(1, 5))
def test_prefix_search_matches_enumeration(others_raw, v, c, max_set):
    others = []
    for sets, w in others_raw:
        w = (w + [1] * len(sets))[: len(sets)]
        assume(sum(w) > 0)
        others.append(mixed_from(sets, w))
    cfg = AuctionConfig(len(others) + 1, v, c)
    space = StrategySpace(5, max_set)
    fast = best_response(0, others, space, cfg, method="prefix")
    slow = best_response(0, others, space, cfg, method="enumerate")
    assert fast[0] == slow[0]
    assert fast[1] == slow[1]

from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from luba.core import AuctionConfig, bidder_payoffs, lowest_unique, resolve, seller_payoff, to_cents
from luba.errors import MoneyError, PreconditionError

CFG = AuctionConfig(2, 4, 1)


def test_all_bids_collide():
    out = resolve([{1}, {1}])
    assert out.winner is None and out.winning_bid is None and out.unique_set == frozenset()


def test_two_bids_against_one():
    out = resolve([{1, 2}, {1}])
    assert (out.winner, out.winning_bid) == (0, 2)


def test_lone_bidder_wins_at_one():
    out = resolve([{1}, set()])
    assert (out.winner, out.winning_bid) == (0, 1)


def test_empty_profile():
    assert not resolve([]).has_winner


@pytest.mark.parametrize("profile, expected", [
    ([{1}, {1, 2}], [-1, 0]),
    ([{1}, set()], [2, 0]),
    ([set(), set()], [0, 0]),
])
def test_bidder_payoffs(profile, expected):
    assert bidder_payoffs(profile, CFG) == expected


def test_seller_payoff():
    assert seller_payoff([{1}, {1, 2}], CFG) == 1
    assert seller_payoff([set(), set()], CFG) == 0
    # no winner: fees only, item kept
    assert seller_payoff([{1}, {1}], CFG) == 2


def test_payoff_profile_length_checked():
    with pytest.raises(PreconditionError):
        bidder_payoffs([{1}], CFG)


def test_bid_cap_defaults_to_value():
    with pytest.raises(PreconditionError):
        bidder_payoffs([{5}, set()], CFG)
    assert bidder_payoffs([{5}, set()], AuctionConfig(2, 4, 1, max_bid=10)) == [-2, 0]


def test_config_validation():
    with pytest.raises(PreconditionError):
        AuctionConfig(0, 4, 1)
    with pytest.raises(PreconditionError):
        AuctionConfig(2, 4, 0)
    assert AuctionConfig(2, 4, 0, promo=True).c == 0


def test_euro_conversion():
    assert to_cents("0.50") == 50
    assert to_cents(1049) == 104900
    assert to_cents(Decimal("2")) == 200
    assert AuctionConfig.from_euros(3, "500", "0.5") == AuctionConfig(3, 50000, 50)
    with pytest.raises(MoneyError):
        to_cents("0.505")
    with pytest.raises(MoneyError):
        to_cents("abc")


def test_lowest_unique_counts():
    assert lowest_unique({1: 2, 2: 1, 4: 1}) == 2
    assert lowest_unique({}) is None


bid_sets = st.frozensets(st.integers(1, 8), max_size=5)
profiles = st.lists(bid_sets, min_size=1, max_size=5)


@given(profiles)
def test_zero_sum(profile):
    cfg = AuctionConfig(len(profile), 10, 1)
    assert sum(bidder_payoffs(profile, cfg)) + seller_payoff(profile, cfg) == 0


@given(profiles, st.randoms())
def test_permutation_equivariance(profile, rnd):
    perm = list(range(len(profile)))
    rnd.shuffle(perm)
    shuffled = [profile[p] for p in perm]
    a, b = resolve(profile), resolve(shuffled)
    assert a.winning_bid == b.winning_bid
    if a.has_winner:
        assert perm[b.winner] == a.winner


@given(profiles)
def test_winning_bid_held_by_exactly_one(profile):
    out = resolve(profile)
    if out.has_winner:
        holders = [i for i, s in enumerate(profile) if out.winning_bid in s]
        assert holders == [out.winner]
        assert out.winning_bid == min(out.unique_set)

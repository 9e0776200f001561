"""Shared fixtures and independent re-implementations used as test oracles."""

import itertools
import random

from luba.backtest import AuctionRecord, multiplicity_histogram
from luba.core import AuctionConfig, resolve
from luba.equilibrium import asymmetric_example_profile, two_bidder_symmetric
from luba.oracle import MixedStrategy, StrategySpace, epsilon_nash_check


def auction_6787():
    """Record shaped like auction #6787: every integer 1..2371 bid, won at 61.

    Integers below 61 carry 2-4 bids, 61 is the lone unique amount at the
    bottom, and 62..2371 have multiplicities in 1..4 apart from two integers
    at 6 and five at 5.
    """
    counts = {}
    for j in range(1, 61):
        counts[j] = 2 + j % 3
    counts[61] = 1
    pattern = [1, 1, 1, 2, 1, 1, 3, 1, 1, 1, 4, 1]
    for j in range(62, 2372):
        counts[j] = pattern[j % len(pattern)]
    for j in (500, 1700):
        counts[j] = 6
    for j in (300, 800, 1200, 1900, 2300):
        counts[j] = 5
    rec = AuctionRecord("6787", 104900, 50, counts, 61)
    hist = [k for _, k in multiplicity_histogram(rec, 61, 2371)]
    assert max(hist) == 6 and hist.count(6) == 2 and hist.count(5) == 5
    assert all(k >= 1 for k in hist)
    assert 2372 not in counts and all(j in counts for j in range(1, 2372))
    assert rec.problems() == []
    return rec


def brute_inject(counts, bids):
    """Who wins once one extra bidder adds ``bids``, by explicit bidder lists.

    Each original bid belongs to its own phantom bidder; the injector is
    bidder 0. Returns (injector_won, winning_bid).
    """
    sets = [frozenset(bids)]
    for j, k in sorted(counts.items()):
        sets.extend(frozenset([j]) for _ in range(k))
    out = resolve(sets)
    return out.winner == 0, out.winning_bid


def random_record(rng: random.Random, ident="r"):
    v_cents = rng.choice([45000, 50000, 104900, 130000, 1000, 100])
    span = rng.randint(1, 60)
    counts = {}
    for j in range(1, span + 1):
        k = rng.choice([0, 0, 1, 1, 1, 2, 3])
        if k:
            counts[j] = k
    for _ in range(rng.randint(0, 5)):
        j = rng.randint(1, 4000)
        counts[j] = counts.get(j, 0) + 1
    rec = AuctionRecord(ident, v_cents, rng.choice([50, 200]), counts, None)
    return rec.with_recomputed_winner()


def pure_equilibria(n, v, c, max_bid):
    """All pure equilibria up to relabeling on subsets of {1..max_bid}."""
    space = StrategySpace(max_bid, max_bid)
    sets = list(space)
    cfg = AuctionConfig(n, v, c)
    found = []
    for combo in itertools.combinations_with_replacement(sets, n):
        profile = [MixedStrategy.pure(s) for s in combo]
        if epsilon_nash_check(profile, space, cfg, eps=1e-9).is_eq:
            found.append(profile)
    return found


def small_game_equilibria(n, v, c, max_bid):
    """Oracle-verified equilibria from pure enumeration plus the closed forms."""
    space = StrategySpace(max_bid, max_bid)
    cfg = AuctionConfig(n, v, c)
    found = pure_equilibria(n, v, c, max_bid)
    candidates = []
    if n == 2 and c < v - 1:
        strat = two_bidder_symmetric(v, c, exact=True)
        if strat.N <= max_bid:
            candidates.append([strat.to_mixed()] * 2)
    if n >= 2:
        candidates.append(asymmetric_example_profile(n, v, c))
    for prof in candidates:
        if epsilon_nash_check(prof, space, cfg, eps=1e-9).is_eq:
            found.append(prof)
    return found

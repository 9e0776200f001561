"""Exact evaluation of mixed profiles on small LUBA games.

Every equilibrium claim in the package is checked here. Expectations are
summed over the full product of supports in a fixed iteration order, so
results are reproducible to the last bit; probabilities given as
:class:`fractions.Fraction` keep the whole computation exact.

Best responses are searched over an explicit pure-strategy universe
(:class:`StrategySpace`). Two searches are available: plain enumeration of
the universe, and a prefix search that walks candidate sets integer by
integer and shares work between sets with a common prefix. Both are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from luba.core import AuctionConfig, payoff_vector, resolve
from luba.errors import BudgetExceededError, PreconditionError

DEFAULT_BUDGET = 10**7
MONEY_TOL = 1e-9


@dataclass(frozen=True)
class MixedStrategy:
    support: tuple  # ((frozenset, probability), ...)

    def __post_init__(self):
        seen = set()
        total = 0
        for s, p in self.support:
            if not isinstance(s, frozenset):
                raise TypeError("support sets must be frozensets")
            if s in seen:
                raise PreconditionError(f"duplicate support entry {sorted(s)}")
            if p < 0:
                raise PreconditionError(f"negative probability {p}")
            seen.add(s)
            total += p
        if abs(total - 1) > 1e-12:
            raise PreconditionError(f"probabilities sum to {float(total)}, not 1")

    @classmethod
    def pure(cls, bids: Iterable[int]) -> "MixedStrategy":
        return cls(((frozenset(bids), 1),))

    @classmethod
    def of(cls, pairs) -> "MixedStrategy":
        """Build from ``[(iterable_of_bids, p), ...]``, dropping zero-mass entries."""
        return cls(tuple((frozenset(s), p) for s, p in pairs if p != 0))

    def prob(self, bids) -> float:
        key = frozenset(bids)
        for s, p in self.support:
            if s == key:
                return p
        return 0

    def max_bid(self) -> int:
        return max((max(s) for s, p in self.support if s and p > 0), default=0)

    def __len__(self):
        return len(self.support)


@dataclass(frozen=True)
class StrategySpace:
    max_bid: int
    max_set_size: int
    monotone_only: bool = False

    def __post_init__(self):
        if self.max_bid < 1 or self.max_set_size < 0:
            raise PreconditionError("need max_bid >= 1 and max_set_size >= 0")

    def size(self) -> int:
        k = min(self.max_bid, self.max_set_size)
        if self.monotone_only:
            return k + 1
        return sum(math.comb(self.max_bid, j) for j in range(k + 1))

    def __iter__(self):
        """Pure strategies in lexicographic order of their sorted bid tuples."""
        k = min(self.max_bid, self.max_set_size)
        if self.monotone_only:
            sets = [tuple(range(1, j + 1)) for j in range(k + 1)]
        else:
            sets = [t for j in range(k + 1) for t in itertools.combinations(range(1, self.max_bid + 1), j)]
        for t in sorted(sets):
            yield frozenset(t)


@dataclass(frozen=True)
class NashReport:
    is_eq: bool
    worst_gain: float
    deviating_player: int | None
    deviation: frozenset | None
    payoffs: tuple = ()


def _product_size(strategies: Sequence[MixedStrategy]) -> int:
    return math.prod(len(s) for s in strategies)


def _joint(strategies: Sequence[MixedStrategy], budget: int):
    """Yield ``(probability, sets)`` over the product of supports."""
    terms = _product_size(strategies)
    if terms > budget:
        raise BudgetExceededError(terms, budget)
    for combo in itertools.product(*(s.support for s in strategies)):
        p = 1
        for _, q in combo:
            p *= q
        yield p, [s for s, _ in combo]


def expected_payoffs(profile: Sequence[MixedStrategy], config: AuctionConfig, budget: int = DEFAULT_BUDGET) -> list:
    if len(profile) != config.n:
        raise PreconditionError(f"profile has {len(profile)} players, config.n={config.n}")
    acc = [0] * config.n
    for p, sets in _joint(profile, budget):
        if p == 0:
            continue
        for i, u in enumerate(payoff_vector(sets, config.v, config.c)):
            acc[i] += p * u
    return acc


def expected_seller_payoff(profile: Sequence[MixedStrategy], config: AuctionConfig, budget: int = DEFAULT_BUDGET):
    acc = 0
    for p, sets in _joint(profile, budget):
        if p == 0:
            continue
        out = resolve(sets)
        fees = config.c * sum(len(s) for s in sets)
        acc += p * (fees + out.winning_bid - config.v if out.has_winner else fees)
    return acc


def pure_payoff(player: int, bids: frozenset, others: Sequence[MixedStrategy], config: AuctionConfig,
                budget: int = DEFAULT_BUDGET):
    """Expected payoff of ``player`` playing the pure set ``bids`` against ``others``."""
    profile = list(others[:player]) + [MixedStrategy.pure(bids)] + list(others[player:])
    return expected_payoffs(profile, AuctionConfig(len(profile), config.v, config.c, promo=True), budget)[player]


def _opponent_table(others: Sequence[MixedStrategy], max_bid: int, budget: int):
    """Joint opponent profiles as (probabilities, per-position count vectors)."""
    probs, counts = [], []
    for p, sets in _joint(others, budget):
        if p == 0:
            continue
        row = [0] * (max_bid + 2)
        for s in sets:
            for b in s:
                if b <= max_bid:
                    row[b] += 1
        # Opponent bids above max_bid never matter: a deviation cannot reach them
        # and they only win if the deviator has no unique bid, i.e. payoff unchanged.
        probs.append(p)
        counts.append(row)
    return probs, counts


def _prefix_search(probs, counts, space: StrategySpace, v, c, tol: float):
    m = space.max_bid
    npro = len(probs)
    full = (1 << npro) - 1
    zero_mask = [0] * (m + 2)
    one_mask = [0] * (m + 2)
    for t in range(1, m + 1):
        for j in range(npro):
            if counts[j][t] == 0:
                zero_mask[t] |= 1 << j
            elif counts[j][t] == 1:
                one_mask[t] |= 1 << j

    @lru_cache(maxsize=None)
    def mass(mask):
        total = 0
        j = 0
        while mask:
            if mask & 1:
                total += probs[j]
            mask >>= 1
            j += 1
        return total

    # Only undecided opponent profiles can still be affected by later bids.
    @lru_cache(maxsize=None)
    def best(t, undecided, room):
        room = min(room, m - t + 1)
        if t > m or undecided == 0 or room <= 0:
            return 0, ((),)
        skip_val, skip_sets = best(t + 1, undecided & ~one_mask[t], room)
        won = undecided & zero_mask[t]
        take_val, take_tail = best(t + 1, undecided & ~zero_mask[t], room - 1)
        take_val = take_val + mass(won) * (v - t) - c
        take_sets = tuple((t,) + tail for tail in take_tail)
        if take_val > skip_val + tol:
            return take_val, take_sets
        if skip_val > take_val + tol:
            return skip_val, skip_sets
        return max(skip_val, take_val), skip_sets + take_sets

    value, sets = best(1, full, space.max_set_size)
    return value, sets, best.cache_info().currsize


def best_response(player: int, others: Sequence[MixedStrategy], space: StrategySpace, config: AuctionConfig,
                  method: str = "prefix", budget: int = DEFAULT_BUDGET, tol: float = MONEY_TOL):
    """Best pure reply of ``player`` to the mixed strategies of everyone else.

    ``others`` lists the remaining players' strategies in player order with
    ``player`` removed. Returns ``(value, argmax)`` where ``argmax`` holds
    every maximizer within ``tol`` sorted lexicographically.

    ``method="enumerate"`` scores each pure strategy of ``space`` in turn;
    ``"prefix"`` (default) runs the shared-prefix search. The prefix search
    skips bids after every opponent profile is settled, which only changes
    the tie list when ``c == 0``; enumeration is used in that case.
    """
    if len(others) != config.n - 1:
        raise PreconditionError(f"expected {config.n - 1} opponent strategies, got {len(others)}")
    if method == "prefix" and config.c > 0:
        if space.monotone_only:
            method = "enumerate"
        else:
            probs, counts = _opponent_table(others, space.max_bid, budget)
            value, tails, _ = _prefix_search(probs, counts, space, config.v, config.c, tol)
            return value, [frozenset(t) for t in sorted(tails)]
    if method not in ("prefix", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    terms = space.size() * max(_product_size(others), 1)
    if terms > budget:
        raise BudgetExceededError(terms, budget)
    scored = [(pure_payoff(player, s, others, config, budget), s) for s in space]
    value = max(u for u, _ in scored)
    argmax = [s for u, s in scored if u >= value - tol]
    return value, sorted(argmax, key=lambda s: tuple(sorted(s)))


def epsilon_nash_check(profile: Sequence[MixedStrategy], space: StrategySpace, config: AuctionConfig,
                       eps: float = MONEY_TOL, method: str = "prefix", budget: int = DEFAULT_BUDGET) -> NashReport:
    current = expected_payoffs(profile, config, budget)
    worst, who, dev = -math.inf, None, None
    done = {}
    for i in range(config.n):
        others = list(profile[:i]) + list(profile[i + 1:])
        # Players with identical strategies face identical opponents.
        key = profile[i]
        if key in done:
            gain, arg = done[key][0], done[key][1]
        else:
            value, argmax = best_response(i, others, space, config, method=method, budget=budget)
            gain, arg = value - current[i], argmax[0]
            done[key] = (gain, arg)
        if gain > worst:
            worst, who, dev = gain, i, arg
    return NashReport(worst <= eps, float(worst), who, dev, tuple(current))


def monotone_dominance_transform(bids: Iterable[int]):
    """Return the two sets that jointly dominate a non-monotone bid set.

    With ``l`` the smallest integer such that ``l`` is missing and ``l+1``
    is present, the first set swaps ``l+1`` for ``l`` and the second keeps
    only the bids below ``l``.
    """
    s = frozenset(bids)
    gap = next((l for l in range(1, max(s, default=0)) if l not in s and l + 1 in s), None)
    if gap is None:
        raise PreconditionError(f"{sorted(s)} is monotone")
    shifted = (s - {gap + 1}) | {gap}
    truncated = frozenset(b for b in s if b < gap)
    return shifted, truncated


def is_monotone(bids) -> bool:
    s = frozenset(bids)
    return s == frozenset(range(1, len(s) + 1))


def as_fraction_strategy(strategy: MixedStrategy) -> MixedStrategy:
    return MixedStrategy(tuple((s, Fraction(p)) for s, p in strategy.support))

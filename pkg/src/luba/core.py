"""Static lowest-unique-bid game: configuration, outcome resolution, payoffs.

Money is integer cents throughout. Bid integers are cents as well, so a
configuration with ``v=4, c=1`` is a 4-cent item with 1-cent bids; the
equilibrium formulas want exactly this "same unit" convention.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Mapping, Sequence

from luba.errors import MoneyError, PreconditionError

BidSet = frozenset
BidProfile = Sequence[Iterable[int]]


def to_cents(amount) -> int:
    """Convert a euro amount (str, int, float or Decimal) to integer cents.

    Raises :class:`MoneyError` for sub-cent precision, so ``0.505`` is
    rejected rather than rounded.
    """
    try:
        d = amount if isinstance(amount, Decimal) else Decimal(str(amount))
    except InvalidOperation as exc:
        raise MoneyError(f"not a money amount: {amount!r}") from exc
    cents = d * 100
    if cents != cents.to_integral_value():
        raise MoneyError(f"{amount!r} has sub-cent precision")
    return int(cents)


def to_euros(cents: int) -> float:
    return cents / 100


@dataclass(frozen=True)
class AuctionConfig:
    """Bidder count ``n``, item value ``v`` and per-bid cost ``c`` in cents.

    ``c == 0`` is only accepted with ``promo=True`` (free advertising
    auctions exist in practice). ``max_bid`` bounds enumeration and
    defaults to ``v``: no rational bidder bids above the item value.
    """

    n: int
    v: int
    c: int
    promo: bool = False
    max_bid: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"n must be >= 1, got {self.n}")
        if self.v <= 0:
            raise PreconditionError(f"v must be > 0, got {self.v}")
        if self.c < 0 or (self.c == 0 and not self.promo):
            raise PreconditionError(f"c must be > 0 (or 0 with promo), got {self.c}")
        if self.max_bid is not None and self.max_bid < 1:
            raise PreconditionError("max_bid must be >= 1")

    @classmethod
    def from_euros(cls, n: int, v, c, **kwargs) -> "AuctionConfig":
        return cls(n=n, v=to_cents(v), c=to_cents(c), **kwargs)

    @property
    def bid_cap(self) -> int:
        return self.v if self.max_bid is None else self.max_bid


@dataclass(frozen=True)
class Outcome:
    winner: int | None
    winning_bid: int | None
    unique_set: frozenset = field(default_factory=frozenset)

    @property
    def has_winner(self) -> bool:
        return self.winner is not None


NO_WINNER = Outcome(None, None, frozenset())


def _as_sets(profile: BidProfile) -> list[frozenset]:
    return [s if isinstance(s, frozenset) else frozenset(s) for s in profile]


def resolve(profile: BidProfile) -> Outcome:
    sets = _as_sets(profile)
    counts = Counter()
    owner = {}
    for i, s in enumerate(sets):
        for b in s:
            counts[b] += 1
            owner[b] = i
    unique = frozenset(b for b, k in counts.items() if k == 1)
    if not unique:
        return NO_WINNER
    s_star = min(unique)
    return Outcome(owner[s_star], s_star, unique)


def lowest_unique(counts: Mapping[int, int]) -> int | None:
    """Winning bid of a bid multiset given as ``{integer: count}``."""
    best = None
    for b, k in counts.items():
        if k == 1 and (best is None or b < best):
            best = b
    return best


def validate_profile(profile: BidProfile, config: AuctionConfig) -> list[frozenset]:
    sets = _as_sets(profile)
    if len(sets) != config.n:
        raise PreconditionError(f"profile has {len(sets)} bid sets, config.n={config.n}")
    cap = config.bid_cap
    for i, s in enumerate(sets):
        for b in s:
            if not isinstance(b, int) or b < 1:
                raise PreconditionError(f"bidder {i}: bid {b!r} is not a positive integer")
            if b > cap:
                raise PreconditionError(f"bidder {i}: bid {b} exceeds cap {cap}")
    return sets


def payoff_vector(sets: Sequence[frozenset], v, c) -> list:
    """Bidder payoffs without validation; ``v`` and ``c`` may be any numbers."""
    out = resolve(sets)
    pay = [-c * len(s) for s in sets]
    if out.has_winner:
        pay[out.winner] += v - out.winning_bid
    return pay


def bidder_payoffs(profile: BidProfile, config: AuctionConfig) -> list:
    sets = validate_profile(profile, config)
    return payoff_vector(sets, config.v, config.c)


def seller_payoff(profile: BidProfile, config: AuctionConfig):
    # Without a winner the item stays with the seller: fees only.
    sets = validate_profile(profile, config)
    fees = config.c * sum(len(s) for s in sets)
    out = resolve(sets)
    if out.has_winner:
        return fees + out.winning_bid - config.v
    return fees

"""Closed-form equilibria and non-existence certificates.

All amounts here are in bid units: pass ``v`` and ``c`` in cents when bids
are cents. Computations run on :class:`fractions.Fraction` and are
converted to float at the end unless ``exact=True`` is requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from luba.errors import DegenerateInputError, PreconditionError
from luba.oracle import MixedStrategy


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class MonotoneMixedStrategy:
    """Distribution over the prefix sets ``{}, {1}, {1,2}, ..., {1..N}``.

    ``p[l-1]`` is the probability of ``{1, ..., l}``.
    """

    p_empty: float
    p: tuple
    N: int

    def __post_init__(self):
        if len(self.p) != self.N:
            raise PreconditionError("len(p) must equal N")
        if any(x < 0 or x > 1 for x in (self.p_empty, *self.p)):
            raise PreconditionError("probabilities must lie in [0, 1]")
        if abs(self.p_empty + sum(self.p) - 1) > 1e-12:
            raise PreconditionError("probabilities must sum to 1")
        if self.N and not self.p[-1] > 0:
            raise PreconditionError("p[N] must be positive")

    def prob_prefix(self, l: int):
        """Probability of ``{1..l}`` (``l=0`` is the empty set)."""
        return self.p_empty if l == 0 else self.p[l - 1]

    def to_mixed(self) -> MixedStrategy:
        pairs = [((), self.p_empty)] + [(range(1, l + 1), q) for l, q in enumerate(self.p, start=1)]
        return MixedStrategy.of(pairs)

    def rows(self):
        """``(label, probability)`` pairs, e.g. ``("{1,2}", 1/6)``."""
        yield "∅", self.p_empty
        for l, q in enumerate(self.p, start=1):
            yield "{" + ",".join(str(i) for i in range(1, l + 1)) + "}", q


def two_bidder_support_size(v, c) -> int:
    """Largest N with c/(v-1) + ... + c/(v-N) < 1 (strict, exact arithmetic)."""
    v, c = _frac(v), _frac(c)
    total, n = Fraction(0), 0
    while True:
        denom = v - (n + 1)
        if denom <= 0:
            return n
        nxt = total + c / denom
        if nxt >= 1:
            return n
        total, n = nxt, n + 1


def two_bidder_symmetric(v, c, exact: bool = False) -> MonotoneMixedStrategy:
    """The unique symmetric equilibrium of the two-bidder game."""
    fv, fc = _frac(v), _frac(c)
    if fc <= 0:
        raise DegenerateInputError(f"bid cost must be positive, got c={c}")
    if fc >= fv - 1:
        raise DegenerateInputError(
            f"degenerate input: c={c} >= v-1={fv - 1}, the closed form puts all mass on not bidding")
    n = two_bidder_support_size(fv, fc)
    p_empty = fc / (fv - 1)
    p = [fc / (fv - (l + 1)) for l in range(1, n)]
    p.append(1 - sum((fc / (fv - (l + 1)) for l in range(n)), Fraction(0)))
    if not exact:
        p_empty, p = float(p_empty), [float(x) for x in p]
    return MonotoneMixedStrategy(p_empty, tuple(p), n)


def zero_payoff_residuals(strategy: MonotoneMixedStrategy, v, c) -> list:
    """``l*c - [p_empty (v-1) + sum_{i<l} p_i (v-(i+1))]`` for ``l = 1..N``.

    Every entry is zero for an equilibrium: each prefix in the support earns
    exactly nothing against the strategy.
    """
    out = []
    for l in range(1, strategy.N + 1):
        gain = strategy.p_empty * (v - 1) + sum(strategy.p[i - 1] * (v - (i + 1)) for i in range(1, l))
        out.append(l * c - gain)
    return out


@dataclass(frozen=True)
class NonexistenceCertificate:
    k: int
    v: float
    c: float
    x_empty: float
    x_1: float
    lhs_neccond2: float
    rhs_neccond2: float
    necessary_holds: bool
    rhs_exact: Fraction | None = None

    @property
    def neccond_lhs(self) -> float:
        """``(k-1) x_1``; an equilibrium needs this to be at least ``x_empty``."""
        return (self.k - 1) * self.x_1

    @property
    def certifies_nonexistence(self) -> bool:
        return not self.necessary_holds


def noneq_certificate(k: int, v, c) -> NonexistenceCertificate:
    """Show numerically that no symmetric monotone equilibrium exists for ``k >= 3``.

    Solves the zero-payoff conditions of ``{1}`` and ``{1,2}`` for the
    masses on ``{}`` and ``{1}``, then evaluates the necessary condition
    that bidding ``{2}`` is unprofitable in its reduced form
    ``2 (1 + 1/(v-2)) >= (1 + 1/(k-1))^(k-1)``.
    """
    if k < 3:
        raise PreconditionError(f"k must be >= 3, got {k}")
    if not v > max(2 * c + 2, 10):
        raise PreconditionError(f"need v > max(2c+2, 10); got v={v}, c={c}")
    root = 1.0 / (k - 1)
    x_empty = (c / (v - 1)) ** root
    x_1 = (c / (v - 2) + c / (v - 1)) ** root - x_empty
    fv = _frac(v)
    lhs = 2 * (1 + 1 / (fv - 2))
    rhs = Fraction(k, k - 1) ** (k - 1)
    return NonexistenceCertificate(
        k=k, v=v, c=c, x_empty=x_empty, x_1=x_1,
        lhs_neccond2=float(lhs), rhs_neccond2=float(rhs),
        necessary_holds=lhs >= rhs, rhs_exact=rhs,
    )


def asymmetric_example_profile(n: int = 2, v=4, c=1, half=Fraction(1, 2)) -> list:
    """Bidder 1 bids ``{1}``; every other bidder plays ``{1,2}`` or nothing, half each.

    Only a construction. Whether it is an equilibrium for given ``(n, v, c)``
    must be checked with :func:`luba.oracle.epsilon_nash_check`; for
    ``n=2, v=4, c=1`` it is.
    """
    if n < 2:
        raise PreconditionError("the example needs at least two bidders")
    first = MixedStrategy.pure([1])
    rest = MixedStrategy.of([((1, 2), half), ((), 1 - half)])
    return [first] + [rest] * (n - 1)


def min_high_bid_bound(v, c) -> int:
    """Smallest integer ``k`` with ``k >= v/(c+1) - 1``.

    With more bidders than ``v/c``, some equilibrium bid reaches this level.
    """
    return math.ceil(_frac(v) / (_frac(c) + 1) - 1)

"""Poisson noise bidders against one strategic bidder.

The noisy crowd places ``N_i ~ Poisson(lambda_i)`` bids on each integer
``i`` independently, with ``lambda_i = v / (c * i**alpha)``. The strategic
bidder bids every integer from 1 to ``b = floor(gamma * sqrt(v/c))``.

``v`` and ``c`` are money (euros by default) and bid integers are cents:
``bid_unit`` converts a bid integer to money when a price is charged.
Sampling is done with numpy's Poisson generator, which uses the
multiplication (inversion-type) method below intensity 10 and PTRS
rejection above it. Trial ``t`` of a run seeded with ``s`` draws from its
own stream ``SeedSequence([s, t])``, so results never depend on how trials
are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import zeta

from luba.backtest import AuctionRecord, BlockStrategySpec, block_bids, write_records
from luba.core import lowest_unique, to_cents
from luba.errors import NoInteriorMaximumError, PreconditionError

TAIL_TOL = 0.01
GAMMA_BRACKET = (0.1, 20.0)


def stream(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


@dataclass(frozen=True)
class NoiseModel:
    v: float
    c: float
    alpha: float
    cutoff: int | None = None
    bid_unit: float = 0.01
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        if self.v <= 0 or self.c <= 0:
            raise PreconditionError("v and c must be positive")
        if self.alpha <= 1:
            # The intensity series diverges, so no finite cutoff exists.
            raise PreconditionError(f"alpha must exceed 1 for a finite bid field, got {self.alpha}")
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", default_cutoff(self.v / self.c, self.alpha, self.tail_tol))

    def lam(self, i):
        return self.v / (self.c * np.power(i, float(self.alpha)))

    @cached_property
    def intensities(self) -> np.ndarray:
        """``lambda_1 .. lambda_cutoff`` as an array (index 0 is integer 1)."""
        return self.lam(np.arange(1, self.cutoff + 1, dtype=float))

    @cached_property
    def suffix_mass(self) -> np.ndarray:
        """``suffix_mass[k]`` is the intensity of integers ``k+1 .. cutoff``."""
        return np.concatenate([np.cumsum(self.intensities[::-1])[::-1], [0.0]])

    @cached_property
    def tail_mass(self) -> float:
        """Total intensity dropped beyond the cutoff."""
        return float(self.v / self.c * zeta(self.alpha, self.cutoff + 1))

    def expected_noise_bids(self) -> float:
        return float(self.intensities.sum())

    def expected_fee_revenue(self) -> float:
        """Seller fee income from noise bids, ``c * sum(lambda_i)`` up to the cutoff."""
        return self.c * self.expected_noise_bids()

    def quoted_revenue(self) -> float:
        """The alternative figure ``2 v sum(1/i^alpha)``; reported for comparison only."""
        return float(2 * self.v * zeta(self.alpha, 1))


def default_cutoff(ratio: float, alpha: float, tol: float = TAIL_TOL) -> int:
    """Smallest K with ``ratio * sum_{i>K} i^-alpha < tol``."""

    def tail(k):
        return ratio * zeta(alpha, k + 1)

    hi = 1
    while tail(hi) >= tol:
        hi *= 2
    lo = hi // 2
    if tail(lo) < tol:
        return max(lo, 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail(mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def sample_bid_field(model: NoiseModel, seed: int, index: int = 0) -> dict:
    """Draw the noise crowd's bids as ``{integer: count}`` (zero counts omitted)."""
    draws = stream(seed, index).poisson(model.intensities)
    hit = np.flatnonzero(draws)
    return {int(i) + 1: int(draws[i]) for i in hit}


@dataclass(frozen=True)
class BruteForceStrategy:
    gamma: float
    b: int

    @classmethod
    def for_model(cls, gamma: float, v: float, c: float) -> "BruteForceStrategy":
        if gamma <= 0:
            raise PreconditionError("gamma must be positive")
        return cls(gamma, int(math.floor(gamma * math.sqrt(v / c) + 1e-12)))


def gain_lower_bound(v, c, gamma):
    if gamma <= 0:
        raise PreconditionError("gamma must be positive")
    return v * math.exp(-1.0 / gamma**2) - gamma * math.sqrt(c * v)


def foc_residual(v, c, gamma) -> float:
    return abs(2.0 / gamma**3 * math.exp(-1.0 / gamma**2) - math.sqrt(c / v))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 500):
    """Maximize ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)


class GammaOptimum(NamedTuple):
    gamma_star: float
    bound_at_star: float


def optimize_gamma(v, c, bracket: tuple = GAMMA_BRACKET, tol: float = 1e-6) -> GammaOptimum:
    if not v / c > 1:
        raise PreconditionError(f"need v/c > 1, got {v / c}")
    lo, hi = bracket
    g, val = golden_section_max(lambda x: gain_lower_bound(v, c, x), lo, hi, tol)
    edge = 10 * tol
    if g - lo < edge or hi - g < edge or val <= max(gain_lower_bound(v, c, lo), gain_lower_bound(v, c, hi)):
        raise NoInteriorMaximumError(f"maximum of the gain bound sits on the bracket edge ({g:.6g})")
    return GammaOptimum(g, val)


@dataclass(frozen=True)
class StrategicReport:
    trials: int
    gamma: float
    b: int
    win_rate: float
    mean_profit: float
    mean_seller_revenue: float
    se_win_rate: float
    se_profit: float
    se_seller_revenue: float
    mean_noise_bids: float
    win_lower_bound: float
    cutoff: int
    tail_mass: float
    expected_fee_revenue: float
    quoted_revenue: float

    def rows(self):
        return list(self.__dict__.items())


def _trial(model: NoiseModel, b: int, rng: np.random.Generator):
    """One auction; returns (strategist won, winning integer or None, noise bid total).

    Only the part of the field needed to settle the winner is drawn one
    integer at a time; the rest enters the bid total as a single Poisson
    draw, which has the same distribution.
    """
    lam = model.intensities
    cutoff = model.cutoff
    end = min(cutoff, max(2 * b, b + 64))
    draws = rng.poisson(lam[:end])
    total = int(draws.sum())
    zeros = np.flatnonzero(draws[:b] == 0)
    if zeros.size:
        won, s_star = True, int(zeros[0]) + 1
    elif b > cutoff:
        # Integers past the cutoff carry no noise at all.
        won, s_star = True, cutoff + 1
    else:
        won, s_star = False, None
        offset, pos = 0, b
        while True:
            ones = np.flatnonzero(draws[pos - offset:] == 1)
            if ones.size:
                s_star = pos + int(ones[0]) + 1
                break
            if end >= cutoff:
                break
            nxt = min(cutoff, 2 * end)
            draws = rng.poisson(lam[end:nxt])
            total += int(draws.sum())
            offset = pos = end
            end = nxt
    rest = float(model.suffix_mass[end])
    if rest > 0:
        total += int(rng.poisson(rest))
    return won, s_star, total


def simulate_strategic(model: NoiseModel, strat: BruteForceStrategy, trials: int, seed: int) -> StrategicReport:
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    b = strat.b
    wins = np.zeros(trials)
    profit = np.zeros(trials)
    seller = np.zeros(trials)
    noise = np.zeros(trials)
    for t in range(trials):
        won, s_star, total = _trial(model, b, stream(seed, t))
        fees = model.c * (total + b)
        price = s_star * model.bid_unit if s_star is not None else 0.0
        wins[t] = won
        profit[t] = (model.v - price if won else 0.0) - model.c * b
        seller[t] = fees + price - model.v if s_star is not None else fees
        noise[t] = total

    def se(x):
        return float(x.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")

    return StrategicReport(
        trials=trials, gamma=strat.gamma, b=b,
        win_rate=float(wins.mean()), mean_profit=float(profit.mean()),
        mean_seller_revenue=float(seller.mean()),
        se_win_rate=se(wins), se_profit=se(profit), se_seller_revenue=se(seller),
        mean_noise_bids=float(noise.mean()),
        win_lower_bound=math.exp(-1.0 / strat.gamma**2) if b > 0 else 0.0,
        cutoff=model.cutoff, tail_mass=model.tail_mass,
        expected_fee_revenue=model.expected_fee_revenue(), quoted_revenue=model.quoted_revenue(),
    )


def synthetic_records(model: NoiseModel, n_auctions: int, block_bidders: Sequence = (), seed: int = 0,
                      item_kind: str = "real_item"):
    """Yield noise-field auctions with optional block bidders layered on top."""
    value_cents = to_cents(model.v)
    cost_cents = to_cents(model.c)
    specs = [s if isinstance(s, BlockStrategySpec) else BlockStrategySpec(*s) for s in block_bidders]
    for k in range(n_auctions):
        counts = sample_bid_field(model, seed, k)
        for spec in specs:
            for j in block_bids(spec, value_cents / 100):
                counts[j] = counts.get(j, 0) + 1
        yield AuctionRecord(
            auction_id=f"syn-{seed}-{k:05d}",
            item_value_cents=value_cents,
            bid_cost_cents=cost_cents,
            counts=dict(sorted(counts.items())),
            winner_bid=lowest_unique(counts),
            item_kind=item_kind,
        )


def export_synthetic_records(model: NoiseModel, n_auctions: int, block_bidders: Sequence = (), seed: int = 0,
                             sink=None) -> int:
    return write_records(synthetic_records(model, n_auctions, block_bidders, seed), sink)

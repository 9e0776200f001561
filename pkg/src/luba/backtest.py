"""Counterfactual block-strategy backtests over recorded auctions.

A record holds the full bid distribution of one auction. The block
strategy ``sigma_{x,y}`` is injected as one extra, last-moment bidder who
places a single bid on every integer between ``x%`` and ``y%`` of the item
value. Since x% of a V-euro item is ``x * V`` cents, ``(0, 2)`` on a 500
euro item bids 1..1000 cents, which at 0.50 euro per bid costs exactly the
item value.

Money inside records is integer cents, so performance ratios are a single
division of exact integer totals.
"""

from __future__ import annotations

import bisect
import io
import json
import math
from contextlib import contextmanager
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from luba.core import lowest_unique, to_cents
from luba.errors import MoneyError, RecordValidationError

ITEM_KINDS = ("real_item", "coupon")
RECORD_FIELDS = ("auction_id", "item_value_eur", "bid_cost_eur", "item_kind", "counts", "winner_bid_cents")
GRID_HEADER = "x_pct,y_pct,performance,wins,auctions"


def _dec(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


@dataclass(frozen=True)
class AuctionRecord:
    auction_id: str
    item_value_cents: int
    bid_cost_cents: int
    counts: Mapping[int, int]
    winner_bid: int | None
    item_kind: str = "real_item"

    @property
    def item_value(self) -> Decimal:
        return Decimal(self.item_value_cents) / 100

    @property
    def bid_cost(self) -> Decimal:
        return Decimal(self.bid_cost_cents) / 100

    @property
    def total_bids(self) -> int:
        return sum(self.counts.values())

    def problems(self) -> list[str]:
        out = []
        if self.item_kind not in ITEM_KINDS:
            out.append(f"item_kind {self.item_kind!r} not in {ITEM_KINDS}")
        if self.item_value_cents <= 0:
            out.append("item value must be positive")
        if self.bid_cost_cents < 0:
            out.append("bid cost must be non-negative")
        for j, k in self.counts.items():
            if not isinstance(j, int) or j < 1:
                out.append(f"bid integer {j!r} must be >= 1")
            if not isinstance(k, int) or k < 1:
                out.append(f"count for {j} must be >= 1, got {k!r}")
        if not out:
            actual = lowest_unique(self.counts)
            if actual != self.winner_bid:
                out.append(f"winner_bid {self.winner_bid} disagrees with bid counts (lowest unique {actual})")
        return out

    def with_recomputed_winner(self) -> "AuctionRecord":
        return AuctionRecord(self.auction_id, self.item_value_cents, self.bid_cost_cents,
                             self.counts, lowest_unique(self.counts), self.item_kind)


# --- record files -----------------------------------------------------------

def record_to_json(rec: AuctionRecord) -> str:
    obj = {
        "auction_id": rec.auction_id,
        "item_value_eur": _money_json(rec.item_value_cents),
        "bid_cost_eur": _money_json(rec.bid_cost_cents),
        "item_kind": rec.item_kind,
        "counts": [[j, k] for j, k in sorted(rec.counts.items())],
        "winner_bid_cents": rec.winner_bid,
    }
    return json.dumps(obj, separators=(", ", ": "))


def _money_json(cents: int):
    return cents // 100 if cents % 100 == 0 else cents / 100


def record_from_obj(obj: dict, strict: bool = True, line: int | None = None) -> AuctionRecord:
    where = f"line {line}: " if line is not None else ""
    missing = [f for f in RECORD_FIELDS if f not in obj]
    if missing:
        raise RecordValidationError(f"{where}missing fields {missing}")
    extra = sorted(set(obj) - set(RECORD_FIELDS))
    if extra and strict:
        raise RecordValidationError(f"{where}unknown fields {extra}")
    try:
        pairs = [(int(j), int(k)) for j, k in obj["counts"]]
    except (TypeError, ValueError) as exc:
        raise RecordValidationError(f"{where}malformed counts: {exc}") from exc
    if [j for j, _ in pairs] != sorted({j for j, _ in pairs}):
        raise RecordValidationError(f"{where}counts must be sorted ascending without repeats")
    winner = obj["winner_bid_cents"]
    try:
        value, cost = to_cents(obj["item_value_eur"]), to_cents(obj["bid_cost_eur"])
    except MoneyError as exc:
        raise RecordValidationError(f"{where}{exc}") from exc
    rec = AuctionRecord(
        auction_id=str(obj["auction_id"]),
        item_value_cents=value,
        bid_cost_cents=cost,
        counts=dict(pairs),
        winner_bid=None if winner is None else int(winner),
        item_kind=obj["item_kind"],
    )
    issues = rec.problems()
    if issues and not strict and all(i.startswith("winner_bid") for i in issues):
        return rec.with_recomputed_winner()
    if issues:
        raise RecordValidationError(f"{where}auction {rec.auction_id}: " + "; ".join(issues))
    return rec


def parse_records(lines: Iterable[str], strict: bool = True) -> list[AuctionRecord]:
    out = []
    for n, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw, parse_float=Decimal)
        except json.JSONDecodeError as exc:
            raise RecordValidationError(f"line {n}: invalid JSON ({exc})") from exc
        out.append(record_from_obj(obj, strict=strict, line=n))
    return out


def read_records(path, strict: bool = True) -> list[AuctionRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh, strict=strict)


@contextmanager
def _text_sink(sink):
    if sink is None or hasattr(sink, "write"):
        yield sink if sink is not None else io.StringIO()
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def write_records(records: Iterable[AuctionRecord], sink) -> int:
    n = 0
    with _text_sink(sink) as fh:
        for rec in records:
            fh.write(record_to_json(rec) + "\n")
            n += 1
    return n


# --- block strategy ---------------------------------------------------------

@dataclass(frozen=True)
class BlockStrategySpec:
    x: Decimal
    y: Decimal

    def __init__(self, x, y):
        object.__setattr__(self, "x", _dec(x))
        object.__setattr__(self, "y", _dec(y))
        if not (0 <= self.x < self.y <= 100):
            raise ValueError(f"need 0 <= x < y <= 100, got x={x}, y={y}")

    def bounds(self, item_value) -> tuple[int, int]:
        v = _dec(item_value)
        return max(1, math.ceil(self.x * v)), math.floor(self.y * v)

    def __str__(self):
        return f"sigma({self.x},{self.y})"


@dataclass(frozen=True)
class InjectionResult:
    won: bool
    winning_bid_after: int | None
    bids_placed: int
    fee_spent: int
    price_paid: int
    value_won: int


def block_bids(spec: BlockStrategySpec, item_value) -> range:
    """Integers (cents) the block strategy bids on for an item worth ``item_value`` euros."""
    lo, hi = spec.bounds(item_value)
    return range(lo, max(lo, hi + 1))


class _RecordIndex:
    """Sorted views of one record for fast interval injection."""

    def __init__(self, rec: AuctionRecord):
        keys = sorted(rec.counts)
        self.uniques = [j for j in keys if rec.counts[j] == 1]
        # Maximal runs of consecutive bid integers: starts[i]..ends[i].
        self.starts, self.ends = [], []
        for j in keys:
            if self.ends and self.ends[-1] == j - 1:
                self.ends[-1] = j
            else:
                self.starts.append(j)
                self.ends.append(j)

    def first_free_from(self, lo: int) -> int:
        i = bisect.bisect_right(self.starts, lo) - 1
        if i >= 0 and self.ends[i] >= lo:
            return self.ends[i] + 1
        return lo

    def first_unique_outside(self, lo: int, hi: int) -> int | None:
        if self.uniques and self.uniques[0] < lo:
            return self.uniques[0]
        i = bisect.bisect_right(self.uniques, hi)
        return self.uniques[i] if i < len(self.uniques) else None


def _result(rec: AuctionRecord, placed: int, injector_min: int | None, other_min: int | None) -> InjectionResult:
    cands = [b for b in (injector_min, other_min) if b is not None]
    after = min(cands) if cands else None
    won = after is not None and after == injector_min
    return InjectionResult(
        won=won,
        winning_bid_after=after,
        bids_placed=placed,
        fee_spent=rec.bid_cost_cents * placed,
        price_paid=after if won else 0,
        value_won=rec.item_value_cents if won else 0,
    )


def inject_interval(rec: AuctionRecord, lo: int, hi: int, index: _RecordIndex | None = None) -> InjectionResult:
    if hi < lo:
        return _result(rec, 0, None, lowest_unique(rec.counts))
    idx = index or _RecordIndex(rec)
    free = idx.first_free_from(lo)
    injector_min = free if free <= hi else None
    return _result(rec, hi - lo + 1, injector_min, idx.first_unique_outside(lo, hi))


def inject_bids(rec: AuctionRecord, bids: Iterable[int]) -> InjectionResult:
    """Inject an arbitrary set of integers (one bid each)."""
    mine = set(bids)
    injector_min = min((j for j in mine if j not in rec.counts), default=None)
    other_min = min((j for j, k in rec.counts.items() if k == 1 and j not in mine), default=None)
    return _result(rec, len(mine), injector_min, other_min)


def inject(rec: AuctionRecord, spec: BlockStrategySpec) -> InjectionResult:
    lo, hi = spec.bounds(rec.item_value)
    return inject_interval(rec, lo, hi)


# --- grid -------------------------------------------------------------------

@dataclass(frozen=True)
class GridCell:
    x: Decimal
    y: Decimal
    wins: int
    auctions: int
    value_won: int
    fees: int
    prices: int

    def performance(self, denominator: str = "total") -> float | None:
        spend = self.fees + (self.prices if denominator == "total" else 0)
        if denominator not in ("total", "fees"):
            raise ValueError(f"denominator must be 'total' or 'fees', got {denominator!r}")
        return None if spend == 0 else self.value_won / spend


def pct_range(start, stop, step) -> list[Decimal]:
    """Inclusive decimal range, e.g. ``pct_range("0.1", "2.0", "0.1")``."""
    a, b, s = _dec(start), _dec(stop), _dec(step)
    if s <= 0:
        raise ValueError("step must be positive")
    out = []
    while a <= b:
        out.append(a)
        a += s
    return out


DEFAULT_X = pct_range("0.1", "2.0", "0.1")


def default_y_for(x: Decimal) -> list[Decimal]:
    return pct_range(x + Decimal("0.1"), "2.1", "0.1")


def performance_grid(records: Sequence[AuctionRecord], x_values=None, y_values=None) -> list[GridCell]:
    """Evaluate ``sigma_{x,y}`` on every record for each pair with ``x < y``.

    ``y_values=None`` uses ``x+0.1 .. 2.1`` in steps of 0.1 for each row.
    """
    if not records:
        raise ValueError("records must be nonempty")
    xs = [_dec(x) for x in (x_values if x_values is not None else DEFAULT_X)]
    indexes = [(r, _RecordIndex(r)) for r in records]
    cells = []
    for x in xs:
        ys = default_y_for(x) if y_values is None else [_dec(y) for y in y_values]
        for y in ys:
            if not x < y:
                continue
            spec = BlockStrategySpec(x, y)
            wins = value = fees = prices = 0
            for rec, idx in indexes:
                lo, hi = spec.bounds(rec.item_value)
                res = inject_interval(rec, lo, hi, idx)
                wins += res.won
                value += res.value_won
                fees += res.fee_spent
                prices += res.price_paid
            cells.append(GridCell(x, y, wins, len(records), value, fees, prices))
    return cells


def format_sig(x, digits: int = 6) -> str:
    if x is None:
        return "nan"
    return format(float(x), f".{digits}g")


def grid_csv(cells: Sequence[GridCell], denominator: str = "total") -> str:
    lines = [GRID_HEADER]
    for cell in cells:
        lines.append(",".join([
            format_sig(cell.x), format_sig(cell.y), format_sig(cell.performance(denominator)),
            str(cell.wins), str(cell.auctions),
        ]))
    return "\n".join(lines) + "\n"


# --- statistics -------------------------------------------------------------

@dataclass(frozen=True)
class CDF:
    points: list  # [(ratio_percent, cumulative_fraction), ...]
    excluded: int


def winning_bid_cdf(records: Sequence[AuctionRecord]) -> CDF:
    """Empirical CDF of the winning bid as a percentage of item value."""
    ratios = sorted(Fraction(r.winner_bid, r.item_value_cents) * 100
                    for r in records if r.winner_bid is not None)
    excluded = len(records) - len(ratios)
    points = []
    n = len(ratios)
    for i, q in enumerate(ratios, start=1):
        if i < n and ratios[i] == q:
            continue
        points.append((float(q), i / n))
    return CDF(points, excluded)


def fraction_below(cdf: CDF, pct: float) -> float:
    """Share of winning-bid ratios strictly below ``pct`` percent."""
    frac = 0.0
    for q, f in cdf.points:
        if q < pct:
            frac = f
    return frac


def lowest_free_integer(rec: AuctionRecord) -> int:
    j = 1
    while j in rec.counts:
        j += 1
    return j


def multiplicity_histogram(rec: AuctionRecord, lo: int, hi: int) -> list[tuple[int, int]]:
    if lo > hi:
        raise ValueError("need lo <= hi")
    return [(j, rec.counts.get(j, 0)) for j in range(lo, hi + 1)]


def z_statistic(rec: AuctionRecord, min_bids: int = 3) -> int:
    """Largest m such that every integer below m got at least ``min_bids`` bids."""
    m = 1
    while rec.counts.get(m, 0) >= min_bids:
        m += 1
    return m


def seller_profit(rec: AuctionRecord) -> int:
    """Seller profit in cents against the published item value."""
    fees = rec.bid_cost_cents * rec.total_bids
    if rec.winner_bid is None:
        return fees
    return fees + rec.winner_bid - rec.item_value_cents


@dataclass(frozen=True)
class SellerStats:
    auctions: int
    mean_profit: float
    sd_profit: float
    min_profit: float
    max_profit: float
    share_positive: float


def seller_stats(records: Sequence[AuctionRecord]) -> SellerStats:
    """Profit summary in euros; ``sd_profit`` is the sample standard deviation."""
    profits = [seller_profit(r) for r in records]
    if not profits:
        raise ValueError("no records")
    n = len(profits)
    mean = Fraction(sum(profits), n)
    sd = math.sqrt(sum((Fraction(p) - mean) ** 2 for p in profits) / (n - 1)) if n > 1 else 0.0
    return SellerStats(
        auctions=n,
        mean_profit=float(mean) / 100,
        sd_profit=sd / 100,
        min_profit=min(profits) / 100,
        max_profit=max(profits) / 100,
        share_positive=sum(p > 0 for p in profits) / n,
    )

"""Dynamic LUBA engine with per-bid feedback and pluggable bidding agents.

Every submitted bid gets one of three answers: it is the lowest unique bid,
it is unique but not the lowest, or it is not unique. Bidders may later ask
for the current status of their own bids only.

Agents act in round-robin order once per tick. The scheduler and all agent
randomness are driven by the run seed, so a transcript is a pure function of
``(agents, config, horizon, seed)``.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from luba.backtest import AuctionRecord, BlockStrategySpec, block_bids, z_statistic
from luba.core import AuctionConfig, Outcome, resolve, to_cents
from luba.errors import (AuctionClosedError, BudgetExhaustedError, DuplicateBidError, DynamicAuctionError,
                         EmptyHistoryError, NotOwnBidError, PreconditionError)


class BidFeedback(str, Enum):
    LOWEST_UNIQUE = "LOWEST_UNIQUE"
    UNIQUE_NOT_LOWEST = "UNIQUE_NOT_LOWEST"
    NOT_UNIQUE = "NOT_UNIQUE"


class DynamicAuctionState:
    """Evolving bid book.

    ``book`` maps each amount to its ``(bidder, arrival index)`` list. Budgets
    are in cents and only enforced for bidders registered in ``budgets``.
    """

    def __init__(self, config: AuctionConfig, horizon: int, budgets: dict | None = None):
        if horizon < 1:
            raise PreconditionError("horizon must be >= 1")
        self.config = config
        self.horizon = horizon
        self.clock = 0
        self.book: dict[int, list] = {}
        self.budgets = dict(budgets or {})
        self.spent: dict = defaultdict(int)
        self._own: dict = defaultdict(set)
        self._arrivals = 0
        self._unique: set = set()
        self._heap: list = []

    # queries
    def count(self, amount: int) -> int:
        return len(self.book.get(amount, ()))

    def min_unique(self) -> int | None:
        # Counts only grow, so an amount that stops being unique never returns.
        while self._heap and self._heap[0] not in self._unique:
            heapq.heappop(self._heap)
        return self._heap[0] if self._heap else None

    def _status(self, amount: int) -> BidFeedback:
        if self.count(amount) >= 2:
            return BidFeedback.NOT_UNIQUE
        if amount == self.min_unique():
            return BidFeedback.LOWEST_UNIQUE
        return BidFeedback.UNIQUE_NOT_LOWEST

    def status_of(self, bidder, amount: int) -> BidFeedback:
        if amount not in self._own.get(bidder, ()):
            raise NotOwnBidError(f"{bidder} has no bid on {amount}")
        return self._status(amount)

    def own_bids(self, bidder) -> frozenset:
        return frozenset(self._own.get(bidder, ()))

    def remaining_budget(self, bidder) -> int | None:
        if bidder not in self.budgets or self.budgets[bidder] is None:
            return None
        return self.budgets[bidder] - self.spent[bidder]

    def bidders(self) -> list:
        """Bidders in order of their first bid."""
        first = {}
        for amount, entries in self.book.items():
            for who, arrival in entries:
                if who not in first or arrival < first[who]:
                    first[who] = arrival
        return sorted(first, key=first.get)

    # transitions
    def advance(self, tick: int) -> None:
        if tick < self.clock:
            raise PreconditionError("clock cannot run backwards")
        self.clock = tick

    def submit(self, bidder, amount: int) -> BidFeedback:
        if self.clock >= self.horizon:
            raise AuctionClosedError(f"auction closed at tick {self.horizon}")
        if not isinstance(amount, (int, np.integer)) or amount < 1:
            raise PreconditionError(f"bid amount must be a positive integer, got {amount!r}")
        amount = int(amount)
        if amount in self._own[bidder]:
            raise DuplicateBidError(f"{bidder} already bid {amount}")
        left = self.remaining_budget(bidder)
        if left is not None and left < self.config.c:
            raise BudgetExhaustedError(f"{bidder} has {left} cents left, a bid costs {self.config.c}")
        entries = self.book.setdefault(amount, [])
        entries.append((bidder, self._arrivals))
        self._arrivals += 1
        self._own[bidder].add(amount)
        self.spent[bidder] += self.config.c
        if len(entries) == 1:
            self._unique.add(amount)
            heapq.heappush(self._heap, amount)
        elif len(entries) == 2:
            self._unique.discard(amount)
        return self._status(amount)

    def outcome(self) -> tuple[Outcome, list]:
        """Static resolution of the book; returns the outcome and bidder order."""
        order = self.bidders()
        sets: dict = {b: set() for b in order}
        for amount, entries in self.book.items():
            for who, _ in entries:
                sets[who].add(amount)
        return resolve([frozenset(sets[b]) for b in order]), order


class BidderView:
    """What one agent may see: its own bids, their status, and public parameters."""

    def __init__(self, state: DynamicAuctionState, bidder):
        self._state = state
        self.bidder = bidder

    @property
    def clock(self) -> int:
        return self._state.clock

    @property
    def horizon(self) -> int:
        return self._state.horizon

    @property
    def config(self) -> AuctionConfig:
        return self._state.config

    def own_bids(self) -> frozenset:
        return self._state.own_bids(self.bidder)

    def status(self, amount: int) -> BidFeedback:
        return self._state.status_of(self.bidder, amount)

    def remaining_budget(self) -> int | None:
        return self._state.remaining_budget(self.bidder)


def calibrate_x(history: Sequence[AuctionRecord], q) -> int:
    """Lower empirical ``q``-quantile of the z-statistic over past auctions."""
    if not history:
        raise EmptyHistoryError("calibration needs at least one past auction")
    fq = Fraction(str(q)) if isinstance(q, float) else Fraction(q)
    if not 0 < fq < 1:
        raise PreconditionError(f"q must lie in (0, 1), got {q}")
    zs = sorted(z_statistic(r) for r in history)
    return zs[max(0, math.ceil(fq * len(zs)) - 1)]


# --- agents -----------------------------------------------------------------

@dataclass
class AgentSpec:
    kind: str
    params: dict = field(default_factory=dict)
    budget: float | None = None  # euros; None means unlimited
    name: str | None = None

    KINDS = ("noisy_poisson", "block", "interval_dynamic")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise PreconditionError(f"unknown agent kind {self.kind!r}")
        if self.budget is not None and self.budget < 0:
            raise PreconditionError("budget must be >= 0")
        q = self.params.get("q")
        if q is not None and not 0 < q < 1:
            raise PreconditionError("q must lie in (0, 1)")

    @classmethod
    def from_obj(cls, obj: dict) -> "AgentSpec":
        obj = dict(obj)
        kind = obj.pop("kind")
        budget = obj.pop("budget", None)
        name = obj.pop("name", None)
        return cls(kind, obj, budget, name)


class Agent:
    def __init__(self, name: str, budget_cents: int | None):
        self.name = name
        self.budget_cents = budget_cents

    def act(self, view: BidderView, rng: np.random.Generator) -> list:
        """Return ``[(bidder_id, amount), ...]`` to submit this tick."""
        return []

    def owns(self, bidder) -> bool:
        return bidder == self.name


class NoisyCrowd(Agent):
    """Many single-bid phantom bidders with Poisson counts per integer.

    The field is drawn at tick 0 with intensity ``scale * v / (c i^alpha)``
    and each bid is scheduled at a uniformly random tick.
    """

    def __init__(self, name, budget_cents, alpha: float, scale: float = 1.0, cutoff: int | None = None):
        super().__init__(name, budget_cents)
        self.alpha = alpha
        self.scale = scale
        self.cutoff = cutoff
        self._plan: dict[int, list] | None = None

    def owns(self, bidder) -> bool:
        return isinstance(bidder, str) and bidder.startswith(self.name + "#")

    def _draw(self, view: BidderView, rng):
        from luba.behavioral import default_cutoff

        cfg = view.config
        ratio = self.scale * cfg.v / cfg.c
        cutoff = self.cutoff or default_cutoff(ratio, self.alpha)
        lam = ratio / np.power(np.arange(1, cutoff + 1, dtype=float), self.alpha)
        draws = rng.poisson(lam)
        amounts = np.repeat(np.arange(1, cutoff + 1), draws)
        if self.budget_cents is not None:
            amounts = amounts[: self.budget_cents // cfg.c]
        ticks = rng.integers(0, view.horizon, size=amounts.size)
        plan = defaultdict(list)
        for k, (a, t) in enumerate(zip(amounts.tolist(), ticks.tolist())):
            plan[t].append((f"{self.name}#{k}", a))
        self._plan = plan

    def act(self, view, rng):
        if self._plan is None:
            self._draw(view, rng)
        return self._plan.get(view.clock, [])


class BlockAgent(Agent):
    """Bids every integer of ``sigma_{x,y}`` at one tick (default: the last)."""

    def __init__(self, name, budget_cents, x, y, tick: int | None = None):
        super().__init__(name, budget_cents)
        self.spec = BlockStrategySpec(x, y)
        self.tick = tick

    def act(self, view, rng):
        when = view.horizon - 1 if self.tick is None else self.tick
        if view.clock != when:
            return []
        amounts = list(block_bids(self.spec, Decimal(view.config.v) / 100))
        return [(self.name, a) for a in _affordable(amounts, view)]


def _affordable(amounts: list, view: BidderView) -> list:
    left = view.remaining_budget()
    if left is None:
        return amounts
    return amounts[: max(0, left // view.config.c)]


class IntervalDynamicAgent(Agent):
    """Probe for a free number early, then kill everything between ``x`` and it.

    ``x`` is calibrated from past auctions (:func:`calibrate_x`) unless given.
    Probes are uniform over ``(x, probe_high * x]``.
    """

    def __init__(self, name, budget_cents, q=0.95, probe_count=10, probe_budget=None, end_margin=1,
                 x=None, history=None, extend_above=False, probe_high=3):
        super().__init__(name, budget_cents)
        if x is None:
            x = calibrate_x(history or [], q)
        if x < 1:
            raise PreconditionError("x must be >= 1")
        if end_margin < 0:
            raise PreconditionError("end_margin must be >= 0")
        self.q = q
        self.x = int(x)
        self.probe_count = int(probe_count)
        self.probe_budget = probe_budget  # euros
        self.end_margin = int(end_margin)
        self.extend_above = extend_above
        self.probe_high = probe_high
        self.probes_sent = 0

    def act(self, view, rng):
        return [(self.name, a) for a in interval_dynamic_policy(self, view, rng)]


def interval_dynamic_policy(agent: IntervalDynamicAgent, view: BidderView, rng: np.random.Generator) -> list:
    """Amounts the interval strategist submits at the current tick."""
    phase1 = view.horizon - agent.end_margin
    own = view.own_bids()
    c = view.config.c
    if view.clock < phase1:
        cap = agent.probe_count
        if agent.probe_budget is not None:
            cap = min(cap, to_cents(agent.probe_budget) // c)
        due = min(cap, math.ceil(cap * (view.clock + 1) / phase1))
        want = due - agent.probes_sent
        lo, hi = agent.x + 1, agent.probe_high * agent.x
        pool = [a for a in range(lo, hi + 1) if a not in own]
        if want <= 0 or not pool:
            return []
        picks = rng.choice(len(pool), size=min(want, len(pool)), replace=False)
        amounts = _affordable(sorted(pool[i] for i in picks), view)
        agent.probes_sent += len(amounts)
        return amounts

    live = sorted(a for a in own if view.status(a) is not BidFeedback.NOT_UNIQUE)
    if not live:
        return []
    y = live[0]
    wanted = [a for a in range(agent.x, y) if a not in own]
    if agent.extend_above and len(live) > 1:
        # Back up y with the next unique bid by clearing the gap between them.
        wanted += [a for a in range(y + 1, live[1]) if a not in own]
    return _affordable(wanted, view)


def make_agent(spec: AgentSpec, index: int, history: Sequence[AuctionRecord] | None = None) -> Agent:
    name = spec.name or f"agent{index}"
    budget = None if spec.budget is None else to_cents(spec.budget)
    p = dict(spec.params)
    if spec.kind == "noisy_poisson":
        return NoisyCrowd(name, budget, alpha=p.get("alpha", 2.0), scale=p.get("scale", 1.0),
                          cutoff=p.get("cutoff"))
    if spec.kind == "block":
        return BlockAgent(name, budget, p["x"], p["y"], tick=p.get("tick"))
    return IntervalDynamicAgent(
        name, budget, q=p.get("q", 0.95), probe_count=p.get("probe_count", 10),
        probe_budget=p.get("probe_budget"), end_margin=p.get("end_margin", 1), x=p.get("x"),
        history=history, extend_above=p.get("extend_above", False), probe_high=p.get("probe_high", 3))


# --- runs -------------------------------------------------------------------

@dataclass
class AgentMoney:
    fees: int = 0
    price: int = 0
    value_won: int = 0
    bids: int = 0

    @property
    def net(self) -> int:
        return self.value_won - self.price - self.fees


@dataclass
class AuctionRun:
    config: AuctionConfig
    horizon: int
    seed: int
    budgets: dict
    events: list
    outcome: Outcome
    bidders: list
    money: dict
    winner_agent: str | None

    @property
    def winner_id(self):
        return None if self.outcome.winner is None else self.bidders[self.outcome.winner]

    def header(self) -> dict:
        return {"v_cents": self.config.v, "c_cents": self.config.c, "horizon": self.horizon,
                "seed": self.seed, "budgets": self.budgets}

    def footer(self) -> dict:
        return {
            "winner": self.winner_id,
            "winner_agent": self.winner_agent,
            "winning_bid_cents": self.outcome.winning_bid,
            "unique_count": len(self.outcome.unique_set),
            "money": {k: {"fees_cents": m.fees, "price_cents": m.price, "value_won_cents": m.value_won,
                          "bids": m.bids, "net_cents": m.net} for k, m in self.money.items()},
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps({"header": self.header()})]
        lines += [json.dumps(e) for e in self.events]
        lines.append(json.dumps({"outcome": self.footer()}))
        return "\n".join(lines) + "\n"


def _event(tick, bidder, amount, feedback=None, error=None) -> dict:
    ev = {"tick": tick, "bidder": bidder, "amount_cents": amount,
          "feedback": feedback.value if feedback is not None else None}
    if error is not None:
        ev["error"] = error
    return ev


def run_auction(agents: Sequence[AgentSpec], config: AuctionConfig, horizon: int, seed: int,
                history: Sequence[AuctionRecord] | None = None) -> AuctionRun:
    if not agents:
        raise PreconditionError("need at least one agent")
    from luba.behavioral import stream

    built = [make_agent(spec, i, history) for i, spec in enumerate(agents)]
    if len({a.name for a in built}) != len(built):
        raise PreconditionError("agent names must be distinct")
    budgets = {a.name: a.budget_cents for a in built if a.budget_cents is not None}
    state = DynamicAuctionState(config, horizon, budgets)
    rngs = [stream(seed, i) for i in range(len(built))]
    events = []
    for tick in range(horizon):
        state.advance(tick)
        for agent, rng in zip(built, rngs):
            for bidder, amount in agent.act(BidderView(state, agent.name), rng):
                try:
                    fb = state.submit(bidder, amount)
                    events.append(_event(tick, bidder, int(amount), fb))
                except DynamicAuctionError as exc:
                    events.append(_event(tick, bidder, int(amount), error=exc.kind))
    state.advance(horizon)
    outcome, order = state.outcome()
    money = {a.name: AgentMoney() for a in built}
    owner_of = {}
    for bidder in order:
        owner_of[bidder] = next((a.name for a in built if a.owns(bidder)), None)
    for bidder, spent in state.spent.items():
        m = money[owner_of[bidder]]
        m.fees += spent
        m.bids += spent // config.c if config.c else len(state.own_bids(bidder))
    winner_agent = None
    if outcome.has_winner:
        winner_agent = owner_of[order[outcome.winner]]
        money[winner_agent].price += outcome.winning_bid
        money[winner_agent].value_won += config.v
    return AuctionRun(config, horizon, seed, budgets, events, outcome, order, money, winner_agent)


def replay(events: Iterable[dict], config: AuctionConfig, horizon: int, budgets: dict | None = None):
    """Feed a transcript back through :meth:`DynamicAuctionState.submit`.

    Returns ``(state, mismatches)`` where ``mismatches`` lists the events
    whose recorded feedback or error differs from the replayed one.
    """
    state = DynamicAuctionState(config, horizon, budgets)
    bad = []
    for ev in events:
        state.advance(ev["tick"])
        try:
            got = state.submit(ev["bidder"], ev["amount_cents"]).value
            err = None
        except DynamicAuctionError as exc:
            got, err = None, exc.kind
        if got != ev["feedback"] or err != ev.get("error"):
            bad.append(ev)
    return state, bad


def read_transcript(lines: Iterable[str]):
    """Parse a transcript file into ``(header, events, footer)``."""
    header, footer, events = None, None, []
    for raw in lines:
        if not raw.strip():
            continue
        obj = json.loads(raw)
        if "header" in obj:
            header = obj["header"]
        elif "outcome" in obj:
            footer = obj["outcome"]
        else:
            events.append(obj)
    return header, events, footer

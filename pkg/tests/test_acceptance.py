"""Acceptance criteria, one test per criterion.

Each test runs its criterion at the stated tolerance; the terminal summary
prints a PASS/FAIL line per criterion (see conftest.py).
"""

import hashlib
import math
import random
import shutil
import time
from decimal import Decimal
from fractions import Fraction as F
from pathlib import Path

from helpers import auction_6787, brute_inject, random_record, small_game_equilibria
from luba.backtest import (BlockStrategySpec, block_bids, inject, inject_bids, lowest_free_integer,
                           multiplicity_histogram)
from luba.behavioral import BruteForceStrategy, NoiseModel, foc_residual, optimize_gamma, simulate_strategic
from luba.cli import run
from luba.core import AuctionConfig, resolve
from luba.dynamic import AgentSpec, replay, run_auction
from luba.equilibrium import (asymmetric_example_profile, noneq_certificate, two_bidder_symmetric,
                              zero_payoff_residuals)
from luba.oracle import StrategySpace, epsilon_nash_check, expected_payoffs, expected_seller_payoff

DATA = Path(__file__).parent / "data"


def test_ac1_two_bidder_closed_form(capsys):
    t0 = time.perf_counter()
    assert run(["eq", "two-bidder", "--v", "4", "--c", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["N=2", "∅\t0.333333", "{1}\t0.5", "{1,2}\t0.166667"]
    s = two_bidder_symmetric(4, 1, exact=True)
    assert (s.N, s.p_empty, s.p) == (2, F(1, 3), (F(1, 2), F(1, 6)))
    m = s.to_mixed()
    rep = epsilon_nash_check([m, m], StrategySpace(6, 6), AuctionConfig(2, 4, 1), eps=1e-9)
    assert rep.is_eq and rep.worst_gain <= 1e-9
    assert time.perf_counter() - t0 < 1.0


def test_ac2_equilibrium_sweep():
    t0 = time.perf_counter()
    checked = 0
    for v in range(3, 31):
        for c in range(1, v - 1):
            s = two_bidder_symmetric(v, c)
            assert max(abs(r) for r in zero_payoff_residuals(s, v, c)) <= 1e-9, (v, c)
            m = s.to_mixed()
            space = StrategySpace(s.N + 2, s.N + 2)
            rep = epsilon_nash_check([m, m], space, AuctionConfig(2, v, c), eps=1e-9)
            assert rep.is_eq, (v, c, rep.worst_gain)
            checked += 1
    assert checked == sum(v - 2 for v in range(3, 31))
    assert time.perf_counter() - t0 < 120


def test_ac3_worked_example():
    prof = asymmetric_example_profile(2, 4, 1)
    cfg = AuctionConfig(2, 4, 1)
    assert expected_payoffs(prof, cfg) == [F(1, 2), 0]
    assert expected_seller_payoff(prof, cfg) == F(-1, 2)
    assert epsilon_nash_check(prof, StrategySpace(6, 6), cfg, eps=1e-9).is_eq


def test_ac4_nonexistence_certificates():
    covered = 0
    for k in range(3, 11):
        for v in (11, 100, 1000):
            for c in (1, 50, 200):
                if not v > max(2 * c + 2, 10):
                    continue
                cert = noneq_certificate(k, v, c)
                assert cert.lhs_neccond2 < cert.rhs_neccond2, (k, v, c)
                assert cert.certifies_nonexistence
                if k == 3:
                    assert cert.rhs_exact == F(9, 4)
                covered += 1
    assert covered == 8 * 5  # (11,1), (100,1), (1000,1), (1000,50), (1000,200)


def test_ac5_small_game_properties():
    found = 0
    for n in (2, 3, 4):
        for v in range(2, 7):
            cfg = AuctionConfig(n, v, 1)
            for prof in small_game_equilibria(n, v, 1, 4):
                found += 1
                assert expected_seller_payoff(prof, cfg) <= 1e-9
                if n > v / 1:
                    assert min(expected_payoffs(prof, cfg)) <= 1e-9
                assert max(s.max_bid() for s in prof) >= v / 2 - 1
    assert found > 0


def test_ac6_behavioral_model():
    t0 = time.perf_counter()
    opt = optimize_gamma(500, 0.5)
    assert 3.85 <= opt.gamma_star <= 4.00
    assert foc_residual(500, 0.5, opt.gamma_star) < 1e-6
    assert 405 <= opt.bound_at_star <= 408
    model = NoiseModel(500, 0.5, 2)
    rep = simulate_strategic(model, BruteForceStrategy.for_model(opt.gamma_star, 500, 0.5), 10**5, seed=2024)
    assert rep.win_rate >= math.exp(-1 / opt.gamma_star**2) - 3 * rep.se_win_rate
    assert time.perf_counter() - t0 < 30


def test_ac7_backtest_mechanics():
    rec = auction_6787()  # the generator asserts the multiplicity constraints
    assert rec.item_value == Decimal(1049)
    assert all(j in rec.counts for j in range(1, 2372)) and rec.counts[61] == 1
    assert sorted(j for j, k in rec.counts.items() if k == 1)[0] == 61
    assert lowest_free_integer(rec) == 2372
    res = inject(rec, BlockStrategySpec(0, 2))
    assert not res.won and res.bids_placed == 2098
    others = {j: k for j, k in rec.counts.items() if j != 61}
    assert brute_inject(others, {61}) == (True, 61)
    ks = [k for _, k in multiplicity_histogram(rec, 61, 2371)]
    assert max(ks) == 6 and ks.count(6) == 2 and ks.count(5) == 5


def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def test_ac8_frozen_corpus_reproducible(tmp_path):
    sums = dict(line.split()[::-1] for line in (DATA / "SHA256SUMS").read_text().splitlines())
    corpus = tmp_path / "corpus_seed42.jsonl"
    assert run(["gen", "synthetic", "--n", "100", "--v", "500", "--c", "0.5", "--alpha", "2", "--seed", "42",
                "--out", str(corpus)]) == 0
    assert _sha(corpus) == sums["corpus_seed42.jsonl"]
    grid = tmp_path / "grid_seed42.csv"
    assert run(["backtest", "grid", "--records", str(corpus), "--out", str(grid)]) == 0
    assert _sha(grid) == sums["grid_seed42.csv"]
    low = tmp_path / "grid_low_seed42.csv"
    assert run(["backtest", "grid", "--records", str(corpus), "--x-grid", "0:0.1:0.02",
                "--y-grid", "0.02:0.2:0.02", "--out", str(low)]) == 0
    assert _sha(low) == sums["grid_low_seed42.csv"]
    stats = tmp_path / "stats_seed42"
    assert run(["backtest", "stats", "--records", str(corpus), "--cdf", "--out-dir", str(stats)]) == 0
    for name in ("cdf.csv", "seller.csv"):
        assert _sha(stats / name) == sums[f"stats_seed42/{name}"]
    # manifests replay byte-for-byte
    first = grid.read_bytes()
    grid.unlink()
    assert run(["replay", str(grid) + ".manifest.json"]) == 0
    assert grid.read_bytes() == first
    kept = tmp_path / "kept.jsonl"
    shutil.copy(corpus, kept)
    assert run(["replay", str(corpus) + ".manifest.json"]) == 0
    assert corpus.read_bytes() == kept.read_bytes()

    rng = random.Random(20240601)
    for n in range(10**4):
        rec = random_record(rng, f"r{n}")
        x = Decimal(rng.randint(0, 40)) / 20
        y = x + Decimal(rng.randint(1, 40)) / 20
        spec = BlockStrategySpec(x, y)
        got = inject(rec, spec)
        bids = list(block_bids(spec, rec.item_value))
        assert (got.won, got.winning_bid_after) == brute_inject(rec.counts, bids), (rec, spec)
        assert got == inject_bids(rec, bids)


def _random_agents(rng):
    agents = [AgentSpec("noisy_poisson", {"alpha": rng.choice([2.0, 3.0]), "scale": rng.choice([0.05, 0.2])})]
    for i in range(rng.randint(0, 3)):
        budget = rng.choice([None, 5, 20])
        if rng.random() < 0.5:
            x = Decimal(rng.choice(["0", "0.01", "0.05"]))
            params = {"x": str(x), "y": str(x + Decimal(rng.choice(["0.02", "0.1"]))), "tick": rng.choice([None, 0])}
            agents.append(AgentSpec("block", params, budget, name=f"s{i}"))
        else:
            params = {"x": rng.randint(1, 20), "probe_count": rng.randint(0, 8), "end_margin": rng.randint(0, 2)}
            agents.append(AgentSpec("interval_dynamic", params, budget, name=f"s{i}"))
    return agents


def test_ac9_dynamic_engine():
    t0 = time.perf_counter()
    cfg = AuctionConfig(2, 10000, 50)
    rng = random.Random(99)
    for seed in range(10**3):
        horizon = rng.randint(1, 8)
        result = run_auction(_random_agents(rng), cfg, horizon, seed)
        state, bad = replay(result.events, cfg, horizon, result.budgets)
        assert bad == [], seed
        # static resolution of the book rebuilt from accepted transcript events
        sets = {}
        for ev in result.events:
            if ev["feedback"] is not None:
                sets.setdefault(ev["bidder"], set()).add(ev["amount_cents"])
        static = resolve([frozenset(sets[b]) for b in result.bidders])
        assert static == result.outcome == state.outcome()[0], seed
    pair = [AgentSpec("block", {"x": 0, "y": 2}), AgentSpec("block", {"x": 0, "y": 2})]
    for horizon in (1, 3, 6):
        for seed in range(10):
            assert run_auction(pair, cfg, horizon, seed).outcome.winner is None
    assert time.perf_counter() - t0 < 10

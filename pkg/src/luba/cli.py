"""Command-line interface.

Exit codes: 0 success, 1 domain error (degenerate input, failed check),
2 usage error. Every file written with ``--out`` gets a sibling
``<file>.manifest.json``; ``luba replay <manifest>`` reruns it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from luba import __version__
from luba.errors import LubaError


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None
    tool_version: str
    input_digests: list = field(default_factory=list)
    argv: list = field(default_factory=list)

    def write(self, out_path) -> Path:
        path = Path(str(out_path) + ".manifest.json")
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return f"sha256:{h.hexdigest()}"


# --- argument types ---------------------------------------------------------

def _bid_units(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _euros(text):
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a money amount: {text!r}")
    if d != d.quantize(Decimal("0.01")) or d < 0:
        raise argparse.ArgumentTypeError(f"money needs at most 2 decimals and must be >= 0: {text!r}")
    return d


def _pair(text):
    try:
        x, y = text.split(",")
        return Decimal(x), Decimal(y)
    except (ValueError, InvalidOperation):
        raise argparse.ArgumentTypeError(f"expected x,y percentages, got {text!r}")


def _range3(text):
    try:
        a, b, s = (Decimal(p) for p in text.split(":"))
    except (ValueError, InvalidOperation):
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    return a, b, s


def _lohi(text):
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi integers, got {text!r}")
    if lo > hi:
        raise argparse.ArgumentTypeError("need lo <= hi")
    return lo, hi


def _fmt(x) -> str:
    return format(float(x), ".6g")


def _emit(text: str, out, manifest: RunManifest | None):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
        if manifest is not None:
            manifest.write(out)
    else:
        sys.stdout.write(text)


def _manifest(args, params: dict, inputs=()) -> RunManifest:
    return RunManifest(
        command=f"{args.group} {args.cmd}",
        parameters={k: str(v) if v is not None else None for k, v in sorted(params.items())},
        seed=getattr(args, "seed", None),
        tool_version=__version__,
        input_digests=[file_digest(p) for p in inputs if p],
        argv=list(args._argv),
    )


# --- eq ---------------------------------------------------------------------

def cmd_eq_two_bidder(args):
    from luba.equilibrium import two_bidder_symmetric

    strat = two_bidder_symmetric(args.v, args.c, exact=True)
    if args.out:
        lines = ["set,probability"] + [f'"{label}",{_fmt(p)}' for label, p in strat.rows()]
        _emit("\n".join(lines) + "\n", args.out, _manifest(args, {"v": args.v, "c": args.c}))
    print(f"N={strat.N}")
    for label, p in strat.rows():
        print(f"{label}\t{_fmt(p)}")
    return 0


def cmd_eq_noneq(args):
    from luba.equilibrium import noneq_certificate

    cert = noneq_certificate(args.k, float(args.v), float(args.c))
    print(f"k={cert.k} v={_fmt(cert.v)} c={_fmt(cert.c)}")
    print(f"x_empty={cert.x_empty:.6g} x_1={cert.x_1:.6g} (k-1)x_1={cert.neccond_lhs:.6g}")
    rel = "<" if cert.lhs_neccond2 < cert.rhs_neccond2 else ">="
    print(f"lhs {cert.lhs_neccond2:.6g} {rel} rhs {cert.rhs_neccond2:.6g}")
    if cert.certifies_nonexistence:
        print("no monotone symmetric equilibrium")
        return 0
    print("necessary condition holds: certificate inconclusive")
    return 1


def load_profile(path):
    """Profile file: ``{"strategies": [[[bids], p], ...] per player}``; p may be "1/3"."""
    from luba.oracle import MixedStrategy

    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    players = obj["strategies"] if isinstance(obj, dict) else obj
    return [MixedStrategy.of([(bids, Fraction(str(p))) for bids, p in player]) for player in players]


def cmd_eq_verify(args):
    from luba.core import AuctionConfig
    from luba.oracle import StrategySpace, epsilon_nash_check, expected_seller_payoff

    profile = load_profile(args.profile)
    cfg = AuctionConfig(len(profile), args.v, args.c, promo=True)
    rep = epsilon_nash_check(profile, StrategySpace(args.max_bid, args.max_set), cfg, eps=args.eps)
    seller = expected_seller_payoff(profile, cfg)
    print("payoffs " + " ".join(_fmt(u) for u in rep.payoffs))
    print(f"seller {_fmt(seller)}")
    print(f"worst_gain {rep.worst_gain:.6g}")
    if rep.is_eq:
        print(f"equilibrium within eps={args.eps}")
        return 0
    dev = sorted(rep.deviation) if rep.deviation is not None else None
    print(f"not an equilibrium: player {rep.deviating_player} gains by deviating to {dev}")
    return 1


# --- sim / gen --------------------------------------------------------------

def cmd_sim_behavioral(args):
    from luba.behavioral import BruteForceStrategy, NoiseModel, optimize_gamma, simulate_strategic

    v, c = float(args.v), float(args.c)
    if args.optimize:
        gamma = optimize_gamma(v, c).gamma_star
    elif args.gamma is not None:
        gamma = args.gamma
    else:
        raise LubaError("give --gamma or --optimize")
    model = NoiseModel(v, c, args.alpha)
    rep = simulate_strategic(model, BruteForceStrategy.for_model(gamma, v, c), args.trials, args.seed)
    lines = ["metric,value"] + [f"{k},{_fmt(val)}" for k, val in rep.rows()]
    params = {"v": args.v, "c": args.c, "alpha": args.alpha, "gamma": gamma, "trials": args.trials}
    _emit("\n".join(lines) + "\n", args.out, _manifest(args, params))
    if args.out:
        print(f"win_rate {_fmt(rep.win_rate)} +- {_fmt(rep.se_win_rate)}; mean_profit {_fmt(rep.mean_profit)}")
    if args.plot:
        from luba.plotting import plot_gain_bound

        plot_gain_bound(v, c, gamma, args.plot)
    return 0


def cmd_gen_synthetic(args):
    from luba.behavioral import NoiseModel, export_synthetic_records

    model = NoiseModel(float(args.v), float(args.c), args.alpha)
    n = export_synthetic_records(model, args.n, args.block or (), args.seed, args.out)
    params = {"n": args.n, "v": args.v, "c": args.c, "alpha": args.alpha,
              "block": ";".join(f"{x},{y}" for x, y in (args.block or ()))}
    _manifest(args, params).write(args.out)
    print(f"wrote {n} records to {args.out}")
    return 0


# --- backtest ---------------------------------------------------------------

def _records(args):
    from luba.backtest import read_records

    return read_records(args.records, strict=not args.permissive)


def cmd_backtest_grid(args):
    from luba.backtest import DEFAULT_X, grid_csv, pct_range, performance_grid

    recs = _records(args)
    xs = pct_range(*args.x_grid) if args.x_grid else DEFAULT_X
    ys = pct_range(*args.y_grid) if args.y_grid else None
    cells = performance_grid(recs, xs, ys)
    params = {"x_grid": args.x_grid, "y_grid": args.y_grid, "denominator": args.denominator}
    _emit(grid_csv(cells, args.denominator), args.out, _manifest(args, params, [args.records]))
    if args.plot:
        from luba.plotting import plot_performance_heatmap

        plot_performance_heatmap(cells, args.plot, args.denominator)
    return 0


def cmd_backtest_inject(args):
    from luba.backtest import BlockStrategySpec, inject

    recs = _records(args)
    spec = BlockStrategySpec(args.x, args.y)
    results = [(r, inject(r, spec)) for r in recs]
    lines = []
    if args.per_auction:
        lines.append("auction_id,won,winning_bid_after,bids_placed,fee_spent,price_paid,value_won")
        for r, res in results:
            after = "" if res.winning_bid_after is None else res.winning_bid_after
            lines.append(f"{r.auction_id},{int(res.won)},{after},{res.bids_placed},"
                         f"{res.fee_spent / 100:.2f},{res.price_paid / 100:.2f},{res.value_won / 100:.2f}")
    wins = sum(res.won for _, res in results)
    value = sum(res.value_won for _, res in results)
    spend = sum(res.fee_spent + res.price_paid for _, res in results)
    perf = "nan" if spend == 0 else _fmt(value / spend)
    summary = f"{spec}: wins {wins}/{len(results)}, performance {perf}"
    if args.per_auction:
        _emit("\n".join(lines) + "\n", args.out,
              _manifest(args, {"x": args.x, "y": args.y}, [args.records]))
    print(summary, file=sys.stderr if (args.per_auction and not args.out) else sys.stdout)
    return 0


def cmd_backtest_stats(args):
    from luba.backtest import (fraction_below, lowest_free_integer, multiplicity_histogram, seller_stats,
                               winning_bid_cdf, z_statistic)

    recs = _records(args)
    st = seller_stats(recs)
    out = [
        "metric,value",
        f"auctions,{st.auctions}",
        f"seller_mean_profit_eur,{_fmt(st.mean_profit)}",
        f"seller_sd_profit_eur,{_fmt(st.sd_profit)}",
        f"seller_share_positive,{_fmt(st.share_positive)}",
    ]
    sections = ["\n".join(out) + "\n"]
    outdir = Path(args.out_dir) if args.out_dir else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    written = {}
    if args.cdf:
        cdf = winning_bid_cdf(recs)
        text = "ratio_pct,cumulative_fraction\n" + "".join(f"{_fmt(q)},{_fmt(f)}\n" for q, f in cdf.points)
        sections.append(f"# cdf (excluded without winner: {cdf.excluded}; "
                        f"share below 2%: {_fmt(fraction_below(cdf, 2.0))})\n" + text)
        written["cdf.csv"] = text
        if outdir and args.plot:
            from luba.plotting import plot_cdf

            plot_cdf(cdf, outdir / "cdf.png")
    if args.hist:
        rec = next((r for r in recs if r.auction_id == args.auction), None) if args.auction else recs[0]
        if rec is None:
            raise LubaError(f"no auction with id {args.auction!r}")
        hist = multiplicity_histogram(rec, *args.hist)
        text = "integer_cents,count\n" + "".join(f"{j},{k}\n" for j, k in hist)
        sections.append(f"# histogram {rec.auction_id} (lowest free integer {lowest_free_integer(rec)})\n" + text)
        written["hist.csv"] = text
        if outdir and args.plot:
            from luba.plotting import plot_histogram

            plot_histogram(hist, outdir / "hist.png", title=f"Bids per integer, auction {rec.auction_id}")
    if args.z:
        text = "auction_id,z,lowest_free\n" + "".join(
            f"{r.auction_id},{z_statistic(r)},{lowest_free_integer(r)}\n" for r in recs)
        sections.append("# z statistic\n" + text)
        written["z.csv"] = text
    if outdir:
        params = {"cdf": args.cdf, "hist": args.hist, "z": args.z, "auction": args.auction}
        written["seller.csv"] = sections[0]
        for name, text in written.items():
            (outdir / name).write_text(text, encoding="utf-8", newline="\n")
            _manifest(args, params, [args.records]).write(outdir / name)
    sys.stdout.write("\n".join(sections))
    return 0


# --- dyn --------------------------------------------------------------------

def cmd_dyn_run(args):
    from luba.backtest import read_records
    from luba.core import AuctionConfig
    from luba.dynamic import AgentSpec, run_auction

    obj = json.loads(Path(args.agents).read_text(encoding="utf-8"))
    specs = [AgentSpec.from_obj(a) for a in (obj["agents"] if isinstance(obj, dict) else obj)]
    history = read_records(args.history) if args.history else None
    cfg = AuctionConfig.from_euros(max(1, len(specs)), args.v, args.c)
    run = run_auction(specs, cfg, args.horizon, args.seed, history=history)
    params = {"v": args.v, "c": args.c, "horizon": args.horizon}
    _emit(run.to_jsonl(), args.out, _manifest(args, params, [args.agents, args.history]))
    bid = run.outcome.winning_bid
    print(f"winner {run.winner_agent} at {bid} cents" if bid is not None else "no winner",
          file=sys.stderr if not args.out else sys.stdout)
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="luba", description="Lowest-unique-bid auction toolkit")
    p.add_argument("--version", action="version", version=__version__)
    groups = p.add_subparsers(dest="group", required=True)

    eq = groups.add_parser("eq", help="closed-form equilibria and checks (amounts in bid units)")
    eqs = eq.add_subparsers(dest="cmd", required=True)
    s = eqs.add_parser("two-bidder")
    s.add_argument("--v", type=_bid_units, required=True)
    s.add_argument("--c", type=_bid_units, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_eq_two_bidder)
    s = eqs.add_parser("noneq")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--v", type=_bid_units, required=True)
    s.add_argument("--c", type=_bid_units, required=True)
    s.set_defaults(func=cmd_eq_noneq)
    s = eqs.add_parser("verify")
    s.add_argument("--profile", required=True)
    s.add_argument("--v", type=_bid_units, required=True)
    s.add_argument("--c", type=_bid_units, required=True)
    s.add_argument("--max-bid", type=int, default=6)
    s.add_argument("--max-set", type=int, default=6)
    s.add_argument("--eps", type=float, default=1e-9)
    s.set_defaults(func=cmd_eq_verify)

    sim = groups.add_parser("sim", help="Monte Carlo simulation")
    sims = sim.add_subparsers(dest="cmd", required=True)
    s = sims.add_parser("behavioral")
    s.add_argument("--v", type=_euros, default=Decimal("500"))
    s.add_argument("--c", type=_euros, default=Decimal("0.5"))
    s.add_argument("--alpha", type=float, default=2.0)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float)
    g.add_argument("--optimize", action="store_true")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--plot", help="render the gain bound curve to this file")
    s.set_defaults(func=cmd_sim_behavioral)

    gen = groups.add_parser("gen", help="generate synthetic auction records")
    gens = gen.add_subparsers(dest="cmd", required=True)
    s = gens.add_parser("synthetic")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--v", type=_euros, default=Decimal("500"))
    s.add_argument("--c", type=_euros, default=Decimal("0.5"))
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--block", type=_pair, action="append", help="x,y percent; repeatable")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_synthetic)

    bt = groups.add_parser("backtest", help="block-strategy backtests on record files")
    bts = bt.add_subparsers(dest="cmd", required=True)
    s = bts.add_parser("grid")
    s.add_argument("--records", required=True)
    s.add_argument("--x-grid", type=_range3)
    s.add_argument("--y-grid", type=_range3)
    s.add_argument("--denominator", choices=("fees", "total"), default="total")
    s.add_argument("--out")
    s.add_argument("--plot", help="render a heatmap to this file")
    s.add_argument("--permissive", action="store_true")
    s.set_defaults(func=cmd_backtest_grid)
    s = bts.add_parser("inject")
    s.add_argument("--records", required=True)
    s.add_argument("--x", type=Decimal, required=True)
    s.add_argument("--y", type=Decimal, required=True)
    s.add_argument("--per-auction", action="store_true")
    s.add_argument("--out")
    s.add_argument("--permissive", action="store_true")
    s.set_defaults(func=cmd_backtest_inject)
    s = bts.add_parser("stats")
    s.add_argument("--records", required=True)
    s.add_argument("--cdf", action="store_true")
    s.add_argument("--hist", type=_lohi)
    s.add_argument("--auction", help="auction id for --hist (default: first record)")
    s.add_argument("--z", action="store_true")
    s.add_argument("--out-dir", help="write each table as CSV here")
    s.add_argument("--plot", action="store_true", help="with --out-dir, render CDF/histogram figures")
    s.add_argument("--permissive", action="store_true")
    s.set_defaults(func=cmd_backtest_stats)

    dyn = groups.add_parser("dyn", help="dynamic auction engine")
    dyns = dyn.add_subparsers(dest="cmd", required=True)
    s = dyns.add_parser("run")
    s.add_argument("--agents", required=True)
    s.add_argument("--v", type=_euros, default=Decimal("500"))
    s.add_argument("--c", type=_euros, default=Decimal("0.5"))
    s.add_argument("--horizon", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--history", help="record file for calibrating interval agents")
    s.add_argument("--out")
    s.set_defaults(func=cmd_dyn_run)

    rp = groups.add_parser("replay", help="rerun the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.set_defaults(func=None, cmd="")
    return p


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.group == "replay":
        return run(RunManifest.read(args.manifest).argv)
    args._argv = argv
    try:
        return args.func(args)
    except LubaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Figures for backtest and simulation reports.

CSV output is the contract; these renderings are a convenience and are
written next to the CSV files. The Agg backend is forced so nothing needs a
display, and file metadata is pinned so reruns produce identical bytes.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0


def report_style(width=6.0):
    """Modest rcParams for report figures, scaled off the figure width."""
    matplotlib.rcParams.update({
        "font.size": width * 1.6,
        "axes.labelsize": width * 1.6,
        "axes.titlesize": width * 1.8,
        "xtick.labelsize": width * 1.4,
        "ytick.labelsize": width * 1.4,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "svg.hashsalt": "luba",
    })
    return plt.figure(figsize=(width, width * GOLDEN))


def _save(fig, path):
    ext = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if ext in ("svg", "pdf") else {}
    if ext == "svg":
        meta["Creator"] = None
    fig.savefig(path, bbox_inches="tight", metadata=meta)
    plt.close(fig)
    return path


def plot_cdf(cdf, path, title="Winning bid / item value"):
    fig = report_style()
    ax = fig.add_subplot(111)
    if cdf.points:
        xs = [0.0] + [q for q, _ in cdf.points]
        ys = [0.0] + [f for _, f in cdf.points]
        ax.step(xs, ys, where="post", color="k")
    ax.axvline(2.0, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel("winning bid (% of item value)")
    ax.set_ylabel("cumulative fraction")
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    return _save(fig, path)


def plot_histogram(hist, path, title="Bids per integer"):
    fig = report_style()
    ax = fig.add_subplot(111)
    xs = [j for j, _ in hist]
    ax.bar(xs, [k for _, k in hist], width=1.0, color="0.3", edgecolor="none")
    ax.set_xlabel("bid (cents)")
    ax.set_ylabel("number of bids")
    ax.set_title(title)
    return _save(fig, path)


def plot_performance_heatmap(cells, path, denominator="total"):
    xs = sorted({c.x for c in cells})
    ys = sorted({c.y for c in cells})
    grid = np.full((len(xs), len(ys)), np.nan)
    for c in cells:
        perf = c.performance(denominator)
        if perf is not None:
            grid[xs.index(c.x), ys.index(c.y)] = perf
    fig = report_style(width=7.0)
    ax = fig.add_subplot(111)
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(ys)))
    ax.set_xticklabels([str(y) for y in ys], rotation=90)
    ax.set_yticks(range(len(xs)))
    ax.set_yticklabels([str(x) for x in xs])
    ax.set_xlabel("y (% of value)")
    ax.set_ylabel("x (% of value)")
    fig.colorbar(im, ax=ax, label="performance")
    return _save(fig, path)


def plot_gain_bound(v, c, gamma_star, path, lo=0.1, hi=20.0):
    from luba.behavioral import gain_lower_bound

    gs = np.linspace(lo, hi, 400)
    fig = report_style()
    ax = fig.add_subplot(111)
    ax.plot(gs, [gain_lower_bound(v, c, g) for g in gs], color="k")
    ax.axvline(gamma_star, color="0.5", ls="--", lw=0.8)
    ax.set_xlabel(r"$\gamma$")
    ax.set_ylabel("gain lower bound")
    return _save(fig, path)

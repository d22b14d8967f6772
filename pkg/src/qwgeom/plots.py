"""Figure rendering for the report path of the command-line interface.

Two figures accompany the delimited output: a curve diagram showing the
zero sets of Q, H and V inside the unit square together with any detected
geometric terms, and a sweep chart plotting the certified upper and lower
bounds per candidate.  Rendering always goes to files through the Agg
backend, so the functions are safe to call without a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .curves import build_curves, eval_curve  # noqa: E402
from .model import RandomWalk  # noqa: E402


def _curve_grid(system, which: str, n: int = 400):
    """Sign grid of a curve over the closed unit square."""
    xs = np.linspace(0.0, 1.0, n)
    ys = np.linspace(0.0, 1.0, n)
    grid = np.empty((n, n))
    for row, y in enumerate(ys):
        for col, x in enumerate(xs):
            grid[row, col] = eval_curve(system, which, x, y)
    return xs, ys, grid


def render_curves(R: RandomWalk, path, terms=(), title: str = "") -> str:
    """Draw the zero sets of Q, H and V with detected terms overlaid.

    Returns the path written.  ``terms`` is an iterable of objects with
    rho and sigma attributes (or plain pairs)."""
    system = build_curves(R)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    styles = (("Q", "tab:blue", "-"), ("H", "tab:orange", "--"),
              ("V", "tab:green", ":"))
    for which, color, linestyle in styles:
        xs, ys, grid = _curve_grid(system, which)
        ax.contour(xs, ys, grid, levels=[0.0], colors=[color],
                   linestyles=[linestyle], linewidths=1.4)
        ax.plot([], [], color=color, linestyle=linestyle, label=which)
    points = [(t.rho, t.sigma) if hasattr(t, "rho") else tuple(t)
              for t in terms]
    if points:
        px, py = zip(*points)
        ax.plot(px, py, "o-", color="tab:red", markersize=6,
                linewidth=0.8, label="terms")
        for k, (x, y) in enumerate(points, start=1):
            ax.annotate(str(k), (x, y), textcoords="offset points",
                        xytext=(5, 5), fontsize=8)
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("rho")
    ax.set_ylabel("sigma")
    ax.set_title(title or "balance curves in the unit square")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def render_sweep(rows, path, title: str = "") -> str:
    """Bar-free bound chart: per-candidate F_low and F_up with the best
    upper and lower envelopes highlighted.  ``rows`` are SweepRow records;
    failed candidates are skipped."""
    ok = [r for r in rows if r.error is None]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if ok:
        idx = [r.index for r in ok]
        ups = [r.F_up for r in ok]
        lows = [r.F_low for r in ok]
        ax.plot(idx, ups, "v-", color="tab:blue", label="F_up")
        ax.plot(idx, lows, "^-", color="tab:orange", label="F_low")
        ax.axhline(min(ups), color="tab:blue", linewidth=0.8,
                   linestyle="--", label=f"min F_up = {min(ups):.6g}")
        ax.axhline(max(lows), color="tab:orange", linewidth=0.8,
                   linestyle="--", label=f"max F_low = {max(lows):.6g}")
    failed = [r.index for r in rows if r.error is not None]
    for x in failed:
        ax.axvline(x, color="0.85", linewidth=4.0, zorder=0)
    ax.set_xlabel("candidate index")
    ax.set_ylabel("certified bound")
    ax.set_title(title or "certified bounds per sweep candidate")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)

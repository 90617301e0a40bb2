"""Figure rendering for solve, sweep, simulate and verify outputs.

All figures go straight to files through the Agg backend; nothing is ever
shown interactively.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def render_field(space, field, path: str, title: str = "value field") -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if space.is_grid and space.dim == 2:
        grid = np.full(space.shape, np.nan)
        for k, c in enumerate(space.coords):
            grid[tuple(c)] = field.values[k]
        im = ax.imshow(grid.T, origin="lower", aspect="equal",
                       extent=(0, space.extent[0], 0, space.extent[1]))
        fig.colorbar(im, ax=ax, label="u")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    elif space.is_grid:
        ax.plot(space.positions[:, 0], field.values, "-o", ms=2.5)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    else:
        ax.plot(range(space.n), field.values, "o", ms=3)
        ax.set_xlabel("node (canonical order)")
        ax.set_ylabel("u")
        if space.n <= 30:
            ax.set_xticks(range(space.n))
            ax.set_xticklabels([str(v) for v in space.ids], rotation=90,
                               fontsize=6)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_sweep(space, params, fields, axis: str, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    xs = space.positions[:, 0] if space.is_grid else np.arange(space.n)
    for p, f in zip(params, fields):
        order = np.argsort(xs)
        ax.plot(xs[order], f.values[order], lw=1.0,
                label=f"{axis}={p:g}")
    ax.set_xlabel("x" if space.is_grid else "node (canonical order)")
    ax.set_ylabel("u")
    ax.legend(fontsize=7)
    ax.set_title(f"{axis} sweep")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_report(results, path: str) -> str:
    names = [r.name for r in results]
    gaps = [max(r.worst_gap, 1e-18) for r in results]
    colors = ["tab:green" if r.passed else "tab:red" for r in results]
    fig, ax = plt.subplots(figsize=(6.4, 0.5 + 0.35 * len(names)))
    ypos = np.arange(len(names))
    ax.barh(ypos, gaps, color=colors)
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("worst gap")
    ax.invert_yaxis()
    for y, r in zip(ypos, results):
        ax.text(max(r.worst_gap, 1e-18), y,
                " pass" if r.passed else " FAIL", va="center", fontsize=7)
    ax.set_title("verification report")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_stats(stats, path: str, title: str = "episode payoffs") -> str:
    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    pay = stats.payoffs
    if pay is not None:
        pay = pay[np.isfinite(pay)]
    if pay is not None and len(pay):
        ax.hist(pay, bins=min(40, max(5, int(np.sqrt(len(pay))))),
                color="tab:blue", alpha=0.8)
        ax.axvline(stats.mean_payoff, color="k", lw=1.2,
                   label=f"mean={stats.mean_payoff:.4g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("payoff")
    ax.set_ylabel("episodes")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path

"""Optional PNG figures next to the CSV reports.

matplotlib is imported lazily with the Agg backend, so the library and the
CLI work without a display. PNG metadata is stripped to keep files stable
across runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

_PNG_META = {"Software": None}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    _pyplot().close(fig)
    return path


def plot_results(rows: Sequence[dict], path: Path, title: str = "") -> Path:
    """Horizontal bars of interestingness, best pattern on top."""
    plt = _pyplot()
    labels = [r["pattern"] for r in rows][::-1]
    values = [r["interestingness"] for r in rows][::-1]
    fig, ax = plt.subplots(figsize=(8, 0.4 * max(3, len(rows)) + 1))
    ax.barh(range(len(values)), values, color="tab:red")
    ax.set_yticks(range(len(values)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.set_xlabel("interestingness")
    ax.set_title(title)
    return _save(fig, path)


def plot_surface(rows: Sequence[dict], axis: str, path: Path) -> Path:
    """Heatmap of mean relative score over correlation x (cover size or NCR)."""
    plt = _pyplot()
    corrs = sorted({r["corr"] for r in rows})
    xs = sorted({r[axis] for r in rows})
    grid = np.full((len(corrs), len(xs)), np.nan)
    for r in rows:
        grid[corrs.index(r["corr"]), xs.index(r[axis])] = r["mean"]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    lim = np.nanmax(np.abs(grid)) or 1.0
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="RdBu_r", vmin=-lim, vmax=lim)
    ax.set_xticks(range(len(xs)))
    ax.set_xticklabels([f"{x:g}" for x in xs])
    ax.set_yticks(range(len(corrs)))
    ax.set_yticklabels([f"{c:g}" for c in corrs])
    ax.set_xlabel(axis.replace("_", " "))
    ax.set_ylabel("correlation")
    first = rows[0]
    ax.set_title(f"{first['measure']}  alpha={first['alpha']:g} beta={first['beta']:g}")
    fig.colorbar(im, ax=ax, label="mean relative score")
    return _save(fig, path)


def plot_ious(ious: Sequence[float], path: Path, title: str = "") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.bar(range(1, len(ious) + 1), ious, color="tab:blue")
    ax.axhline(0.8, color="grey", linestyle="--", linewidth=1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("rank")
    ax.set_ylabel("IoU with injected cover")
    ax.set_title(title)
    return _save(fig, path)


def plot_bench(rows: Sequence[dict], path: Path) -> Path:
    plt = _pyplot()
    names = [f"{r['measure']} a={r['alpha']:g} b={r['beta']:g}" for r in rows]
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(rows)), 4))
    ax.bar(x - 0.2, [r["nodes_unpruned"] for r in rows], 0.4, label="no pruning")
    ax.bar(x + 0.2, [r["nodes_pruned"] for r in rows], 0.4, label="pruning")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("evaluated patterns")
    ax.legend()
    return _save(fig, path)

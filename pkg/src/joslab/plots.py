"""Figure rendering for the report path.

Each table-producing command gets one figure next to its delimited output.
Rendering is deterministic: Agg backend, fixed sizes, and the PNG Date
metadata stripped.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
import matplotlib.pyplot as plt

__all__ = ["figure_path", "save_figure"]

_SAVE_KW = dict(dpi=150, metadata={"Date": None})


def figure_path(output_path: str) -> str:
    stem = output_path.rsplit(".", 1)[0] if "." in output_path else output_path
    return stem + ".png"


def _grid_figure(rows):
    a_vals = sorted({row["a"] for row in rows})
    s_vals = sorted({row["s"] for row in rows})
    idx_a = {a: j for j, a in enumerate(a_vals)}
    idx_s = {s: j for j, s in enumerate(s_vals)}
    rho = np.full((len(s_vals), len(a_vals)), np.nan)
    for row in rows:
        rho[idx_s[row["s"]], idx_a[row["a"]]] = row["rho"]
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    mesh = ax.pcolormesh(a_vals, s_vals, rho, shading="nearest", cmap="coolwarm")
    fig.colorbar(mesh, ax=ax, label="rotation number")
    ax.set_xlabel("a")
    ax.set_ylabel("s")
    ax.set_title("rotation number over the parameter plane")
    return fig


def _tongue_figure(rows):
    full = [r for r in rows if r.get("g_minus") is not None and not np.isnan(r["g_minus"])]
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    if full:
        s = [r["s"] for r in full]
        ax.plot([r["g_minus"] for r in full], s, "-", color="C0", label="left boundary")
        ax.plot([r["g_plus"] for r in full], s, "-", color="C3", label="right boundary")
        ax.legend(loc="best")
    ax.set_xlabel("a")
    ax.set_ylabel("s")
    ax.set_title("phase-locking tongue boundaries")
    return fig


def _adjacency_figure(rows):
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    if rows:
        ax.plot([r["a"] for r in rows], [r["s"] for r in rows], "o", color="C0")
        for r_int in sorted({int(round(r["a"])) for r in rows}):
            ax.axvline(r_int, color="0.7", lw=0.8, zorder=0)
    ax.set_xlabel("a")
    ax.set_ylabel("s")
    ax.set_title("adjacency points")
    return fig


_BUILDERS = {
    "grid": _grid_figure,
    "tongue": _tongue_figure,
    "adjacency": _adjacency_figure,
}


def save_figure(command: str, results: list, output_path: str) -> str | None:
    """Render the figure for a table command; returns the written path, or
    None for commands without a figure."""
    builder = _BUILDERS.get(command)
    if builder is None or not results:
        return None
    fig = builder(results)
    path = figure_path(output_path)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path

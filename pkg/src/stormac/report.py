"""Figures rendered next to the experiment CSVs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COLORS = {"storm": "tab:blue", "baseline": "tab:orange"}
LABELS = {"storm": "STORM actor-critic (buffer + momentum)", "baseline": "actor-critic, no momentum"}


def _curves(rows, field):
    out = {}
    for row in rows:
        out.setdefault(row["algo"], []).append((row["k"], row[field + "_mean"], row[field + "_std"]))
    return {algo: np.array(v, dtype=float).T for algo, v in out.items()}


def _plot_field(rows, field, ylabel, path, loglog=True):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for algo, (k, mean, std) in _curves(rows, field).items():
        keep = k > 0 if loglog else np.ones_like(k, dtype=bool)
        color = COLORS.get(algo)
        ax.plot(k[keep], mean[keep], color=color, label=LABELS.get(algo, algo))
        ax.fill_between(k[keep], np.maximum(mean - std, 1e-12)[keep], (mean + std)[keep], color=color, alpha=0.2, lw=0)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("iteration k")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_figures(aggregate_rows, out_path) -> list[Path]:
    """Write sub-optimality and Lyapunov-term plots beside ``out_path``.

    ``aggregate_rows`` are the dicts produced by ``experiment.aggregate_rows``.
    Returns the written paths.
    """
    out = Path(out_path)
    stem = out.with_suffix("")
    return [
        _plot_field(aggregate_rows, "a", r"mean sub-optimality $J^* - J^{\pi_k}$", f"{stem}_suboptimality.png"),
        _plot_field(aggregate_rows, "x", r"mean Lyapunov term $x_k$", f"{stem}_lyapunov.png"),
        _plot_field(aggregate_rows, "z", r"mean critic error $\|Q_k - Q^{\pi_k}\|$", f"{stem}_critic_error.png"),
    ]

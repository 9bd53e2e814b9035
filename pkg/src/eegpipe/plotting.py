"""Matplotlib figures written next to the CSV/PPM reports."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# PNG metadata carries the matplotlib version by default; dropping it keeps
# repeated runs byte-identical.
_PNG_METADATA = {"Software": None}

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "figure.dpi": 100,
    "savefig.dpi": 100,
}


def _save(fig, path):
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    fig.savefig(path, format="png", metadata=_PNG_METADATA)
    plt.close(fig)


def plot_correlation_heatmap(M, path, title="Session correlation"):
    S = len(M.session_ids)
    size = max(3.0, 0.35 * S + 1.5)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(size + 0.8, size))
        im = ax.imshow(M.values, cmap="bwr", vmin=-1.0, vmax=1.0, interpolation="nearest")
        ax.set_xticks(range(S))
        ax.set_yticks(range(S))
        ax.set_xticklabels(M.session_ids, rotation=90)
        ax.set_yticklabels(M.session_ids)
        if S <= 12:
            for i in range(S):
                for j in range(S):
                    ax.text(j, i, f"{M.values[i, j]:.2f}", ha="center", va="center", fontsize=6)
        ax.set_title(title)
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="Pearson r")
        fig.tight_layout()
        _save(fig, path)


def plot_search_summary(result, path, title="Best 3-fold CV accuracy per classifier"):
    """Bar chart of the best candidate per classifier kind, with fold std."""
    best = {}
    for row in result.rows:
        if row.failed:
            continue
        if row.kind not in best or row.mean_score > best[row.kind].mean_score:
            best[row.kind] = row
    kinds = sorted(best, key=lambda k: (-best[k].mean_score, k))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        if kinds:
            means = np.array([best[k].mean_score for k in kinds])
            stds = np.array([best[k].std_score for k in kinds])
            ax.bar(range(len(kinds)), means, yerr=stds, color="0.6", edgecolor="k", capsize=3)
            ax.set_xticks(range(len(kinds)))
            ax.set_xticklabels(kinds, rotation=30, ha="right")
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel("accuracy")
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)

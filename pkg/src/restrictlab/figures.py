"""Deterministic SVG figure rendering for reports.

SVG output is used for byte-level snapshot testing, so every source of
nondeterminism in matplotlib is pinned: the Agg backend, a fixed
``svg.hashsalt`` (otherwise element ids derive from the process), and a
suppressed creation date in the file metadata. Rendering the same data
twice must produce identical bytes.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .histogram import HistogramSpec, bin_centers, gaussian_reference  # noqa: E402

_SALT = "restrictlab-fixed-salt"


def _configure() -> None:
    matplotlib.rcParams["svg.hashsalt"] = _SALT
    matplotlib.rcParams["figure.max_open_warning"] = 0


def save_svg(fig, path: str | Path) -> Path:
    """Write a figure as SVG with all volatile metadata stripped."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def histogram_grid(
    freqs: np.ndarray,
    spec: HistogramSpec,
    path: str | Path,
    title: str = "Per-dimension soft histograms",
) -> Path:
    """One panel per feature dimension, reference curve overlaid.

    ``freqs`` is a D x bins matrix of normalized soft-histogram
    frequencies, one row per dimension.
    """
    _configure()
    freqs = np.asarray(freqs, dtype=np.float64)
    centers = bin_centers(spec)
    reference = gaussian_reference(spec)
    d = freqs.shape[0]
    cols = min(4, d)
    rows = math.ceil(d / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.0 * cols, 2.4 * rows), squeeze=False)
    for i in range(d):
        ax = axes[i // cols][i % cols]
        ax.plot(reference.centers, reference.freqs, color="0.4", lw=1.0)
        ax.fill_between(centers, freqs[i], color="tab:blue", alpha=0.45)
        ax.set_title(f"dim {i}", fontsize=8)
        ax.set_xlim(spec.min, spec.max)
        ax.tick_params(labelsize=6)
    for j in range(d, rows * cols):
        axes[j // cols][j % cols].axis("off")
    fig.suptitle(title, fontsize=10)
    fig.tight_layout(rect=(0.0, 0.0, 1.0, 0.96))
    return save_svg(fig, path)


def corr_heatmap(corr: np.ndarray, path: str | Path, title: str = "CorrMat") -> Path:
    """Correlation matrix on a fixed [-1, 1] color scale."""
    _configure()
    fig, ax = plt.subplots(figsize=(4.0, 3.4))
    image = ax.imshow(np.asarray(corr), vmin=-1.0, vmax=1.0, cmap="coolwarm")
    fig.colorbar(image, ax=ax, shrink=0.9)
    ax.set_title(title, fontsize=10)
    ax.set_xlabel("dimension", fontsize=8)
    ax.set_ylabel("dimension", fontsize=8)
    ax.tick_params(labelsize=6)
    fig.tight_layout()
    return save_svg(fig, path)


def loss_trace(trace: np.ndarray, path: str | Path, title: str = "Training loss") -> Path:
    _configure()
    trace = np.asarray(trace, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(4.6, 2.8))
    ax.plot(np.arange(trace.size), trace, lw=0.9, color="tab:blue")
    ax.set_xlabel("step", fontsize=8)
    ax.set_ylabel("loss", fontsize=8)
    ax.set_title(title, fontsize=10)
    ax.tick_params(labelsize=6)
    fig.tight_layout()
    return save_svg(fig, path)


def metric_bars(values: dict[str, float], path: str | Path, title: str = "Scores") -> Path:
    """Bar chart for a small named-metric set (used for PRDC scores)."""
    _configure()
    names = list(values.keys())
    heights = [values[n] for n in names]
    fig, ax = plt.subplots(figsize=(4.2, 2.8))
    ax.bar(range(len(names)), heights, color="tab:blue", width=0.6)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, fontsize=8)
    ax.set_title(title, fontsize=10)
    ax.tick_params(labelsize=7)
    for i, h in enumerate(heights):
        ax.text(i, h, f"{h:.3f}", ha="center", va="bottom", fontsize=7)
    fig.tight_layout()
    return save_svg(fig, path)

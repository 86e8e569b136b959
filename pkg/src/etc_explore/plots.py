"""Matplotlib rendering of the report figures to files.

Each function takes already-computed arrays and writes one PNG; the CSV
data files remain the primary output and these renderings mirror them.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_parameter_space", "render_trajectories", "render_safety_series"]


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_parameter_space(points: np.ndarray, in_theta_s, in_theta, path) -> Path:
    """Raster of the certified sets over the parameter grid."""
    category = np.zeros(len(points))
    category[np.asarray(in_theta_s, dtype=bool)] = 1.0
    category[np.asarray(in_theta, dtype=bool)] = 2.0
    n1 = len(np.unique(points[:, 0]))
    n2 = len(np.unique(points[:, 1]))
    img = category.reshape(n1, n2).T
    fig, ax = plt.subplots(figsize=(5, 4.2))
    extent = (points[:, 0].min(), points[:, 0].max(), points[:, 1].min(), points[:, 1].max())
    im = ax.imshow(img, origin="lower", extent=extent, aspect="auto",
                   cmap=plt.get_cmap("Blues", 3), vmin=0, vmax=2)
    cbar = fig.colorbar(im, ax=ax, ticks=[1 / 3, 1.0, 5 / 3])
    cbar.ax.set_yticklabels(["outside", "safe only", "safe + converging"])
    ax.set_xlabel(r"$\theta_1$ (initial threshold)")
    ax.set_ylabel(r"$\theta_2$ (steady threshold)")
    ax.set_title("Certified parameter sets")
    return _save(fig, path)


def render_trajectories(trajectories, safety_bound: float, component: int, path) -> Path:
    """Overlay of sampled state trajectories with the safety band on one component."""
    fig, axes = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    for times, states in trajectories:
        axes[0].plot(times, states[:, 0], lw=0.5, alpha=0.4, color="tab:blue")
        axes[1].plot(times, states[:, component], lw=0.5, alpha=0.4, color="tab:blue")
    axes[1].axhline(safety_bound, color="tab:red", ls="--", lw=1.0)
    axes[1].axhline(-safety_bound, color="tab:red", ls="--", lw=1.0)
    axes[0].set_ylabel("$x_1$")
    axes[1].set_ylabel(f"$x_{component + 1}$")
    axes[1].set_xlabel("time [s]")
    axes[0].set_title("Trajectories at parameters sampled from the certified set")
    return _save(fig, path)


def render_safety_series(y_s_algorithm, y_s_baseline, path) -> Path:
    """Per-iteration safety observations, exploration versus random search."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    j = np.arange(1, len(y_s_algorithm) + 1)
    ax.plot(j, y_s_algorithm, "-", color="tab:blue", label="safe exploration")
    if y_s_baseline is not None and len(y_s_baseline):
        jb = np.arange(1, len(y_s_baseline) + 1)
        ax.plot(jb, y_s_baseline, ":", color="tab:red", label="random search")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("iteration $j$")
    ax.set_ylabel("safety observation")
    ax.legend(loc="best")
    return _save(fig, path)

"""Figure rendering for the CLI report path. All functions write PNG files
and use the non-interactive Agg backend."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def plot_configuration(config, path: Path, title: str = "") -> Path:
    """Scatter of positions colored by charge (first two coordinates)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    x = config.positions
    sc = ax.scatter(x[:, 0], x[:, 1], c=config.charges, s=12, cmap="viridis")
    fig.colorbar(sc, ax=ax, label="charge q")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_radial_profiles(hist, path: Path, profile=None, title: str = "") -> Path:
    """Empirical radial density / charge density with optional predicted curves."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    c = hist.centers
    axes[0].errorbar(c, hist.density, yerr=hist.density_se, fmt="o", ms=3,
                     label="particles")
    axes[0].errorbar(c, hist.charge_density, yerr=hist.charge_density_se,
                     fmt="s", ms=3, label="charge")
    axes[1].errorbar(c, hist.mean_charge, yerr=hist.mean_charge_se, fmt="o",
                     ms=3, label="empirical")
    if profile is not None:
        r = profile.r_grid
        axes[0].plot(r, [profile.rho(x) for x in r], "k-", lw=1, label="predicted rho")
        axes[0].plot(r, [profile.rho_q(x) for x in r], "k--", lw=1,
                     label="predicted rho_q")
        if profile.has_charge_map:
            axes[1].plot(r, [profile.q_of_r(x) for x in r], "k-", lw=1,
                         label="predicted q(r)")
    axes[0].set_xlabel("r")
    axes[0].set_ylabel("density")
    axes[0].legend(fontsize=8)
    axes[1].set_xlabel("r")
    axes[1].set_ylabel("mean charge")
    axes[1].legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_energy_trace(trace: np.ndarray, path: Path, title: str = "") -> Path:
    """trace columns: step, energy, residual, beta."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
    axes[0].plot(trace[:, 0], trace[:, 1])
    axes[0].set_xlabel("step")
    axes[0].set_ylabel("energy")
    axes[1].semilogy(trace[:, 0], np.maximum(trace[:, 2], 1e-300))
    axes[1].set_xlabel("step")
    axes[1].set_ylabel("force residual")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_charge_density(q: np.ndarray, nu: np.ndarray, path: Path,
                        title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(q, nu)
    ax.set_xlabel("q")
    ax.set_ylabel("nu(q)")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_correlations(curves: Sequence, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for cc in curves:
        ax.plot(cc.r, cc.G, label=f"r0={cc.r0:.3g}")
    ax.axhline(1.0, color="k", lw=0.5)
    ax.set_xlabel("blown-up distance")
    ax.set_ylabel("G(r0, r)")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_nearest_neighbor_hist(dist: np.ndarray, path: Path,
                               title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(dist, bins=48)
    ax.set_xlabel("nearest-neighbor distance")
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path

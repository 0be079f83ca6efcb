"""Figure rendering for the CLI report paths (written next to the data files)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_husimi_figure(grid, path: "str | Path", title: str | None = None) -> None:
    """Lat-long heatmap of the coherent-state overlap distribution."""
    fig, ax = plt.subplots(figsize=(7, 4))
    mesh = ax.pcolormesh(grid.phis, grid.thetas, grid.values,
                         shading="auto", cmap="inferno")
    fig.colorbar(mesh, ax=ax, label=r"$|\langle\theta,\phi|\psi\rangle|^2$")
    ax.set_xlabel(r"$\phi$ (rad)")
    ax.set_ylabel(r"$\theta$ (rad)")
    ax.invert_yaxis()
    ax.set_title(title or f"N = {grid.n_atoms}, quadrature = {grid.quadrature:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_gain_scaling_figure(records, cells, path: "str | Path") -> None:
    """Log-log metrological gain versus N with the per-cell power-law fits."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    all_n = sorted({r.N for r in records if not r.error})
    if all_n:
        n_line = np.array([min(all_n), max(all_n)], dtype=float)
        hl = 10.0 * np.log10(n_line)
        ax.fill_between(n_line, hl, hl + 10.0, color="0.85", zorder=0,
                        label="beyond Heisenberg limit")
        ax.plot(n_line, hl, "k--", lw=1, label=r"$10\log_{10}N$")
    colors = plt.cm.viridis(np.linspace(0.1, 0.9, max(len(cells), 1)))
    for cell, color in zip(cells, colors):
        theta, q_tilde = cell["theta"], cell["Q_tilde"]
        pts = [(r.N, r.gain_db_lossless) for r in records
               if not r.error and r.theta == theta and r.Q_tilde == q_tilde
               and math.isfinite(r.gain_db_lossless)]
        if not pts:
            continue
        ns, gains = zip(*sorted(pts))
        label = rf"$\theta={theta / math.pi:.2g}\pi$, $\tilde Q={q_tilde:g}$"
        ax.plot(ns, gains, "o", ms=4, color=color, label=label)
        fit = cell.get("lossless", {})
        if "b" in fit:
            n_line = np.array([min(ns), max(ns)], dtype=float)
            ax.plot(n_line, 10.0 * (math.log10(fit["a"]) + fit["b"] * np.log10(n_line)),
                    "-", lw=1.2, color=color,
                    label=rf"fit $b={fit['b']:.2f}$")
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("gain (dB)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_convergence_figure(history, path: "str | Path") -> None:
    """Best infidelity per iteration of the accepted optimizer run."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.semilogy(np.arange(len(history)), np.maximum(history, 1e-16), "-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best infidelity")
    ax.grid(True, ls=":")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

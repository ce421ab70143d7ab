"""Figure rendering for run artifacts.

Renders the delimited monitor output and report quantities to PNG files next
to them: convergence traces, subdiameter bars, multistart energies, and
witness measures.  All functions write files and return the path; nothing
opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_convergence(path, generations, energies, title="convergence"):
    """Best energy per generation, log-scaled when strictly positive."""
    fig, ax = plt.subplots(figsize=(6, 4))
    energies = np.asarray(energies, dtype=float)
    ax.plot(generations, energies, lw=1.5)
    if np.all(energies > 0):
        ax.set_yscale("log")
    ax.set_xlabel("generation")
    ax.set_ylabel("best energy")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_subdiameters(path, suboscillations, title="subdiameters"):
    """Per-coordinate contribution to the total spread."""
    fig, ax = plt.subplots(figsize=(6, 4))
    n = len(suboscillations)
    ax.bar(range(n), suboscillations, color="steelblue")
    ax.set_xticks(range(n), [f"x{i + 1}" for i in range(n)])
    ax.set_ylabel("suboscillation")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    return _finish(fig, path)


def save_multistart(path, energies, title="multistart energies"):
    """Final energy per start, in start order."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(energies)), energies, "o", ms=5)
    ax.set_xlabel("start")
    ax.set_ylabel("final energy")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_measure(path, measure, title="witness measure"):
    """Stem plot of each marginal's support points and weights."""
    n = measure.dim
    fig, axes = plt.subplots(n, 1, figsize=(6, 2.5 * n), squeeze=False)
    for i, marginal in enumerate(measure.marginals):
        ax = axes[i][0]
        ax.stem(marginal.positions, marginal.weights, basefmt=" ")
        if marginal.lower is not None and marginal.upper is not None:
            ax.set_xlim(marginal.lower, marginal.upper)
        ax.set_ylim(0, max(1.05, float(np.max(marginal.weights)) * 1.1))
        ax.set_ylabel(f"weight (x{i + 1})")
        ax.grid(True, alpha=0.3)
    axes[0][0].set_title(title)
    axes[-1][0].set_xlabel("position")
    return _finish(fig, path)

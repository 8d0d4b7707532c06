"""Matplotlib figures for the CLI report path.

Each function renders one figure to a file next to the CSV it illustrates.
Styling follows the reference layouts: replication overlays in green against
the benchmark in red, log-log rate plots with the theoretical curve dashed.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render_overlay(x_grid, bench_values, curves, path, title=None):
    """Replication estimates (green) over the benchmark density (red)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    curves = np.atleast_2d(curves)
    for row in curves:
        ax.plot(x_grid, row, color="green", alpha=0.35, lw=0.8)
    ax.plot(x_grid, bench_values, color="red", lw=1.8, label="benchmark")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_estimate(estimate, path, benchmark=None):
    """A single spectral estimate, optionally against its benchmark."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(estimate.x_grid, estimate.values, color="green",
            lw=1.2, label=f"{estimate.kind} (m={estimate.m:.3g})")
    if benchmark is not None:
        ax.plot(benchmark.x_grid, benchmark.values, color="red",
                lw=1.4, label="benchmark")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_selection_trace(trace, m_hat, path):
    """Contrast, penalty, and their sum over the cutoff grid."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(trace.m, trace.contrast, label="contrast", lw=1.0)
    ax.plot(trace.m, trace.penalty, label="penalty", lw=1.0)
    ax.plot(trace.m, trace.contrast + trace.penalty, label="objective", lw=1.4)
    ax.axvline(m_hat, color="k", ls=":", lw=1.0, label=f"selected m={m_hat:.4g}")
    ax.set_xlabel("cutoff m")
    ax.set_xscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_table(rows, path, title=None):
    """Per-cell risk with error bars against the reference values."""
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    idx = np.arange(len(rows))
    means = [r["mean_rel_l2"] for r in rows]
    stds = [r["std_rel_l2"] for r in rows]
    paper = [r["paper_mean"] for r in rows]
    ax.errorbar(idx, means, yerr=stds, fmt="o", color="green",
                capsize=3, label="this run")
    if np.any(np.isfinite(paper)):
        ax.plot(idx, paper, "rx", ms=8, label="reference")
    labels = [
        f'a={r["alpha"]:g}\nd={r["delta"]:g}\nn={r["n"]}'
        + (f'\ns={r["sigma"]:g}' if r["sigma"] else "")
        for r in rows
    ]
    ax.set_xticks(idx, labels, fontsize=7)
    ax.set_yscale("log")
    ax.set_ylabel("relative $L^2$ risk")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_rate(rows, path):
    """Log-log risk vs n alongside the theoretical rate curve."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    n = np.array([r["n"] for r in rows], dtype=float)
    risk = np.array([r["mean_rel_l2"] for r in rows])
    theory = np.array([r["theory_rate"] for r in rows])
    ax.loglog(n, risk, "o-", color="green", label="empirical risk")
    # anchor the theory curve at the first empirical point
    ax.loglog(n, theory * risk[0] / theory[0], "r--", label="theoretical rate")
    ax.set_xlabel("n")
    ax.set_ylabel("relative $L^2$ risk")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

"""Static figures written straight to files (SVG by default)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_multipliers", "plot_chart", "plot_convergence"]

FIGSIZE = (5.0, 5.0)

_RC = {
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "pwfloquet",  # stable ids so identical inputs give identical files
    "svg.fonttype": "none",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def plot_multipliers(mu, path, title: str | None = None):
    """Scatter the multipliers in the complex plane over the unit circle."""
    mu = np.asarray(mu, dtype=complex)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        th = np.linspace(0, 2 * np.pi, 400)
        ax.plot(np.cos(th), np.sin(th), color="0.5", lw=0.8)
        ax.plot(mu.real, mu.imag, "o", ms=4, mfc="none", color="C0")
        ax.set_aspect("equal")
        lim = max(1.1, 1.05 * float(np.abs(mu).max(initial=0)))
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_xlabel(r"Re $\mu$")
        ax.set_ylabel(r"Im $\mu$")
        if title:
            ax.set_title(title)
        _save(fig, path)


def plot_chart(chart, path, labels=("a", "b")):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        for line in chart.polylines:
            ax.plot(line[:, 0], line[:, 1], color="C3", lw=1.2)
        a0, a1, b0, b1 = chart.region
        ax.set_xlim(a0, a1)
        ax.set_ylim(b0, b1)
        ax.set_xlabel(labels[0])
        ax.set_ylabel(labels[1])
        ax.set_title(f"level {chart.level:g}")
        _save(fig, path)


def plot_convergence(table, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        errs = np.maximum(table.errors, np.finfo(float).tiny)
        for k in range(errs.shape[1]):
            ax.semilogy(table.degrees, errs[:, k], "o-", ms=3, label=f"{complex(table.reference[k]):.6g}")
        ax.set_xlabel("M")
        ax.set_ylabel("error")
        ax.legend(fontsize=8)
        _save(fig, path)

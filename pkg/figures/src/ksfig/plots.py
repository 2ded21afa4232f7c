"""
Figure builders: pure presentation of persisted numbers.

Nothing here computes model quantities; envelopes, fits and thresholds are
read from the artifacts that carry them.  Rendering is deterministic: fixed
style, no timestamps, agg backend.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "ksfig",
}


def _empty(ax, message: str):
    ax.text(0.5, 0.5, f"no data: {message}", transform=ax.transAxes,
            ha="center", va="center", color="crimson",
            bbox=dict(boxstyle="round", fc="mistyrose", ec="crimson"))


def profile_figure(meta: dict, data: dict, envelopes=None):
    """Q and P against r; optional persisted density envelopes."""
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.2))
        if data["r"].size == 0:
            _empty(ax1, "empty profile table")
            _empty(ax2, "empty profile table")
            return fig
        ax1.plot(data["r"], data["Q"], color="tab:blue", label="Q")
        if envelopes is not None:
            _, env = envelopes
            ax1.plot(env["r"], env["Q_lower"], "--", color="tab:gray",
                     lw=0.9, label="lower envelope")
            ax1.plot(env["r"], env["Q_upper"], ":", color="tab:gray",
                     lw=0.9, label="upper envelope")
            ax1.plot(env["r"], env["Q_limit"], color="tab:orange", lw=0.8,
                     alpha=0.7, label="limit profile")
        ax1.set_xlabel("r")
        ax1.set_ylabel("Q")
        ax1.set_title(f"density, mu={meta.get('mu')}, eps={meta.get('eps')}")
        ax1.legend(fontsize=8)
        ax2.plot(data["r"], data["P"], color="tab:green", label="P")
        ax2.plot(data["r"], data["dP"], color="tab:red", lw=0.9, label="P'")
        ax2.set_xlabel("r")
        ax2.set_title("potential")
        ax2.legend(fontsize=8)
        fig.tight_layout()
        return fig


def spectra_figure(meta: dict, data: dict):
    """Complex-plane eigenvalue scatter with the persisted half-plane edge."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if data["m"].size == 0:
            _empty(ax, "empty spectra table")
            return fig
        mu = float(meta.get("mu", 0.0))
        modes = sorted(set(int(m) for m in data["m"]))
        cmap = plt.get_cmap("viridis", max(len(modes), 2))
        lo = np.min(data["re"])
        ax.axvspan(-mu, max(np.max(data["re"]) * 1.05, 0.1), color="gold",
                   alpha=0.15, label="half-plane Re z > -mu")
        ax.axvline(-mu, color="tab:red", lw=1.0, label="Re z = -mu")
        for i, m in enumerate(modes):
            sel = data["m"].astype(int) == m
            ax.scatter(data["re"][sel], data["im"][sel], s=14,
                       color=cmap(i), label=f"m = {m}")
        ax.set_xlim(max(lo * 1.05, -12 * max(mu, 0.1)), None)
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
        ax.set_title(f"angular-block spectra, mu={meta.get('mu')}, "
                     f"eps={meta.get('eps')}")
        ax.legend(fontsize=8, loc="upper left")
        fig.tight_layout()
        return fig


def decay_figure(meta: dict, data: dict, fit: dict | None = None):
    """Norm histories on a log scale with the persisted fitted exponential."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if data["t"].size == 0:
            _empty(ax, "empty trajectory table")
            return fig
        for col, color in (("x_norm", "tab:blue"), ("y_norm", "tab:green"),
                           ("l2k_g", "tab:purple")):
            ax.semilogy(data["t"], data[col], color=color, lw=1.1, label=col)
        if fit is not None and fit.get("rate") is not None:
            t = data["t"]
            ax.semilogy(t, np.exp(fit["intercept"] - fit["rate"] * t), "--",
                        color="black", lw=1.0,
                        label=f"fit rate {fit['rate']:.3f}")
        ax.set_xlabel("t")
        ax.set_ylabel("norm")
        ax.set_title("perturbation decay")
        ax.legend(fontsize=8)
        fig.tight_layout()
        return fig


def epsconv_figure(meta: dict, data: dict):
    """Log-log deviations against eps with persisted slopes in the legend."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if data["eps"].size == 0:
            _empty(ax, "empty eps-convergence table")
            return fig
        slopes = meta.get("slopes", {})
        name_map = {"dev_gradP": "gradP", "dev_lapP": "lapP",
                    "dev_Q": "Q", "dev_gradQ": "gradQ"}
        for col, key in name_map.items():
            label = key
            if key in slopes:
                label += f" (slope {slopes[key]:.2f})"
            ax.loglog(data["eps"], data[col], "o-", ms=4, label=label)
        ax.set_xlabel("eps")
        ax.set_ylabel("sup-norm deviation")
        ax.set_title(f"profile-family convergence, mu={meta.get('mu')}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        return fig


def save(fig, out_path) -> None:
    """Deterministic write: hash-salted element ids, no date metadata."""
    out_path = str(out_path)
    kwargs = {}
    if out_path.endswith(".svg"):
        kwargs["metadata"] = {"Date": None}
    with plt.rc_context(STYLE):  # svg.hashsalt is consulted at save time
        fig.savefig(out_path, **kwargs)
    plt.close(fig)

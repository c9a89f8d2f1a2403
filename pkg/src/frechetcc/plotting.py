"""Figures for power curves and null spectra (matplotlib, Agg backend).

SVG output is byte-reproducible: the element-id salt is fixed and the
date metadata is dropped.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SALT = "frechetcc"


def _save(fig, path):
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt in ("svg", "pdf") else None
    with matplotlib.rc_context({"svg.hashsalt": _SALT, "svg.fonttype": "path"}):
        fig.savefig(path, metadata=meta)
    plt.close(fig)


def plot_power_curve(curve, path, title=None):
    """Rejection rate against n, one line per (method, delta)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    keys = []
    for row in curve.rows:
        if (row.method, row.delta) not in keys:
            keys.append((row.method, row.delta))
    multi_delta = len({d for _, d in keys}) > 1
    for method, delta in keys:
        rows = [r for r in curve.rows if r.method == method and r.delta == delta]
        ns = [r.n for r in rows]
        rates = [r.rate for r in rows]
        se = [r.se for r in rows]
        label = f"{method} (δ={delta:g})" if multi_delta else method
        ax.errorbar(ns, rates, yerr=se, marker="o", capsize=3, label=label)
    ax.axhline(curve.alpha, color="grey", linestyle=":", linewidth=1)
    ax.set_xlabel("n")
    ax.set_ylabel("rejection rate")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title or f"setting {curve.setting}")
    if keys:
        ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_spectrum(gammas, path, title="null spectrum"):
    """Stem plot of the weights of the weighted chi-square law."""
    g = np.sort(np.asarray(gammas, dtype=float))[::-1]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.stem(np.arange(g.size), g)
    ax.set_xlabel("index")
    ax.set_ylabel("gamma")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)

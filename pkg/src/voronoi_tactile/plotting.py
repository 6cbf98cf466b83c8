"""Matplotlib report figures written next to the validation output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .shear import angular_difference  # noqa: E402

FIGSIZE = (5.0, 3.6)

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "voronoi-tactile",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)
    return Path(path)


def plot_calibration_curve(raw, mechanical, path, kind="depth", table=None):
    """Mechanical value against raw inferred value, with the fitted interpolant."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.plot(raw, mechanical, "o", ms=3, color="0.2", label="recorded")
        if table is not None:
            ax.plot(table.raw, table.mechanical, "-", lw=1, color="C3", label="linear interpolation")
        xlabel = "deformation volume (raw)" if kind == "depth" else "global shear magnitude (raw)"
        ylabel = "tip displacement (mm)" if kind == "depth" else "shear distance (mm)"
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_direction_errors(true_deg, inferred_deg, path):
    """Inferred heading against commanded heading, with per-trial absolute error."""
    true_deg = np.asarray(true_deg, dtype=float)
    inferred = np.array([np.nan if v is None else v for v in inferred_deg], dtype=float)
    errors = np.array([
        np.nan if np.isnan(i) else angular_difference(i, t) for i, t in zip(inferred, true_deg)
    ])
    with plt.rc_context(RC):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(2 * FIGSIZE[0], FIGSIZE[1]))
        ax0.plot([0, 360], [0, 360], "-", lw=0.8, color="0.6")
        ax0.plot(true_deg, inferred, "o", ms=3, color="C0")
        ax0.set_xlabel("commanded direction (deg)")
        ax0.set_ylabel("inferred direction (deg)")
        ax1.bar(true_deg, errors, width=6, color="C0")
        ax1.axhline(np.nanmean(errors), color="C3", lw=1, label=f"mean {np.nanmean(errors):.2f} deg")
        ax1.set_xlabel("commanded direction (deg)")
        ax1.set_ylabel("absolute error (deg)")
        ax1.legend(frameon=False)
        return _save(fig, path)

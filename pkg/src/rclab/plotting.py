"""Static figures for the scan and curve reports.

Rendering goes through the Agg backend so it works without a display.  The
figures are written next to the CSV/JSON output and never shown.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .regular import CurveRow, ScanRow  # noqa: E402

RC = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}
# PNG metadata would otherwise carry the matplotlib version
_META = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata=_META if path.suffix.lower() == ".png" else None)
    plt.close(fig)
    return path


def plot_scan(rows: Sequence[ScanRow], path: str | Path, title: str = "") -> Path:
    """Pressure and its w-derivative against w, one line per B."""
    Bs = sorted({r.B for r in rows})
    with plt.rc_context(RC):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8, 3.2))
        cmap = plt.get_cmap("viridis")
        for i, B in enumerate(Bs):
            sel = sorted((r for r in rows if r.B == B), key=lambda r: r.w)
            w = np.array([r.w for r in sel])
            colour = cmap(i / max(1, len(Bs) - 1))
            ax0.plot(w, [r.phi for r in sel], color=colour, lw=1.0, label=f"B={B:g}")
            ax1.plot(w, [r.dphi_dw for r in sel], color=colour, lw=1.0)
        ax0.set_xlabel("w")
        ax0.set_ylabel(r"$\varphi(w,B)$")
        ax1.set_xlabel("w")
        ax1.set_ylabel(r"$\partial_w\varphi$")
        if len(Bs) <= 12:
            ax0.legend(frameon=False, fontsize=7)
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def plot_curve(rows: Sequence[CurveRow], b_plus: float, path: str | Path, title: str = "") -> Path:
    """Critical weight along the curve and the size of the derivative jump."""
    B = np.array([r.B for r in rows])
    with plt.rc_context(RC):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8, 3.2))
        ax0.plot(B, [r.w_c for r in rows], "-o", ms=3, lw=1.0)
        ax0.axvline(b_plus, color="0.5", ls="--", lw=0.8)
        ax0.set_xlabel("B")
        ax0.set_ylabel(r"$w_c(B)$")
        first = np.array([r.first_order for r in rows], dtype=bool)
        gap = np.array([r.gap for r in rows])
        ax1.plot(B[first], gap[first], "o", ms=3, label="first order")
        ax1.plot(B[~first], gap[~first], "x", ms=4, label="continuous")
        ax1.axvline(b_plus, color="0.5", ls="--", lw=0.8)
        ax1.set_xlabel("B")
        ax1.set_ylabel(r"jump of $\partial_w\varphi$")
        ax1.legend(frameon=False, fontsize=7)
        if title:
            fig.suptitle(title)
        return _save(fig, path)

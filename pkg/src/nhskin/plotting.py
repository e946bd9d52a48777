"""Figure rendering for CLI reports (matplotlib, Agg backend)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_phase_diagram", "plot_spectrum"]

_LABELS = {"gamma": r"$\gamma$", "lambda": r"$\lambda$", "t": "$t$", "u": "$u$", "v": "$v$", "w": "$w$"}


def plot_phase_diagram(pd, path, overlays: bool = True, dpi: int = 150) -> None:
    """dMIPR heatmap in the (axis1, axis2) plane with critical lines on top."""
    a1, a2 = pd.axis1, pd.axis2
    vmax = np.nanmax(np.abs(pd.dmipr)) if np.any(np.isfinite(pd.dmipr)) else 1.0
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(
        a1.values, a2.values, pd.dmipr.T, cmap="RdBu_r", vmin=-vmax, vmax=vmax, shading="nearest"
    )
    fig.colorbar(mesh, ax=ax, label="dMIPR")
    if overlays:
        for ov in pd.overlays:
            pts = np.asarray(ov["points"])
            ax.plot(pts[:, 0], pts[:, 1], "k-", lw=1.2)
    ax.set_xlim(a1.min, a1.max)
    ax.set_ylim(a2.min, a2.max)
    ax.set_xlabel(_LABELS.get(a1.param, a1.param))
    ax.set_ylabel(_LABELS.get(a2.param, a2.param))
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def plot_spectrum(evals, path, pbc=None, dipr=None, dpi: int = 150) -> None:
    """OBC eigenvalues in the complex plane, coloured by dIPR when given."""
    evals = np.asarray(evals, dtype=complex)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    if pbc is not None:
        pbc = np.asarray(pbc, dtype=complex).ravel()
        ax.plot(pbc.real, pbc.imag, ".", color="0.7", ms=2, label="PBC")
    if dipr is None:
        ax.plot(evals.real, evals.imag, "o", ms=3, label="OBC")
    else:
        lim = max(np.max(np.abs(dipr)), 1e-12)
        sc = ax.scatter(evals.real, evals.imag, c=dipr, cmap="RdBu_r", vmin=-lim, vmax=lim, s=10, label="OBC")
        fig.colorbar(sc, ax=ax, label="dIPR")
    ax.set_xlabel("Re E")
    ax.set_ylabel("Im E")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)

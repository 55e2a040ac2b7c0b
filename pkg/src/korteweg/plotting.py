"""Figures written next to the CSV outputs of the command-line tool."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "svg.hashsalt": "korteweg",
}


def plot_dispersion(xi: np.ndarray, eig: np.ndarray, path) -> Path:
    """Real parts (decay) and imaginary parts (oscillation) of the three branches."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, (ax_re, ax_im) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        for j in range(eig.shape[1]):
            ax_re.loglog(xi, np.maximum(-eig[:, j].real, 1e-300), label=f"branch {j + 1}")
            ax_im.semilogx(xi, eig[:, j].imag)
        ax_re.set_xlabel("wavenumber")
        ax_re.set_ylabel("decay rate  -Re")
        ax_im.set_xlabel("wavenumber")
        ax_im.set_ylabel("frequency  Im")
        ax_re.legend()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_diagnostics(times, diagnostics: list, path) -> Path:
    """Energy, dissipation and the recorded norms against time."""
    path = Path(path)
    t = np.asarray(times)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(7.0, 2.8))
        e = np.array([d["energy_mechanical"] for d in diagnostics])
        diss = np.array([d["dissipation"] for d in diagnostics])
        axes[0].plot(t, e, label="mechanical energy")
        axes[0].plot(t, diss, label="dissipation")
        axes[0].set_xlabel("t")
        axes[0].legend()
        labels = list(diagnostics[0]["norms"]) if diagnostics else []
        for lab in labels:
            axes[1].semilogy(t, [d["norms"][lab] for d in diagnostics], label=lab)
        if not labels:
            for name in ("q", "u", "T"):
                axes[1].semilogy(t, [np.sum(d["blocks"][name]) for d in diagnostics], label=f"{name} block sum")
        axes[1].set_xlabel("t")
        axes[1].legend()
        fig.savefig(path)
        plt.close(fig)
    return path

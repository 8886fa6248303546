"""Optional PNG emission for experiment results.

CSV files are the source of truth; these helpers only render them. Imports
of matplotlib happen lazily so headless runs without plotting never touch it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_spectra(result, out_dir) -> list:
    """One dB-scale heatmap per family from a spectrum run."""
    plt = _pyplot()
    out = Path(out_dir)
    paths = []
    for family, grid in sorted(result.grids.items()):
        fig, ax = plt.subplots(figsize=(5, 4))
        db = 10.0 * np.log10(grid.values / grid.values.max())
        mesh = ax.imshow(
            db.T,
            origin="lower",
            extent=(-1, 1, -1, 1),
            aspect="auto",
            vmin=-40.0,
            cmap="viridis",
        )
        fig.colorbar(mesh, ax=ax, label="normalised power (dB)")
        ax.set_xlabel("theta_cos")
        ax.set_ylabel("phi_cos")
        ax.set_title(f"pseudo-spectrum: {family}")
        path = out / f"spectrum_{family}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def _families(result) -> list:
    idx = result.columns.index("family")
    return sorted({row[idx] for row in result.rows})


def plot_rmse_sweep(result, out_dir, x_column: str) -> Path:
    """Log-scale RMSE curves per family with the square-root bound dashed."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for family in _families(result):
        x = result.column(x_column, family=family)
        rmse = result.column("rmse_theta_cos", family=family)
        bound = result.column("sqrt_crb_theta_cos", family=family)
        keep = [k for k, v in enumerate(rmse) if np.isfinite(v)]
        ax.semilogy([x[k] for k in keep], [rmse[k] for k in keep],
                    marker="o", label=f"{family} rmse")
        ax.semilogy([x[k] for k in keep], [bound[k] for k in keep],
                    linestyle="--", label=f"{family} bound")
    ax.set_xlabel(x_column)
    ax.set_ylabel("rmse (theta_cos)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    path = Path(out_dir) / f"{result.experiment}.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_psr(result, out_dir) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for family in _families(result):
        x = result.column("separation_deg", family=family)
        psr = result.column("psr", family=family)
        ax.plot(x, psr, marker="o", label=family)
    ax.set_xlabel("separation (deg)")
    ax.set_ylabel("probability of successful resolution")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    path = Path(out_dir) / "psr_vs_separation.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path

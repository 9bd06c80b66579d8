"""Static SVG figures of a run (matplotlib, headless backend).

Figures are written with a fixed hash salt and no date stamp so that
identical runs produce identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "beamfatigue", "svg.fonttype": "none"}
_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_diagnostics(traj, out_dir) -> dict:
    """Energy residual, entropy production and temperature floor against time."""
    out = Path(out_dir)
    t = traj.series("t")
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True, constrained_layout=True)
    axes[0].plot(t, traj.series("energy_residual"), lw=1)
    axes[0].set_ylabel("energy residual")
    axes[1].plot(t, traj.series("entropy_production"), lw=1)
    axes[1].axhline(0.0, color="k", lw=0.5)
    axes[1].set_ylabel("entropy production")
    axes[2].plot(t, traj.series("min_theta"), lw=1, label=r"min$_k\,\theta_k$")
    axes[2].plot(t, traj.series("floor_value"), lw=1, ls="--", label="floor p(t)")
    axes[2].set_ylabel("temperature")
    axes[2].set_xlabel("t")
    axes[2].legend(loc="best")
    fig.suptitle(traj.config.name)
    return {"plot_diagnostics": _save(fig, out / "diagnostics.svg")}


def plot_fields(traj, out_dir) -> dict:
    """Space-time maps of displacement, temperature, phase and fatigue."""
    out = Path(out_dir)
    times = np.asarray(traj.snapshot_times)
    x = np.linspace(0.0, 1.0, traj.config.n + 1)
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), constrained_layout=True)
    for ax, name in zip(axes.ravel(), ("w", "theta", "chi", "m")):
        data = traj.field(name)
        mesh = ax.pcolormesh(x, times, data, shading="nearest", rasterized=False)
        fig.colorbar(mesh, ax=ax)
        ax.set_title(name)
        ax.set_xlabel("x")
        ax.set_ylabel("t")
    return {"plot_fields": _save(fig, out / "fields.svg")}


def plot_series(x, columns: dict, path, xlabel: str = "", ylabel: str = "",
                logx: bool = False, logy: bool = False) -> Path:
    """Generic line plot used by the convergence and floor commands."""
    fig, ax = plt.subplots(figsize=(7, 4), constrained_layout=True)
    for label, y in columns.items():
        ax.plot(x, y, marker="o" if len(x) < 20 else None, lw=1, label=label)
    if logy:
        ax.set_yscale("log")
    if logx:
        ax.set_xscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(loc="best")
    return _save(fig, Path(path))


"""Export of run results: diagnostics CSV, field matrices and a JSON summary.

CSV files use ``,`` separators, ``.`` decimals and LF line endings.  Floats are
written with ``repr`` so identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .integrator import Trajectory

DIAGNOSTIC_COLUMNS = ("t", "energy", "energy_residual", "entropy_production", "min_theta",
                      "floor", "max_eps_rate")
_REPORT_ATTRS = ("t", "energy_after", "energy_residual", "entropy_production", "min_theta",
                 "floor_value", "max_eps_rate")


class ExportError(OSError):
    pass


def _fmt(v) -> str:
    return repr(float(v))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create output directory {out}: {exc}") from exc
    return out


def write_diagnostics_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        for r in traj.reports:
            w.writerow([_fmt(getattr(r, a)) for a in _REPORT_ATTRS])
    return path


def write_field_csv(traj: Trajectory, name: str, path) -> Path:
    """One row per snapshot: time followed by the node values ``x_0..x_n``."""
    path = Path(path)
    values = traj.field(name)
    n = values.shape[1] - 1 if values.ndim == 2 else traj.config.n
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["t"] + [f"x{k}" for k in range(n + 1)])
        for t, row in zip(traj.snapshot_times, values):
            w.writerow([_fmt(t)] + [_fmt(v) for v in row])
    return path


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def summary_metrics(traj: Trajectory) -> dict:
    reps = traj.reports
    if not reps:
        return {"steps": 0, "failure": traj.failure}
    res = traj.series("energy_residual")
    prod = traj.series("entropy_production")
    margin = np.array([r.floor_margin for r in reps])
    viol = {k: max(r.violations[k] for r in reps) for k in reps[0].violations}
    final = traj.final_state
    return {
        "steps": len(reps),
        "final_time": final.t,
        "failure": traj.failure,
        "max_abs_energy_residual": float(np.max(np.abs(res))),
        "min_entropy_production": float(np.min(prod)),
        "min_theta": float(np.min(traj.series("min_theta"))),
        "min_floor_margin": float(np.min(margin)),
        "max_constraint_violation": max(viol.values()),
        "constraint_violations": viol,
        "final_max_m": float(np.max(final.m)),
        "final_mean_chi": float(np.mean(final.chi[1:-1])),
    }


def write_summary(traj: Trajectory, path, extra: dict | None = None) -> Path:
    path = Path(path)
    doc = {"config": traj.config.as_dict(), "metrics": summary_metrics(traj)}
    if extra:
        doc.update(extra)
    text = json.dumps(doc, indent=2, sort_keys=True, default=_finite_or_none, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def export_series(traj: Trajectory, out_dir, plots: bool = True) -> dict:
    """Write every output file of a run; returns a name -> path mapping."""
    out = _prepare(out_dir)
    files = {"diagnostics": write_diagnostics_csv(traj, out / "diagnostics.csv")}
    for name in Trajectory.FIELDS:
        files[f"field_{name}"] = write_field_csv(traj, name, out / f"field_{name}.csv")
    files["summary"] = write_summary(traj, out / "summary.json")
    if plots and traj.reports:
        from .plotting import plot_diagnostics, plot_fields
        files.update(plot_diagnostics(traj, out))
        files.update(plot_fields(traj, out))
    return files

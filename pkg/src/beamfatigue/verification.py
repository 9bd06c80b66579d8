"""Invariant suite, refinement studies and floor series shared by the CLI and the tests.

Asymptotic properties are checked over a time-step sweep ``dt, dt/2, dt/4``:
a tolerance constant ``C`` is measured on the coarsest run and then frozen,
so each finer run must satisfy its bound with the same ``C``.
"""
from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SimulationConfig
from .diagnostics import convergence_metric, neumann_functional
from .integrator import Trajectory, run
from .output import write_diagnostics_csv

RATIO_RANGE = (1.6, 2.4)
ROUNDOFF = 1e-9
SWEEP = (1, 2, 4)


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class VerificationReport:
    scenario: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "passed": self.passed,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                           for c in self.checks]}


def worker_count(threads: int | None = None) -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(threads or 1))


def _run_quiet(config: SimulationConfig) -> Trajectory:
    return run(config, raise_on_failure=False)


def run_many(configs: list, threads: int | None = None) -> list:
    """Independent runs, concurrently when more than one worker is allowed."""
    workers = min(worker_count(threads), len(configs))
    if workers <= 1:
        return [_run_quiet(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_quiet, configs))


def dt_sweep(config: SimulationConfig, threads: int | None = None) -> list:
    cfgs = [config.with_(dt=config.dt / k) for k in SWEEP]
    return run_many(cfgs, threads)


def diagnostics_bytes(traj: Trajectory) -> bytes:
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        path = write_diagnostics_csv(traj, os.path.join(tmp, "d.csv"))
        return path.read_bytes()


def _frozen_constant_check(name: str, runs: list, deficit) -> Check:
    """``deficit(run) <= C dt`` on every run with ``C`` fixed by the coarsest run."""
    dts = [r.config.dt for r in runs]
    worst = [float(max(0.0, max((deficit(rep) for rep in r.reports), default=0.0)))
             for r in runs]
    C = worst[0] / dts[0]
    ok = all(w <= C * dt * (1.0 + 1e-9) + ROUNDOFF for w, dt in zip(worst, dts))
    return Check(name, ok, {"dt": dts, "worst_deficit": worst, "C": C})


def check_completed(runs: list) -> Check:
    fails = {r.config.dt: r.failure for r in runs if r.failure}
    return Check("runs_completed", not fails, {"failures": {repr(k): v for k, v in fails.items()}})


def check_constraints(runs: list) -> Check:
    worst = {}
    for r in runs:
        for rep in r.reports:
            for k, v in rep.violations.items():
                worst[k] = max(worst.get(k, 0.0), v)
    steps = sum(len(r.reports) for r in runs)
    return Check("exact_constraints", all(v == 0.0 for v in worst.values()),
                 {"steps": steps, "max_violation": worst})


def check_energy_order(runs: list) -> Check:
    peaks = [float(np.max(np.abs(r.series("energy_residual")))) if r.reports else np.inf
             for r in runs]
    if peaks[0] <= ROUNDOFF:
        return Check("energy_residual_order", all(p <= ROUNDOFF for p in peaks),
                     {"max_abs_residual": peaks, "note": "residual at round-off level"})
    ratios = [a / b if b > 0 else np.inf for a, b in zip(peaks, peaks[1:])]
    ok = all(RATIO_RANGE[0] <= q <= RATIO_RANGE[1] for q in ratios)
    return Check("energy_residual_order", ok, {"max_abs_residual": peaks, "ratios": ratios})


def check_floor(runs: list) -> Check:
    return _frozen_constant_check("temperature_floor", runs,
                                  lambda rep: rep.floor_value - rep.min_theta)


def check_entropy(runs: list) -> Check:
    return _frozen_constant_check("entropy_production", runs,
                                  lambda rep: -rep.entropy_production)


def check_positivity(runs: list) -> Check:
    mins = [float(np.min(r.series("min_theta"))) if r.reports else np.nan for r in runs]
    return Check("temperature_positive", all(m > 0 for m in mins), {"min_theta": mins})


def check_determinism(config: SimulationConfig, reference: Trajectory) -> Check:
    again = _run_quiet(config)
    same = diagnostics_bytes(again) == diagnostics_bytes(reference)
    fields_same = all(np.array_equal(again.field(k), reference.field(k)) for k in Trajectory.FIELDS)
    return Check("deterministic_replay", same and fields_same, {})


def verify(config: SimulationConfig, threads: int | None = None) -> VerificationReport:
    """Full invariant suite on one scenario; needs no earlier run artifacts."""
    runs = dt_sweep(config, threads)
    checks = [check_completed(runs), check_constraints(runs), check_positivity(runs),
              check_energy_order(runs), check_floor(runs), check_entropy(runs),
              check_determinism(config, runs[0])]
    return VerificationReport(config.name, checks)


@dataclass
class ConvergenceRow:
    n: int
    metric: float
    neumann: float


def converge(config: SimulationConfig, grids, field_name: str = "w",
             threads: int | None = None) -> list:
    """One row per grid ``n``: distance to the run at ``2n`` and the boundary flux functional."""
    grids = sorted(int(g) for g in grids)
    needed = sorted(set(grids) | {2 * g for g in grids})
    trajs = dict(zip(needed, run_many([config.with_(n=n) for n in needed], threads)))
    for n, tr in trajs.items():
        if tr.failure:
            raise RuntimeError(f"run at n = {n} failed: {tr.failure}")
    return [ConvergenceRow(n, convergence_metric(trajs[n], trajs[2 * n], field_name),
                           neumann_functional(trajs[n])) for n in grids]


def convergence_csv(rows: list) -> str:
    buf = io.StringIO()
    buf.write("n,metric,neumann_functional\n")
    for r in rows:
        buf.write(f"{r.n},{r.metric!r},{r.neumann!r}\n")
    return buf.getvalue()


def floor_series(traj: Trajectory) -> np.ndarray:
    """Columns ``t, p(t), min_k theta_k, margin``."""
    t = traj.series("t")
    p = traj.series("floor_value")
    th = traj.series("min_theta")
    return np.column_stack([t, p, th, th - p]) if len(t) else np.zeros((0, 4))

"""Thermodynamic and convergence instrumentation.

Energies and entropies are evaluated on the interior nodes ``k = 1..n-1``;
the kinetic part contains the bending term ``(alpha n / 2) sum (w_dot_k - w_dot_{k-1})^2``.
Interpolants follow the piecewise constant / linear / quadratic
constructions used to pass from node values to functions on ``[0, 1]``.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .prandtl_ishlinskii import NodePIMemory, pi_potential

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)


class DomainError(ValueError):
    pass


class ComparisonError(ValueError):
    pass


class InterpolantKind(str, Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    QUADRATIC = "quadratic"


def total_energy(state, model) -> float:
    """Discrete total energy: elastic, hysteretic, thermal, latent and kinetic parts."""
    p = model.params
    n = model.grid.n
    sl = slice(1, n)
    V = pi_potential(NodePIMemory(state.memory.z[sl], state.memory.xi[sl]), state.m[sl],
                     model.yield_grid, model.density)
    eps, wd = state.eps[sl], state.w_dot[sl]
    local = (0.5 * p.B * eps**2 + V + p.beta * p.theta_c * eps + 0.5 * p.rho * wd**2
             + p.c * state.theta[sl] + p.L * state.chi[sl])
    return float(np.sum(local) / n + 0.5 * p.alpha * n * np.sum(np.diff(state.w_dot) ** 2))


def total_entropy(state, params) -> float:
    n = state.n
    sl = slice(1, n)
    th = state.theta[sl]
    if np.any(th <= 0):
        raise ValueError("entropy needs positive temperatures")
    return float(np.sum(params.c * np.log(th / params.theta_c) + params.beta * state.eps[sl]
                        + params.L / params.theta_c * state.chi[sl]) / n)


def entropy_production(state_before, state_after, params,
                       dt: float, g_values) -> float:
    """``dS/dt - (1/n) sum g_k / theta_k`` with end-of-step temperatures."""
    n = state_after.n
    th = state_after.theta[1:n]
    if np.any(th <= 0) or np.any(state_before.theta[1:n] <= 0):
        raise ValueError("entropy production needs positive temperatures")
    dS = (total_entropy(state_after, params) - total_entropy(state_before, params)) / dt
    return float(dS - np.sum(np.asarray(g_values) / th) / n)



def interpolate(values, kind, x):
    """Evaluate an interpolant of node values ``v_0..v_n`` at ``x`` in ``[0, 1]``.

    * constant: ``v_k`` on ``[(k-1)/n, k/n)``, ``k = 1..n-1``; ``v_{n-1}`` on the last cell;
    * linear: the usual hat-function interpolant;
    * quadratic: on cell ``k``, ``(v_{k-1}+v_k)/2 + s D_k v + s^2/2 D2_k v`` with
      ``s = x - (k-1)/n``; the last cell reuses ``D2_{n-1}``.  This is a C^1
      spline that starts each cell at the average of its end values.
    """
    kind = InterpolantKind(kind)
    v = np.asarray(values, dtype=float)
    n = len(v) - 1
    if n < 2:
        raise ValueError("need at least three node values")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > 1) or not np.all(np.isfinite(xa)):
        raise DomainError("interpolation point outside [0, 1]")
    cell = np.floor(xa * n).astype(int) + 1          # x in [(k-1)/n, k/n)
    if kind is InterpolantKind.CONSTANT:
        out = v[np.minimum(cell, n - 1)]
    else:
        k = np.minimum(cell, n)
        s = xa - (k - 1) / n
        slope = n * (v[k] - v[k - 1])
        if kind is InterpolantKind.LINEAR:
            out = v[k - 1] + s * slope
        else:
            kk = np.minimum(k, n - 1)
            curv = n * n * (v[kk + 1] - 2.0 * v[kk] + v[kk - 1])
            out = 0.5 * (v[k - 1] + v[k]) + s * slope + 0.5 * s * s * curv
    return float(out) if np.ndim(out) == 0 else out


def discrete_norm(values, p, n: int | None = None) -> float:
    """``((1/n) sum_k |v_k|^p)^(1/p)``; ``p = inf`` gives ``max |v_k|``.

    ``n`` defaults to the number of entries, i.e. the normalised counting
    measure.  Pass ``n = len(values) - 1`` for node vectors ``v_0..v_n``
    normalised by the number of cells.
    """
    v = np.abs(np.asarray(values, dtype=float))
    if p == np.inf:
        return float(np.max(v))
    if p < 1:
        raise ValueError("p must be >= 1")
    n = len(v) if n is None else n
    top = float(np.max(v)) if len(v) else 0.0
    if top == 0.0:
        return 0.0
    # scaled by the largest entry so that tiny or huge values neither underflow nor overflow
    return float(top * (np.sum((v / top) ** p) / n) ** (1.0 / p))


def discrete_difference_norm(values, p) -> float:
    """``(n^(p-1) sum_{k=1}^n |v_k - v_{k-1}|^p)^(1/p)`` for ``v_0..v_n``."""
    v = np.asarray(values, dtype=float)
    n = len(v) - 1
    d = np.abs(np.diff(v))
    if p == np.inf:
        return float(n * np.max(d))
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((n ** (p - 1) * np.sum(d**p)) ** (1.0 / p))


def l2_distance(values_a, values_b, kind=InterpolantKind.QUADRATIC) -> float:
    """``L^2(0, 1)`` distance between interpolants of two node vectors of any sizes."""
    na, nb = len(values_a) - 1, len(values_b) - 1
    breaks = np.union1d(np.arange(na + 1) / na, np.arange(nb + 1) / nb)
    left, width = breaks[:-1], np.diff(breaks)
    xq = (left[:, None] + 0.5 * (_GAUSS_X[None, :] + 1.0) * width[:, None]).ravel()
    wq = (0.5 * _GAUSS_W[None, :] * width[:, None]).ravel()
    diff = interpolate(values_a, kind, xq) - interpolate(values_b, kind, xq)
    return float(np.sqrt(np.sum(wq * diff**2)))


def _check_comparable(run_a, run_b):
    ca, cb = run_a.config, run_b.config
    probs = []
    if ca.params != cb.params:
        probs.append("physical constants differ")
    if abs(ca.T - cb.T) > 1e-12:
        probs.append("horizons differ")
    for key in ("f", "g", "theta0", "chi0", "density_kind", "density_amplitude",
                "density_yield_scale", "density_fatigue_scale", "kernel_amplitude",
                "kernel_halfwidth"):
        if getattr(ca, key) != getattr(cb, key):
            probs.append(f"{key} differs")
    if probs:
        raise ComparisonError("runs are not comparable: " + ", ".join(probs))


def convergence_metric(run_a, run_b, field: str = "w", times=None,
                       kind=InterpolantKind.QUADRATIC) -> float:
    """Largest ``L^2`` distance between two runs' interpolated fields over sample times.

    Sample times default to the snapshot times the runs share.
    """
    _check_comparable(run_a, run_b)
    ta = np.asarray(run_a.snapshot_times)
    tb = np.asarray(run_b.snapshot_times)
    if times is None:
        times = [t for t in ta if np.any(np.abs(tb - t) < 1e-9)]
    if len(times) == 0:
        raise ComparisonError("runs share no snapshot times")
    fa, fb = run_a.field(field), run_b.field(field)
    worst = 0.0
    for t in times:
        ia = np.flatnonzero(np.abs(ta - t) < 1e-9)
        ib = np.flatnonzero(np.abs(tb - t) < 1e-9)
        if len(ia) == 0 or len(ib) == 0:
            raise ComparisonError(f"time {t} missing from a run's snapshots")
        worst = max(worst, l2_distance(fa[ia[0]], fb[ib[0]], kind))
    return worst


def neumann_functional(run) -> float:
    """Time integral of ``|n (theta_{n-1} - theta_{n-2})|`` over the run."""
    return float(sum(abs(r.neumann_flux) * r.dt for r in run.reports))

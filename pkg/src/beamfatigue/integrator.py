"""Operator-split semi-implicit time stepping of the semi-discrete beam system.

One step runs eight stages in a fixed order:

1. velocity solve ``(rho I + alpha S) w_dot = -Lap u + f``;
2. ``w += dt w_dot``, interior curvature recomputed from ``w``, end-node
   curvature by an explicit step of its relaxation ODE;
3. Prandtl-Ishlinskii stop memories advanced by the curvature increment,
   plastic dissipation ``D_k``;
4. phase stop driven by the start-of-step temperature;
5. dissipation convolved with the kernel, fatigue stop;
6. fatigue kernel ``K_k``;
7. backward-Euler heat diffusion with explicit sources;
8. explicit update of ``u`` from end-of-step fields.

Only the heat diffusion is implicit.  The scheme is first order in ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import beam
from .beam import BeamState, Grid, PhysicalParams
from .config import SimulationConfig
from .diagnostics import entropy_production, total_energy
from .phase_fatigue import chi_update_array, m_update_array
from .prandtl_ishlinskii import (
    NodePIMemory, effective_moments, fatigue_kernel, pi_dissipation_rate, pi_value,
)

CHECK_TOL = 1e-12


class StepFailure(RuntimeError):
    """The step produced non-finite values; the input state is left untouched."""


class PositivityFailure(StepFailure):
    def __init__(self, node: int, value: float, t: float):
        super().__init__(f"temperature {value!r} <= 0 at node {node}, t = {t:.6g}; reduce dt")
        self.node = node
        self.value = value


@dataclass
class StepReport:
    t: float
    dt: float
    energy_before: float
    energy_after: float
    energy_residual: float
    entropy_production: float
    min_theta: float
    floor_value: float
    max_eps_rate: float
    neumann_flux: float
    max_constraint_violation: float
    violations: dict = field(default_factory=dict)

    @property
    def floor_margin(self) -> float:
        return self.min_theta - self.floor_value


class Model:
    """Everything a step needs that does not change between steps."""

    def __init__(self, config: SimulationConfig):
        self.config = config
        self.grid = Grid(config.n)
        self.params: PhysicalParams = config.params
        self.density = config.density()
        self.yield_grid = config.yield_grid()
        self.kernel = config.kernel()
        self.h = config.recovery()
        self.f = config.f_expr()
        self.g = config.g_expr()
        self.theta0 = config.theta0_expr()
        self.chi0 = config.chi0_expr()
        self.M_tilde, self.M = effective_moments(self.yield_grid, self.density)
        self.Lambda = self.kernel.bound()
        self.g1 = config.g_lipschitz()
        n = self.grid.n
        self.conv = beam.convolution_matrix(beam.lambda_samples(self.kernel, n), n)
        self.velocity_system = beam.assemble_velocity_system(self.params, self.grid)
        self._heat_systems = {}

    def heat_system(self, dt: float):
        sys_ = self._heat_systems.get(dt)
        if sys_ is None:
            sys_ = beam.assemble_heat_system(self.params, self.grid, dt)
            self._heat_systems[dt] = sys_
        return sys_

    def f_values(self, t: float) -> np.ndarray:
        return beam.cell_averages(lambda x: self.f(x, t), self.grid.n)

    def g_values(self, theta_interior, t: float) -> np.ndarray:
        return beam.source_g_all(theta_interior, t, self.g, self.grid.n)

    def velocities(self, state: BeamState):
        return beam.velocity_solve(state, self.params, self.grid, self.f_values(state.t),
                                   self.velocity_system)


def initial_state(model: Model) -> BeamState:
    """Zero displacement, ``u`` and fatigue; sampled temperature, cell-averaged phase."""
    n = model.grid.n
    x = model.grid.nodes
    theta = np.empty(n + 1)
    theta[1:n] = np.broadcast_to(np.asarray(model.theta0(x[1:n]), dtype=float), (n - 1,))
    theta[0], theta[n] = theta[1], theta[n - 1]
    chi = np.empty(n + 1)
    chi[1:n] = beam.cell_averages(lambda xx: model.chi0(xx), n)
    chi[0], chi[n] = chi[1], chi[n - 1]
    state = BeamState(t=0.0, u=np.zeros(n + 1), w=np.zeros(n + 1), eps=np.zeros(n + 1),
                      theta=theta, m=np.zeros(n + 1), chi=chi,
                      memory=NodePIMemory.virgin(model.yield_grid, (n + 1,)),
                      chi_xi=np.zeros(n + 1), m_xi=np.zeros(n + 1))
    state.w_dot, state.eps_dot = model.velocities(state)
    return state


def temperature_floor(t: float, params: PhysicalParams, density_or_M, g1: float = 0.0) -> float:
    """Explicit comparison solution bounding the temperature from below.

    ``p' = -(delta p^2 + mu p)``, ``p(0) = theta_floor``, with
    ``delta = beta^2 / (4 nu c)`` and
    ``mu = (L (L + a M/2) / (gamma theta_c) + g1) / c``.
    With unit constants and ``g1 = 0``: ``delta = 1/4``, ``mu = 1 + a M/2``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    M = density_or_M if isinstance(density_or_M, (int, float)) else density_or_M.M
    p = params
    delta = p.beta**2 / (4.0 * p.nu * p.c)
    mu = (p.L * (p.L + 0.5 * p.a * M) / (p.gamma * p.theta_c) + g1) / p.c
    th = p.theta_floor
    e = math.exp(-mu * t)
    return mu * th * e / (delta * th * (1.0 - e) + mu)


def step(state: BeamState, model: Model, dt: float,
         t_next: float | None = None) -> tuple[BeamState, StepReport]:
    """Advance one step of size ``dt``; ``t_next`` pins the new time level exactly.

    Raises :class:`StepFailure` (and leaves ``state`` untouched) on non-finite
    values or a nonpositive temperature.
    """
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return _step(state, model, dt, t_next)
    except beam.EvaluationError as exc:
        raise StepFailure(f"{exc} near t = {state.t + dt:.6g}") from exc


def _step(state: BeamState, model: Model, dt: float, t_next: float | None):
    if not dt > 0:
        raise ValueError("dt must be > 0")
    p = model.params
    n = model.grid.n
    yg, dens = model.yield_grid, model.density
    inner = slice(1, n)
    t0 = state.t
    t1 = state.t + dt if t_next is None else t_next
    if state.w_dot is None:
        state.w_dot, state.eps_dot = model.velocities(state)

    # (1)-(2) kinematics
    w_dot = state.w_dot
    w_new = state.w + dt * w_dot
    w_new[0] = w_new[n] = 0.0
    eps_new = np.empty(n + 1)
    eps_new[inner] = beam.second_differences(w_new, n)
    for node in (0, n):
        rate = beam.boundary_eps_rhs(state, p, node, yg, dens)
        eps_new[node] = state.eps[node] + dt * rate
    d_eps = eps_new - state.eps
    eps_rate = d_eps / dt

    # (3) hysteresis memories
    mem_new = state.memory.step(d_eps, yg)
    D = pi_dissipation_rate(state.memory, mem_new, state.m, yg, dens, dt)

    # (4) phase; end nodes copy their neighbours
    chi_new, chi_xi_new, chi_dot = chi_update_array(state.chi, state.chi_xi, state.theta, p, dt)
    for b, nb in ((0, 1), (n, n - 1)):
        chi_new[b], chi_xi_new[b], chi_dot[b] = chi_new[nb], chi_xi_new[nb], chi_dot[nb]

    # (5) fatigue
    Dconv = np.sum(model.conv * D[inner][None, :], axis=1)
    m_new, m_xi_new, m_dot = m_update_array(state.m, state.m_xi, chi_dot, Dconv, dt, model.h)

    # (6) fatigue kernel at start-of-step m, end-of-step memory
    K = fatigue_kernel(mem_new, state.m, yg, dens)

    # (7) temperature
    g_vals = model.g_values(state.theta[inner], t0)
    src = (m_dot * K + D + p.nu * eps_rate**2 - p.beta * state.theta * eps_rate
           - p.L * chi_dot)[inner] + g_vals
    # solved for the increment so that a uniform, unforced temperature stays exactly fixed
    lap = beam.second_differences(state.theta, n)
    theta_new = np.empty(n + 1)
    theta_new[inner] = state.theta[inner] + model.heat_system(dt).solve(
        dt / p.c * (src + p.kappa * lap))
    theta_new[0], theta_new[n] = theta_new[1], theta_new[n - 1]

    # (8) u from end-of-step fields
    P_new = pi_value(mem_new, m_new, yg, dens)
    u_new = np.zeros(n + 1)
    u_new[inner] = state.u[inner] + dt * (p.B * eps_new[inner] + P_new[inner] + p.nu * eps_rate[inner]
                                          - p.beta * (theta_new[inner] - p.theta_c))

    new = BeamState(t=t1, u=u_new, w=w_new, eps=eps_new, theta=theta_new, m=m_new, chi=chi_new,
                    memory=mem_new, chi_xi=chi_xi_new, m_xi=m_xi_new,
                    step_index=state.step_index + 1)
    for name in ("u", "w", "eps", "theta", "m", "chi"):
        if not np.all(np.isfinite(getattr(new, name))):
            raise StepFailure(f"non-finite {name} at t = {t1:.6g}")
    if not np.all(np.isfinite(mem_new.z)):
        raise StepFailure(f"non-finite hysteresis memory at t = {t1:.6g}")
    bad = np.flatnonzero(theta_new[inner] <= 0)
    if len(bad):
        k = int(bad[0]) + 1
        raise PositivityFailure(k, float(theta_new[k]), t1)
    new.w_dot, new.eps_dot = model.velocities(new)
    if not np.all(np.isfinite(new.w_dot)):
        raise StepFailure(f"non-finite velocity at t = {t1:.6g}")
    f1 = model.f_values(t1)
    rhs = -beam.second_differences(new.u, n) + f1
    solve_res = float(np.max(np.abs(model.velocity_system.matvec(new.w_dot[inner]) - rhs)))

    # diagnostics
    e0 = total_energy(state, model)
    e1 = total_energy(new, model)
    if not math.isfinite(e1):
        raise StepFailure(f"energy overflow at t = {t1:.6g}")
    f0 = model.f_values(t0)
    w_mid = 0.5 * (w_dot[inner] + new.w_dot[inner])
    power = np.sum((f1 - f0) / dt * w_mid + g_vals) / n
    residual = (e1 - e0) / dt - power
    prod = entropy_production(state, new, p, dt, g_vals)
    violations = _constraint_violations(state, new, model, dt, d_eps, D, Dconv, K, eps_rate)
    violations["velocity_solve_residual"] = max(
        0.0, solve_res - 1e-10 * max(float(np.max(np.abs(rhs))), 1e-300))
    report = StepReport(
        t=t1, dt=dt, energy_before=e0, energy_after=e1, energy_residual=float(residual),
        entropy_production=prod, min_theta=float(np.min(theta_new[inner])),
        floor_value=temperature_floor(t1, p, model.M, model.g1),
        max_eps_rate=float(np.max(np.abs(eps_rate))),
        neumann_flux=float(n * (theta_new[n - 1] - theta_new[n - 2])) if n >= 3 else 0.0,
        max_constraint_violation=max(violations.values()), violations=violations)
    return new, report


def _constraint_violations(before: BeamState, after: BeamState, model: Model, dt, d_eps, D,
                           Dconv, K, eps_rate) -> dict:
    """Amount by which each exact constraint is violated (0 when satisfied)."""
    n = model.grid.n
    r = model.yield_grid.radii
    inner = slice(1, n)
    tol = CHECK_TOL

    def over(x):
        return float(max(0.0, np.max(x)))

    eps_scale = max(1.0, float(np.max(np.abs(after.eps[inner]))))
    return {
        "chi_in_unit_interval": over(np.maximum(-after.chi, after.chi - 1.0)),
        "m_nonnegative": over(-after.m),
        "stop_in_yield_interval": over(np.abs(after.memory.z) - r),
        "dissipation_nonnegative": over(-D),
        "kernel_in_bounds": over(np.maximum(-K, K - 0.5 * model.M) - tol),
        "dissipation_bound": over(D * dt - np.abs(d_eps) * model.M_tilde - tol),
        "convolution_bound": over(
            Dconv - model.Lambda * model.M_tilde * np.sum(np.abs(eps_rate[inner])) / n
            - tol * (1.0 + np.max(Dconv))),
        "curvature_consistency": over(
            np.abs(after.eps[inner] - beam.second_differences(after.w, n)) - tol * eps_scale * n * n),
    }


@dataclass
class Trajectory:
    config: SimulationConfig
    reports: list
    snapshot_times: list
    snapshots: dict
    final_state: BeamState
    failure: str | None = None

    FIELDS = ("u", "w", "eps", "theta", "m", "chi")

    def field(self, name: str) -> np.ndarray:
        return np.array(self.snapshots[name])

    def series(self, attr: str) -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.reports])


def run(config: SimulationConfig, model: Model | None = None, state: BeamState | None = None,
        raise_on_failure: bool = True) -> Trajectory:
    """Integrate to the configured horizon, snapshotting every ``snapshot_interval``."""
    model = model or Model(config)
    state = state or initial_state(model)
    dt = config.dt
    every = config.snapshot_every
    reports = []
    snaps = {k: [] for k in Trajectory.FIELDS}
    times = []

    def snap(s):
        times.append(s.t)
        for k in Trajectory.FIELDS:
            snaps[k].append(getattr(s, k).copy())

    snap(state)
    failure = None
    for i in range(config.steps):
        try:
            state, rep = step(state, model, dt, t_next=(i + 1) * dt)
        except StepFailure as exc:
            failure = str(exc)
            if raise_on_failure:
                raise
            break
        reports.append(rep)
        if (i + 1) % every == 0:
            snap(state)
    return Trajectory(config, reports, times, snaps, state, failure)

"""Spatial algebra of the semi-discrete beam: grid, operators, boundary data, sources.

Node ``k = 0..n`` sits at ``x = k/n``.  Interior unknowns live on
``k = 1..n-1``; displacement and ``u`` vanish at both ends, temperature uses
reflected ghosts ``theta_0 = theta_1``, ``theta_n = theta_{n-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .prandtl_ishlinskii import NodePIMemory, YieldGrid, DensityModel, pi_value
from .tridiagonal import TridiagonalSystem

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)


class EvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 cells, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n


@dataclass(frozen=True)
class PhysicalParams:
    B: float = 1.0
    nu: float = 1.0
    beta: float = 1.0
    theta_c: float = 1.0
    rho: float = 1.0
    alpha: float = 1.0
    c: float = 1.0
    kappa: float = 1.0
    L: float = 1.0
    gamma: float = 1.0
    a: float = 1.0
    b: float = 0.5      # b M <= gamma must hold; the default density has M = 2
    theta_floor: float = 1.0

    def violations(self, M: float) -> list[str]:
        """Admissibility conditions on the constants that fail, as readable strings."""
        out = []
        for name in ("B", "nu", "beta", "theta_c", "rho", "alpha", "c", "kappa", "L", "gamma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                out.append(f"constants: {name} = {v} is not a positive constant")
        for name in ("a", "b"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                out.append(f"recovery: {name} = {v} is not positive")
        if not (np.isfinite(self.theta_floor) and self.theta_floor > 0):
            out.append(f"initial: theta_floor = {self.theta_floor} is not positive")
        if self.b * M > self.gamma:
            out.append(f"recovery: b*M > gamma ({self.b}*{M} = {self.b * M} > {self.gamma})")
        return out

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class BeamState:
    """All nodal fields (arrays of length n+1) plus hysteresis memories.

    ``memory`` holds the Prandtl-Ishlinskii stops of every node; ``chi_xi``
    and ``m_xi`` are the play parts of the phase and fatigue stops.
    ``w_dot``/``eps_dot`` are the velocities implied by ``u`` and the load at
    time ``t``; they are refreshed by the integrator after every step.
    """

    t: float
    u: np.ndarray
    w: np.ndarray
    eps: np.ndarray
    theta: np.ndarray
    m: np.ndarray
    chi: np.ndarray
    memory: NodePIMemory
    chi_xi: np.ndarray
    m_xi: np.ndarray
    w_dot: np.ndarray = field(default=None)
    eps_dot: np.ndarray = field(default=None)
    step_index: int = 0

    @property
    def n(self) -> int:
        return len(self.u) - 1

    def copy(self) -> "BeamState":
        def cp(v):
            return v.copy() if isinstance(v, (np.ndarray, NodePIMemory)) else v
        return replace(self, **{f.name: cp(getattr(self, f.name)) for f in fields(self)})


def second_difference(v, k: int, n: int) -> float:
    if not 1 <= k <= n - 1 or len(v) < n + 1:
        raise IndexError(f"second difference needs 1 <= k <= n-1, got k={k}, n={n}")
    return n * n * (v[k + 1] - 2.0 * v[k] + v[k - 1])


def second_differences(v, n: int) -> np.ndarray:
    """Interior second differences ``n^2 (v_{k+1} - 2 v_k + v_{k-1})``, k = 1..n-1."""
    v = np.asarray(v, dtype=float)
    return n * n * (v[2:] - 2.0 * v[1:-1] + v[:-2])


def assemble_velocity_system(params: PhysicalParams, grid: Grid) -> TridiagonalSystem:
    """``rho I + alpha S`` on the interior nodes; ``S = n^2 tridiag(-1, 2, -1)``."""
    m = grid.n - 1
    s = grid.n**2
    return TridiagonalSystem(np.full(m - 1, -params.alpha * s),
                             np.full(m, params.rho + 2.0 * params.alpha * s),
                             np.full(m - 1, -params.alpha * s))


def assemble_heat_system(params: PhysicalParams, grid: Grid, dt: float) -> TridiagonalSystem:
    """``I - (dt kappa / c) Lap_N`` with reflected (Neumann) ghosts, interior nodes."""
    m = grid.n - 1
    q = dt * params.kappa * grid.n**2 / params.c
    diag = np.full(m, 1.0 + 2.0 * q)
    diag[0] -= q
    diag[-1] -= q
    return TridiagonalSystem(np.full(m - 1, -q), diag, np.full(m - 1, -q))


def velocity_solve(state: BeamState, params: PhysicalParams, grid: Grid, f_values,
                   system: TridiagonalSystem | None = None):
    """Solve ``(rho I + alpha S) w_dot = -Lap u + f`` with ``w_dot = 0`` at both ends.

    Returns full-length arrays ``(w_dot, eps_dot)``; ``eps_dot`` is zero at
    the end nodes, whose curvature evolves by its own ODE.
    """
    if system is None:
        system = assemble_velocity_system(params, grid)
    rhs = -second_differences(state.u, grid.n) + np.asarray(f_values, dtype=float)
    w_dot = np.zeros(grid.n + 1)
    w_dot[1:-1] = system.solve(rhs)
    eps_dot = np.zeros(grid.n + 1)
    eps_dot[1:-1] = second_differences(w_dot, grid.n)
    return w_dot, eps_dot


def boundary_eps_rhs(state: BeamState, params: PhysicalParams, node: int,
                     yield_grid: YieldGrid, density: DensityModel) -> float:
    """Curvature rate at an end node from ``B eps + P + nu eps_dot - beta(theta - theta_c) = 0``."""
    n = state.n
    if node == 0:
        ghost = state.theta[1]
    elif node == n:
        ghost = state.theta[n - 1]
    else:
        raise IndexError(f"boundary node must be 0 or {n}, got {node}")
    mem = NodePIMemory(state.memory.z[node], state.memory.xi[node])
    P = float(pi_value(mem, state.m[node], yield_grid, density))
    return -(params.B * state.eps[node] + P - params.beta * (ghost - params.theta_c)) / params.nu


def lambda_samples(kernel, n: int) -> np.ndarray:
    """``lambda(i/n)`` for ``i = -n..n``; entry ``i + n`` holds offset ``i``."""
    return np.asarray(kernel(np.arange(-n, n + 1) / n), dtype=float)


def convolution_matrix(samples, n: int) -> np.ndarray:
    """Rows k = 0..n, columns j = 1..n-1: ``lambda_{j-k} / n``."""
    k = np.arange(n + 1)[:, None]
    j = np.arange(1, n)[None, :]
    return np.asarray(samples)[j - k + n] / n


def convolution_D(D_values, samples, grid: Grid, k: int) -> float:
    """``(1/n) sum_{j=1}^{n-1} lambda_{j-k} D_j``."""
    D_values = np.asarray(D_values, dtype=float)
    if np.any(D_values < 0):
        raise ValueError("dissipation values must be nonnegative")
    row = convolution_matrix(samples, grid.n)[k]
    return float(np.sum(row * D_values))


def cell_average(fn, k: int, n: int) -> float:
    """``n * int_{(k-1)/n}^{k/n} fn(x) dx`` by 5-point Gauss-Legendre."""
    return float(cell_averages(fn, n, cells=np.array([k]))[0])


def cell_averages(fn, n: int, cells=None) -> np.ndarray:
    """Cell averages over ``[(k-1)/n, k/n]`` for ``k`` in ``cells`` (default 1..n-1).

    ``fn`` must accept an array of shape ``(len(cells), 5)``.
    """
    if cells is None:
        cells = np.arange(1, n)
    left = (np.asarray(cells, dtype=float) - 1.0) / n
    x = left[:, None] + (0.5 * (_GAUSS_X + 1.0) / n)[None, :]
    vals = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("non-finite value inside a cell average")
    return 0.5 * vals @ _GAUSS_W


def source_g(theta, k: int, t: float, g, n: int) -> float:
    """Cell-averaged heat source; negative temperatures use the ``theta = 0`` branch."""
    return float(source_g_all(np.array([theta]), t, g, n, cells=np.array([k]))[0])


def source_g_all(theta, t: float, g, n: int, cells=None) -> np.ndarray:
    """Vectorised :func:`source_g`; ``theta`` aligned with ``cells`` (default 1..n-1)."""
    th = np.maximum(np.asarray(theta, dtype=float), 0.0)[:, None]
    return cell_averages(lambda x: g(th, x, t), n, cells)


def summation_by_parts_check(xi, eta) -> float:
    """Absolute defect of the discrete summation-by-parts identity."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if xi.shape != eta.shape or xi.ndim != 1 or len(xi) < 3:
        raise ValueError("need two equal-length vectors with at least 3 entries")
    lhs = np.sum(xi[1:-1] * (eta[2:] - 2.0 * eta[1:-1] + eta[:-2])) \
        + np.sum(np.diff(xi) * np.diff(eta))
    rhs = xi[-1] * (eta[-1] - eta[-2]) - xi[0] * (eta[1] - eta[0])
    return float(abs(lhs - rhs))

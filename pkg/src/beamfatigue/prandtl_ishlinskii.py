"""Fatigue-dependent Prandtl-Ishlinskii operator on a yield-radius quadrature grid.

The operator is a weighted superposition of stops ``s_r`` on ``[-r, r]``.
All integrals over the yield radius are replaced by a composite midpoint
rule on ``[0, r_max]``; ``r_max`` is chosen from the tail moment of the
dominating density so that the neglected part is below a tolerance.

Sign convention: the fatigue kernel ``K = -1/2 int phi_m s_r^2 dr`` is stored
as a nonnegative number, so the heat source reads ``+ m_dot * K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .hysteresis import stop_step_array

INVARIANT_TOL = 1e-12


class InvalidDensity(ValueError):
    pass


class ConstraintViolation(ValueError):
    pass


class InternalInvariantError(RuntimeError):
    pass


class InvalidStep(ValueError):
    pass


class DensityModel:
    """Weight density ``phi(m, r)`` of the Prandtl-Ishlinskii superposition.

    Subclasses provide ``phi``, ``phi_m``, ``phi_tilde`` and ``phi_star``.
    ``M_tilde`` and ``M`` default to numerical quadrature, ``tail_moment``
    likewise; the built-in densities override them with closed forms.
    """

    atomic = False
    name = "custom"

    def phi(self, m, r):
        raise NotImplementedError

    def phi_m(self, m, r):
        raise NotImplementedError

    def phi_tilde(self, r):
        raise NotImplementedError

    def phi_star(self, r):
        raise NotImplementedError

    @property
    def M_tilde(self) -> float:
        val, _ = integrate.quad(lambda r: r * self.phi_tilde(r), 0.0, np.inf, limit=200)
        return val

    @property
    def M(self) -> float:
        val, _ = integrate.quad(lambda r: r * r * self.phi_star(r), 0.0, np.inf, limit=200)
        return val

    def tail_moment(self, r_max: float) -> float:
        """``int_{r_max}^inf r phi_tilde(r) dr``."""
        val, _ = integrate.quad(lambda r: r * self.phi_tilde(r), r_max, np.inf, limit=200)
        return val

    def params(self) -> dict:
        return {}


class ExponentialDensity(DensityModel):
    """``phi(m, r) = A exp(-m/m_s) exp(-r/r_s)``.

    With ``fatigue_scale=None`` the density does not depend on ``m``
    (``phi_m = 0``, ``M = 0``).  The defaults ``A = r_s = m_s = 1`` give
    ``M_tilde = 1`` and ``M = 2``.
    """

    name = "exponential"

    def __init__(self, amplitude=1.0, yield_scale=1.0, fatigue_scale: float | None = 1.0):
        if amplitude < 0 or yield_scale <= 0 or (fatigue_scale is not None and fatigue_scale <= 0):
            raise InvalidDensity("exponential density needs A >= 0, r_s > 0, m_s > 0")
        self.amplitude = float(amplitude)
        self.yield_scale = float(yield_scale)
        self.fatigue_scale = None if fatigue_scale is None else float(fatigue_scale)

    @property
    def _star_factor(self) -> float:
        # phi_star must dominate both |phi_m| and |phi_mm|
        if self.fatigue_scale is None:
            return 0.0
        ms = self.fatigue_scale
        return max(1.0 / ms, 1.0 / ms**2)

    def phi(self, m, r):
        out = self.amplitude * np.exp(-np.asarray(r) / self.yield_scale)
        if self.fatigue_scale is not None:
            out = out * np.exp(-np.asarray(m) / self.fatigue_scale)
        return out

    def phi_m(self, m, r):
        if self.fatigue_scale is None:
            return np.zeros(np.broadcast(np.asarray(m), np.asarray(r)).shape)
        return -self.phi(m, r) / self.fatigue_scale

    def phi_tilde(self, r):
        return self.amplitude * np.exp(-np.asarray(r) / self.yield_scale)

    def phi_star(self, r):
        return self._star_factor * self.phi_tilde(r)

    @property
    def M_tilde(self) -> float:
        return self.amplitude * self.yield_scale**2

    @property
    def M(self) -> float:
        return 2.0 * self._star_factor * self.amplitude * self.yield_scale**3

    def tail_moment(self, r_max: float) -> float:
        rs = self.yield_scale
        return self.amplitude * rs * (r_max + rs) * math.exp(-r_max / rs)

    def params(self) -> dict:
        return {"amplitude": self.amplitude, "yield_scale": self.yield_scale,
                "fatigue_scale": self.fatigue_scale}


class AtomicDensity(DensityModel):
    """Single-yield model: a point mass of size ``amplitude`` at ``radius``."""

    atomic = True
    name = "atomic"

    def __init__(self, radius=1.0, amplitude=1.0, fatigue_scale: float | None = None):
        if radius <= 0 or amplitude < 0:
            raise InvalidDensity("atomic density needs radius > 0 and amplitude >= 0")
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        self.fatigue_scale = None if fatigue_scale is None else float(fatigue_scale)

    def phi(self, m, r):
        out = self.amplitude * np.ones(np.shape(r))
        if self.fatigue_scale is not None:
            out = out * np.exp(-np.asarray(m) / self.fatigue_scale)
        return out

    def phi_m(self, m, r):
        if self.fatigue_scale is None:
            return np.zeros(np.broadcast(np.asarray(m), np.asarray(r)).shape)
        return -self.phi(m, r) / self.fatigue_scale

    def phi_tilde(self, r):
        return self.amplitude * np.ones(np.shape(r))

    def phi_star(self, r):
        if self.fatigue_scale is None:
            return np.zeros(np.shape(r))
        ms = self.fatigue_scale
        return max(1.0 / ms, 1.0 / ms**2) * self.phi_tilde(r)

    @property
    def M_tilde(self) -> float:
        return self.amplitude * self.radius

    @property
    def M(self) -> float:
        return float(self.phi_star(1.0)) * self.radius**2

    def tail_moment(self, r_max: float) -> float:
        return 0.0 if r_max >= self.radius else self.M_tilde

    def params(self) -> dict:
        return {"radius": self.radius, "amplitude": self.amplitude,
                "fatigue_scale": self.fatigue_scale}


@dataclass(frozen=True)
class YieldGrid:
    radii: np.ndarray
    weights: np.ndarray
    r_max: float

    def __post_init__(self):
        if self.radii.ndim != 1 or self.radii.shape != self.weights.shape or len(self.radii) == 0:
            raise ValueError("radii and weights must be matching non-empty 1-D arrays")
        if np.any(self.radii <= 0) or np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if np.any(self.weights < 0):
            raise ValueError("quadrature weights must be nonnegative")

    def __len__(self):
        return len(self.radii)

    def integrate(self, values):
        """Quadrature of sampled values along the last axis."""
        return np.sum(self.weights * values, axis=-1)


def make_yield_grid(density: DensityModel, count: int, tail_tol: float = 1e-8,
                    r_unit: float = 1.0) -> YieldGrid:
    """Composite midpoint grid on ``[0, r_max]``.

    ``r_max`` is the smallest multiple of ``r_unit`` whose tail moment
    ``int_{r_max}^inf r phi_tilde dr`` is at most ``tail_tol``.  Rounding to
    whole units keeps integer radii on cell boundaries when ``count`` is a
    multiple of ``r_max / r_unit``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if tail_tol <= 0:
        raise ValueError("tail_tol must be > 0")
    if density.atomic:
        r = density.radius
        return YieldGrid(np.array([r]), np.array([1.0]), r)
    mt = density.M_tilde
    if not np.isfinite(mt):
        raise InvalidDensity("r * phi_tilde(r) is not integrable")

    def excess(R):
        return density.tail_moment(R) - tail_tol

    if excess(0.0) <= 0:
        root = 0.0
    else:
        hi = 1.0
        while excess(hi) > 0:
            hi *= 2.0
            if hi > 1e8:
                raise InvalidDensity("tail moment does not decay")
        root = optimize.brentq(excess, 0.0, hi, xtol=1e-14)
    r_max = max(r_unit, math.ceil(root / r_unit - 1e-12) * r_unit)
    h = r_max / count
    radii = (np.arange(count) + 0.5) * h
    return YieldGrid(radii, np.full(count, h), r_max)


def effective_moments(grid: YieldGrid, density: DensityModel) -> tuple[float, float]:
    """``(M_tilde, M)`` valid as exact bounds for the discrete operator.

    The quadrature of ``r phi_tilde`` and ``r^2 phi_star`` on ``grid`` can
    exceed the continuous moments slightly; the larger value of each pair is
    what the discrete operator actually satisfies.
    """
    r = grid.radii
    mt_h = float(grid.integrate(r * density.phi_tilde(r)))
    m_h = float(grid.integrate(r * r * density.phi_star(r)))
    return max(density.M_tilde, mt_h), max(density.M, m_h)


@dataclass(frozen=True)
class NodePIMemory:
    """Stop values ``z`` and accumulated play ``xi``, last axis over yield radii.

    Leading axes (if any) index nodes.
    """

    z: np.ndarray
    xi: np.ndarray

    @classmethod
    def virgin(cls, grid: YieldGrid, shape=()) -> "NodePIMemory":
        full = tuple(shape) + (len(grid),)
        return cls(np.zeros(full), np.zeros(full))

    @classmethod
    def from_input(cls, eps, grid: YieldGrid) -> "NodePIMemory":
        """Canonical initial state: ``z = Q_r(eps)`` for every radius."""
        eps = np.asarray(eps, dtype=float)[..., None]
        z = np.clip(eps, -grid.radii, grid.radii)
        return cls(z, eps - z)

    def step(self, d_eps, grid: YieldGrid) -> "NodePIMemory":
        d = np.asarray(d_eps, dtype=float)[..., None]
        z, xi = stop_step_array(self.z, self.xi, d, -grid.radii, grid.radii)
        return NodePIMemory(z, xi)

    def copy(self) -> "NodePIMemory":
        return NodePIMemory(self.z.copy(), self.xi.copy())


def _check_m(m):
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise ConstraintViolation("fatigue variable must be nonnegative")
    return m[..., None]


def pi_value(mem: NodePIMemory, m, grid: YieldGrid, density: DensityModel):
    """``P[m, eps] = int phi(m, r) s_r[eps] dr``."""
    mm = _check_m(m)
    return grid.integrate(density.phi(mm, grid.radii) * mem.z)


def pi_potential(mem: NodePIMemory, m, grid: YieldGrid, density: DensityModel):
    """``V[m, eps] = 1/2 int phi(m, r) s_r[eps]^2 dr``."""
    mm = _check_m(m)
    return 0.5 * grid.integrate(density.phi(mm, grid.radii) * mem.z**2)


def pi_dissipation_rate(mem_before: NodePIMemory, mem_after: NodePIMemory, m, grid: YieldGrid,
                        density: DensityModel, dt: float):
    """Mean dissipation rate ``int r phi |d xi_r| dr / dt`` over one step.

    ``m`` is the beginning-of-step fatigue value.
    """
    if not dt > 0:
        raise InvalidStep(f"dt must be > 0, got {dt}")
    mm = _check_m(m)
    dxi = np.abs(mem_after.xi - mem_before.xi)
    return grid.integrate(grid.radii * density.phi(mm, grid.radii) * dxi) / dt


def fatigue_kernel(mem: NodePIMemory, m, grid: YieldGrid, density: DensityModel):
    """``K = -1/2 int phi_m(m, r) s_r^2 dr``, bounded by ``[0, M/2]``.

    ``M`` is taken from :func:`effective_moments` so the bound is exact on the grid.
    """
    mm = _check_m(m)
    K = -0.5 * grid.integrate(density.phi_m(mm, grid.radii) * mem.z**2)
    upper = 0.5 * effective_moments(grid, density)[1] + INVARIANT_TOL
    if np.any(K < -INVARIANT_TOL) or np.any(K > upper):
        raise InternalInvariantError(f"fatigue kernel outside [0, M/2]: {np.min(K)}, {np.max(K)}")
    return K


def pi_energy_residual(mem_before: NodePIMemory, mem_after: NodePIMemory, m_before, m_after,
                       d_eps, grid: YieldGrid, density: DensityModel, dt: float = 1.0):
    """Per-step defect of the operator energy balance.

    ``d_eps * P - (dV + D dt + dm K)`` with ``P`` at the end of the step and
    ``D``, ``K`` taken at the beginning-of-step fatigue value.  Zero for
    a zero-increment step; ``O(dt^2)`` per step for smooth inputs.
    """
    p_after = pi_value(mem_after, m_after, grid, density)
    dV = pi_potential(mem_after, m_after, grid, density) - pi_potential(mem_before, m_before, grid, density)
    diss = pi_dissipation_rate(mem_before, mem_after, m_before, grid, density, dt) * dt
    K = fatigue_kernel(mem_after, m_before, grid, density)
    dm = np.asarray(m_after, dtype=float) - np.asarray(m_before, dtype=float)
    return np.asarray(d_eps) * p_after - (dV + diss + dm * K)

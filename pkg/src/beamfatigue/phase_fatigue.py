"""Phase fraction and fatigue evolution as stops on [0, 1] and [0, inf).

The phase stop is driven by ``(L / (gamma theta_c)) (theta - theta_c)``,
the fatigue stop by ``-h(chi_dot) + Dconv``, where ``Dconv`` is the
kernel-weighted neighbourhood average of plastic dissipation.  Within a
step the phase is advanced first because the fatigue driver needs its rate.
"""
from __future__ import annotations

import math

import numpy as np

from .hysteresis import ConstraintInterval, StopState, stop_step, stop_step_array

PHASE_INTERVAL = ConstraintInterval(0.0, 1.0)
FATIGUE_INTERVAL = ConstraintInterval(0.0, math.inf)


class RecoveryFunction:
    """Melting-recovery rate ``h(z) = a z+^2 / (z+ + a/b)``.

    Nonnegative, nondecreasing, ``h <= b z^2`` and ``0 <= h' <= a``.
    """

    def __init__(self, a: float, b: float):
        if a <= 0 or b <= 0:
            raise ValueError("recovery function needs a > 0 and b > 0")
        self.a = float(a)
        self.b = float(b)

    def __call__(self, z):
        zp = np.maximum(np.asarray(z, dtype=float), 0.0)
        out = self.a * zp**2 / (zp + self.a / self.b)
        return float(out) if out.ndim == 0 else out

    def derivative(self, z):
        zp = np.maximum(np.asarray(z, dtype=float), 0.0)
        c = self.a / self.b
        out = self.a * zp * (zp + 2.0 * c) / (zp + c) ** 2
        return float(out) if out.ndim == 0 else out


def h_eval(z, a: float, b: float):
    return RecoveryFunction(a, b)(z)


class BumpKernel:
    """``lambda(x) = amp (1 - (x/w)^2)^2`` on ``|x| <= w``, zero outside; C^1."""

    def __init__(self, amplitude: float, halfwidth: float):
        if amplitude < 0 or halfwidth <= 0:
            raise ValueError("kernel needs amplitude >= 0 and halfwidth > 0")
        self.amplitude = float(amplitude)
        self.halfwidth = float(halfwidth)

    def __call__(self, x):
        s = np.asarray(x, dtype=float) / self.halfwidth
        out = np.where(np.abs(s) <= 1.0, self.amplitude * (1.0 - s * s) ** 2, 0.0)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        s = np.asarray(x, dtype=float) / self.halfwidth
        out = np.where(np.abs(s) <= 1.0,
                       -4.0 * self.amplitude * s * (1.0 - s * s) / self.halfwidth, 0.0)
        return float(out) if out.ndim == 0 else out

    def bound(self) -> float:
        """``max_x (lambda(x) + |lambda'(x)|)`` from the stationary points of a cubic."""
        w = self.halfwidth
        # d/ds [(1-s^2)^2 + (4/w) s (1-s^2)] = 0  <=>  s^3 - (3/w) s^2 - s + 1/w = 0
        roots = np.roots([1.0, -3.0 / w, -1.0, 1.0 / w])
        cands = [0.0, 1.0] + [r.real for r in roots if abs(r.imag) < 1e-12 and 0.0 <= r.real <= 1.0]
        s = np.array(cands)
        vals = (1.0 - s * s) ** 2 + (4.0 / w) * s * (1.0 - s * s)
        return float(self.amplitude * vals.max())


def lambda_eval(x, amplitude: float, halfwidth: float):
    return BumpKernel(amplitude, halfwidth)(x)


def chi_update(chi_stop: StopState, theta_k: float, params, dt: float):
    """Advance the phase stop by ``(L/(gamma theta_c)) (theta - theta_c) dt``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    drive = params.L / (params.gamma * params.theta_c) * (theta_k - params.theta_c)
    new = stop_step(chi_stop, drive * dt)
    return new, (new.z - chi_stop.z) / dt


def m_update(m_stop: StopState, chi_dot: float, Dconv: float, dt: float, h_model):
    """Advance the fatigue stop by ``(-h(chi_dot) + Dconv) dt``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if Dconv < 0:
        raise ValueError(f"convolved dissipation must be nonnegative, got {Dconv}")
    new = stop_step(m_stop, (-h_model(chi_dot) + Dconv) * dt)
    return new, (new.z - m_stop.z) / dt


def chi_update_array(chi, chi_xi, theta, params, dt: float):
    drive = params.L / (params.gamma * params.theta_c) * (np.asarray(theta) - params.theta_c)
    chi_new, xi_new = stop_step_array(chi, chi_xi, drive * dt, 0.0, 1.0)
    return chi_new, xi_new, (chi_new - chi) / dt


def m_update_array(m, m_xi, chi_dot, Dconv, dt: float, h_model):
    if np.any(np.asarray(Dconv) < 0):
        raise ValueError("convolved dissipation must be nonnegative")
    m_new, xi_new = stop_step_array(m, m_xi, (-h_model(chi_dot) + Dconv) * dt, 0.0, np.inf)
    return m_new, xi_new, (m_new - m) / dt

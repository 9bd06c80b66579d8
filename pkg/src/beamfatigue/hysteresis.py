"""Scalar stop and play operators on closed intervals.

Under a piecewise-linear input the stop is solved exactly by one projection
per linear segment, so the discrete-time operator carries no time
discretisation error of its own.  Both a scalar, value-type API
(:class:`StopState`) and an array form used by the beam integrator are
provided; they share :func:`project`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class HysteresisError(ValueError):
    """Base class for stop/play input errors."""


class InvalidInitialState(HysteresisError):
    pass


class NumericInputError(HysteresisError):
    pass


class UnsupportedInterval(HysteresisError):
    pass


@dataclass(frozen=True)
class ConstraintInterval:
    """Closed interval ``[lower, upper]``; either end may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper) or not self.lower < self.upper:
            raise HysteresisError(f"empty interval [{self.lower}, {self.upper}]")

    @classmethod
    def symmetric(cls, r: float) -> "ConstraintInterval":
        return cls(-r, r)

    def contains(self, v: float) -> bool:
        return self.lower <= v <= self.upper

    def project(self, v: float) -> float:
        return project(v, self.lower, self.upper)

    @property
    def is_symmetric(self) -> bool:
        return self.lower == -self.upper


def project(v, lower, upper):
    """Projection of ``v`` onto ``[lower, upper]``; works on scalars and arrays.

    ``np.minimum``/``np.maximum`` treat infinite bounds correctly.
    """
    if np.ndim(v) == 0 and np.ndim(lower) == 0 and np.ndim(upper) == 0:
        return float(min(max(v, lower), upper))
    return np.minimum(np.maximum(v, lower), upper)


@dataclass(frozen=True)
class StopState:
    """Current stop value ``z`` and play value ``xi`` with ``z + xi`` = input."""

    z: float
    xi: float
    interval: ConstraintInterval

    @property
    def u(self) -> float:
        return self.z + self.xi


def stop_init(u0: float, interval: ConstraintInterval, z0: float | None = None) -> StopState:
    if not math.isfinite(u0):
        raise NumericInputError(f"non-finite initial input {u0!r}")
    if z0 is None:
        z = interval.project(u0)
    else:
        if not interval.contains(z0):
            raise InvalidInitialState(
                f"initial stop value {z0} outside [{interval.lower}, {interval.upper}]")
        z = float(z0)
    return StopState(z, u0 - z, interval)


def stop_step(state: StopState, du: float) -> StopState:
    """Advance the stop over one linear input segment of increment ``du``."""
    if not math.isfinite(du):
        raise NumericInputError(f"non-finite input increment {du!r}")
    z_new = state.interval.project(state.z + du)
    return StopState(z_new, state.xi + du - (z_new - state.z), state.interval)


def dissipation_increment(state_before: StopState, state_after: StopState, r: float) -> float:
    """Energy ``r |delta xi|`` dissipated by a stop on ``[-r, r]`` over one step."""
    iv = state_before.interval
    if not iv.is_symmetric or iv.upper != r or state_after.interval != iv:
        raise UnsupportedInterval(
            f"dissipation needs the symmetric interval [-{r}, {r}], got [{iv.lower}, {iv.upper}]")
    return r * abs(state_after.xi - state_before.xi)


def stop_step_array(z, xi, du, lower, upper):
    """Vectorised :func:`stop_step`; returns ``(z_new, xi_new)``.

    ``du`` broadcasts against ``z``; bounds broadcast likewise.
    """
    du = np.asarray(du, dtype=float)
    if not np.all(np.isfinite(du)):
        raise NumericInputError("non-finite input increment")
    z_new = np.minimum(np.maximum(z + du, lower), upper)
    return z_new, xi + du - (z_new - z)


def stop_response(u, interval: ConstraintInterval, z0: float | None = None):
    """Stop and play outputs for a sampled input, treated as piecewise linear.

    Returns arrays ``(z, xi)`` of the same length as ``u``.
    """
    u = np.asarray(u, dtype=float)
    state = stop_init(float(u[0]), interval, z0)
    z = np.empty_like(u)
    xi = np.empty_like(u)
    z[0], xi[0] = state.z, state.xi
    for i in range(1, len(u)):
        state = stop_step(state, float(u[i] - u[i - 1]))
        z[i], xi[i] = state.z, state.xi
    return z, xi

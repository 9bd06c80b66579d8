import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamfatigue.hysteresis import (
    ConstraintInterval, HysteresisError, StopState, InvalidInitialState, NumericInputError,
    UnsupportedInterval, dissipation_increment, project, stop_init, stop_response, stop_step,
    stop_step_array,
)

UNIT = ConstraintInterval.symmetric(1.0)


def micro_stepped(z0, xi0, du, interval, substeps=1000):
    """Oracle: the same increment split into equal sub-steps."""
    state = stop_init(z0 + xi0, interval, z0)
    for _ in range(substeps):
        state = stop_step(state, du / substeps)
    return state


class TestInit:
    def test_inside_interval_is_identity(self):
        s = stop_init(0.5, UNIT)
        assert (s.z, s.xi) == (0.5, 0.0)

    def test_clamped_at_upper_bound(self):
        s = stop_init(2.0, UNIT)
        assert (s.z, s.xi) == (1.0, 1.0)

    def test_half_line_zero(self):
        s = stop_init(0.0, ConstraintInterval(0.0, math.inf), 0.0)
        assert (s.z, s.xi) == (0.0, 0.0)

    def test_rejects_initial_value_outside(self):
        with pytest.raises(InvalidInitialState):
            stop_init(0.0, UNIT, 1.5)

    def test_rejects_nan(self):
        with pytest.raises(NumericInputError):
            stop_init(float("nan"), UNIT)

    def test_rejects_empty_interval(self):
        with pytest.raises(HysteresisError):
            ConstraintInterval(1.0, 1.0)


class TestStep:
    def test_ramp_saturates(self):
        s = stop_step(stop_init(0.0, UNIT), 2.0)
        assert s.z == 1.0 and s.xi == 1.0

    def test_unload_from_yield(self):
        s = stop_step(StopAt(1.0, 0.0), -0.5)
        assert s.z == 0.5 and s.xi == 0.0
        oracle = micro_stepped(1.0, 0.0, -0.5, UNIT)
        assert abs(oracle.z - s.z) <= 1e-12

    @pytest.mark.parametrize("steps", [1, 3, 10, 37])
    def test_monotone_ramp_closed_form(self, steps):
        t = np.linspace(0.0, 3.0, steps + 1)
        z, xi = stop_response(t, UNIT)
        np.testing.assert_allclose(z, np.minimum(t, 1.0), atol=1e-15)
        np.testing.assert_allclose(xi, np.maximum(0.0, t - 1.0), atol=1e-15)

    def test_non_finite_increment(self):
        with pytest.raises(NumericInputError):
            stop_step(stop_init(0.0, UNIT), math.inf)

    def test_array_form_matches_scalar(self, rng):
        z = rng.uniform(-1, 1, 50)
        xi = rng.normal(size=50)
        du = rng.normal(scale=2.0, size=50)
        zn, xin = stop_step_array(z, xi, du, -1.0, 1.0)
        for i in range(50):
            s = stop_step(StopAt(z[i], xi[i]), du[i])
            assert zn[i] == s.z and xin[i] == s.xi

    def test_project_handles_infinite_bounds(self):
        assert project(-3.0, 0.0, math.inf) == 0.0
        np.testing.assert_array_equal(project(np.array([-1.0, 5.0]), 0.0, math.inf), [0.0, 5.0])


def StopAt(z, xi, interval=UNIT):
    return StopState(float(z), float(xi), interval)


class TestDissipation:
    def test_no_flow(self):
        s = stop_init(0.3, UNIT)
        assert dissipation_increment(s, stop_step(s, 0.2), 1.0) == 0.0

    def test_definition(self):
        a = StopAt(1.0, 0.0)
        assert dissipation_increment(a, stop_step(a, 0.25), 1.0) == 0.25

    def test_ramp_single_step(self):
        a = stop_init(0.0, UNIT)
        assert dissipation_increment(a, stop_step(a, 2.0), 1.0) == 1.0

    def test_requires_symmetric_interval(self):
        iv = ConstraintInterval(0.0, 1.0)
        a = stop_init(0.0, iv)
        with pytest.raises(UnsupportedInterval):
            dissipation_increment(a, stop_step(a, 1.0), 1.0)


finite = st.floats(-5.0, 5.0, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(z1=st.floats(-1, 1), z2=st.floats(-1, 1), du1=finite, du2=finite)
def test_lipschitz_and_monotone(z1, z2, du1, du2):
    a = stop_step(StopAt(z1, 0.0), du1)
    b = stop_step(StopAt(z2, 0.0), du2)
    # stop is 1-Lipschitz in (initial value, increment)
    assert abs(a.z - b.z) <= abs(z1 - z2) + abs(du1 - du2) + 1e-12
    # end-of-step monotonicity of the play against the stop
    lhs = (a.z - b.z) * (du1 - du2)
    rhs = 0.5 * ((a.z - b.z) ** 2 - (z1 - z2) ** 2)
    assert lhs >= rhs - 1e-12


@settings(max_examples=300, deadline=None)
@given(z=st.floats(-1, 1), du=finite)
def test_variational_inequality_and_energy(z, du):
    s0 = StopAt(z, 0.0)
    s1 = stop_step(s0, du)
    dxi = s1.xi - s0.xi
    # play moves only at the boundary, in the outward direction
    for y in (-1.0, 0.0, 1.0):
        assert dxi * (s1.z - y) >= -1e-12
    # discrete energy: z du >= d(z^2/2) + r |dxi| with z at the end of the step
    assert s1.z * du >= 0.5 * (s1.z**2 - s0.z**2) + abs(dxi) - 1e-12
    assert abs(s1.z + s1.xi - (s0.z + s0.xi + du)) <= 1e-12

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamfatigue.diagnostics import (
    ComparisonError, DomainError, InterpolantKind, convergence_metric, discrete_difference_norm,
    discrete_norm, entropy_production, interpolate, l2_distance, neumann_functional,
    total_energy, total_entropy,
)
from beamfatigue.integrator import Model, initial_state, run, step
from beamfatigue.prandtl_ishlinskii import NodePIMemory, pi_potential
from conftest import scenario

KINDS = list(InterpolantKind)


def rest(theta0="1", chi0="0", **kw):
    model = Model(scenario("fixed_point").with_(theta0=theta0, chi0=chi0, **kw))
    return model, initial_state(model)


class TestEnergy:
    def test_rest_state(self):
        # only the c theta term survives; sums run over the interior nodes 1..n-1
        for n in (4, 16, 256):
            model, s = rest(c=2.5, theta_c=1.0, n=n)
            assert total_energy(s, model) == pytest.approx(2.5 * (n - 1) / n, abs=1e-14)
        assert abs(total_energy(s, model) - 2.5) < 2.5 / 200

    def test_linear_in_theta(self):
        model, s = rest(c=1.7)
        e0 = total_energy(s, model)
        s.theta = s.theta + 0.3
        assert total_energy(s, model) - e0 == pytest.approx(1.7 * 0.3 * (model.grid.n - 1) / model.grid.n,
                                                            abs=1e-14)

    def test_hysteresis_term_is_potential(self):
        model, s = rest()
        n = model.grid.n
        s.eps = np.linspace(-0.5, 0.5, n + 1)
        s.memory = NodePIMemory.virgin(model.yield_grid, (n + 1,)).step(s.eps, model.yield_grid)
        e_with = total_energy(s, model)
        V = pi_potential(NodePIMemory(s.memory.z[1:n], s.memory.xi[1:n]), s.m[1:n],
                         model.yield_grid, model.density)
        s.memory = NodePIMemory.virgin(model.yield_grid, (n + 1,))
        assert e_with - total_energy(s, model) == pytest.approx(np.sum(V) / n, abs=1e-14)


class TestEntropy:
    def test_equilibrium(self):
        model, s = rest()
        s1, _ = step(s, model, 1e-3)
        assert entropy_production(s, s1, model.params, 1e-3, np.zeros(model.grid.n - 1)) == 0.0

    def test_pure_diffusion_positive(self):
        model, s = rest(theta0="1 + 0.5*cos(pi*x)", beta=1e-12, L=1e-12, nu=1e-12,
                        theta_floor=0.5, kappa=1.0)
        s1, rep = step(s, model, 1e-3)
        assert rep.entropy_production > 0

    def test_domain(self):
        model, s = rest()
        bad = s.copy()
        bad.theta[2] = -1.0
        with pytest.raises(ValueError):
            total_entropy(bad, model.params)


class TestInterpolate:
    @pytest.mark.parametrize("kind", KINDS)
    def test_constant(self, kind):
        x = np.linspace(0, 1, 97)
        np.testing.assert_allclose(interpolate(np.full(9, 3.25), kind, x), 3.25, rtol=1e-15)

    def test_linear_affine(self):
        x = np.linspace(0, 1, 101)
        np.testing.assert_allclose(interpolate(np.arange(11) / 10, "linear", x), x, atol=1e-15)

    def test_quadratic_on_squares(self):
        # each cell starts from the average of its end values, not from x^2
        n = 8
        h = 1 / n
        v = (np.arange(n + 1) / n) ** 2
        x = np.linspace(0, 1 - h, 200, endpoint=False)
        k = np.floor(x * n)
        s = x - k * h
        expected = 0.5 * ((k * h) ** 2 + ((k + 1) * h) ** 2) + s * (2 * k + 1) * h + s * s
        np.testing.assert_allclose(interpolate(v, "quadratic", x), expected, atol=1e-14)
        # second derivative 2 everywhere, as for x^2
        hh = 1e-4
        xi = np.array([0.1, 0.33, 0.6, 0.8])
        dd = (interpolate(v, "quadratic", xi + hh) - 2 * interpolate(v, "quadratic", xi)
              + interpolate(v, "quadratic", xi - hh)) / hh**2
        np.testing.assert_allclose(dd, 2.0, rtol=1e-5)

    def test_quadratic_c1(self, rng):
        v = rng.normal(size=9)
        n = 8
        for k in range(1, n - 1):
            x = k / n
            left = interpolate(v, "quadratic", x - 1e-9)
            right = interpolate(v, "quadratic", x + 1e-9)
            assert abs(left - right) < 1e-6

    def test_linear_nodes(self, rng):
        v = rng.normal(size=13)
        np.testing.assert_allclose(interpolate(v, "linear", np.arange(13) / 12), v, atol=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            interpolate(np.zeros(5), "linear", 1.5)


class TestNorms:
    @pytest.mark.parametrize("p", [1, 2, 3.5, np.inf])
    def test_constant(self, p):
        assert discrete_norm(np.full(7, 2.0), p) == pytest.approx(2.0, rel=1e-15)

    def test_difference_unit(self):
        assert discrete_difference_norm([0.0, 1.0], 2) == 1.0

    def test_infinity(self, rng):
        v = rng.normal(size=20)
        assert discrete_norm(v, np.inf) == np.max(np.abs(v))

    def test_cell_normalisation(self):
        # dividing n + 1 entries by the cell count n
        assert discrete_norm(np.ones(5), 1, n=4) == 1.25

    @settings(max_examples=100, deadline=None)
    @given(v=st.lists(st.floats(-100, 100), min_size=1, max_size=30),
           p=st.floats(1, 8), q=st.floats(1, 8))
    def test_monotone_in_p(self, v, p, q):
        p, q = min(p, q), max(p, q)
        assert discrete_norm(v, p) <= discrete_norm(v, q) * (1 + 1e-12) + 1e-300
        assert discrete_norm(v, q) <= discrete_norm(v, np.inf) * (1 + 1e-12) + 1e-300

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            discrete_norm([1.0], 0.5)


class TestComparison:
    def test_identical_runs(self):
        cfg = scenario("default").with_(n=8, T=0.1)
        a, b = run(cfg), run(cfg)
        assert convergence_metric(a, b) == 0.0

    def test_l2_of_shift(self):
        a = np.zeros(9)
        assert l2_distance(a, a + 0.5, "linear") == pytest.approx(0.5, rel=1e-14)

    def test_incompatible(self):
        cfg = scenario("default").with_(n=8, T=0.1)
        with pytest.raises(ComparisonError):
            convergence_metric(run(cfg), run(cfg.with_(beta=0.3)))

    def test_neumann_functional_nonnegative(self):
        assert neumann_functional(run(scenario("default").with_(n=8, T=0.1))) > 0

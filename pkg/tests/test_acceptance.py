"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed as the tests run (visible with ``-s``) and collected
into the terminal summary by ``conftest.py``.
"""
import math

import numpy as np

from beamfatigue.hysteresis import stop_step_array
from beamfatigue.integrator import Model, Trajectory, initial_state, run, step, temperature_floor
from beamfatigue.beam import PhysicalParams
from beamfatigue.prandtl_ishlinskii import (
    ExponentialDensity, NodePIMemory, fatigue_kernel, make_yield_grid, pi_dissipation_rate,
    pi_potential, pi_value,
)
from beamfatigue.verification import (
    check_constraints, check_energy_order, check_entropy, check_floor, converge,
    diagnostics_bytes, run_many,
)

from conftest import scenario, scenario_run, scenario_sweep

SCENARIOS = ("default", "fixed_point", "cycling", "recovery")
RESULTS = {}
TOL = 1e-12


def report(number, title, ok, detail=""):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
    if detail:
        line += f"  ({detail})"
    RESULTS[number] = line
    print(line)
    return ok


# 1. stop oracle equivalence and play/stop properties

SAMPLES = 10_000
SEGMENTS = 6
MICRO = 1000


def random_intervals(rng, size):
    """Symmetric, half-line, unit and general bounded intervals in equal shares."""
    kind = rng.integers(0, 4, size)
    r = rng.uniform(0.05, 2.0, size)
    a = rng.uniform(-2.0, 1.0, size)
    lower = np.select([kind == 0, kind == 1, kind == 2], [-r, 0.0, 0.0], a)
    upper = np.select([kind == 0, kind == 1, kind == 2], [r, np.inf, 1.0], a + r)
    return lower, upper


def test_criterion_01_stop_oracle_and_properties():
    rng = np.random.default_rng(1)
    lower, upper = random_intervals(rng, SAMPLES)
    # nodes of the piecewise-linear inputs; a second input per sample for the pair properties
    u1 = rng.uniform(-3.0, 3.0, (SEGMENTS + 1, SAMPLES))
    u2 = u1 + rng.normal(scale=0.5, size=u1.shape) * (rng.random(SAMPLES) < 0.5)
    z1 = np.clip(rng.uniform(-3, 3, SAMPLES), lower, upper)
    z2 = np.clip(z1 + rng.normal(scale=0.3, size=SAMPLES), lower, upper)
    xi1, xi2 = u1[0] - z1, u2[0] - z2
    zm, xim = z1.copy(), xi1.copy()
    dz0 = np.abs(z1 - z2)
    max_du_gap = np.abs(u1[0] - u2[0])
    worst = dict(oracle=0.0, p1=0.0, p2=0.0, p3=0.0, p4_sign=0, p4_size=0.0, range=0.0)
    for s in range(SEGMENTS):
        du1, du2 = u1[s + 1] - u1[s], u2[s + 1] - u2[s]
        n1, x1 = stop_step_array(z1, xi1, du1, lower, upper)
        n2, x2 = stop_step_array(z2, xi2, du2, lower, upper)
        # the same input sampled 1000 times finer, ending exactly on the next node;
        # each sub-step is written in play form (z_j + xi_j = u_j) and the play is
        # only touched while the projection is active, so no rounding piles up
        for j in range(1, MICRO + 1):
            u_next = u1[s + 1] if j == MICRO else u1[s] + (j / MICRO) * du1
            trial = u_next - xim
            zm = np.minimum(np.maximum(trial, lower), upper)
            xim = np.where(zm == trial, xim, u_next - zm)
        worst["oracle"] = max(worst["oracle"], float(np.max(np.abs(zm - n1))))
        # (i) monotonicity at the end of the step
        lhs = (n1 - n2) * (du1 - du2)
        rhs = 0.5 * ((n1 - n2) ** 2 - (z1 - z2) ** 2)
        worst["p1"] = max(worst["p1"], float(np.max(rhs - lhs)))
        # (ii) Lipschitz bound on play and stop increments together
        lhs = np.abs((x1 - xi1) - (x2 - xi2)) + np.abs(n1 - n2) - np.abs(z1 - z2)
        worst["p2"] = max(worst["p2"], float(np.max(lhs - np.abs(du1 - du2))))
        # (iii) stop difference bounded by history of the input difference
        max_du_gap = np.maximum(max_du_gap, np.abs(u1[s + 1] - u2[s + 1]))
        worst["p3"] = max(worst["p3"], float(np.max(np.abs(n1 - n2) - dz0 - 2 * max_du_gap)))
        # (iv) the play moves with the input and never by more
        dxi = x1 - xi1
        moving = np.abs(dxi) > TOL
        worst["p4_sign"] += int(np.count_nonzero(np.sign(dxi[moving]) != np.sign(du1[moving])))
        worst["p4_size"] = max(worst["p4_size"], float(np.max(np.abs(dxi) - np.abs(du1))))
        worst["range"] = max(worst["range"], float(np.max(np.maximum(lower - n1, n1 - upper))))
        z1, xi1, z2, xi2 = n1, x1, n2, x2
    ok = (worst["oracle"] <= TOL and worst["p1"] <= TOL and worst["p2"] <= TOL
          and worst["p3"] <= TOL and worst["p4_sign"] == 0 and worst["p4_size"] <= TOL
          and worst["range"] <= 0.0)
    report(1, "stop equals its micro-stepped oracle; properties (i)-(iv) hold", ok,
           f"{SAMPLES} inputs, max |dz| = {worst['oracle']:.2e}")
    assert ok, repr(worst)


# 2. closed forms of the Prandtl-Ishlinskii operator on a monotone ramp

E = math.e


def test_criterion_02_pi_closed_forms():
    dens = ExponentialDensity()
    grid = make_yield_grid(dens, 22 * 64)
    mem = NodePIMemory.virgin(grid)
    steps = 200
    d_int = 0.0
    for _ in range(steps):
        new = mem.step(1.0 / steps, grid)
        d_int += float(pi_dissipation_rate(mem, new, 0.0, grid, dens, 1.0 / steps)) / steps
        mem = new
    errs = {
        "P": abs(pi_value(mem, 0.0, grid, dens) - (1 - 1 / E)),
        "V": abs(pi_potential(mem, 0.0, grid, dens) - (1 - 2 / E)),
        "K": abs(fatigue_kernel(mem, 0.0, grid, dens) - (1 - 2 / E)),
        # work in minus stored energy: int_0^1 (P - V') = 3/e - 1
        "D": abs(d_int - (3 / E - 1)),
    }
    errs = {k: float(v) for k, v in errs.items()}
    quad = []
    for k in range(5):
        g = make_yield_grid(dens, 22 * 2**k)
        quad.append(abs(float(pi_value(NodePIMemory.virgin(g).step(1.0, g), 0.0, g, dens))
                        - (1 - 1 / E)))
    orders = np.log2(np.array(quad[:-1]) / np.array(quad[1:]))
    ok = max(errs.values()) < 1e-4 and bool(np.all(orders >= 1.9))
    report(2, "ramp closed forms for P, V, K, D; quadrature order >= 1.9", ok,
           f"max error {max(errs.values()):.1e}, orders {np.round(orders, 3).tolist()}")
    assert ok, (errs, orders)


# 3. energy residual is first order in dt on the driven scenario

def test_criterion_03_energy_residual_halves():
    runs = scenario_sweep("default")
    cfg = runs[0].config
    check = check_energy_order(list(runs))
    setup = (cfg.n == 32 and cfg.g == "0.1" and [r.config.dt for r in runs] == [1e-3, 5e-4, 2.5e-4])
    ok = check.passed and setup and all(r.failure is None for r in runs)
    ratios = check.detail.get("ratios", [])
    report(3, "energy residual ratio in [1.6, 2.4] across dt halvings", ok,
           "ratios " + ", ".join(f"{q:.3f}" for q in ratios))
    assert ok, check.detail


# 4. temperature floor with a frozen constant, and the closed form of p(t)

def test_criterion_04_temperature_floor():
    unit = PhysicalParams(a=1.0, b=0.5, theta_floor=1.0)
    p1 = temperature_floor(1.0, unit, 2.0)
    checks = {name: check_floor(list(scenario_sweep(name))) for name in SCENARIOS}
    ok = abs(p1 - 0.12213) < 5e-6 and all(c.passed for c in checks.values())
    report(4, "min theta >= p(t) - C dt on every scenario with one C per sweep", ok,
           f"p(1) = {p1:.5f}")
    assert ok, {k: c.detail for k, c in checks.items()}


# 5. exact constraints on every accepted step

def test_criterion_05_exact_constraints():
    checks = {name: check_constraints(list(scenario_sweep(name))) for name in SCENARIOS}
    steps = sum(c.detail["steps"] for c in checks.values())
    ok = all(c.passed for c in checks.values()) and all(
        r.failure is None for name in SCENARIOS for r in scenario_sweep(name))
    report(5, "zero constraint violations on every scenario", ok, f"{steps} steps")
    assert ok, {k: c.detail for k, c in checks.items()}


# 6. entropy production bounded below by -C dt

def test_criterion_06_entropy_production():
    checks = {name: check_entropy(list(scenario_sweep(name))) for name in SCENARIOS}
    ok = all(c.passed for c in checks.values())
    report(6, "entropy production >= -C dt with one C per sweep", ok)
    assert ok, {k: c.detail for k, c in checks.items()}


# 7. mesh convergence

def test_criterion_07_mesh_convergence():
    rows = converge(scenario("default"), (8, 16, 32), "w")
    metric = [r.metric for r in rows]
    neumann = [r.neumann for r in rows]
    ok = (all(a > b for a, b in zip(metric, metric[1:]))
          and all(a > b for a, b in zip(neumann, neumann[1:])))
    report(7, "w metric and Neumann functional decrease over n = 8, 16, 32", ok,
           "metric " + ", ".join(f"{v:.2e}" for v in metric))
    assert ok, (metric, neumann)


# 8. determinism at any parallelism, continuity in the initial temperature

PERTURBATION_BOUND = 1e-4


def test_criterion_08_determinism_and_continuity(monkeypatch):
    monkeypatch.delenv("SIM_THREADS", raising=False)
    cfg = scenario("default")
    serial = run_many([cfg, cfg], threads=1)
    parallel = run_many([cfg, cfg], threads=2)
    reference = scenario_run("default")
    blobs = {diagnostics_bytes(t) for t in (*serial, *parallel, reference)}
    fields_same = all(np.array_equal(t.field(k), reference.field(k))
                      for t in (*serial, *parallel) for k in Trajectory.FIELDS)
    bumped = run(cfg.with_(theta0=f"({cfg.theta0}) + 1e-8"))
    dev = max(float(np.max(np.abs(getattr(bumped.final_state, k) - getattr(reference.final_state, k))))
              for k in Trajectory.FIELDS)
    ok = len(blobs) == 1 and fields_same and 0.0 < dev <= PERTURBATION_BOUND
    report(8, "byte-identical at 1 and 2 workers; 1e-8 perturbation stays bounded", ok,
           f"final deviation {dev:.2e}")
    assert ok, (len(blobs), fields_same, dev)


# 9. trivial fixed point

def test_criterion_09_fixed_point():
    cfg = scenario("fixed_point").with_(T=1.0, dt=1e-3, snapshot_interval=1e-3)
    assert cfg.steps == 1000
    traj = run(cfg)
    drift = max(float(np.max(np.abs(traj.field(k) - traj.field(k)[0]))) for k in Trajectory.FIELDS)
    ok = traj.failure is None and len(traj.reports) == 1000 and drift <= TOL
    report(9, "unforced beam at melting stays constant over 1000 steps", ok,
           f"max drift {drift:.1e}")
    assert ok, drift


# 10. fatigue heals while melting and accumulates while solid

def fatigue_steps(name):
    """Per-step fatigue increments with the start-of-step temperature."""
    cfg = scenario(name)
    model = Model(cfg)
    state = initial_state(model)
    for i in range(cfg.steps):
        new, _ = step(state, model, cfg.dt, t_next=(i + 1) * cfg.dt)
        yield state.theta, new.m - state.m, new.m
        state = new


def test_criterion_10_recovery_and_accumulation():
    theta_c = scenario("recovery").params.theta_c
    grow_hot, peak, hot_steps = 0.0, 0.0, 0
    for theta, dm, m in fatigue_steps("recovery"):
        hot = theta > theta_c
        if hot.any():
            hot_steps += 1
            grow_hot = max(grow_hot, float(np.max(dm[hot])))
        peak = max(peak, float(np.max(m)))
    final_recovery = float(np.max(m))
    drop_cold, cold_max = 0.0, 0.0
    for theta, dm, m in fatigue_steps("cycling"):
        cold_max = max(cold_max, float(np.max(theta)))
        drop_cold = max(drop_cold, float(np.max(-dm)))
    final_cycling = float(np.max(m))
    ok = (grow_hot <= 0.0 and hot_steps > 0 and peak > 0.0 and final_recovery < peak
          and drop_cold <= 0.0 and cold_max < scenario("cycling").params.theta_c and final_cycling > 0.0)
    report(10, "m non-increasing above melting, non-decreasing in solid cycling", ok,
           f"recovery peak {peak:.2e} -> {final_recovery:.2e}, cycling m {final_cycling:.2e}")
    assert ok, (grow_hot, hot_steps, peak, final_recovery, drop_cold, cold_max, final_cycling)

import functools
import sys
import os

import numpy as np
import pytest

from beamfatigue.config import load_config, shipped_scenarios
from beamfatigue.integrator import Model, initial_state, run
from beamfatigue.verification import dt_sweep

WORKERS = max(1, min(4, os.cpu_count() or 1))


@functools.lru_cache(maxsize=None)
def scenario(name):
    return load_config(shipped_scenarios()[name])


@functools.lru_cache(maxsize=None)
def scenario_run(name):
    return run(scenario(name))


@functools.lru_cache(maxsize=None)
def scenario_sweep(name):
    return tuple(dt_sweep(scenario(name), WORKERS))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_model():
    """n = 2, every constant 1, nothing driving except what a test sets."""
    cfg = scenario("fixed_point").with_(n=2, dt=0.1, T=0.1, snapshot_interval=0.1, f="0", g="0",
                                       theta0="1", chi0="0", B=1.0, nu=1.0, beta=1.0,
                                       kappa=1.0, a=1.0, b=0.5, theta_floor=1.0)
    return Model(cfg)


@pytest.fixture
def unit_state(unit_model):
    return initial_state(unit_model)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])

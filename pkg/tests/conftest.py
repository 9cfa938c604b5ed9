"""Shared fixtures: the built-in scenarios are simulated once per session."""
from __future__ import annotations

import numpy as np
import pytest

from drem import builtin_scenario, simulate_scenario
from drem.scenario import _with_grid_overrides

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def fig1_result():
    return simulate_scenario(builtin_scenario("fig1_pe"))


@pytest.fixture(scope="session")
def fig3_result():
    return simulate_scenario(builtin_scenario("fig3_ie"))


@pytest.fixture(scope="session")
def fig3_result_60():
    scenario = _with_grid_overrides(builtin_scenario("fig3_ie"), dt=None, horizon=60.0)
    return simulate_scenario(scenario)


@pytest.fixture(scope="session")
def fig5_result():
    return simulate_scenario(builtin_scenario("fig5_ie"))

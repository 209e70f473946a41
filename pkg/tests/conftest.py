import pytest

from feecalib import (CalibrationOptions, SolverOptions, default_scenario,
                      default_truth, simulate_cycle)


@pytest.fixture(scope="session")
def truth():
    return default_truth()


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def dataset(scenario, truth):
    return simulate_cycle(scenario, truth)


@pytest.fixture(scope="session")
def fast_options():
    # enough to converge on the synthetic problems, cheap enough for CI
    return CalibrationOptions(solver=SolverOptions(n_starts=2,
                                                   max_iterations=300))

import warnings

import numpy as np
import pytest

from shape8.minimize import SolveConfig, minimize
from shape8.orbit import orbit_from_quarter, polish
from shape8.path import OmegaProblem, uniform_times
from shape8.schubart import minimize_collinear


def random_config(rng, n=3):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def quarter_128():
    """Converged discrete quarter, alpha = 1.5, equal masses, N = 128."""
    m = np.ones(3)
    prob = OmegaProblem(m, 1.5, uniform_times(128))
    res = minimize(prob.default_init(), m, 1.5, SolveConfig(grad_tol=1e-8), prob.times)
    assert res.converged
    return prob, res


@pytest.fixture(scope="session")
def polished_orbit(quarter_128):
    prob, res = quarter_128
    raw = orbit_from_quarter(prob.decode(res.params), prob.m, prob.alpha)
    return raw, polish(raw)


@pytest.fixture(scope="session")
def schubart_quarter():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return minimize_collinear([1, 1, 1], 1.0, 1.0, (64, 128, 256), SolveConfig(grad_tol=1e-6))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])

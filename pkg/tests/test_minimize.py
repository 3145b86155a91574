from dataclasses import dataclass

import numpy as np
import pytest

from shape8.dynamics import CollisionError
from shape8.minimize import (COLLISION_GUARD, CONVERGED, SolveConfig, conjugate_params,
                             continue_alpha, lbfgs, minimize, multistart)
from shape8.path import (OmegaProblem, discrete_angular_momentum, discrete_momenta,
                         uniform_times)
from shape8.shape import project_array

ONES = np.ones(3)
CFG = SolveConfig(grad_tol=1e-8)


@dataclass
class _Eval:
    value: float
    gradient: np.ndarray
    min_pair_distance: float = 1.0
    min_pair_time: float = 0.0
    min_relative_distance: float = 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(grad_tol=0)
    with pytest.raises(ValueError):
        SolveConfig(memory=0)
    with pytest.raises(ValueError):
        SolveConfig(ls_shrink=1.5)


def test_lbfgs_on_quadratic_reaches_exact_minimizer(rng):
    A = rng.normal(size=(12, 12))
    A = A @ A.T + 12 * np.eye(12)
    b = rng.normal(size=12)
    res = lbfgs(lambda x: _Eval(0.5 * x @ A @ x - b @ x, A @ x - b), np.zeros(12),
                SolveConfig(grad_tol=1e-12))
    assert res.status == CONVERGED
    np.testing.assert_allclose(res.params, np.linalg.solve(A, b), atol=1e-10)


def test_lbfgs_collision_guard():
    def evaluate(x):
        if np.any(x != 0):
            raise CollisionError("every move collides")
        return _Eval(0.0, np.ones(2))

    res = lbfgs(evaluate, np.zeros(2), CFG)
    assert res.status == COLLISION_GUARD and res.iterations == 0


def test_converged_quarter_properties(quarter_128):
    prob, res = quarter_128
    assert res.grad_norm <= CFG.grad_tol
    path = prob.decode(res.params)
    scale = np.sqrt(np.mean(np.sum(np.abs(path.z) ** 2, axis=1)))
    # free-boundary natural condition on the discrete Legendre momentum at t = 0
    p_plus, _ = discrete_momenta(path, ONES, prob.alpha)
    assert np.max(np.abs(p_plus[0].real)) <= 10 * CFG.grad_tol * scale
    J = discrete_angular_momentum(path, ONES, prob.alpha)
    assert np.max(np.abs(J)) <= 10 * CFG.grad_tol * scale
    assert res.min_pair_distance[0] > 0.1
    # oriented so that the shape curve stays on the w3 >= 0 side
    w3 = project_array(path.z, ONES)[:, 2]
    assert np.all(w3 >= -1e-12 * np.max(np.abs(w3)))


def test_stationary_init_returns_immediately(quarter_128):
    prob, res = quarter_128
    again = minimize(res.params, ONES, prob.alpha, CFG, prob.times)
    assert again.status == CONVERGED and again.iterations == 0


def test_monotone_history(quarter_128):
    _, res = quarter_128
    a = np.array([h[1] for h in res.history])
    assert np.all(np.diff(a) <= CFG.noise_rtol * np.abs(a[1:]))


def test_determinism():
    prob = OmegaProblem(ONES, 1.5, uniform_times(32))
    r1 = minimize(prob.default_init(), ONES, 1.5, CFG, prob.times)
    r2 = minimize(prob.default_init(), ONES, 1.5, CFG, prob.times)
    assert np.array_equal(r1.params, r2.params) and r1.action == r2.action


def test_multistart(quarter_128):
    prob, res = quarter_128
    one, basins, results = multistart(ONES, 1.5, CFG, 1, times=prob.times)
    assert np.array_equal(one.params, res.params) and len(results) == 1
    best, basins, results = multistart(ONES, 1.5, CFG, 8, times=prob.times)
    again, _, _ = multistart(ONES, 1.5, CFG, 8, times=prob.times)
    assert np.array_equal(best.params, again.params)
    acts = [r.action for r in results if r.converged]
    assert len(acts) == 8
    assert (max(acts) - min(acts)) <= 1e-6 * min(acts)
    with pytest.raises(ValueError):
        multistart(ONES, 1.5, CFG, 0)


def test_conjugation_is_an_involution(rng):
    vec = rng.normal(size=4 + 4 * 7)
    np.testing.assert_allclose(conjugate_params(conjugate_params(vec)), vec)


def test_continue_alpha(quarter_128):
    prob, res = quarter_128
    same, trace = continue_alpha(res, ONES, 1.5, 1.5, 3, CFG, prob.times)
    assert same is res and trace == []
    final, trace = continue_alpha(res, ONES, 1.5, 1.2, 3, CFG, prob.times)
    assert final.converged and [round(t[0], 12) for t in trace] == [1.4, 1.3, 1.2]
    acts = [res.action] + [t[1] for t in trace]
    assert all(abs(b - a) <= 0.1 * abs(a) for a, b in zip(acts, acts[1:]))

import json
import warnings

import numpy as np
import pytest

from shape8.deformation import kappa, relative_angular_momentum
from shape8.minimize import SolveConfig
from shape8.orbit import twist
from shape8.path import graded_times
from shape8.schubart import (CollinearProblem, build_schubart, cluster_inertia, condition_test,
                             contraction_factors, minimize_collinear, richardson, sundman_fit)

ONES = np.ones(3)


def test_quarter_shape(schubart_quarter):
    q = schubart_quarter
    assert q.status == "converged" and q.collision_at_zero
    x = q.nodes
    assert x[0, 1] == x[0, 2] and x[0, 0] < x[0, 1]
    inner = x[1:-1]
    assert np.all(inner[:, 0] < inner[:, 2]) and np.all(inner[:, 2] < inner[:, 1])
    assert x[-1, 2] == 0.0 and x[-1, 1] == -x[-1, 0]
    assert all(v for k, v in q.checks.items() if k != "endpoint_defect")
    assert np.allclose(x @ ONES, 0, atol=1e-14)


def test_ladder_converges(schubart_quarter):
    acts = [a for _, a, _ in schubart_quarter.ladder]
    assert acts[0] < acts[1] < acts[2]        # the graded discretization approaches from below
    d = np.diff(acts)
    assert abs(d[1]) < abs(d[0])


def test_preconditioner_solves_its_system(rng):
    prob = CollinearProblem(ONES, 1.0, graded_times(16))
    vec = prob.default_init()
    apply = prob.preconditioner(vec)
    g = rng.normal(size=len(vec))
    assert g @ apply(g) > 0


def test_input_validation():
    with pytest.raises(ValueError):
        minimize_collinear([1, 2, 1], 1.0)
    with pytest.raises(ValueError):
        minimize_collinear(ONES, 1.0, levels=(64, 64))


def test_build_schubart(schubart_quarter):
    orbit = build_schubart(schubart_quarter)
    T0 = schubart_quarter.duration
    assert orbit.period == pytest.approx(4 * T0)
    assert np.all(orbit.positions[..., 1] == 0)
    z = orbit.z
    # binary collisions: bodies 2, 3 at t = 0 and bodies 1, 3 at t = 2 T0
    assert z[0, 1] == z[0, 2]
    k = int(np.argmin(np.abs(orbit.times - 2 * T0)))
    assert orbit.times[k] == pytest.approx(2 * T0) and z[k, 0] == z[k, 2]
    # identity x(t) = H3 x(T/2 - t) on the samples
    for i in range(0, len(orbit.times), 37):
        y, _ = orbit.sample(orbit.period / 2 - orbit.times[i])
        np.testing.assert_allclose(z[i], twist(y), atol=1e-12)
    J = relative_angular_momentum(z[1:], orbit.v[1:], orbit.masses)
    assert np.all(J == 0)


def test_sundman_fit_exact_power_law():
    k, e = 1.7, 4 / 3
    t = np.geomspace(1e-6, 1e-2, 40)
    # two equal bodies with cluster inertia (k t)^e about their center
    r = np.sqrt((k * t) ** e / 2)
    z = np.stack([-5 + 0j * t, -r + 0j, r + 0j], axis=1)
    assert cluster_inertia(z, ONES) == pytest.approx((k * t) ** e, rel=1e-13)
    ke, ee = sundman_fit((t, z), m=ONES, window=(1e-6, 1e-2))
    assert ke == pytest.approx(k, rel=1e-10) and ee == pytest.approx(e, rel=1e-10)
    with pytest.raises(ValueError):
        sundman_fit((t, z), m=ONES, window=(2e-6, 3e-6))
    with pytest.raises(ValueError):
        sundman_fit((t, z), m=ONES, window=(0.0, 1e-3))


def test_sundman_fit_on_quarter(schubart_quarter):
    ke, ee = sundman_fit(schubart_quarter)
    assert abs(ee / (4 / 3) - 1) < 0.02
    assert abs(ke / kappa(1, 1, 1.0) - 1) < 0.05


def test_richardson_on_exact_ladder():
    L, C, p = 3.25, 0.7, 1.5
    vals = [L + C * 2.0 ** (-p * k) for k in range(3)]
    lim, order, unc = richardson(vals)
    assert lim == pytest.approx(L, rel=1e-14) and order == pytest.approx(p, rel=1e-12)
    assert unc == pytest.approx(abs(vals[2] - vals[1]))
    assert contraction_factors(vals) == pytest.approx([2 ** p])
    lim, order, unc = richardson([1.0, 2.0])
    assert np.isnan(order) and unc == 1.0


@pytest.fixture(scope="module")
def small_report():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return condition_test(ONES, 1.0, (32, 64, 128), SolveConfig(grad_tol=1e-6))


def test_condition_report(small_report, tmp_path):
    r = small_report
    assert r.alpha == 1.0 and r.levels == [32, 64, 128]
    assert all(a >= b for a, b in zip(r.schubart_action, r.omega_infimum))
    assert np.isfinite(r.gap) and r.gap_uncertainty > 0
    assert len(r.schubart_contraction) == 1 and len(r.planar_contraction) == 1
    text = r.table()
    assert "collinear" in text and "gap" in text
    r.save(tmp_path / "c.json")
    back = json.loads((tmp_path / "c.json").read_text())
    assert back["schubart_action"] == r.schubart_action
    with pytest.raises(ValueError):
        condition_test([1, 2, 1])

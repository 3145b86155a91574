import numpy as np
import pytest

from shape8.dynamics import energy
from shape8.integrate import IntegrationFailure, propagate
from shape8.orbit import (EndpointError, FullOrbit, Thresholds, extend_reflect, extend_twist,
                          polish, twist, verify)
from shape8.path import DiscretePath, action, uniform_times

ONES = np.ones(3)


def test_twist_fixes_symmetric_euler_form():
    z = np.array([-1.0, 1.0, 0.0], complex)
    np.testing.assert_array_equal(twist(z), z)
    np.testing.assert_array_equal(twist(twist(z * 1j + 0.3)), z * 1j + 0.3)


def test_extend_twist(quarter_128):
    prob, res = quarter_128
    q = prob.decode(res.params)
    half = extend_twist(q, ONES)
    assert half.times[-1] == pytest.approx(2 * q.times[-1])
    assert half.n_segments == 2 * q.n_segments
    np.testing.assert_array_equal(half.z[q.n_segments], q.z[-1])
    assert action(half, ONES, 1.5) == pytest.approx(2 * action(q, ONES, 1.5), rel=1e-13)
    with pytest.raises(ValueError):
        extend_twist(q, [1.0, 2.0, 1.0])
    bad = DiscretePath.from_complex(q.times, q.z + np.array([0, 0, 0.1]))
    with pytest.raises(EndpointError):
        extend_twist(bad, ONES)


def test_extend_reflect(quarter_128):
    prob, res = quarter_128
    q = prob.decode(res.params)
    half = extend_twist(q, ONES)
    mid = half.z[-1]
    assert np.max(np.abs(mid.imag)) < 1e-14
    assert mid.real[2] < mid.real[0] < mid.real[1]       # type-1 syzygy order
    orbit = extend_reflect(half, ONES, 1.5)
    assert orbit.period == pytest.approx(4 * q.times[-1])
    closed = orbit.closed_path()
    np.testing.assert_array_equal(closed.z[-1], closed.z[0])
    assert action(closed, ONES, 1.5) == pytest.approx(4 * action(q, ONES, 1.5), rel=1e-13)
    with pytest.raises(EndpointError):
        extend_reflect(DiscretePath.from_complex(q.times, q.z), ONES, 1.5)


def test_raw_orbit_passes_geometric_checks(polished_orbit):
    raw, _ = polished_orbit
    rep = verify(raw, Thresholds(geometric=1e-6))
    assert rep.thm_conditions == {"a": True, "b": True, "c": True, "d": True}
    assert rep.reduced_sequence == "2313"


def test_polished_orbit(polished_orbit):
    raw, orbit = polished_orbit
    d = orbit.diagnostics
    assert d["closure_defect"] < 1e-8
    assert d["quarter_energy_drift"] < 1e-10
    rep = verify(orbit)
    assert rep.passed
    assert rep.energy_drift < 1e-10
    assert rep.J_relative < 1e-8
    assert rep.eom_residual_max < 1e-6
    assert rep.transversality_t0 < 1e-6
    assert len(rep.syzygy_events) == 4 and rep.reduced_sequence == "2313"
    assert rep.min_pair_distance > 1e-2


def test_polish_of_exact_solution_is_a_fixed_point(polished_orbit):
    _, orbit = polished_orbit
    again = polish(orbit)
    assert again.diagnostics["initial_correction"] < 1e-9
    np.testing.assert_allclose(again.positions, orbit.positions, atol=1e-9)


def test_polished_orbit_solves_the_equations(polished_orbit):
    # independent integration of the full period from the polished state
    _, orbit = polished_orbit
    x0, v0 = orbit.sample(0.0)
    t, x, v, _ = propagate(x0, v0, orbit.masses, orbit.alpha, (0.0, orbit.period),
                           t_eval=[orbit.period / 2, orbit.period])
    xh, _ = orbit.sample(orbit.period / 2)
    scale = orbit.scale()
    assert np.max(np.abs(x[0] - xh)) < 1e-7 * scale
    assert np.max(np.abs(x[-1] - x0)) < 1e-7 * scale
    E = energy(x, v, orbit.masses, orbit.alpha)
    assert np.ptp(E) < 1e-10 * abs(E[0])


def test_round_trip_reproduces_report(tmp_path, polished_orbit):
    _, orbit = polished_orbit
    orbit.save(tmp_path / "o.json")
    back = FullOrbit.load(tmp_path / "o.json")
    r1, r2 = verify(orbit), verify(back)
    for key in ("eom_residual_max", "energy_drift", "J_max", "transversality_t0",
                "min_pair_distance"):
        assert getattr(r2, key) == pytest.approx(getattr(r1, key), rel=1e-12, abs=1e-15)
    assert r1.thm_conditions == r2.thm_conditions


def test_sample_is_periodic(polished_orbit):
    _, orbit = polished_orbit
    for t in (0.1, 1.3, 2.9):
        a, va = orbit.sample(t)
        b, vb = orbit.sample(t + orbit.period)
        np.testing.assert_allclose(a, b, atol=1e-12)
        np.testing.assert_allclose(va, vb, atol=1e-10)


def test_broken_symmetry_fails_verification(polished_orbit):
    _, orbit = polished_orbit
    pos = orbit.positions.copy()
    k = len(orbit.times) // 8
    pos[k, 2, 1] += 1e-3
    broken = FullOrbit(orbit.period, orbit.times, pos, orbit.velocities, orbit.alpha,
                       orbit.masses)
    rep = verify(broken)
    assert not rep.thm_conditions["d"] and not rep.passed


def test_integration_failure_on_close_approach():
    x0 = np.array([-1.0, 1.0, 0.0], complex)
    with pytest.raises(IntegrationFailure):
        propagate(x0, np.zeros(3, complex), ONES, 1.0, (0.0, 5.0))

import numpy as np
import pytest
from scipy.integrate import quad

from shape8.deformation import BinaryCentralConfig, ParabolicArc, exponent
from shape8.dynamics import CollisionError, potential_energy
from shape8.minimize import random_init
from shape8.path import (DiscretePath, OmegaParams, OmegaProblem, QuadratureCollisionError,
                         action, action_terms, decode, encode, graded_times, load_path,
                         min_pair_distance, refine, save_path, uniform_times)

ONES = np.ones(3)


def fd5(f, x, i, h=1e-3):
    """Fourth-order central difference of ``f`` along coordinate ``i``."""
    e = np.zeros_like(x)
    e[i] = h
    return (8 * (f(x + e) - f(x - e)) - (f(x + 2 * e) - f(x - 2 * e))) / (12 * h)


def _random_params(rng, n=64, alpha=1.5):
    prob = OmegaProblem(ONES, alpha, uniform_times(n))
    return prob, random_init(prob, rng)


def test_decode_boundary_examples():
    p = OmegaParams(0.0, 0.0, 0.0, 0.0, np.zeros((15, 2), complex))
    path = decode(p, ONES)
    np.testing.assert_allclose(path.z[0], [-1, 0, 1], atol=1e-15)
    np.testing.assert_allclose(path.z[-1], [-1, 1, 0], atol=1e-15)
    assert path.is_centered(ONES)


def test_encode_decode_round_trip(rng):
    m = np.array([1.0, 1.0, 1.7])
    p = OmegaParams(0.3, -0.2, 0.1, 1.2, rng.normal(size=(31, 2)) + 1j * rng.normal(size=(31, 2)))
    q = encode(decode(p, m), m)
    np.testing.assert_allclose(q.to_vector(), p.to_vector(), atol=1e-14)


def test_unequal_pair_rejected():
    with pytest.raises(ValueError):
        decode(OmegaParams(0, 0, 0, 0, np.zeros((15, 2), complex)), [1.0, 2.0, 1.0])


def test_path_validation():
    with pytest.raises(ValueError):
        DiscretePath(uniform_times(4), np.zeros((5, 3, 2)))
    with pytest.raises(ValueError):
        DiscretePath(np.r_[0, np.ones(9)], np.zeros((10, 3, 2)))


def test_constant_path(rng):
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    t = uniform_times(16, 2.0)
    path = DiscretePath.from_complex(t, np.tile(z, (17, 1)))
    assert action(path, ONES, 1.3) == pytest.approx(2.0 * potential_energy(z, ONES, 1.3),
                                                    rel=1e-12)
    d16 = min_pair_distance(path)[0]
    d64 = min_pair_distance(refine(path, 4))[0]
    assert d16 == pytest.approx(d64, rel=1e-14)


def test_straight_line_kinetic_exact(rng):
    a = np.array([-2.0, 0.0, 2.0], complex)
    v = np.array([0.1j, -0.2j, 0.1j])
    t = uniform_times(32, 1.5)
    z = a + t[:, None] * v
    val = action_terms(z, t, ONES, 1.0, subdivide_rtol=0)[0]
    K = 0.5 * np.sum(np.abs(v) ** 2) * 1.5
    U, _ = quad(lambda s: potential_energy(a + s * v, ONES, 1.0), 0, 1.5, epsabs=0, epsrel=1e-13)
    assert val == pytest.approx(K + U, rel=1e-6)


def _arc(alpha):
    return ParabolicArc(BinaryCentralConfig(0.3, 1.0, 2.0), alpha), np.array([1.0, 2.0])


def _arc_action_closed_form(arc, m, alpha, t0, t1):
    # zero energy: L = 2U, and U is a pure power of t
    pa = exponent(alpha) * alpha
    d = abs(arc.config.s[0] - arc.config.s[1])
    c = 2 * m[0] * m[1] / (alpha * arc.kappa ** pa * d ** alpha) / (1 - pa)
    return c * (t1 ** (1 - pa) - t0 ** (1 - pa))


def test_parabolic_arc_action_against_closed_form():
    arc, m = _arc(1.0)
    t = graded_times(2048, 1.0, 3.0)
    q, _ = arc.at(t)
    val = action_terms(q, t, m, 1.0, subdivide_rtol=0, allow_node_collisions=True)[0]
    exact = _arc_action_closed_form(arc, m, 1.0, 0.0, 1.0)
    assert abs(val / exact - 1) < 1e-4


@pytest.mark.parametrize("alpha", [1.0, 1.5, 1.9])
def test_parabolic_arc_action_away_from_collision(alpha):
    arc, m = _arc(alpha)
    t = 0.1 + 0.9 * uniform_times(2048)
    q, _ = arc.at(t)
    val = action_terms(q, t, m, alpha)[0]
    assert abs(val / _arc_action_closed_form(arc, m, alpha, 0.1, 1.0) - 1) < 1e-6


@pytest.mark.parametrize("alpha", [1.0, 1.5, 1.9])
def test_gradient_matches_finite_differences(rng, alpha):
    prob, vec = _random_params(rng, alpha=alpha)
    g = prob.evaluate(vec).gradient
    for i in rng.choice(len(vec), 25, replace=False):
        fd = fd5(prob.value, vec, i)
        assert abs(fd - g[i]) <= 1e-6 * max(abs(g[i]), 1e-6 * np.max(np.abs(g)))


def test_theta_derivative_one_dimensional(rng):
    prob, vec = _random_params(rng)
    g = prob.evaluate(vec).gradient[3]
    hs = [1e-3, 5e-4, 2.5e-4]
    errs = []
    for h in hs:
        e = np.zeros_like(vec)
        e[3] = h
        errs.append(abs((prob.value(vec + e) - prob.value(vec - e)) / (2 * h) - g))
    assert errs[-1] < 1e-6 * abs(g)
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)   # O(h^2)


def test_directional_derivative_second_order(rng):
    prob, vec = _random_params(rng)
    d = rng.normal(size=len(vec))
    slope = prob.evaluate(vec).gradient @ d
    errs = []
    for h in (1e-3, 5e-4):
        errs.append(abs((prob.value(vec + h * d) - prob.value(vec - h * d)) / (2 * h) - slope))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.15)


def test_rotation_invariance(rng):
    prob, vec = _random_params(rng)
    path = prob.decode(vec)
    rot = DiscretePath.from_complex(path.times, np.exp(0.77j) * path.z)
    assert action(rot, ONES, 1.5) == pytest.approx(action(path, ONES, 1.5), rel=1e-13)


def test_refine_composition_and_order():
    t = uniform_times(16)
    z = np.stack([-1 - 0.2 * np.sin(t), 1 + 0.1 * t ** 2 + 0.3j * t, 0.5j * np.cos(2 * t)], 1)
    z = z - z.mean(axis=1, keepdims=True)
    path = DiscretePath.from_complex(t, z)
    np.testing.assert_allclose(refine(refine(path, 2), 2).nodes, refine(path, 4).nodes,
                               atol=1e-15)
    with pytest.raises(ValueError):
        refine(path, 1)
    # smooth path sampled at increasing resolution: O(h^2) convergence
    def smooth(n):
        tt = uniform_times(n)
        zz = np.stack([-1 - 0.2 * np.sin(tt), 1 + 0.1 * tt ** 2 + 0.3j * tt,
                       0.5j * np.cos(2 * tt)], 1)
        return action(DiscretePath.from_complex(tt, zz - zz.mean(1, keepdims=True)), ONES, 1.2)
    a = [smooth(n) for n in (16, 32, 64)]
    assert (a[1] - a[0]) / (a[2] - a[1]) == pytest.approx(4, rel=0.05)


def test_collision_errors():
    t = uniform_times(8)
    z = np.tile(np.array([-1.0, 1.0, 0.0], complex), (9, 1))
    z[3] = [0.0, 0.0, 0.0]
    with pytest.raises(CollisionError):
        action_terms(z, t, ONES, 1.0)
    # bodies 1 and 2 pass through each other exactly at the first Gauss point of segment 4
    s = 0.5 - np.sqrt(3) / 6
    z = np.tile(np.array([-1.0, 1.0, 0.0], complex), (9, 1))
    z[5] = [(1 - s) / s, -(1 - s) / s, 0.0]
    with pytest.raises(QuadratureCollisionError) as exc:
        action_terms(z, t, ONES, 1.0, subdivide_rtol=0)
    assert t[4] < exc.value.time < t[5]


def test_graded_times():
    t = graded_times(8, 2.0, 3.0)
    assert t[0] == 0 and t[-1] == 2.0
    np.testing.assert_allclose(t[1], 2.0 / 512)


def test_json_round_trip(tmp_path, rng):
    prob, vec = _random_params(rng)
    path = prob.decode(vec)
    save_path(tmp_path / "p.json", path, ONES, 1.5)
    loaded, m, alpha = load_path(tmp_path / "p.json")
    np.testing.assert_array_equal(loaded.nodes, path.nodes)
    np.testing.assert_array_equal(loaded.times, path.times)
    assert alpha == 1.5 and list(m) == [1, 1, 1]


def test_hessian_preconditioner_is_positive(rng):
    prob, vec = _random_params(rng)
    apply = prob.hessian_preconditioner(vec)
    for _ in range(5):
        g = rng.normal(size=len(vec))
        assert g @ apply(g) > 0

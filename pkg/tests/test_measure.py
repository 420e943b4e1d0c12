import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shapespace.errors import DimensionMismatchError, NegativeWeightError, ZeroTotalMassError
from shapespace.isometry import random_isometry
from shapespace.measure import (
    TestFunction,
    barycenter,
    consolidate,
    dirac,
    make_measure,
    mixture,
    prune,
    pushforward,
    same_atoms,
    second_moment,
)


def test_make_measure_normalizes():
    mu = make_measure([[0], [1]], [1, 1])
    np.testing.assert_array_equal(mu.weights, [0.5, 0.5])
    assert make_measure([[0, 0]], [7]).weights.tolist() == [1.0]


def test_make_measure_errors():
    with pytest.raises(NegativeWeightError):
        make_measure([[0], [1]], [1, -1])
    with pytest.raises(ZeroTotalMassError):
        make_measure([[0], [1]], [0, 0])
    with pytest.raises(DimensionMismatchError):
        make_measure([[0], [1]], [1, 1, 1])


def test_measure_is_immutable():
    mu = make_measure([[0.0, 1.0]], [1])
    with pytest.raises(ValueError):
        mu.points[0, 0] = 3.0


weights = arrays(float, st.integers(1, 12), elements=st.floats(0.0, 1e6)).filter(lambda w: w.sum() > 1e-6)


@given(weights)
@settings(max_examples=60, deadline=None)
def test_weights_sum_to_one(w):
    mu = make_measure(np.arange(len(w), dtype=float)[:, None], w)
    assert abs(mu.weights.sum() - 1.0) <= 1e-12
    assert np.all(mu.weights >= 0)


def test_pushforward_examples():
    mu = pushforward(dirac([0.0, 0.0]), lambda x: x + [1.0, -2.0])
    np.testing.assert_array_equal(mu.points, [[1.0, -2.0]])
    u = pushforward(make_measure([[0.0], [1.0]]), lambda x: 2 * x)
    np.testing.assert_array_equal(u.points, [[0.0], [2.0]])
    np.testing.assert_array_equal(u.weights, [0.5, 0.5])


def test_pushforward_identity_is_bit_identical(rng):
    mu = make_measure(rng.standard_normal((7, 3)), rng.random(7))
    nu = pushforward(mu, lambda x: x)
    assert np.array_equal(nu.points, mu.points) and np.array_equal(nu.weights, mu.weights)


def test_pushforward_composes(rng):
    mu = make_measure(rng.standard_normal((5, 2)))
    f = lambda x: x**3 + 1
    g = lambda x: np.sin(x) - x
    a = pushforward(pushforward(mu, f), g)
    b = pushforward(mu, lambda x: g(f(x)))
    np.testing.assert_array_equal(a.points, b.points)


@pytest.mark.parametrize("seed", range(5))
def test_isometry_pushforward_preserves_mass_distances_and_mean(seed):
    rng = np.random.default_rng(seed)
    mu = make_measure(rng.standard_normal((6, 3)), rng.random(6) + 0.1)
    g = random_isometry(3, rng, radius=2.0)
    nu = g.push(mu)
    assert abs(nu.weights.sum() - 1) < 1e-12
    d0 = np.linalg.norm(mu.points[:, None] - mu.points[None], axis=-1)
    d1 = np.linalg.norm(nu.points[:, None] - nu.points[None], axis=-1)
    np.testing.assert_allclose(d1, d0, atol=1e-12)
    np.testing.assert_allclose(barycenter(nu), g.apply(barycenter(mu)), atol=1e-12)


def test_barycenter_examples():
    np.testing.assert_allclose(barycenter(make_measure([[0, 0], [2, 0]])), [1, 0])
    np.testing.assert_allclose(barycenter(dirac([3.0, -1.0])), [3, -1])
    np.testing.assert_allclose(barycenter(make_measure([[0], [4]], [0.75, 0.25])), [1.0])


def test_second_moment_examples():
    assert second_moment(dirac([1.0, 2.0]), [1.0, 2.0]) == 0.0
    assert second_moment(make_measure([[-1.0], [1.0]]), [0.0]) == 1.0
    assert second_moment(make_measure([[0.0], [2.0]]), [0.0]) == 2.0
    with pytest.raises(DimensionMismatchError):
        second_moment(dirac([1.0, 2.0]), [0.0])


def test_consolidate_and_prune():
    mu = make_measure([[0.0], [1.0], [0.0], [1.0 + 1e-9]], [1, 1, 1, 1])
    c0 = consolidate(mu)
    assert c0.m == 3
    c1 = consolidate(mu, 1e-6)
    assert c1.m == 2
    np.testing.assert_allclose(sorted(c1.weights), [0.5, 0.5])
    nu = make_measure([[0.0], [1.0]], [0, 1])
    assert prune(nu).m == 1


def test_same_atoms_detects_reordering():
    a = make_measure([[0.0, 0.0], [1.0, 0.0]], [0.3, 0.7])
    b = make_measure([[1.0, 0.0], [0.0, 1e-9]], [0.7, 0.3])
    assert same_atoms(a, b)
    assert not same_atoms(a, make_measure([[1.0, 0.0], [0.0, 0.0]], [0.3, 0.7]))


def test_mixture_weights():
    m = mixture([dirac([0.0]), dirac([1.0])], [0.25, 0.75])
    np.testing.assert_allclose(m.weights, [0.25, 0.75])


@pytest.mark.parametrize("kind", ["poly", "gauss"])
def test_test_function_gradients_match_finite_differences(kind, rng):
    if kind == "poly":
        phi = TestFunction.polynomial(0.3, rng.standard_normal(3), rng.standard_normal((3, 3)))
    else:
        phi = TestFunction.gaussian(rng.standard_normal(3), 0.7)
    x = rng.standard_normal((4, 3))
    h = 1e-6
    fd = np.stack([(phi(x + h * e) - phi(x - h * e)) / (2 * h) for e in np.eye(3)], axis=1)
    np.testing.assert_allclose(phi.gradient(x), fd, atol=1e-8)


def test_gaussian_width_must_be_positive():
    with pytest.raises(ValueError):
        TestFunction.gaussian([0.0], 0.0)

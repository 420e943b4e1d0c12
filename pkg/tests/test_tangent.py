import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapespace.errors import BadStepError, DimensionMismatchError, MeasureMismatchError
from shapespace.fixtures import random_algebra
from shapespace.isometry import (
    IsoAlgebraElement,
    Isometry,
    flow_pushforward,
    fundamental_field,
    iso_dimension,
    random_isometry,
    rotation_generator,
    translation_generator,
)
from shapespace.measure import TestFunction, dirac, make_measure
from shapespace.tangent import (
    DiscreteVectorField,
    continuity_residual,
    evaluation_matrix,
    flow_norm_invariance,
    l1_in_time_norm,
    l2_inner,
    orbit_subspace,
    project_onto_orbit,
    representative_independence_check,
    shape_norm,
)

from .conftest import random_measure


def test_l2_inner_examples():
    mu = make_measure([[0.0, 0.0], [1.0, 0.0]], [1.0, 3.0])
    u = DiscreteVectorField([[1.0, 0.0], [0.0, 2.0]], mu)
    v = DiscreteVectorField([[3.0, 0.0], [0.0, 1.0]], mu)
    assert l2_inner(u, v) == pytest.approx(0.25 * 3 + 0.75 * 2)
    assert u.norm() == pytest.approx(np.sqrt(0.25 + 0.75 * 4))
    other = make_measure(mu.points, mu.weights)
    with pytest.raises(MeasureMismatchError):
        l2_inner(u, DiscreteVectorField(v.vectors, other))
    with pytest.raises(DimensionMismatchError):
        DiscreteVectorField([[1.0, 0.0]], mu)


def test_vector_field_arithmetic(rng):
    mu = random_measure(rng, 4, 2)
    u = DiscreteVectorField(rng.standard_normal((4, 2)), mu)
    np.testing.assert_allclose((u + u - 2 * u).vectors, 0)
    assert DiscreteVectorField.zeros(mu).norm() == 0


def test_dirac_in_r3():
    rep = orbit_subspace(dirac([0.3, -1.2, 2.0]))
    assert rep.tangent_dim == 3
    assert rep.rank == 3
    assert rep.shape_tangent_dim == 0
    assert rep.kernel_dim == 3


def test_two_atoms_in_the_plane():
    rep = orbit_subspace(make_measure([[0.0, 0.0], [1.0, 0.0]]))
    assert (rep.tangent_dim, rep.rank, rep.shape_tangent_dim, rep.kernel_dim) == (4, 3, 1, 0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_dirac_kernel_is_the_stabilizer(n, rng):
    x = rng.standard_normal(n)
    rep = orbit_subspace(dirac(x))
    assert rep.rank == n
    assert rep.kernel_dim == n * (n - 1) // 2
    for X in rep.kernel_basis:
        assert np.abs(fundamental_field(X, x)).max() <= 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_generic_configuration_has_full_rank(n, rng):
    rep = orbit_subspace(random_measure(rng, n + 2, n))
    assert rep.rank == iso_dimension(n)
    assert rep.kernel_dim == 0


def test_collinear_points_have_rotational_stabilizer(rng):
    # atoms on a line in R^3: rotations about that line fix every atom
    d = rng.standard_normal(3)
    mu = make_measure(np.outer(rng.standard_normal(5), d) + 1.0)
    rep = orbit_subspace(mu)
    assert rep.rank == 5
    assert rep.kernel_dim == 1


def test_evaluation_matrix_shape_and_scaling(rng):
    mu = random_measure(rng, 5, 3, uniform=False)
    E = evaluation_matrix(mu, scaled=False)
    assert E.shape == (15, 6)
    Es = evaluation_matrix(mu)
    np.testing.assert_allclose(Es, E * np.repeat(np.sqrt(mu.weights), 3)[:, None])


def test_projection_properties(rng):
    mu = random_measure(rng, 5, 3, uniform=False)
    rep = orbit_subspace(mu)
    v = DiscreteVectorField(rng.standard_normal((5, 3)), mu)
    w = DiscreteVectorField(rng.standard_normal((5, 3)), mu)
    ov, sv = project_onto_orbit(v, rep)
    ow, sw = project_onto_orbit(w, rep)
    np.testing.assert_allclose((ov + sv).vectors, v.vectors, atol=1e-14)
    assert abs(l2_inner(ov, sv)) <= 1e-12
    # idempotent
    oo, os_ = project_onto_orbit(ov, rep)
    np.testing.assert_allclose(oo.vectors, ov.vectors, atol=1e-12)
    assert os_.norm() <= 1e-12
    # self-adjoint
    assert l2_inner(ov, w) == pytest.approx(l2_inner(v, ow), abs=1e-12)
    # the shape part is orthogonal to every fundamental field
    from shapespace.isometry import killing_basis

    for X in killing_basis(3):
        assert abs(l2_inner(sv, DiscreteVectorField.of(X, mu))) <= 1e-12


def test_fundamental_fields_project_to_themselves(rng):
    mu = random_measure(rng, 4, 2)
    rep = orbit_subspace(mu)
    X = random_algebra(rng, 2)
    o, s = project_onto_orbit(DiscreteVectorField.of(X, mu), rep)
    assert s.norm() <= 1e-12


def test_shape_norm_ignores_rigid_motions(rng):
    mu = random_measure(rng, 5, 3, uniform=False)
    rep = orbit_subspace(mu)
    v = DiscreteVectorField(rng.standard_normal((5, 3)), mu)
    rigid = DiscreteVectorField.of(random_algebra(rng, 3), mu)
    assert shape_norm(v + rigid, rep) == pytest.approx(shape_norm(v, rep), rel=1e-10)
    assert shape_norm(v, rep) <= v.norm()


def test_projection_at_a_dirac_kills_everything(rng):
    mu = dirac([1.0, 2.0])
    rep = orbit_subspace(mu)
    v = DiscreteVectorField([[0.3, -0.7]], mu)
    _, s = project_onto_orbit(v, rep)
    assert s.norm() <= 1e-14


def test_zero_weight_atom_gets_orbit_field():
    mu = make_measure([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]], [1.0, 1.0, 0.0])
    rep = orbit_subspace(mu)
    X = rotation_generator(2, 0, 1)
    o, _ = project_onto_orbit(DiscreteVectorField.of(X, mu), rep)
    np.testing.assert_allclose(o.vectors[2], fundamental_field(X, [5.0, 5.0]), atol=1e-12)


# --------------------------------------------------------------------------


def test_continuity_residual_zero_field(rng):
    mu = random_measure(rng, 4, 2)
    zero = IsoAlgebraElement.zero(2)
    phi = TestFunction.gaussian([0.0, 0.0], 1.0)
    assert continuity_residual(mu, zero, phi) <= 1e-14


def test_continuity_residual_translation_quadratic():
    # the difference quotient of a quadratic along a straight line is exact
    mu = make_measure([[0.0, 0.0], [1.0, 2.0]])
    phi = TestFunction.polynomial(0.3, [0.5, -1.0], np.diag([1.0, 2.0]))
    assert continuity_residual(mu, translation_generator(2, 0), phi, fd_step=1e-4) <= 1e-10


def test_continuity_residual_is_second_order(rng):
    mu = random_measure(rng, 5, 2)
    X = random_algebra(rng, 2)
    phi = TestFunction.gaussian([0.2, -0.1], 1.5)
    hs = np.array([0.04, 0.02, 0.01])
    res = np.array([continuity_residual(mu, X, phi, fd_step=h) for h in hs])
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert abs(slope - 2) <= 0.2


def test_continuity_residual_bad_step(rng):
    with pytest.raises(BadStepError):
        continuity_residual(dirac([0.0]), IsoAlgebraElement.zero(1), TestFunction.gaussian([0.0], 1.0), fd_step=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3, 4]))
def test_flow_norm_is_invariant(seed, n):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, 5, n, uniform=False)
    X = random_algebra(rng, n)
    assert flow_norm_invariance(mu, X) <= 1e-10


def test_l1_in_time_norm_is_the_constant_speed(rng):
    mu = random_measure(rng, 5, 3)
    X = random_algebra(rng, 3)
    assert l1_in_time_norm(mu, X, 4) == pytest.approx(DiscreteVectorField.of(X, mu).norm(), rel=1e-12)
    pure = translation_generator(3, 1)
    assert l1_in_time_norm(mu, pure) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        l1_in_time_norm(mu, X, 0)


# --------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_representative_independence(n, rng):
    for _ in range(5):
        mu = random_measure(rng, 5, n, uniform=False)
        g = random_isometry(n, rng, radius=3)
        assert representative_independence_check(mu, g) <= 1e-9


def test_representative_independence_at_dirac(rng):
    assert representative_independence_check(dirac([1.0, 2.0, 3.0]), random_isometry(3, rng)) <= 1e-12


def test_rank_is_invariant_under_reindexing_and_translation(rng):
    mu = random_measure(rng, 6, 3, uniform=False)
    perm = rng.permutation(6)
    re = make_measure(mu.points[perm], mu.weights[perm])
    moved = Isometry.translation_by([3.0, -1.0, 7.0]).push(mu)
    a, b, c = orbit_subspace(mu), orbit_subspace(re), orbit_subspace(moved)
    assert a.rank == b.rank == c.rank
    np.testing.assert_allclose(a.singular_values, b.singular_values, atol=1e-12)


def test_flow_of_dirac_moves_along_the_field():
    mu = dirac([1.0, 0.0])
    out = flow_pushforward(mu, rotation_generator(2, 0, 1), np.pi / 2)
    np.testing.assert_allclose(out.points, [[0.0, -1.0]], atol=1e-12)

import math

import numpy as np
import pytest
from scipy.optimize import linprog

from shapespace.errors import (
    DimensionMismatchError,
    NonUniformWeightsError,
    OracleTooLargeError,
    TOutOfRangeError,
)
from shapespace.isometry import inverse, random_isometry
from shapespace.measure import consolidate, dirac, make_measure, pad_dimensions, same_atoms
from shapespace.transport import (
    Coupling,
    cost_matrix,
    displacement_interpolation,
    transport_simplex,
    wasserstein_entropic,
    wasserstein_exact,
    wasserstein_oracle,
)

from .conftest import random_measure, rel_err

TWO_ATOM_MU = make_measure([[0.0], [1.0]])
TWO_ATOM_NU = make_measure([[0.0], [2.0]])


def lp_cost(mu, nu, p):
    """Independent reference: the transport LP solved by HiGHS."""
    m, k = mu.m, nu.m
    C = cost_matrix(mu.points, nu.points, p)
    A = np.zeros((m + k, m * k))
    for i in range(m):
        A[i, i * k : (i + 1) * k] = 1
    for j in range(k):
        A[m + j, j::k] = 1
    r = linprog(C.ravel(), A_eq=A, b_eq=np.r_[mu.weights, nu.weights], bounds=(0, None), method="highs")
    assert r.status == 0
    return r.fun


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_dirac_pair_distance_is_euclidean(p):
    x, y = np.array([1.0, 2.0, -1.0]), np.array([0.5, -3.0, 2.0])
    assert rel_err(wasserstein_exact(dirac(x), dirac(y), p).distance, np.linalg.norm(x - y)) < 1e-12


def test_two_atom_example_p1():
    # matchings: identity 0.5*0 + 0.5*1 = 0.5, crossing 0.5*2 + 0.5*1 = 1.5
    r = wasserstein_exact(TWO_ATOM_MU, TWO_ATOM_NU, 1)
    assert r.cost == pytest.approx(0.5, abs=1e-15)
    assert r.distance == pytest.approx(0.5, abs=1e-15)


def test_two_atom_example_p2():
    r = wasserstein_exact(TWO_ATOM_MU, TWO_ATOM_NU, 2)
    assert r.cost == pytest.approx(0.5, abs=1e-15)
    assert r.distance == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_identical_measures_have_diagonal_coupling(rng):
    mu = random_measure(rng, 6, 2, uniform=False)
    r = wasserstein_exact(mu, mu, 2)
    assert r.distance == 0.0
    np.testing.assert_allclose(r.coupling.dense(), np.diag(mu.weights), atol=1e-15)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        wasserstein_exact(dirac([0.0]), dirac([0.0, 1.0]))


@pytest.mark.parametrize("seed", range(40))
def test_exact_matches_lp_on_nonuniform_instances(seed):
    rng = np.random.default_rng(seed)
    m, k = rng.integers(1, 12, 2)
    n = int(rng.integers(1, 4))
    p = [1.0, 2.0, 1.5][seed % 3]
    mu = random_measure(rng, m, n, uniform=False)
    nu = random_measure(rng, k, n, uniform=False)
    r = wasserstein_exact(mu, nu, p)
    assert r.coupling.is_admissible(1e-9)
    assert abs(r.cost - lp_cost(mu, nu, p)) <= 1e-9 * max(1.0, r.cost)
    assert rel_err(r.distance, r.cost ** (1 / p)) <= 1e-12


@pytest.mark.parametrize("seed", range(30))
def test_uniform_unequal_sizes_match_lp(seed):
    rng = np.random.default_rng(1000 + seed)
    m, k = rng.integers(1, 13, 2)
    n = int(rng.integers(1, 4))
    p = [1.0, 2.0][seed % 2]
    mu, nu = random_measure(rng, m, n), random_measure(rng, k, n)
    r = wasserstein_exact(mu, nu, p)
    assert r.coupling.is_admissible(1e-12)
    assert abs(r.cost - lp_cost(mu, nu, p)) <= 1e-9 * max(1.0, r.cost)


@pytest.mark.parametrize("seed", range(20))
def test_rational_weights_match_lp(seed):
    rng = np.random.default_rng(2000 + seed)
    m, k = rng.integers(1, 8, 2)
    n = int(rng.integers(1, 4))
    mu = make_measure(rng.standard_normal((m, n)), rng.integers(1, 6, m))
    nu = make_measure(rng.standard_normal((k, n)), rng.integers(1, 6, k))
    r = wasserstein_exact(mu, nu, 2)
    assert r.coupling.is_admissible(1e-12)
    assert abs(r.cost - lp_cost(mu, nu, 2)) <= 1e-9 * max(1.0, r.cost)


def test_interpolants_of_uniform_measures_use_assignment(rng):
    from shapespace.transport import displacement_interpolation

    mu, nu = random_measure(rng, 5, 2), random_measure(rng, 6, 2)
    mid = displacement_interpolation(wasserstein_exact(mu, nu).coupling, 0.5)
    other = random_measure(rng, 4, 2)
    r = wasserstein_exact(mid, other)
    assert r.iterations == 0
    assert abs(r.cost - lp_cost(mid, other, 2)) <= 1e-9


def test_uniform_replication_falls_back_to_simplex(rng):
    # lcm(16, 17) exceeds the replication limit
    mu, nu = random_measure(rng, 16, 2), random_measure(rng, 17, 2)
    r = wasserstein_exact(mu, nu, 2)
    assert r.iterations > 0
    assert abs(r.cost - lp_cost(mu, nu, 2)) <= 1e-9


def test_degenerate_integer_costs():
    # ties everywhere: many optimal bases, simplex must still terminate
    rng = np.random.default_rng(3)
    for _ in range(30):
        m, k = rng.integers(2, 9, 2)
        C = rng.integers(0, 2, (m, k)).astype(float)
        a = np.full(m, 1 / m)
        b = np.full(k, 1 / k)
        X, _ = transport_simplex(a, b, C)
        assert abs(X.sum(1) - a).max() < 1e-12 and abs(X.sum(0) - b).max() < 1e-12


def test_exact_is_deterministic(rng):
    mu, nu = random_measure(rng, 7, 2, False), random_measure(rng, 5, 2, False)
    a, b = wasserstein_exact(mu, nu), wasserstein_exact(mu, nu)
    assert np.array_equal(a.coupling.dense(), b.coupling.dense())


@pytest.mark.parametrize("m", [1, 2, 5, 8])
def test_oracle_equals_exact(m, rng):
    for _ in range(5):
        mu, nu = random_measure(rng, m, 2), random_measure(rng, m, 2)
        a, b = wasserstein_exact(mu, nu, 2), wasserstein_oracle(mu, nu, 2)
        assert abs(a.cost - b.cost) <= 1e-9 * max(b.cost, 1e-300)


def test_oracle_preconditions(rng):
    with pytest.raises(OracleTooLargeError):
        wasserstein_oracle(random_measure(rng, 9, 1), random_measure(rng, 9, 1))
    with pytest.raises(NonUniformWeightsError):
        wasserstein_oracle(random_measure(rng, 3, 1, False), random_measure(rng, 3, 1))
    mu = random_measure(rng, 4, 2)
    assert wasserstein_oracle(mu, mu).distance == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_metric_axioms(seed):
    rng = np.random.default_rng(100 + seed)
    p = 1.0 if seed % 2 else 2.0
    mu, nu, si = (random_measure(rng, int(rng.integers(2, 7)), 2, False) for _ in range(3))
    w = lambda a, b: wasserstein_exact(a, b, p).distance
    assert abs(w(mu, nu) - w(nu, mu)) <= 1e-9
    assert w(mu, mu) == 0.0
    assert w(mu, si) <= w(mu, nu) + w(nu, si) + 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_isometry_invariance_and_adjoint_law(seed):
    rng = np.random.default_rng(200 + seed)
    n = int(rng.integers(1, 4))
    mu, nu = random_measure(rng, 5, n, False), random_measure(rng, 6, n, False)
    g = random_isometry(n, rng, radius=2.0)
    base = wasserstein_exact(mu, nu).distance
    assert abs(wasserstein_exact(g.push(mu), g.push(nu)).distance - base) <= 1e-9
    lhs = wasserstein_exact(g.push(mu), nu).distance
    rhs = wasserstein_exact(mu, inverse(g).push(nu)).distance
    assert abs(lhs - rhs) <= 1e-9


@pytest.mark.parametrize("extra", [1, 3])
def test_zero_padding_embedding(extra, rng):
    mu, nu = random_measure(rng, 4, 2, False), random_measure(rng, 5, 2, False)
    for p in (1.0, 2.0):
        a = wasserstein_exact(mu, nu, p).distance
        b = wasserstein_exact(pad_dimensions(mu, extra), pad_dimensions(nu, extra), p).distance
        assert abs(a - b) <= 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_entropic_bounds(seed):
    rng = np.random.default_rng(300 + seed)
    mu, nu = random_measure(rng, 6, 2, False), random_measure(rng, 7, 2, False)
    eps = 1e-2
    ex = wasserstein_exact(mu, nu, 2)
    en = wasserstein_entropic(mu, nu, 2, epsilon=eps)
    assert en.coupling.marginal_residual() <= 1e-9
    assert en.coupling.dense().min() >= 0
    assert en.cost >= ex.cost - 1e-9
    assert en.distance <= ex.distance + 10 * eps * math.log(mu.m * nu.m)
    assert en.solver == "entropic"


def test_entropic_self_distance_small(rng):
    mu = random_measure(rng, 8, 2)
    eps = 1e-3
    en = wasserstein_entropic(mu, mu, 2, epsilon=eps)
    assert en.distance <= 10 * eps * math.log(64)


def test_entropic_tiny_epsilon_still_admissible(rng):
    # annealing keeps the log-domain iteration finite even for very small epsilon
    mu, nu = random_measure(rng, 5, 2, False), random_measure(rng, 5, 2, False)
    en = wasserstein_entropic(mu, nu, 2, epsilon=1e-6, max_iter=200)
    assert en.coupling.is_admissible()


def test_displacement_interpolation_examples():
    plan = wasserstein_exact(dirac([0.0]), dirac([2.0])).coupling
    mid = displacement_interpolation(plan, 0.5)
    np.testing.assert_allclose(mid.points, [[1.0]])
    with pytest.raises(TOutOfRangeError):
        displacement_interpolation(plan, 1.5)


def test_displacement_interpolation_endpoints(rng):
    mu, nu = random_measure(rng, 4, 2, False), random_measure(rng, 6, 2, False)
    plan = wasserstein_exact(mu, nu).coupling
    assert same_atoms(consolidate(displacement_interpolation(plan, 0.0)), mu, 1e-12)
    assert same_atoms(consolidate(displacement_interpolation(plan, 1.0)), nu, 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_displacement_interpolation_constant_speed(seed):
    rng = np.random.default_rng(400 + seed)
    mu, nu = random_measure(rng, 5, 2, False), random_measure(rng, 4, 2, False)
    plan = wasserstein_exact(mu, nu).coupling
    w01 = wasserstein_exact(mu, nu).distance
    ts = [0.0, 0.2, 0.5, 0.9, 1.0]
    ms = [displacement_interpolation(plan, t) for t in ts]
    for i in range(len(ts)):
        for j in range(i + 1, len(ts)):
            w = wasserstein_exact(ms[i], ms[j]).distance
            assert abs(w - (ts[j] - ts[i]) * w01) <= 1e-7 * w01


def test_coupling_json_roundtrip(rng):
    mu, nu = random_measure(rng, 3, 2, False), random_measure(rng, 4, 2, False)
    c = wasserstein_exact(mu, nu).coupling
    js = c.to_json()
    assert js["rows"] == 3 and js["cols"] == 4
    assert [e[:2] for e in js["entries"]] == sorted(e[:2] for e in js["entries"])
    back = Coupling.from_json(js, mu, nu)
    np.testing.assert_array_equal(back.dense(), c.dense())


def test_large_couplings_are_sparse(monkeypatch, rng):
    import shapespace.transport as T

    monkeypatch.setattr(T, "DENSE_LIMIT", 10)
    mu, nu = random_measure(rng, 4, 2), random_measure(rng, 4, 2)
    r = wasserstein_exact(mu, nu)
    assert r.coupling.is_sparse
    assert r.coupling.is_admissible()
    assert len(r.coupling.entries()) == 4

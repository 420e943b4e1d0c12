"""Optimal transport between discrete measures.

Three solvers share one result type:

* :func:`wasserstein_exact` -- transportation network simplex, or a linear
  assignment when both measures are uniform with equal cardinality;
* :func:`wasserstein_oracle` -- exhaustive search over permutations (m <= 8);
* :func:`wasserstein_entropic` -- log-domain Sinkhorn with epsilon annealing
  followed by a rounding step that makes the plan exactly admissible.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import (
    DimensionMismatchError,
    NonUniformWeightsError,
    NumericalUnderflowError,
    OracleTooLargeError,
    SolverFailureError,
    TOutOfRangeError,
)
from .measure import DiscreteMeasure

log = logging.getLogger(__name__)

DENSE_LIMIT = 4_000_000
MARGINAL_ATOL = 1e-9
ORACLE_MAX_ATOMS = 8
# weights that are all multiples of 1/L, L up to this size, are solved as L x L assignments
REPLICATION_LIMIT = 240


class Coupling:
    """Transport plan between ``source`` (m atoms) and ``target`` (k atoms).

    Stored as a dense array when ``m * k <= DENSE_LIMIT`` and as a scipy COO
    triplet list otherwise.
    """

    def __init__(self, weights, source: DiscreteMeasure, target: DiscreteMeasure):
        if sparse.issparse(weights):
            w = sparse.coo_array(weights)
        else:
            w = np.asarray(weights, dtype=float)
            if w.size > DENSE_LIMIT:
                w = sparse.coo_array(w)
        if w.shape != (source.m, target.m):
            raise DimensionMismatchError(
                f"coupling shape {w.shape} does not match ({source.m}, {target.m})"
            )
        self._w = w
        self.source = source
        self.target = target

    @property
    def shape(self) -> tuple[int, int]:
        return self._w.shape

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self._w)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self._w.toarray()
        return self._w

    def entries(self) -> list[tuple[int, int, float]]:
        """Nonzero entries ``(i, j, w)`` in row-major order."""
        if self.is_sparse:
            c = self._w.tocsr()
            c.sort_indices()
            c = c.tocoo()
            return [(int(i), int(j), float(v)) for i, j, v in zip(c.row, c.col, c.data) if v != 0]
        ii, jj = np.nonzero(self._w)
        return [(int(i), int(j), float(self._w[i, j])) for i, j in zip(ii, jj)]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self._w.sum(axis=1)).reshape(-1)

    def col_sums(self) -> np.ndarray:
        return np.asarray(self._w.sum(axis=0)).reshape(-1)

    def marginal_residual(self) -> float:
        """Largest absolute deviation from the prescribed marginals."""
        return float(
            max(
                np.abs(self.row_sums() - self.source.weights).max(),
                np.abs(self.col_sums() - self.target.weights).max(),
            )
        )

    def is_admissible(self, atol: float = MARGINAL_ATOL) -> bool:
        mn = self._w.data.min() if self.is_sparse and self._w.nnz else np.min(self.dense())
        return bool(mn >= 0 and self.marginal_residual() <= atol)

    def cost(self, p: float = 2.0) -> float:
        C = cost_matrix(self.source.points, self.target.points, p)
        if self.is_sparse:
            c = self._w
            return float(np.sum(c.data * C[c.row, c.col]))
        return float(np.sum(self._w * C))

    def to_json(self) -> dict:
        return {
            "rows": self.shape[0],
            "cols": self.shape[1],
            "entries": [[i, j, w] for i, j, w in self.entries()],
        }

    @classmethod
    def from_json(cls, data: dict, source: DiscreteMeasure, target: DiscreteMeasure) -> "Coupling":
        rows, cols = int(data["rows"]), int(data["cols"])
        ent = data["entries"]
        if ent:
            i, j, w = (np.asarray(c) for c in zip(*ent))
        else:
            i = j = np.zeros(0, dtype=int)
            w = np.zeros(0)
        m = sparse.coo_array((w.astype(float), (i.astype(int), j.astype(int))), shape=(rows, cols))
        if rows * cols <= DENSE_LIMIT:
            return cls(m.toarray(), source, target)
        return cls(m, source, target)


@dataclass(frozen=True)
class TransportResult:
    cost: float
    distance: float
    coupling: Coupling
    solver: str
    iterations: int
    p: float


def _check_dims(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if mu.n != nu.n:
        raise DimensionMismatchError(f"measures live in R^{mu.n} and R^{nu.n}")


def cost_matrix(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    """``|x_i - y_j|^p``; the squared case avoids the sqrt round trip."""
    if p == 2:
        return cdist(x, y, "sqeuclidean")
    D = cdist(x, y)
    return D if p == 1 else D**p


def _result(cost: float, coupling: Coupling, solver: str, iterations: int, p: float) -> TransportResult:
    cost = max(float(cost), 0.0)
    return TransportResult(cost, cost ** (1.0 / p), coupling, solver, iterations, p)


_DENOMINATORS = np.arange(1, REPLICATION_LIMIT + 1, dtype=float)


def _replication_counts(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Integer atom multiplicities when all weights are multiples of ``1/L``.

    Returns ``(counts_mu, counts_nu)`` for the smallest such ``L`` up to
    ``REPLICATION_LIMIT``, or None.  Uniform measures always qualify with
    ``L = lcm(m, k)`` when that is small enough; so do displacement
    interpolants between uniform measures.
    """
    w = np.concatenate([mu.weights, nu.weights])
    scaled = _DENOMINATORS[:, None] * w[None, :]
    ok = np.all(np.abs(scaled - np.rint(scaled)) <= 1e-11, axis=1)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return None
    counts = np.rint(scaled[hits[0]]).astype(int)
    cm, cn = counts[: mu.m], counts[mu.m :]
    if cm.sum() != cn.sum():
        return None
    return cm, cn


def _assignment_plan(C: np.ndarray, cm: np.ndarray, cn: np.ndarray) -> np.ndarray:
    """Optimal plan between weights ``cm / L`` and ``cn / L`` via an L x L assignment.

    Atom i is split into ``cm[i]`` unit copies and target j into ``cn[j]``.
    Every plan between these marginals is the block aggregate of a doubly
    stochastic L x L matrix, so an optimal permutation of the copies
    aggregates to an optimal plan.
    """
    L = int(cm.sum())
    ri = np.repeat(np.arange(C.shape[0]), cm)
    cj = np.repeat(np.arange(C.shape[1]), cn)
    rows, cols = linear_sum_assignment(C[np.ix_(ri, cj)])
    X = np.zeros_like(C)
    np.add.at(X, (ri[rows], cj[cols]), 1.0 / L)
    return X


# --------------------------------------------------------------------------
# network simplex for the transportation problem


def _northwest_corner(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m, k = len(a), len(b)
    X = np.zeros((m, k))
    basic = np.zeros((m, k), dtype=bool)
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    i = j = 0
    while True:
        x = min(ra[i], rb[j])
        X[i, j] = x
        basic[i, j] = True
        ra[i] -= x
        rb[j] -= x
        if i == m - 1 and j == k - 1:
            break
        if i == m - 1:
            j += 1
        elif j == k - 1 or ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    # absorb floating round-off of the marginals in the last cell
    X[m - 1, k - 1] += max(ra[m - 1], 0.0)
    return X, basic


def _potentials(C: np.ndarray, basic: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m, k = C.shape
    u = np.full(m, np.nan)
    v = np.full(k, np.nan)
    rows_of = [np.nonzero(basic[:, j])[0] for j in range(k)]
    cols_of = [np.nonzero(basic[i, :])[0] for i in range(m)]
    u[0] = 0.0
    queue = deque([("r", 0)])
    while queue:
        kind, idx = queue.popleft()
        if kind == "r":
            for j in cols_of[idx]:
                if np.isnan(v[j]):
                    v[j] = C[idx, j] - u[idx]
                    queue.append(("c", j))
        else:
            for i in rows_of[idx]:
                if np.isnan(u[i]):
                    u[i] = C[i, idx] - v[idx]
                    queue.append(("r", i))
    if np.isnan(u).any() or np.isnan(v).any():
        raise SolverFailureError("basis is not a spanning tree")
    return u, v


def _tree_path(basic: np.ndarray, row: int, col: int) -> list[tuple[int, int]]:
    """Edges (cells) on the tree path from row node ``row`` to column node ``col``."""
    m, k = basic.shape
    parent: dict[tuple[str, int], tuple[str, int] | None] = {("r", row): None}
    queue = deque([("r", row)])
    target = ("c", col)
    while queue:
        node = queue.popleft()
        if node == target:
            break
        kind, idx = node
        nbrs = (("c", j) for j in np.nonzero(basic[idx, :])[0]) if kind == "r" else (
            ("r", i) for i in np.nonzero(basic[:, idx])[0]
        )
        for nb in nbrs:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    if target not in parent:
        raise SolverFailureError("entering cell not connected to the basis tree")
    nodes = [target]
    while parent[nodes[-1]] is not None:
        nodes.append(parent[nodes[-1]])
    nodes.reverse()
    cells = []
    for a, b in zip(nodes[:-1], nodes[1:]):
        cells.append((a[1], b[1]) if a[0] == "r" else (b[1], a[1]))
    return cells


def transport_simplex(a, b, C, max_iter: int | None = None) -> tuple[np.ndarray, int]:
    """Solve ``min <C, X>`` over ``X >= 0`` with row sums ``a``, column sums ``b``.

    Primal network simplex on the bipartite transportation graph, started from
    the northwest-corner basis.  Entering cell: most negative reduced cost
    (first in row-major order); after a run of degenerate pivots the entering
    rule falls back to Bland's smallest-index rule to rule out cycling.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    m, k = C.shape
    X, basic = _northwest_corner(a, b)
    if m == 1 or k == 1:
        return X, 0
    if max_iter is None:
        max_iter = 50 * (m + k) * max(m, k) + 1000
    tol = 1e-13 * max(1.0, float(np.abs(C).max()))
    degenerate_run = 0
    for it in range(1, max_iter + 1):
        u, v = _potentials(C, basic)
        red = C - u[:, None] - v[None, :]
        red[basic] = 0.0
        if degenerate_run > m + k:
            cand = np.flatnonzero(red < -tol)
            if cand.size == 0:
                return X, it - 1
            flat = int(cand[0])
        else:
            flat = int(np.argmin(red))
            if red.flat[flat] >= -tol:
                return X, it - 1
        ie, je = divmod(flat, k)
        path = _tree_path(basic, ie, je)
        minus = path[0::2]
        plus = path[1::2]
        vals = np.array([X[c] for c in minus])
        theta = float(vals.min())
        leave = minus[int(np.argmin(vals))]
        for c in minus:
            X[c] -= theta
        for c in plus:
            X[c] += theta
        X[ie, je] += theta
        X[leave] = 0.0
        basic[leave] = False
        basic[ie, je] = True
        degenerate_run = degenerate_run + 1 if theta == 0.0 else 0
    raise SolverFailureError(f"network simplex did not converge in {max_iter} pivots")


# --------------------------------------------------------------------------
# public solvers


def wasserstein_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """Globally optimal plan of the discrete OT linear program."""
    _check_dims(mu, nu)
    if p < 1:
        raise ValueError("p must be >= 1")
    C = cost_matrix(mu.points, nu.points, p)
    counts = _replication_counts(mu, nu)
    if counts is not None:
        X = _assignment_plan(C, *counts)
        return _result(float(np.sum(X * C)), Coupling(X, mu, nu), "exact", 0, p)
    X, iters = transport_simplex(mu.weights, nu.weights, C)
    np.clip(X, 0.0, None, out=X)
    coupling = Coupling(X, mu, nu)
    if coupling.marginal_residual() > MARGINAL_ATOL:
        raise SolverFailureError(
            f"exact plan violates marginals by {coupling.marginal_residual():.3g}"
        )
    return _result(float(np.sum(X * C)), coupling, "exact", iters, p)


def wasserstein_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> float:
    return wasserstein_exact(mu, nu, p).distance


def wasserstein_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """Brute force over all m! matchings of two uniform m-atom measures."""
    _check_dims(mu, nu)
    if mu.m != nu.m or mu.m > ORACLE_MAX_ATOMS:
        raise OracleTooLargeError(
            f"oracle needs m == k <= {ORACLE_MAX_ATOMS}, got {mu.m} and {nu.m}"
        )
    if not (mu.is_uniform() and nu.is_uniform()):
        raise NonUniformWeightsError("oracle requires uniform weights")
    m = mu.m
    C = cost_matrix(mu.points, nu.points, p)
    perms = np.array(list(itertools.permutations(range(m))))
    totals = C[np.arange(m), perms].sum(axis=1)
    best = int(np.argmin(totals))
    X = np.zeros_like(C)
    X[np.arange(m), perms[best]] = 1.0 / m
    return _result(totals[best] / m, Coupling(X, mu, nu), "oracle", len(perms), p)


def round_to_marginals(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project a nonnegative matrix onto the transport polytope.

    Scale rows down to ``a``, then columns down to ``b``, and add the rank-one
    correction spreading the remaining deficit; the result has exactly the
    requested marginals (up to round-off) and stays nonnegative.
    """
    r = P.sum(axis=1)
    x = np.minimum(np.divide(a, r, out=np.ones_like(a), where=r > 0), 1.0)
    F = P * x[:, None]
    c = F.sum(axis=0)
    y = np.minimum(np.divide(b, c, out=np.ones_like(b), where=c > 0), 1.0)
    F = F * y[None, :]
    err_r = a - F.sum(axis=1)
    err_c = b - F.sum(axis=0)
    s = np.abs(err_r).sum()
    if s > 0:
        F = F + np.outer(err_r, err_c) / s
    return np.clip(F, 0.0, None)


def wasserstein_entropic(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: float = 2.0,
    epsilon: float = 1e-2,
    max_iter: int = 2000,
    marginal_tol: float = 1e-9,
) -> TransportResult:
    """Entropy-regularized OT; the reported cost is that of the rounded plan.

    ``epsilon`` is relative to nothing: it is in cost units.  Sinkhorn runs in
    the log domain, halving epsilon from ``max(C)`` down to the requested
    value with warm-started potentials; ``max_iter`` bounds the sweeps at the
    final epsilon.
    """
    _check_dims(mu, nu)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    C = cost_matrix(mu.points, nu.points, p)
    a, b = mu.weights, nu.weights
    with np.errstate(divide="ignore"):
        loga, logb = np.log(a), np.log(b)
    f = np.zeros(mu.m)
    g = np.zeros(nu.m)
    eps = max(epsilon, float(C.max()))
    total = 0
    while True:
        sweeps = max_iter if eps == epsilon else 50
        for _ in range(sweeps):
            total += 1
            f = eps * (loga - logsumexp((g[None, :] - C) / eps, axis=1))
            g = eps * (logb - logsumexp((f[:, None] - C) / eps, axis=0))
            if eps == epsilon:
                P = np.exp((f[:, None] + g[None, :] - C) / eps)
                res = np.abs(P.sum(axis=1) - a).sum() + np.abs(P.sum(axis=0) - b).sum()
                if res < marginal_tol:
                    break
        if not (np.all(np.isfinite(f[a > 0])) and np.all(np.isfinite(g[b > 0]))):
            raise NumericalUnderflowError(f"Sinkhorn potentials diverged at epsilon={eps:.3g}")
        if eps == epsilon:
            break
        eps = max(0.5 * eps, epsilon)
    P = np.exp((f[:, None] + g[None, :] - C) / epsilon)
    if not np.all(np.isfinite(P)) or P.sum() == 0:
        raise NumericalUnderflowError(f"entropic kernel underflowed at epsilon={epsilon:.3g}")
    X = round_to_marginals(P, a, b)
    return _result(float(np.sum(X * C)), Coupling(X, mu, nu), "entropic", total, p)


def displacement_interpolation(coupling: Coupling, t: float) -> DiscreteMeasure:
    """``((1-t) pi_1 + t pi_2)_# gamma``: one atom per nonzero plan entry."""
    if not 0.0 <= t <= 1.0:
        raise TOutOfRangeError(f"t={t} outside [0, 1]")
    ent = coupling.entries()
    i = np.array([e[0] for e in ent], dtype=int)
    j = np.array([e[1] for e in ent], dtype=int)
    w = np.array([e[2] for e in ent])
    pts = (1.0 - t) * coupling.source.points[i] + t * coupling.target.points[j]
    return DiscreteMeasure(pts, w)

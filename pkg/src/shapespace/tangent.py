"""Tangent vectors at discrete measures and the orbit directions to mod out.

For a finitely supported ``mu`` every L^2(mu) field is a tangent vector, so
the projection onto the Wasserstein tangent space is the identity and the
orbit subspace ``U_mu`` is simply the span of the fundamental fields
evaluated at the atoms.  Rows of the evaluation matrix are scaled by
``sqrt(w_k)`` so that plain Euclidean linear algebra on it is L^2(mu)
geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadStepError, DimensionMismatchError, MeasureMismatchError
from .isometry import (
    IsoAlgebraElement,
    Isometry,
    flow_pushforward,
    from_coefficients,
    fundamental_field,
    iso_dimension,
    killing_basis,
)
from .measure import DiscreteMeasure, TestFunction


@dataclass(frozen=True, eq=False)
class DiscreteVectorField:
    """One vector per atom of ``measure``."""

    vectors: np.ndarray
    measure: DiscreteMeasure

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.shape != self.measure.points.shape:
            raise DimensionMismatchError(
                f"field shape {v.shape} does not match measure {self.measure.points.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def of(cls, X: IsoAlgebraElement, mu: DiscreteMeasure) -> "DiscreteVectorField":
        """Fundamental field of ``X`` restricted to the atoms of ``mu``."""
        return cls(fundamental_field(X, mu.points), mu)

    @classmethod
    def zeros(cls, mu: DiscreteMeasure) -> "DiscreteVectorField":
        return cls(np.zeros_like(mu.points), mu)

    def norm(self) -> float:
        return float(np.sqrt(max(l2_inner(self, self), 0.0)))

    def __add__(self, other: "DiscreteVectorField") -> "DiscreteVectorField":
        _same(self, other)
        return DiscreteVectorField(self.vectors + other.vectors, self.measure)

    def __sub__(self, other: "DiscreteVectorField") -> "DiscreteVectorField":
        _same(self, other)
        return DiscreteVectorField(self.vectors - other.vectors, self.measure)

    def __mul__(self, c: float) -> "DiscreteVectorField":
        return DiscreteVectorField(c * self.vectors, self.measure)

    __rmul__ = __mul__


def _same(u: DiscreteVectorField, v: DiscreteVectorField) -> None:
    if u.measure is not v.measure:
        raise MeasureMismatchError("vector fields are attached to different measures")


def l2_inner(u: DiscreteVectorField, v: DiscreteVectorField) -> float:
    """``sum_k w_k <u_k, v_k>``."""
    _same(u, v)
    return float(u.measure.weights @ np.einsum("ij,ij->i", u.vectors, v.vectors))


def evaluation_matrix(mu: DiscreteMeasure, scaled: bool = True) -> np.ndarray:
    """(m n) x n(n+1)/2 matrix of basis fundamental fields stacked atom by atom."""
    cols = [fundamental_field(X, mu.points).reshape(-1) for X in killing_basis(mu.n)]
    E = np.column_stack(cols)
    if scaled:
        E = E * np.repeat(np.sqrt(mu.weights), mu.n)[:, None]
    return E


@dataclass(frozen=True, eq=False)
class OrbitSubspaceReport:
    measure: DiscreteMeasure
    evaluation_matrix: np.ndarray
    singular_values: np.ndarray
    rank: int
    shape_tangent_dim: int
    kernel_basis: list[IsoAlgebraElement]
    left_vectors: np.ndarray  # orthonormal basis of the column space (scaled coordinates)
    rank_rel_tol: float

    @property
    def tangent_dim(self) -> int:
        """``dim T_mu W = m n`` for discrete ``mu``."""
        return self.measure.m * self.measure.n

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel_basis)

    def to_json(self) -> dict:
        return {
            "m": self.measure.m,
            "n": self.measure.n,
            "tangent_dim": self.tangent_dim,
            "iso_dim": iso_dimension(self.measure.n),
            "rank": self.rank,
            "shape_tangent_dim": self.shape_tangent_dim,
            "kernel_dim": self.kernel_dim,
            "singular_values": self.singular_values.tolist(),
            "kernel_basis": [X.to_json() for X in self.kernel_basis],
            "rank_rel_tol": self.rank_rel_tol,
        }


def orbit_subspace(mu: DiscreteMeasure, rank_rel_tol: float = 1e-8) -> OrbitSubspaceReport:
    """Rank, kernel and complement dimension of the fundamental-field span at ``mu``."""
    E = evaluation_matrix(mu)
    U, s, Vt = np.linalg.svd(E, full_matrices=True)
    smax = float(s[0]) if s.size else 0.0
    rank = 0 if smax == 0.0 else int(np.sum(s > rank_rel_tol * smax))
    kernel = [from_coefficients(Vt[i], mu.n) for i in range(rank, Vt.shape[0])]
    return OrbitSubspaceReport(
        mu, E, s, rank, mu.m * mu.n - rank, kernel, U[:, :rank], rank_rel_tol
    )


def project_onto_orbit(
    v: DiscreteVectorField, report: OrbitSubspaceReport
) -> tuple[DiscreteVectorField, DiscreteVectorField]:
    """Orthogonal (in L^2(mu)) split ``v = v_orbit + v_shape`` with ``v_orbit in U_mu``.

    ``v_orbit`` is rebuilt from least-squares algebra coefficients, so atoms
    of zero weight receive the same fundamental field as their neighbours.
    """
    mu = report.measure
    if v.measure is not mu:
        raise MeasureMismatchError("vector field is not attached to the report's measure")
    if report.rank == 0:
        return DiscreteVectorField.zeros(mu), v
    sw = np.repeat(np.sqrt(mu.weights), mu.n)
    coeffs, *_ = np.linalg.lstsq(
        report.evaluation_matrix, sw * v.vectors.reshape(-1), rcond=report.rank_rel_tol
    )
    raw = evaluation_matrix(mu, scaled=False) @ coeffs
    orbit = DiscreteVectorField(raw.reshape(mu.m, mu.n), mu)
    return orbit, v - orbit


def shape_norm(v: DiscreteVectorField, report: OrbitSubspaceReport) -> float:
    """L^2(mu) norm of the component of ``v`` orthogonal to the orbit directions.

    The quotient ``T_mu W / U_mu`` carries no canonical metric; this norm of
    the orthogonal-complement representative is a convenient stand-in.
    """
    return project_onto_orbit(v, report)[1].norm()


def continuity_residual(
    mu: DiscreteMeasure,
    X: IsoAlgebraElement,
    phi: TestFunction,
    t_grid=(0.25, 0.5, 0.75),
    fd_step: float = 1e-3,
) -> float:
    """``max_t |d/dt int phi d mu_t - int <grad phi, X~> d mu_t|`` along ``mu_t = exp(-tX)_# mu``.

    The time derivative is a central difference; the flux term is exact.
    """
    if not fd_step > 0:
        raise BadStepError("fd_step must be positive")
    worst = 0.0
    for t in t_grid:
        plus = phi.integrate(flow_pushforward(mu, X, t + fd_step))
        minus = phi.integrate(flow_pushforward(mu, X, t - fd_step))
        mt = flow_pushforward(mu, X, t)
        flux = float(mt.weights @ np.einsum("ij,ij->i", phi.gradient(mt.points), fundamental_field(X, mt.points)))
        worst = max(worst, abs((plus - minus) / (2 * fd_step) - flux))
    return worst


def _field_norm(X: IsoAlgebraElement, mu: DiscreteMeasure) -> float:
    return DiscreteVectorField.of(X, mu).norm()


def flow_norm_invariance(mu: DiscreteMeasure, X: IsoAlgebraElement, t_grid=None) -> float:
    """``max_t | |X~|_{L2(mu_t)} - |X~|_{L2(mu)} |``."""
    if t_grid is None:
        t_grid = np.linspace(0.1, 0.9, 9)
    base = _field_norm(X, mu)
    return max(abs(_field_norm(X, flow_pushforward(mu, X, t)) - base) for t in t_grid)


def l1_in_time_norm(mu: DiscreteMeasure, X: IsoAlgebraElement, quadrature_steps: int = 16) -> float:
    """Trapezoidal ``int_0^1 |X~|_{L2(mu_t)} dt``."""
    if quadrature_steps < 1:
        raise ValueError("quadrature_steps must be >= 1")
    ts = np.linspace(0.0, 1.0, quadrature_steps + 1)
    vals = np.array([_field_norm(X, flow_pushforward(mu, X, t)) for t in ts])
    h = 1.0 / quadrature_steps
    return float(h * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


def push_field(v: DiscreteVectorField, g: Isometry, pushed: DiscreteMeasure | None = None) -> DiscreteVectorField:
    """Differential of ``g``: ``v_k -> R v_k`` at the transported atoms."""
    target = g.push(v.measure) if pushed is None else pushed
    return DiscreteVectorField(v.vectors @ g.rotation.T, target)


def representative_independence_check(
    mu: DiscreteMeasure,
    g: Isometry,
    seed: int = 0,
    trials: int = 4,
    rank_rel_tol: float = 1e-8,
) -> float:
    """Max relative discrepancy between ``dg`` applied after and before the
    shape-complement projection; ``inf`` if the orbit ranks differ."""
    gmu = g.push(mu)
    rep = orbit_subspace(mu, rank_rel_tol)
    grep = orbit_subspace(gmu, rank_rel_tol)
    if rep.rank != grep.rank or rep.shape_tangent_dim != grep.shape_tangent_dim:
        return float("inf")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = DiscreteVectorField(rng.standard_normal(mu.points.shape), mu)
        _, shape_part = project_onto_orbit(v, rep)
        lhs = push_field(shape_part, g, gmu)
        _, rhs = project_onto_orbit(push_field(v, g, gmu), grep)
        nv = v.norm()
        if nv > 0:
            worst = max(worst, (lhs - rhs).norm() / nv)
    return worst

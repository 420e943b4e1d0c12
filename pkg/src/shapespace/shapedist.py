"""Shape distance ``D_p(mu, nu) = inf_{g in E(n)} W_p(g_# mu, nu)``.

The solver handles p = 2, where the translation separates:

    W_2^2(g mu, nu) = |R b_mu + t - b_nu|^2 + W_2^2(R mu_c, nu_c)

with ``b`` the barycenters and ``mu_c, nu_c`` the centered measures.  The
rotation part is minimized by block-coordinate descent, alternating an
exact OT solve for the plan with a weighted orthogonal Procrustes step for
``R``.  The problem is non-convex, so several starts are run; in the plane
:func:`shape_distance_oracle_2d` scans the whole of O(2) instead.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import (
    BudgetExceededError,
    ConfigInvalidError,
    DimensionMismatchError,
    DimensionNot2Error,
    UnsupportedPError,
)
from .isometry import Isometry, random_isometry, rotation_2d
from .measure import DiscreteMeasure, barycenter, centered, same_atoms
from .transport import (
    Coupling,
    TransportResult,
    wasserstein_distance,
    wasserstein_entropic,
    wasserstein_exact,
)

log = logging.getLogger(__name__)

INNER_SOLVERS = ("exact", "entropic-then-exact")
PCA_SIGN_CAP = 16
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ShapeSolverConfig:
    p: float = 2.0
    restarts: int = 16
    max_alternations: int = 200
    rel_tol: float = 1e-9
    inner_solver: str = "exact"
    entropic_epsilon: float = 1e-3
    seed: int = 0
    proper_only: bool = False

    def validate(self) -> "ShapeSolverConfig":
        if self.restarts < 1:
            raise ConfigInvalidError("restarts must be >= 1")
        if not self.rel_tol > 0:
            raise ConfigInvalidError("rel_tol must be positive")
        if self.max_alternations < 1:
            raise ConfigInvalidError("max_alternations must be >= 1")
        if self.inner_solver not in INNER_SOLVERS:
            raise ConfigInvalidError(f"inner_solver must be one of {INNER_SOLVERS}")
        if not self.p >= 1:
            raise ConfigInvalidError("p must be >= 1")
        if not self.entropic_epsilon > 0:
            raise ConfigInvalidError("entropic_epsilon must be positive")
        return self


@dataclass
class ShapeDistanceResult:
    distance: float
    minimizer: Isometry
    coupling: Coupling
    restarts_used: int
    inner_iterations: int
    converged: bool
    certificate: float | None = None
    certified: bool = False
    solver: str = "alternating"
    restart_values: list[float] = field(default_factory=list)


def _check(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if mu.n != nu.n:
        raise DimensionMismatchError(f"measures live in R^{mu.n} and R^{nu.n}")


def _rotate(mu: DiscreteMeasure, R: np.ndarray) -> DiscreteMeasure:
    return Isometry(R).push(mu)


def procrustes_rotation(
    x: np.ndarray, y: np.ndarray, plan: np.ndarray, proper_only: bool = False
) -> np.ndarray:
    """``argmin_{R in O(n)} sum_ij plan_ij |R x_i - y_j|^2``.

    ``R = U V^T`` from the SVD of the cross-correlation ``sum plan_ij y_j x_i^T``;
    no determinant correction unless ``proper_only``.
    """
    H = y.T @ plan.T @ x
    U, _, Vt = np.linalg.svd(H)
    R = U @ Vt
    if proper_only and np.linalg.det(R) < 0:
        U[:, -1] = -U[:, -1]
        R = U @ Vt
    return R


def _inner_ot(mu, nu, p, inner, eps) -> TransportResult:
    if inner == "exact":
        return wasserstein_exact(mu, nu, p)
    return wasserstein_entropic(mu, nu, p, epsilon=eps, max_iter=500, marginal_tol=1e-9)


def alternation_step(
    mu_aligned: DiscreteMeasure,
    nu: DiscreteMeasure,
    g: Isometry,
    p: float = 2.0,
    inner_solver: str = "exact",
    entropic_epsilon: float = 1e-3,
    proper_only: bool = False,
) -> tuple[Isometry, TransportResult]:
    """One OT solve at ``g`` followed by the Procrustes update of the rotation.

    Both measures are expected to be centered at the origin.  The returned
    transport result belongs to the *input* isometry; the returned isometry
    is linear (zero translation).
    """
    if p != 2:
        raise UnsupportedPError("alternation is only exact for p = 2")
    tr = _inner_ot(g.push(mu_aligned), nu, p, inner_solver, entropic_epsilon)
    R = procrustes_rotation(mu_aligned.points, nu.points, tr.coupling.dense(), proper_only)
    return Isometry(R), tr


def _alternate(mu_c, nu_c, R0, cfg: ShapeSolverConfig) -> tuple[np.ndarray, float, int, bool]:
    g = Isometry(R0)
    prev = math.inf
    converged = False
    its = 0
    for its in range(1, cfg.max_alternations + 1):
        g_new, tr = alternation_step(
            mu_c, nu_c, g, cfg.p, cfg.inner_solver, cfg.entropic_epsilon, cfg.proper_only
        )
        obj = tr.cost
        g = g_new
        if obj <= 0.0 or (prev - obj) <= cfg.rel_tol * prev:
            converged = True
            break
        prev = obj
    final = wasserstein_exact(g.push(mu_c), nu_c, cfg.p).cost
    return g.rotation, final, its, converged


def _principal_axes(mu_c: DiscreteMeasure) -> np.ndarray:
    S = (mu_c.points * mu_c.weights[:, None]).T @ mu_c.points
    vals, vecs = np.linalg.eigh(S)
    return vecs[:, np.argsort(vals)[::-1]]


def _pca_starts(mu_c: DiscreteMeasure, nu_c: DiscreteMeasure) -> list[np.ndarray]:
    Em, En = _principal_axes(mu_c), _principal_axes(nu_c)
    n = mu_c.n
    starts = []
    for signs in itertools.islice(itertools.product((1.0, -1.0), repeat=n), PCA_SIGN_CAP):
        starts.append(En @ np.diag(signs) @ Em.T)
    return starts


def _matching_start(mu_c, nu_c, rng, proper_only: bool) -> np.ndarray:
    """Procrustes rotation for a random partial matching of the atoms."""
    k = min(mu_c.m, nu_c.m)
    plan = np.zeros((mu_c.m, nu_c.m))
    plan[rng.permutation(mu_c.m)[:k], rng.permutation(nu_c.m)[:k]] = 1.0
    return procrustes_rotation(mu_c.points, nu_c.points, plan, proper_only)


def _finish(mu, nu, R, p, **kw) -> ShapeDistanceResult:
    t = barycenter(nu) - R @ barycenter(mu)
    g = Isometry(R, t)
    tr = wasserstein_exact(g.push(mu), nu, p)
    return ShapeDistanceResult(tr.distance, g, tr.coupling, **kw)


def shape_distance(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    config: ShapeSolverConfig | None = None,
    certify: bool = False,
    oracle_grid: int = 720,
) -> ShapeDistanceResult:
    """Best local minimum of ``g -> W_2(g_# mu, nu)`` over all restarts.

    Restart 0 starts at the identity, restart 1 at the principal-axes
    alignments (all sign patterns, up to 16).  Odd restarts after that start
    from the Procrustes fit of a random matching of the atoms; even ones from
    Haar-random rotations, alternating between the two components of O(n).  The minimizer
    is not canonical when the measures have symmetries; the first best one in
    restart order is returned.  With ``certify=True`` (n = 2 only) the grid
    oracle is run too and the gap is stored in ``certificate``.
    """
    cfg = (config or ShapeSolverConfig()).validate()
    _check(mu, nu)
    if cfg.p != 2:
        raise UnsupportedPError("the alternating solver supports p = 2 only; use the 2-D oracle")
    mu_c, nu_c = centered(mu), centered(nu)
    n = mu.n

    best_R, best_val, best_idx, best_conv = np.eye(n), math.inf, -1, False
    total_its = 0
    values = []
    for r in range(cfg.restarts):
        if r == 0:
            starts = [np.eye(n)]
        elif r == 1:
            starts = _pca_starts(mu_c, nu_c)
        else:
            rng = np.random.default_rng([cfg.seed, r])
            if r % 2 == 1:
                starts = [_matching_start(mu_c, nu_c, rng, cfg.proper_only)]
            else:
                comp = "proper" if (r % 4 == 2 or cfg.proper_only) else "improper"
                starts = [random_isometry(n, rng, comp).rotation]
        r_best = math.inf
        for R0 in starts:
            R, val, its, conv = _alternate(mu_c, nu_c, R0, cfg)
            total_its += its
            r_best = min(r_best, val)
            if val < best_val:
                best_R, best_val, best_idx, best_conv = R, val, r, conv
        values.append(r_best)
    log.debug("shape_distance: best restart %d of %d, W2^2=%.3g", best_idx, cfg.restarts, best_val)

    res = _finish(
        mu,
        nu,
        best_R,
        cfg.p,
        restarts_used=cfg.restarts,
        inner_iterations=total_its,
        converged=best_conv,
        restart_values=values,
    )
    # the plain identity is always admissible
    ident = wasserstein_exact(mu, nu, cfg.p)
    if ident.distance < res.distance:
        res = replace(
            res, distance=ident.distance, minimizer=Isometry.identity(n), coupling=ident.coupling
        )
    if certify:
        orc = shape_distance_oracle_2d(mu, nu, oracle_grid, cfg.p)
        res.certificate = res.distance - orc.distance
    return res


# --------------------------------------------------------------------------
# planar oracle


def _golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def shape_distance_oracle_2d(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    grid_steps: int = 720,
    p: float = 2.0,
    refine: int = 8,
    angle_tol: float = 1e-10,
    budget: float = 5e8,
) -> ShapeDistanceResult:
    """Exhaustive angle scan over both components of O(2).

    Each grid angle gets an exact OT solve between the barycenter-centered
    measures; the ``refine`` lowest grid local minima are polished by golden
    section to ``angle_tol``.  For p = 2 this is the global minimum up to the
    grid resolution (``certified=True``).  For other p the barycenter
    alignment is no longer optimal, so the translation of the best angles is
    polished numerically and the result is not marked certified.
    """
    _check(mu, nu)
    if mu.n != 2:
        raise DimensionNot2Error(f"planar oracle needs n = 2, got {mu.n}")
    if grid_steps < 1:
        raise ConfigInvalidError("grid_steps must be >= 1")
    if 2.0 * grid_steps * mu.m * nu.m > budget:
        raise BudgetExceededError(
            f"{2 * grid_steps} solves on {mu.m}x{nu.m} plans exceed budget {budget:.3g}"
        )
    bm, bn = barycenter(mu), barycenter(nu)
    mu_c, nu_c = centered(mu), centered(nu)
    evals = 0

    def value(theta: float, improper: bool) -> float:
        nonlocal evals
        evals += 1
        R = rotation_2d(theta, improper)
        return wasserstein_exact(_rotate(mu_c, R), nu_c, p).cost

    h = 2.0 * math.pi / grid_steps
    thetas = h * np.arange(grid_steps)
    cands = []
    for improper in (False, True):
        vals = np.array([value(th, improper) for th in thetas])
        for k in range(grid_steps):
            if grid_steps < 3 or (vals[k] <= vals[k - 1] and vals[k] <= vals[(k + 1) % grid_steps]):
                cands.append((vals[k], k, improper))
    cands.sort(key=lambda c: (c[0], c[2], c[1]))
    best = (cands[0][0], float(thetas[cands[0][1]]), cands[0][2])
    for val, k, improper in cands[:refine]:
        th, fv = _golden_min(lambda a: value(a, improper), thetas[k] - h, thetas[k] + h, angle_tol)
        if fv < best[0]:
            best = (fv, th, improper)
    _, theta, improper = best
    R = rotation_2d(theta, improper)

    if p == 2:
        res = _finish(
            mu, nu, R, p, restarts_used=1, inner_iterations=evals, converged=True,
        )
        res.certified = True
        res.solver = "oracle-2d"
        return res

    # p != 2: polish the translation around the barycenter alignment
    bound = translation_search_bound(mu, nu, p)
    mu_r = _rotate(mu, R)
    t0 = bn - R @ bm

    def wt(t):
        if np.linalg.norm(t) > 2 * bound:
            return math.inf
        return wasserstein_distance(Isometry(np.eye(2), t).push(mu_r), nu, p)

    opt = minimize(wt, t0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    t = opt.x if opt.fun < wt(t0) else t0
    g = Isometry(R, t)
    tr = wasserstein_exact(g.push(mu), nu, p)
    return ShapeDistanceResult(
        tr.distance, g, tr.coupling, 1, evals + opt.nfev, bool(opt.success),
        certified=False, solver="oracle-2d",
    )


# --------------------------------------------------------------------------
# search region


def _mass_radius(mu: DiscreteMeasure, center: np.ndarray, level: float) -> float:
    """Smallest r with ``mu(closed ball(center, r)) >= level``."""
    d = np.linalg.norm(mu.points - center, axis=1)
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(mu.weights[order])
    k = int(np.searchsorted(cum, level - 1e-15))
    return float(d[order[min(k, len(d) - 1)]])


def translation_search_bound(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0, eps: float = 0.25
) -> float:
    """Radius ``B`` such that any isometry with ``|t| > 2 B`` is worse than the identity.

    Around the common barycenter ``x`` (midpoint of both barycenters) take
    ``R`` holding at least ``1 - eps`` of each mass and ``C = W_p(mu, nu)^p``.
    Once ``|g(x) - x| > 2 R'`` with ``R' = R + (C / (1 - 2 eps))^{1/p} / 2``,
    the balls ``g B_R(x)`` and ``B_R(x)`` are more than ``(C/(1-2eps))^{1/p}``
    apart and carry mass ``>= 1 - 2 eps`` of any plan, so ``W_p^p > C``.
    Since ``|g(x) - x| >= |t| - 2|x|`` the returned bound is ``R' + |x|``.
    """
    _check(mu, nu)
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    x = 0.5 * (barycenter(mu) + barycenter(nu))
    R = max(_mass_radius(mu, x, 1 - eps), _mass_radius(nu, x, 1 - eps))
    C = wasserstein_exact(mu, nu, p).cost
    r_prime = R + 0.5 * (C / (1 - 2 * eps)) ** (1.0 / p)
    return float(r_prime + np.linalg.norm(x))


def recover_orbit_map(mu, nu, result: ShapeDistanceResult, atol: float = 1e-7) -> Isometry | None:
    """Return the minimizer if it maps ``mu`` onto ``nu`` atomwise, else None."""
    g = result.minimizer
    return g if same_atoms(g.push(mu), nu, atol) else None


def wasserstein_cost_at(mu_c, nu_c, R, p=2.0) -> float:
    """``W_p^p(R mu_c, nu_c)``, exposed for audits of the Procrustes step."""
    return float(wasserstein_exact(_rotate(mu_c, R), nu_c, p).cost)


__all__ = [
    "ShapeSolverConfig",
    "ShapeDistanceResult",
    "shape_distance",
    "alternation_step",
    "procrustes_rotation",
    "shape_distance_oracle_2d",
    "translation_search_bound",
    "recover_orbit_map",
]

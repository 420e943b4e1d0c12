"""The Euclidean group E(n) = O(n) x| R^n and its Lie algebra iso(n).

Conventions used throughout the package:

* an :class:`Isometry` acts by ``x -> R x + t``;
* ``exp(tX) . x = e^{tA} x + V(t) a`` with ``V(t) = int_0^t e^{sA} ds``;
* the fundamental field of ``X = (A, a)`` is the velocity of
  ``exp(-tX) . x`` at ``t = 0``, i.e. ``X~(x) = -(A x + a)``, and measures
  flow along ``mu_t = exp(-tX)_# mu``.  With this sign ``(mu_t, X~)`` solves
  the continuity equation as is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, polar

from .errors import DimensionMismatchError, OrthogonalityError, SkewnessViolationError
from .measure import DiscreteMeasure, pushforward

ORTHO_REPAIR_TOL = 1e-12
ORTHO_REJECT_TOL = 1e-6
SKEW_TOL = 1e-12


def _ortho_defect(R: np.ndarray) -> float:
    return float(np.linalg.norm(R.T @ R - np.eye(R.shape[0])))


@dataclass(frozen=True, eq=False)
class Isometry:
    """``x -> rotation @ x + translation`` with ``rotation`` in O(n)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __init__(self, rotation, translation=None):
        R = np.array(rotation, dtype=float, copy=True)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise DimensionMismatchError(f"rotation must be square, got {R.shape}")
        n = R.shape[0]
        t = np.zeros(n) if translation is None else np.array(translation, dtype=float).reshape(-1)
        if t.shape[0] != n:
            raise DimensionMismatchError(f"translation has length {t.shape[0]}, rotation is {n}x{n}")
        defect = _ortho_defect(R)
        if defect > ORTHO_REJECT_TOL:
            raise OrthogonalityError(f"|R^T R - I|_F = {defect:.3g} exceeds {ORTHO_REJECT_TOL}")
        if defect > ORTHO_REPAIR_TOL:
            R, _ = polar(R)
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @property
    def n(self) -> int:
        return self.rotation.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.rotation))

    @property
    def is_proper(self) -> bool:
        return self.det > 0

    @classmethod
    def identity(cls, n: int) -> "Isometry":
        return cls(np.eye(n), np.zeros(n))

    @classmethod
    def translation_by(cls, v) -> "Isometry":
        v = np.asarray(v, dtype=float).reshape(-1)
        return cls(np.eye(v.shape[0]), v)

    def apply(self, x) -> np.ndarray:
        """Act on a point (shape (n,)) or a stack of points (shape (m, n))."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionMismatchError(f"point dimension {x.shape[-1]} vs isometry {self.n}")
        return x @ self.rotation.T + self.translation

    __call__ = apply

    def push(self, mu: DiscreteMeasure) -> DiscreteMeasure:
        """``g_# mu``."""
        if mu.n != self.n:
            raise DimensionMismatchError(f"measure in R^{mu.n}, isometry on R^{self.n}")
        return pushforward(mu, self.apply)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return compose(self, other)

    def to_json(self) -> dict:
        return {"R": self.rotation.tolist(), "t": self.translation.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Isometry":
        return cls(data["R"], data["t"])

    def __repr__(self) -> str:
        return f"Isometry(n={self.n}, det={self.det:+.0f}, t={np.round(self.translation, 6).tolist()})"


def compose(g: Isometry, h: Isometry) -> Isometry:
    """``g o h``: first ``h`` then ``g``."""
    if g.n != h.n:
        raise DimensionMismatchError(f"cannot compose isometries of R^{g.n} and R^{h.n}")
    return Isometry(g.rotation @ h.rotation, g.rotation @ h.translation + g.translation)


def inverse(g: Isometry) -> Isometry:
    Rt = g.rotation.T
    return Isometry(Rt, -Rt @ g.translation)


def reflection(normal, offset: float = 0.0) -> Isometry:
    """Reflection across the hyperplane ``{x : <normal, x> = offset}``."""
    u = np.asarray(normal, dtype=float).reshape(-1)
    u = u / np.linalg.norm(u)
    H = np.eye(u.shape[0]) - 2.0 * np.outer(u, u)
    return Isometry(H, 2.0 * offset * u)


def rotation_2d(theta: float, improper: bool = False) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    if improper:
        R = R @ np.diag([1.0, -1.0])
    return R


# --------------------------------------------------------------------------
# Lie algebra


@dataclass(frozen=True, eq=False)
class IsoAlgebraElement:
    """``X = (A, a)`` in so(n) x| R^n."""

    skew: np.ndarray
    drift: np.ndarray

    def __init__(self, skew, drift=None):
        A = np.array(skew, dtype=float, copy=True)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"skew part must be square, got {A.shape}")
        n = A.shape[0]
        a = np.zeros(n) if drift is None else np.array(drift, dtype=float).reshape(-1)
        if a.shape[0] != n:
            raise DimensionMismatchError(f"drift has length {a.shape[0]}, skew part is {n}x{n}")
        asym = float(np.abs(A + A.T).max()) if n else 0.0
        if asym > SKEW_TOL * max(1.0, float(np.abs(A).max())):
            raise SkewnessViolationError(f"A + A^T has entry {asym:.3g}")
        A.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "skew", A)
        object.__setattr__(self, "drift", a)

    @property
    def n(self) -> int:
        return self.skew.shape[0]

    @classmethod
    def zero(cls, n: int) -> "IsoAlgebraElement":
        return cls(np.zeros((n, n)), np.zeros(n))

    def __add__(self, other: "IsoAlgebraElement") -> "IsoAlgebraElement":
        return IsoAlgebraElement(self.skew + other.skew, self.drift + other.drift)

    def __mul__(self, c: float) -> "IsoAlgebraElement":
        return IsoAlgebraElement(c * self.skew, c * self.drift)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {"A": self.skew.tolist(), "a": self.drift.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "IsoAlgebraElement":
        return cls(data["A"], data["a"])


def bracket(X: IsoAlgebraElement, Y: IsoAlgebraElement) -> IsoAlgebraElement:
    """Commutator in iso(n), from the affine matrices [[A, a], [0, 0]]."""
    A, a, B, b = X.skew, X.drift, Y.skew, Y.drift
    return IsoAlgebraElement(A @ B - B @ A, A @ b - B @ a)


def translation_generator(n: int, i: int) -> IsoAlgebraElement:
    """``P_i``: pure drift along ``e_i``."""
    a = np.zeros(n)
    a[i] = 1.0
    return IsoAlgebraElement(np.zeros((n, n)), a)


def rotation_generator(n: int, i: int, j: int) -> IsoAlgebraElement:
    """``M_ij = x_i d_j - x_j d_i``: ``A`` sends ``e_i -> e_j`` and ``e_j -> -e_i``."""
    A = np.zeros((n, n))
    A[i, j] = -1.0
    A[j, i] = 1.0
    return IsoAlgebraElement(A, np.zeros(n))


def killing_basis(n: int) -> list[IsoAlgebraElement]:
    """``P_1..P_n`` followed by ``M_ij`` for ``i < j`` in lexicographic order."""
    basis = [translation_generator(n, i) for i in range(n)]
    basis += [rotation_generator(n, i, j) for i in range(n) for j in range(i + 1, n)]
    return basis


def iso_dimension(n: int) -> int:
    return n * (n + 1) // 2


def from_coefficients(coeffs, n: int) -> IsoAlgebraElement:
    """Linear combination of :func:`killing_basis` elements."""
    coeffs = np.asarray(coeffs, dtype=float)
    A = np.zeros((n, n))
    a = coeffs[:n].copy()
    idx = n
    for i in range(n):
        for j in range(i + 1, n):
            A[i, j] -= coeffs[idx]
            A[j, i] += coeffs[idx]
            idx += 1
    return IsoAlgebraElement(A, a)


def to_coefficients(X: IsoAlgebraElement) -> np.ndarray:
    n = X.n
    rot = [X.skew[j, i] for i in range(n) for j in range(i + 1, n)]
    return np.concatenate([X.drift, rot])


def fundamental_field(X: IsoAlgebraElement, x) -> np.ndarray:
    """``X~(x) = -(A x + a)``; ``x`` may be one point or an (m, n) stack."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != X.n:
        raise DimensionMismatchError(f"point dimension {x.shape[-1]} vs algebra element {X.n}")
    return -(x @ X.skew.T + X.drift)


def _exp_and_v(A: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """``(e^{tA}, V(t))`` with closed forms for n <= 3."""
    n = A.shape[0]
    if n == 1:
        return np.eye(1), np.array([[t]])
    if n == 2:
        w = A[1, 0]
        phi = w * t
        c, s = math.cos(phi), math.sin(phi)
        E = np.array([[c, -s], [s, c]])
        if abs(phi) < 1e-4:
            # series of sin(phi)/w and (1-cos(phi))/w
            sv = t * (1 - phi**2 / 6 + phi**4 / 120 - phi**6 / 5040)
            cv = t * (phi / 2 - phi**3 / 24 + phi**5 / 720)
        else:
            sv, cv = s / w, (1 - c) / w
        return E, np.array([[sv, -cv], [cv, sv]])
    if n == 3:
        omega = np.array([A[2, 1], A[0, 2], A[1, 0]])
        w = float(np.linalg.norm(omega))
        phi = w * t
        if abs(phi) >= 1e-4:
            K = A / w
            K2 = K @ K
            E = np.eye(3) + math.sin(phi) * K + (1 - math.cos(phi)) * K2
            V = t * np.eye(3) + (1 - math.cos(phi)) / w * K + (t - math.sin(phi) / w) * K2
            return E, V
    # general / near-identity path: exponential of the augmented generator
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = t * A
    aug[:n, n:] = t * np.eye(n)
    big = expm(aug)
    return big[:n, :n], big[:n, n:]


def group_exponential(X: IsoAlgebraElement, t: float = 1.0) -> Isometry:
    """``exp(tX)``: rotation ``e^{tA}``, translation ``V(t) a``."""
    E, V = _exp_and_v(X.skew, float(t))
    return Isometry(E, V @ X.drift)


def flow_pushforward(mu: DiscreteMeasure, X: IsoAlgebraElement, t: float) -> DiscreteMeasure:
    """``exp(-tX)_# mu``, the measure transported along the fundamental field."""
    if mu.n != X.n:
        raise DimensionMismatchError(f"measure in R^{mu.n}, algebra element on R^{X.n}")
    return group_exponential(X, -t).push(mu)


def random_isometry(
    n: int,
    seed: int | np.random.Generator | None = None,
    component: str = "either",
    radius: float = 0.0,
) -> Isometry:
    """Haar-distributed orthogonal part on the requested component of O(n).

    Translation is uniform in the ball of the given ``radius``.
    """
    if component not in ("proper", "improper", "either"):
        raise ValueError(f"unknown component {component!r}")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, n))
    Q, Rr = np.linalg.qr(Z)
    Q = Q * np.sign(np.diag(Rr))
    d = np.linalg.det(Q)
    if (component == "proper" and d < 0) or (component == "improper" and d > 0):
        Q[:, 0] = -Q[:, 0]
    t = np.zeros(n)
    if radius > 0:
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        t = radius * rng.random() ** (1.0 / n) * v
    return Isometry(Q, t)

"""Finitely supported probability measures on R^n.

A :class:`DiscreteMeasure` is an immutable weighted point cloud.  Atoms are a
multiset: duplicates are kept until :func:`consolidate` is called explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatchError,
    NegativeWeightError,
    ZeroTotalMassError,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted atoms ``points[k]`` with mass ``weights[k]``; weights sum to 1.

    Construct with :func:`make_measure`; the constructor normalizes too, but
    skips normalization when ``_normalize=False`` (used internally so that
    weight-preserving operations stay bit-identical).
    """

    points: np.ndarray
    weights: np.ndarray

    def __init__(self, points, weights, _normalize: bool = True):
        pts = np.array(points, dtype=float, copy=True)
        if pts.ndim == 1:
            # a bare list of scalars is a 1-D cloud
            pts = pts[:, None]
        w = np.array(weights, dtype=float, copy=True).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DimensionMismatchError(
                f"points must be an (m, n) array with m, n >= 1, got shape {pts.shape}"
            )
        if w.shape[0] != pts.shape[0]:
            raise DimensionMismatchError(
                f"{pts.shape[0]} atoms but {w.shape[0]} weights"
            )
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("points and weights must be finite")
        if np.any(w < 0):
            raise NegativeWeightError(f"negative weight {w.min()!r}")
        if _normalize:
            total = w.sum()
            if total <= 0:
                raise ZeroTotalMassError("total mass must be positive")
            # already-normalized input (e.g. read back from a file) is kept
            # bit for bit so that write -> read -> write is stable
            if abs(total - 1.0) > 8 * np.finfo(float).eps * len(w):
                w = w / total
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.m

    def __repr__(self) -> str:
        return f"DiscreteMeasure(m={self.m}, n={self.n})"

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        return bool(np.allclose(self.weights, 1.0 / self.m, rtol=rtol, atol=0.0))

    def diameter(self) -> float:
        """Largest inter-atom distance (0 for a single atom)."""
        d = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt((d * d).sum(-1)).max())


def make_measure(points, weights=None) -> DiscreteMeasure:
    """Build a measure, rescaling ``weights`` to unit mass (uniform if omitted)."""
    pts = np.asarray(points, dtype=float)
    if weights is None:
        m = pts.shape[0] if pts.ndim >= 1 else 1
        weights = np.ones(m)
    return DiscreteMeasure(pts, weights)


def dirac(x) -> DiscreteMeasure:
    return DiscreteMeasure(np.atleast_1d(np.asarray(x, dtype=float))[None, :], [1.0])


def pushforward(mu: DiscreteMeasure, transform: Callable[[np.ndarray], np.ndarray]) -> DiscreteMeasure:
    """Image measure ``transform_# mu``.

    ``transform`` receives the whole (m, n) point array and must return an
    (m, n') array; weights are carried over unchanged.
    """
    img = np.asarray(transform(np.array(mu.points)), dtype=float)
    if img.ndim == 1:
        img = img[:, None]
    if img.shape[0] != mu.m:
        raise DimensionMismatchError("transform changed the number of atoms")
    return DiscreteMeasure(img, mu.weights, _normalize=False)


def barycenter(mu: DiscreteMeasure) -> np.ndarray:
    return mu.weights @ mu.points


def second_moment(mu: DiscreteMeasure, x0=None) -> float:
    """``sum_k w_k |x_k - x0|^2`` (``x0`` defaults to the origin)."""
    if x0 is None:
        x0 = np.zeros(mu.n)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != mu.n:
        raise DimensionMismatchError(f"x0 has dimension {x0.shape[0]}, measure has {mu.n}")
    d = mu.points - x0
    return float(mu.weights @ np.einsum("ij,ij->i", d, d))


def centered(mu: DiscreteMeasure) -> DiscreteMeasure:
    b = barycenter(mu)
    return pushforward(mu, lambda x: x - b)


def prune(mu: DiscreteMeasure, threshold: float = 0.0) -> DiscreteMeasure:
    """Drop atoms with weight ``<= threshold`` (at least one atom survives)."""
    keep = mu.weights > threshold
    if not keep.any():
        keep[np.argmax(mu.weights)] = True
    return DiscreteMeasure(mu.points[keep], mu.weights[keep])


def consolidate(mu: DiscreteMeasure, eps: float = 0.0) -> DiscreteMeasure:
    """Merge atoms closer than ``eps`` (exact duplicates when ``eps == 0``).

    Greedy in atom order: each atom joins the first earlier representative
    within ``eps``; merged atoms keep the representative's position.
    """
    if eps <= 0.0:
        uniq, inv = np.unique(mu.points, axis=0, return_inverse=True)
        w = np.zeros(uniq.shape[0])
        np.add.at(w, inv.reshape(-1), mu.weights)
        return DiscreteMeasure(uniq, w, _normalize=False)
    reps: list[int] = []
    w: list[float] = []
    for k in range(mu.m):
        for r, idx in enumerate(reps):
            if np.linalg.norm(mu.points[k] - mu.points[idx]) <= eps:
                w[r] += mu.weights[k]
                break
        else:
            reps.append(k)
            w.append(float(mu.weights[k]))
    return DiscreteMeasure(mu.points[reps], w, _normalize=False)


def pad_dimensions(mu: DiscreteMeasure, extra: int) -> DiscreteMeasure:
    """Embed into R^(n+extra) by appending zero coordinates."""
    return pushforward(mu, lambda x: np.hstack([x, np.zeros((x.shape[0], extra))]))


def mixture(measures, coefficients) -> DiscreteMeasure:
    """Convex combination of measures as a weighted union of atoms."""
    measures = list(measures)
    coefficients = np.asarray(coefficients, dtype=float)
    dims = {m.n for m in measures}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixture of measures with dimensions {sorted(dims)}")
    pts = np.vstack([m.points for m in measures])
    w = np.concatenate([c * m.weights for c, m in zip(coefficients, measures)])
    return DiscreteMeasure(pts, w)


def same_atoms(mu: DiscreteMeasure, nu: DiscreteMeasure, atol: float = 1e-7) -> bool:
    """True when the consolidated measures agree atomwise up to ``atol``."""
    a = consolidate(mu, atol / 4)
    b = consolidate(nu, atol / 4)
    if a.m != b.m or a.n != b.n:
        return False
    used = np.zeros(b.m, dtype=bool)
    for k in range(a.m):
        d = np.linalg.norm(b.points - a.points[k], axis=1)
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > atol or abs(b.weights[j] - a.weights[k]) > atol:
            return False
        used[j] = True
    return True


@dataclass(frozen=True)
class TestFunction:
    """Closed-form test function with exact gradient.

    ``kind="polynomial"``: ``c + b.x + x.Q.x`` with ``Q`` symmetric.
    ``kind="gaussian"``: ``exp(-|x - center|^2 / (2 width^2))``.
    """

    __test__ = False  # not a pytest class

    kind: str
    constant: float = 0.0
    linear: np.ndarray | None = None
    quadratic: np.ndarray | None = None
    center: np.ndarray | None = None
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("polynomial", "gaussian"):
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError("gaussian width must be positive")

    @classmethod
    def polynomial(cls, constant=0.0, linear=None, quadratic=None) -> "TestFunction":
        lin = None if linear is None else np.asarray(linear, dtype=float)
        quad = None
        if quadratic is not None:
            q = np.asarray(quadratic, dtype=float)
            quad = 0.5 * (q + q.T)
        return cls("polynomial", float(constant), lin, quad)

    @classmethod
    def gaussian(cls, center, width: float) -> "TestFunction":
        return cls("gaussian", center=np.asarray(center, dtype=float), width=float(width))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.kind == "gaussian":
            d = x - self.center
            return np.exp(-np.einsum("ij,ij->i", d, d) / (2 * self.width**2))
        out = np.full(x.shape[0], self.constant)
        if self.linear is not None:
            out = out + x @ self.linear
        if self.quadratic is not None:
            out = out + np.einsum("ij,jk,ik->i", x, self.quadratic, x)
        return out

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.kind == "gaussian":
            d = x - self.center
            return -(d / self.width**2) * self(x)[:, None]
        g = np.zeros_like(x)
        if self.linear is not None:
            g = g + self.linear
        if self.quadratic is not None:
            g = g + 2 * x @ self.quadratic
        return g

    def integrate(self, mu: DiscreteMeasure) -> float:
        return float(mu.weights @ self(mu.points))

"""Sampled curves in W_2 and their images in shape space.

Diagnostics (constant speed, metric derivative, quotient coefficients) and
the constructors used to produce curves whose shape-space projection is a
geodesic although the curve itself is not.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadSwitchFunctionError,
    BoundaryIndexError,
    DegenerateEndpointsError,
    DimensionMismatchError,
    LengthMismatchError,
    TOutOfRangeError,
)
from .isometry import Isometry
from .measure import DiscreteMeasure, mixture, pushforward
from .shapedist import ShapeSolverConfig, shape_distance, shape_distance_oracle_2d
from .transport import displacement_interpolation, wasserstein_exact

VERDICTS = ("geodesic-in-shape-space", "not-geodesic", "inconclusive")
DEGENERATE_REL = 1e-12


@dataclass
class CurveSample:
    times: np.ndarray
    measures: list[DiscreteMeasure]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        self.measures = list(self.measures)
        if len(self.times) != len(self.measures):
            raise LengthMismatchError(
                f"{len(self.times)} times but {len(self.measures)} measures"
            )
        if len(self.times) < 2:
            raise ValueError("a curve needs at least two samples")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.times[0] < 0 or self.times[-1] > 1:
            raise TOutOfRangeError("times must lie in [0, 1]")
        if len({m.n for m in self.measures}) != 1:
            raise DimensionMismatchError("curve samples live in different dimensions")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n(self) -> int:
        return self.measures[0].n

    def to_json(self) -> dict:
        from .io import measure_to_json

        return {
            "times": self.times.tolist(),
            "measures": [measure_to_json(m) for m in self.measures],
        }


def equispaced(samples: int) -> np.ndarray:
    if samples < 2:
        raise ValueError("samples must be >= 2")
    return np.linspace(0.0, 1.0, samples)


def geodesic_between(mu: DiscreteMeasure, nu: DiscreteMeasure, samples: int = 5, times=None) -> CurveSample:
    """Displacement interpolation through an exact optimal W_2 plan."""
    t = equispaced(samples) if times is None else np.asarray(times, dtype=float)
    plan = wasserstein_exact(mu, nu, 2.0).coupling
    return CurveSample(t, [displacement_interpolation(plan, float(s)) for s in t])


def constant_speed_check(curve: CurveSample, p: float = 2.0) -> float:
    """``max |W(mu_t, mu_s) - |t - s| W(mu_0, mu_1)| / W(mu_0, mu_1)`` over sampled pairs.

    Endpoints closer than ``1e-12`` times the extent of the curve count as
    coinciding, since the relative deviation is then rounding noise.
    """
    ms, ts = curve.measures, curve.times
    w01 = wasserstein_exact(ms[0], ms[-1], p).distance
    if w01 <= DEGENERATE_REL * _curve_scale(curve):
        raise DegenerateEndpointsError("curve endpoints coincide in W_p")
    span = ts[-1] - ts[0]
    worst = 0.0
    for i, j in itertools.combinations(range(len(ts)), 2):
        if (i, j) == (0, len(ts) - 1):
            continue
        w = wasserstein_exact(ms[i], ms[j], p).distance
        worst = max(worst, abs(w - (ts[j] - ts[i]) / span * w01) / w01)
    return worst


def metric_derivative(curve: CurveSample, index: int, p: float = 2.0) -> float:
    """Symmetric difference quotient ``W(mu_{i+1}, mu_{i-1}) / (t_{i+1} - t_{i-1})``."""
    if not 0 < index < len(curve) - 1:
        raise BoundaryIndexError(f"index {index} is not interior to a {len(curve)}-sample curve")
    ts = curve.times
    w = wasserstein_exact(curve.measures[index + 1], curve.measures[index - 1], p).distance
    return w / (ts[index + 1] - ts[index - 1])


@dataclass
class QuotientCoefficientReport:
    grid: list[tuple[float, float, float, float, float | None]]
    max_relative_spread: float
    undefined_pairs: list[tuple[float, float]]
    verdict: str
    certified: bool = False
    tolerance: float = 1e-4
    c01: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "grid": [
                {"t": t, "s": s, "W": w, "D": d, "C": c} for t, s, w, d, c in self.grid
            ],
            "max_relative_spread": self.max_relative_spread,
            "undefined_pairs": [list(p) for p in self.undefined_pairs],
            "verdict": self.verdict,
            "certified": self.certified,
            "tolerance": self.tolerance,
            "C01": self.c01,
        }

    def to_table(self) -> str:
        head = f"{'t':>10} {'s':>10} {'W':>14} {'D':>14} {'C_ts':>14}"
        lines = [head, "-" * len(head)]
        for t, s, w, d, c in self.grid:
            cs = "undefined" if c is None else f"{c:.6g}"
            lines.append(f"{t:>10.6g} {s:>10.6g} {w:>14.6g} {d:>14.6g} {cs:>14}")
        lines.append(f"max relative spread: {self.max_relative_spread:.6g}")
        lines.append(f"undefined pairs: {len(self.undefined_pairs)}")
        lines.append(f"verdict: {self.verdict}{'' if self.certified else ' (uncertified D)'}")
        return "\n".join(lines)


def _curve_scale(curve: CurveSample) -> float:
    pts = np.vstack([m.points for m in curve.measures])
    span = pts.max(axis=0) - pts.min(axis=0)
    return max(float(np.linalg.norm(span)), 1e-300)


def quotient_coefficients(
    curve: CurveSample,
    shape_config: ShapeSolverConfig | None = None,
    oracle_grid: int | None = None,
    tolerance: float = 1e-4,
    undefined_threshold: float = 1e-7,
) -> QuotientCoefficientReport:
    """``C_ts = W(mu_t, mu_s) / D([mu_t], [mu_s])`` on every sampled pair.

    With ``oracle_grid`` (n = 2) shape distances come from the planar oracle
    and are certified; otherwise the alternating solver is used and a
    "not-geodesic" verdict is never issued.  A pair is undefined when
    ``D < undefined_threshold * scale`` (scale = diameter of all atoms).
    """
    cfg = shape_config or ShapeSolverConfig()
    certified = oracle_grid is not None and curve.n == 2 and cfg.p == 2
    thresh = undefined_threshold * _curve_scale(curve)
    ts, ms = curve.times, curve.measures

    def dist(a, b):
        if certified:
            return shape_distance_oracle_2d(a, b, oracle_grid, cfg.p).distance
        return shape_distance(a, b, cfg).distance

    grid = []
    undefined = []
    coeffs = {}
    for i, j in itertools.combinations(range(len(ts)), 2):
        w = wasserstein_exact(ms[i], ms[j], cfg.p).distance
        d = dist(ms[i], ms[j])
        if d < thresh:
            c = None
            undefined.append((float(ts[i]), float(ts[j])))
        else:
            c = w / d
            coeffs[(i, j)] = c
        grid.append((float(ts[i]), float(ts[j]), w, d, c))

    last = len(ts) - 1
    c01 = coeffs.get((0, last))
    if c01 is not None and coeffs:
        spread = max(abs(c - c01) / c01 for c in coeffs.values())
    elif coeffs:
        vals = list(coeffs.values())
        spread = (max(vals) - min(vals)) / min(vals)
    else:
        spread = 0.0

    notes = []
    n_pairs = len(grid)
    if not coeffs:
        verdict = "inconclusive"
        notes.append("all sample classes coincide")
    elif not undefined and spread <= tolerance:
        verdict = "geodesic-in-shape-space"
    elif certified:
        verdict = "not-geodesic"
        if undefined:
            notes.append(f"{len(undefined)} of {n_pairs} pairs share a class")
    else:
        verdict = "inconclusive"
    return QuotientCoefficientReport(
        grid, float(spread), undefined, verdict, certified, tolerance, c01, notes
    )


def aligned_geodesic(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    samples: int = 5,
    config: ShapeSolverConfig | None = None,
    oracle_grid: int | None = None,
) -> tuple[CurveSample, Isometry]:
    """Move ``nu`` within its orbit so that ``W(mu, g nu) = D`` and interpolate.

    Returns the curve and the isometry ``g`` applied to ``nu``.
    """
    if oracle_grid is not None and mu.n == 2:
        res = shape_distance_oracle_2d(nu, mu, oracle_grid)
    else:
        res = shape_distance(nu, mu, config)
    g = res.minimizer
    return geodesic_between(mu, g.push(nu), samples), g


def linear_mixing_curve(mu: DiscreteMeasure, nu: DiscreteMeasure, samples: int = 5, times=None) -> CurveSample:
    """``(1 - t) mu + t nu`` as measures, not as positions."""
    t = equispaced(samples) if times is None else np.asarray(times, dtype=float)
    out = []
    for s in t:
        if s == 0.0:
            out.append(mu)
        elif s == 1.0:
            out.append(nu)
        else:
            out.append(mixture([mu, nu], [1.0 - s, s]))
    return CurveSample(t, out)


@dataclass(frozen=True)
class SwitchFunction:
    """``F(t) = 1`` up to ``t0``, then a ramp down to ``end`` at ``t = 1``."""

    t0: float
    ramp: str = "linear"
    end: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.t0 < 1.0:
            raise BadSwitchFunctionError("t0 must lie in [0, 1)")
        if self.ramp not in ("linear", "smoothstep", "constant-one"):
            raise BadSwitchFunctionError(f"unknown ramp {self.ramp!r}")
        if not 0.0 <= self.end < 1.0 and self.ramp != "constant-one":
            raise BadSwitchFunctionError("end value must lie in [0, 1)")

    @classmethod
    def identity(cls) -> "SwitchFunction":
        return cls(0.0, "constant-one")

    def __call__(self, t: float) -> float:
        if self.ramp == "constant-one" or t <= self.t0:
            return 1.0
        u = (t - self.t0) / (1.0 - self.t0)
        if self.ramp == "smoothstep":
            u = u * u * (3.0 - 2.0 * u)
        return 1.0 - (1.0 - self.end) * u


def mixing_curve(
    curve: CurveSample,
    g: Isometry,
    switch: SwitchFunction,
    reading: str = "mixture",
) -> CurveSample:
    """Split off mass ``1 - F(t)`` of each sample and move it by ``g``.

    ``reading="mixture"``: ``F(t) mu_t + (1 - F(t)) g_# mu_t``.
    ``reading="pointwise"``: push ``mu_t`` by ``x -> F(t) x + (1 - F(t)) g(x)``.
    Only the first is guaranteed to keep shape classes when ``g`` fixes
    ``mu_t``; the second is not a rigid motion in general.
    """
    if reading not in ("mixture", "pointwise"):
        raise BadSwitchFunctionError(f"unknown reading {reading!r}")
    out = []
    for t, m in zip(curve.times, curve.measures):
        f = switch(float(t))
        if f == 1.0:
            out.append(m)
        elif reading == "mixture":
            out.append(mixture([m, g.push(m)], [f, 1.0 - f]))
        else:
            out.append(pushforward(m, lambda x, f=f: f * x + (1.0 - f) * g.apply(x)))
    return CurveSample(curve.times.copy(), out)


def branch_curve(curve: CurveSample, gpath: list[Isometry]) -> CurveSample:
    """Pointwise ``g_t# mu_t``; shape classes are unchanged sample by sample."""
    if len(gpath) != len(curve):
        raise LengthMismatchError(f"{len(gpath)} isometries for {len(curve)} samples")
    return CurveSample(curve.times.copy(), [g.push(m) for g, m in zip(gpath, curve.measures)])


def rotation_ramp(times, t_branch: float, angle: float, n: int = 2, center=None) -> list[Isometry]:
    """Identity up to ``t_branch``, then rotation in the (x1, x2)-plane growing
    linearly to ``angle`` at ``t = 1`` (about ``center``, default origin)."""
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    out = []
    for t in np.asarray(times, dtype=float):
        th = 0.0 if t <= t_branch else angle * (t - t_branch) / (1.0 - t_branch)
        R = np.eye(n)
        R[:2, :2] = [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]
        out.append(Isometry(R, c - R @ c))
    return out

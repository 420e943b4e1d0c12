"""Seeded random instances shared by the test-suite and ``shapespace fixtures``."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geodesic import aligned_geodesic, branch_curve, geodesic_between, rotation_ramp
from .io import dumps, write_curve, write_measure
from .isometry import IsoAlgebraElement, random_isometry
from .measure import DiscreteMeasure, make_measure


def random_measure(rng: np.random.Generator, m: int, n: int, uniform: bool = True, scale: float = 1.0) -> DiscreteMeasure:
    pts = scale * rng.standard_normal((m, n))
    w = np.ones(m) if uniform else rng.uniform(0.2, 1.0, m)
    return make_measure(pts, w)


def random_algebra(rng: np.random.Generator, n: int, scale: float = 1.0) -> IsoAlgebraElement:
    B = rng.standard_normal((n, n))
    return IsoAlgebraElement(scale * (B - B.T) / 2, scale * rng.standard_normal(n))


def orbit_pair(rng: np.random.Generator, m: int, n: int, component: str = "either"):
    mu = random_measure(rng, m, n)
    g = random_isometry(n, rng, component, radius=3.0)
    return mu, g.push(mu), g


def generate_corpus(outdir, seed: int = 0, count: int = 5) -> list[Path]:
    """Write measures, orbit pairs and curves under ``outdir``; returns the paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    written: list[Path] = []

    def put(name, writer, obj):
        p = out / name
        writer(obj, p)
        written.append(p)

    put("dirac_r3.json", write_measure, make_measure([[0.3, -1.2, 2.0]], [1.0]))
    put("segment_r2.json", write_measure, make_measure([[0.0, 0.0], [1.0, 0.0]], [1, 1]))
    for k in range(count):
        put(f"measure_{k}.json", write_measure, random_measure(rng, 5, 2))
        mu, nu, g = orbit_pair(rng, 6, 2, "proper" if k % 2 == 0 else "improper")
        put(f"orbit_{k}_mu.json", write_measure, mu)
        put(f"orbit_{k}_nu.json", write_measure, nu)
        (out / f"orbit_{k}_g.json").write_text(dumps(g.to_json()))
        written.append(out / f"orbit_{k}_g.json")
        a, b = random_measure(rng, 4, 2), random_measure(rng, 4, 2)
        put(f"geodesic_{k}.json", write_curve, geodesic_between(a, b, 5))
        curve, _ = aligned_geodesic(a, b, 5, oracle_grid=360)
        put(f"aligned_{k}.json", write_curve, curve)
        put(
            f"branch_{k}.json",
            write_curve,
            branch_curve(curve, rotation_ramp(curve.times, 0.5, np.pi / 2)),
        )
        X = random_algebra(rng, 2)
        (out / f"algebra_{k}.json").write_text(dumps(X.to_json()))
        written.append(out / f"algebra_{k}.json")
    return written

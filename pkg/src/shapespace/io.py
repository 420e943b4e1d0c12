"""File formats: measures (JSON/CSV), curves, isometries, algebra elements.

JSON numbers are written with ``repr`` precision, so write -> read -> write
is byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeSpaceError
from .isometry import IsoAlgebraElement, Isometry
from .measure import DiscreteMeasure


def measure_to_json(mu: DiscreteMeasure) -> dict:
    return {"points": mu.points.tolist(), "weights": mu.weights.tolist()}


def measure_from_json(data: dict) -> DiscreteMeasure:
    try:
        pts = data["points"]
        w = data.get("weights")
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError(f"measure JSON needs 'points' (and optionally 'weights'): {exc}") from None
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2:
        raise ParseError("'points' must be a list of coordinate lists")
    if w is None:
        w = np.ones(pts.shape[0])
    try:
        return DiscreteMeasure(pts, w)
    except ShapeSpaceError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def measure_to_csv(mu: DiscreteMeasure) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(mu.n)] + ["w"])
    for x, wt in zip(mu.points, mu.weights):
        w.writerow([repr(float(c)) for c in x] + [repr(float(wt))])
    return buf.getvalue()


def measure_from_csv(text: str) -> DiscreteMeasure:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty CSV")
    header = [c.strip() for c in rows[0]]
    n = len(header) - 1
    if n < 1 or header[-1] != "w" or header[:-1] != [f"x{i + 1}" for i in range(n)]:
        raise ParseError(f"CSV header must be x1,...,xn,w; got {','.join(header)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ParseError(f"non-numeric CSV entry: {exc}") from None
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != n + 1:
        raise ParseError("every CSV row needs n coordinates and one weight")
    return DiscreteMeasure(data[:, :n], data[:, n])


def dumps(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _load_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None


def read_measure(path) -> DiscreteMeasure:
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            try:
                text = path.read_text()
            except OSError as exc:
                raise ParseError(f"{exc.strerror}") from None
            return measure_from_csv(text)
        return measure_from_json(_load_json(path))
    except ParseError as exc:
        msg = str(exc)
        raise ParseError(msg if msg.startswith(str(path)) else f"{path}: {msg}") from None


def write_measure(mu: DiscreteMeasure, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(measure_to_csv(mu))
    else:
        path.write_text(dumps(measure_to_json(mu)))


def curve_from_json(data: dict):
    from .geodesic import CurveSample

    try:
        return CurveSample(data["times"], [measure_from_json(m) for m in data["measures"]])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"curve JSON needs 'times' and 'measures': {exc}") from None


def read_curve(path):
    try:
        return curve_from_json(_load_json(path))
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_curve(curve, path) -> None:
    Path(path).write_text(dumps(curve.to_json()))


def read_isometry(path) -> Isometry:
    data = _load_json(path)
    try:
        return Isometry.from_json(data)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{path}: isometry JSON needs 'R' and 't' ({exc})") from None


def read_algebra(path) -> IsoAlgebraElement:
    data = _load_json(path)
    try:
        return IsoAlgebraElement.from_json(data)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{path}: algebra JSON needs 'A' and 'a' ({exc})") from None

"""Spline JSON documents and sample CSV files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bspline import KnotVector, Spline, greville, open_knot_vector
from .errors import DuplicateAbscissa, SplineError

__all__ = [
    "SampleSet",
    "spline_to_dict",
    "spline_from_dict",
    "read_spline",
    "write_spline",
    "read_samples",
    "samples_to_c0_cubic",
]


def spline_to_dict(s: Spline) -> dict:
    # float() keeps the shortest repr, which round-trips binary64 exactly
    return {
        "degree": s.degree,
        "knots": [float(v) for v in s.knots],
        "coefficients": [float(v) for v in s.coefficients],
    }


def spline_from_dict(doc: dict) -> Spline:
    try:
        degree, knots, coeffs = doc["degree"], doc["knots"], doc["coefficients"]
    except (KeyError, TypeError) as exc:
        raise SplineError(f"spline document needs degree, knots and coefficients: {exc}") from exc
    if not isinstance(degree, int) or isinstance(degree, bool):
        raise SplineError(f"degree must be an integer, got {degree!r}")
    return Spline(KnotVector(knots, degree), coeffs)


def read_spline(path: str | Path) -> Spline:
    with open(path, encoding="utf-8") as fh:
        return spline_from_dict(json.load(fh))


def write_spline(s: Spline, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spline_to_dict(s), fh)
        fh.write("\n")


@dataclass(frozen=True)
class SampleSet:
    """Ordered samples ``(x_i, y_i)`` with strictly increasing abscissae."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64).ravel()
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if x.size != y.size:
            raise SplineError("x and y must have the same length")
        if x.size < 2:
            raise SplineError("need at least two samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise SplineError("samples must be finite")
        dx = np.diff(x)
        if np.any(dx == 0):
            raise DuplicateAbscissa("sample abscissae must be distinct")
        if np.any(dx < 0):
            raise SplineError("sample abscissae must be increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def read_samples(path: str | Path) -> SampleSet:
    """Two-column CSV; a non-numeric first row is taken as a header."""
    xs, ys = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise SplineError(f"line {k + 1}: expected two columns")
            try:
                xv, yv = float(row[0]), float(row[1])
            except ValueError:
                if k == 0:
                    continue
                raise SplineError(f"line {k + 1}: non-numeric value") from None
            xs.append(xv)
            ys.append(yv)
    return SampleSet(np.array(xs), np.array(ys))


def samples_to_c0_cubic(data: SampleSet) -> Spline:
    """Piecewise linear interpolant of the samples as a C0 cubic spline.

    Every interior abscissa is a knot of multiplicity 3, so each data interval
    is a Bezier segment whose control points lie on the chord.
    """
    kv = open_knot_vector(data.x, 3, multiplicity=3)
    return Spline(kv, np.interp(greville(kv), data.x, data.y))

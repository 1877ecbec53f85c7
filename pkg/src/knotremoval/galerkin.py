"""Gauss quadrature, Galerkin matrices, L2 projection and a heat solver.

All integrals are computed span by span with Gauss-Legendre rules.  With
``p + 1`` points per span the mass and stiffness entries and every
spline-times-spline integral are exact.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .bspline import KnotVector, Spline, basis_values, eval_spline, eval_spline_derivative
from .errors import SolverFailure, SplineError

__all__ = [
    "QuadRule",
    "BandedSymmetricMatrix",
    "HeatRun",
    "gauss_rule",
    "assemble_mass",
    "assemble_stiffness",
    "l2_project",
    "project_spline",
    "integrate",
    "l2_error",
    "span_l2_errors",
    "spline_distance",
    "adaptive_refine",
    "heat_solve",
]


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Legendre nodes and weights, ``points_per_span`` per span."""

    points: np.ndarray
    weights: np.ndarray
    span_ids: np.ndarray
    breaks: np.ndarray
    points_per_span: int

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def gauss_rule(kv: KnotVector | Sequence[float], points_per_span: int) -> QuadRule:
    """Composite Gauss rule over the spans of ``kv`` (or over explicit breaks).

    Exact for piecewise polynomials of degree ``2 * points_per_span - 1``.
    """
    q = int(points_per_span)
    if q < 1:
        raise SplineError(f"points_per_span must be >= 1, got {points_per_span}")
    breaks = kv.breakpoints if isinstance(kv, KnotVector) else np.unique(np.asarray(kv, float))
    x, w = np.polynomial.legendre.leggauss(q)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    ids = np.repeat(np.arange(lo.size), q)
    return QuadRule(pts, wts, ids, breaks, q)


class BandedSymmetricMatrix:
    """Symmetric matrix of half-bandwidth ``bandwidth`` in packed upper form.

    ``ab[bandwidth + i - j, j] == A[i, j]`` for ``i <= j``, which is the layout
    used by :func:`scipy.linalg.cholesky_banded`.
    """

    def __init__(self, ab: np.ndarray):
        self.ab = np.asarray(ab, dtype=np.float64)
        self.bandwidth = self.ab.shape[0] - 1
        self.n = self.ab.shape[1]

    def band(self, k: int) -> np.ndarray:
        """The ``k``-th superdiagonal, ``A[i, i + k]``."""
        return self.ab[self.bandwidth - k, k:]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = self.band(0) * x
        for k in range(1, self.bandwidth + 1):
            b = self.band(k)
            y[:-k] += b * x[k:]
            y[k:] += b * x[:-k]
        return y

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for k in range(self.bandwidth + 1):
            b = self.band(k)
            idx = np.arange(self.n - k)
            A[idx, idx + k] = b
            A[idx + k, idx] = b
        return A

    def __add__(self, other: "BandedSymmetricMatrix") -> "BandedSymmetricMatrix":
        if other.n != self.n or other.bandwidth != self.bandwidth:
            raise SplineError("matrix shapes differ")
        return BandedSymmetricMatrix(self.ab + other.ab)

    def __mul__(self, scalar: float) -> "BandedSymmetricMatrix":
        return BandedSymmetricMatrix(self.ab * float(scalar))

    __rmul__ = __mul__

    def cholesky(self) -> "BandedCholesky":
        try:
            return BandedCholesky(cholesky_banded(self.ab, lower=False))
        except LinAlgError as exc:
            raise SolverFailure(f"matrix is not positive definite: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve by banded Cholesky and check the backward error."""
        rhs = np.asarray(rhs, dtype=np.float64)
        x = self.cholesky().solve(rhs)
        res = np.linalg.norm(self.matvec(x) - rhs)
        scale = np.abs(self.ab).sum(axis=0).max() * np.linalg.norm(x) + np.linalg.norm(rhs)
        if not res <= 1e-12 * scale:
            raise SolverFailure(f"banded solve residual {res:.3e} too large")
        return x


class BandedCholesky:
    def __init__(self, factor: np.ndarray):
        self.factor = factor

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve_banded((self.factor, False), rhs)


def _assemble(kv: KnotVector, order: int) -> BandedSymmetricMatrix:
    p, n = kv.degree, kv.n
    rule = gauss_rule(kv, p + 1)
    first, vals = basis_values(kv, rule.points, order)
    ab = np.zeros((p + 1, n))
    for r in range(p + 1):
        for c in range(r, p + 1):
            contrib = rule.weights * vals[:, r] * vals[:, c]
            ab[p - (c - r)] += np.bincount(first + c, weights=contrib, minlength=n)
    return BandedSymmetricMatrix(ab)


def assemble_mass(kv: KnotVector) -> BandedSymmetricMatrix:
    """Mass matrix ``M_ij = int B_i B_j``."""
    return _assemble(kv, 0)


def assemble_stiffness(kv: KnotVector) -> BandedSymmetricMatrix:
    """Stiffness matrix ``K_ij = int B_i' B_j'``."""
    if kv.degree < 1:
        raise SplineError("stiffness matrix needs degree >= 1")
    return _assemble(kv, 1)


def _load_vector(kv: KnotVector, rule: QuadRule, values: np.ndarray) -> np.ndarray:
    first, vals = basis_values(kv, rule.points)
    rhs = np.zeros(kv.n)
    wv = rule.weights * values
    for r in range(kv.degree + 1):
        rhs += np.bincount(first + r, weights=wv * vals[:, r], minlength=kv.n)
    return rhs


def l2_project(
    f: Callable[[np.ndarray], np.ndarray],
    space: KnotVector,
    points_per_span: int | None = None,
    breaks: Sequence[float] | None = None,
) -> Spline:
    """L2 projection of ``f`` onto the spline space of ``space``.

    The load vector uses ``points_per_span`` Gauss points (default ``p + 1``)
    on each span of ``breaks`` (default: the breakpoints of ``space``).
    """
    q = space.degree + 1 if points_per_span is None else points_per_span
    rule = gauss_rule(space if breaks is None else breaks, q)
    rhs = _load_vector(space, rule, np.asarray(f(rule.points), dtype=np.float64))
    return Spline(space, assemble_mass(space).solve(rhs))


def project_spline(s: Spline, space: KnotVector) -> Spline:
    """Exact L2 projection of a spline onto another spline space."""
    breaks = np.union1d(s.space.breakpoints, space.breakpoints)
    q = max(s.degree, space.degree) + 1
    return l2_project(s, space, q, breaks)


def integrate(f: Callable[[np.ndarray], np.ndarray], breaks, points_per_span: int) -> float:
    rule = gauss_rule(breaks, points_per_span)
    return rule.integrate(f(rule.points))


def l2_error(
    f: Callable[[np.ndarray], np.ndarray], s: Spline, points_per_span: int | None = None
) -> float:
    """``||f - s||_L2`` with ``2 (p + 1)`` Gauss points per span by default."""
    q = 2 * (s.degree + 1) if points_per_span is None else points_per_span
    rule = gauss_rule(s.space, q)
    diff = f(rule.points) - eval_spline(s, rule.points)
    return math.sqrt(rule.integrate(diff * diff))


def span_l2_errors(
    f: Callable[[np.ndarray], np.ndarray], s: Spline, points_per_span: int | None = None
) -> np.ndarray:
    """Local ``||f - s||_L2`` on every span of ``s``."""
    q = 2 * (s.degree + 1) if points_per_span is None else points_per_span
    rule = gauss_rule(s.space, q)
    diff = f(rule.points) - eval_spline(s, rule.points)
    sq = np.bincount(rule.span_ids, weights=rule.weights * diff * diff, minlength=rule.breaks.size - 1)
    return np.sqrt(sq)


def spline_distance(s1: Spline, s2: Spline, norm: str = "l2") -> float:
    """Exact ``L2``, ``H1``-seminorm (``'h1semi'``) or ``H1`` distance of two splines."""
    if norm not in ("l2", "h1semi", "h1"):
        raise SplineError(f"norm must be 'l2', 'h1semi' or 'h1', got {norm!r}")
    breaks = np.union1d(s1.space.breakpoints, s2.space.breakpoints)
    q = max(s1.degree, s2.degree) + 1
    rule = gauss_rule(breaks, q)
    total = 0.0
    if norm in ("l2", "h1"):
        d = eval_spline(s1, rule.points) - eval_spline(s2, rule.points)
        total += rule.integrate(d * d)
    if norm in ("h1semi", "h1"):
        d1 = eval_spline_derivative(s1, rule.points, 1) - eval_spline_derivative(
            s2, rule.points, 1
        )
        total += rule.integrate(d1 * d1)
    return math.sqrt(total)


def adaptive_refine(
    f: Callable[[np.ndarray], np.ndarray],
    p: int,
    domain: tuple[float, float],
    steps: int,
    initial_spans: int = 4,
    theta: float = 0.5,
    multiplicity: int | None = None,
) -> list[tuple[KnotVector, Spline]]:
    """Adaptive h-refinement of the L2 projection of ``f``.

    Uses the maximum marking strategy: every span whose local error is at least
    ``theta`` times the largest one is bisected.  Interior breakpoints get
    multiplicity ``p`` by default, i.e. C0 spaces.

    Returns the ``steps + 1`` nested spaces with the projection on each.
    """
    if steps < 0:
        raise SplineError("steps must be non-negative")
    m = p if multiplicity is None else multiplicity
    from .bspline import open_knot_vector

    breaks = np.linspace(domain[0], domain[1], initial_spans + 1)
    out = []
    for level in range(steps + 1):
        kv = open_knot_vector(breaks, p, m)
        s = l2_project(f, kv)
        out.append((kv, s))
        if level == steps:
            break
        err = span_l2_errors(f, s)
        # errors at roundoff level carry no information; treat them as equal
        floor = 1e-13 * max(math.sqrt(float(s.coefficients @ assemble_mass(kv).matvec(s.coefficients))), 1e-300)
        err = np.where(err <= floor, 0.0, err)
        marked = err >= theta * err.max()
        mids = 0.5 * (breaks[:-1] + breaks[1:])[marked]
        breaks = np.union1d(breaks, mids)
    return out


@dataclass
class HeatRun:
    """Trace of a Backward Euler run.

    ``times[k]``, ``dofs[k]`` and ``space_ids[k]`` describe the solution at
    step ``k``; ``space_ids`` increments whenever coarsening changes the space.
    """

    times: list[float]
    dofs: list[int]
    space_ids: list[int]
    initial: Spline
    final: Spline
    coarsen_errors: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "dof", "space_id"])
        for t, d, i in zip(self.times, self.dofs, self.space_ids):
            w.writerow([repr(t), d, i])
        return buf.getvalue()


def heat_solve(
    u0: Callable[[np.ndarray], np.ndarray],
    p: int,
    breakpoints: int,
    dt: float,
    t_end: float,
    coarsen: bool = False,
    h1_tol: float = 1e-3,
    domain: tuple[float, float] = (0.0, 10.0),
    initial: Spline | None = None,
) -> HeatRun:
    """Backward Euler for ``u_t = u_xx`` with homogeneous Neumann conditions.

    The space has maximum smoothness on ``breakpoints`` uniform breakpoints.
    With ``coarsen=True`` each step first coarsens the current solution in H1
    to ``h1_tol`` and then solves ``(M + dt K) c_new = M c`` on the coarser space.
    Neumann conditions are natural, so no constraints are imposed.
    """
    from .coarsen import coarsen_h1
    from .bspline import open_knot_vector

    if not dt > 0:
        raise SplineError("dt must be positive")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-12 * max(1.0, abs(t_end)):
        raise SplineError(f"t_end = {t_end} is not a multiple of dt = {dt}")

    if initial is None:
        kv = open_knot_vector(np.linspace(domain[0], domain[1], breakpoints), p)
        initial = l2_project(u0, kv)
    s = initial
    space = s.space
    space_id = 0
    M = assemble_mass(space)
    K = assemble_stiffness(space)
    chol = (M + dt * K).cholesky()
    run = HeatRun([0.0], [space.n], [space_id], initial, initial)
    for k in range(n_steps):
        if coarsen:
            rep = coarsen_h1(s, h1_tol)
            run.coarsen_errors.append(rep.total_error)
            s = rep.final
            if s.space != space:
                space = s.space
                space_id += 1
                M = assemble_mass(space)
                K = assemble_stiffness(space)
                chol = (M + dt * K).cholesky()
        c = chol.solve(M.matvec(s.coefficients))
        s = Spline(space, c)
        run.times.append((k + 1) * dt)
        run.dofs.append(space.n)
        run.space_ids.append(space_id)
    run.final = s
    return run

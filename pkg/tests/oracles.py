"""Random instances and brute-force reference computations for the tests.

Nothing here calls into the removal or coarsening code: basis values come from
:mod:`scipy.interpolate`, insertion matrices from collocation least squares and
minimax fits from a linear program.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BSpline, PPoly
from scipy.optimize import linprog

from knotremoval import KnotVector, Spline, validate_knot_vector


def random_knot_vector(
    rng: np.random.Generator,
    p: int,
    n_breaks: int,
    max_mult: int | None = None,
    open_: bool = True,
    max_dof: int | None = None,
) -> KnotVector:
    """Basic knot vector with ``n_breaks`` interior breakpoints.

    Gaps between breakpoints are bounded away from zero so that the dense
    oracles stay well conditioned.  ``open_=False`` spreads the ``p`` outer
    knots at each end beyond the domain.
    """
    max_mult = p + 1 if max_mult is None else max_mult
    gaps = rng.uniform(0.25, 1.5, size=n_breaks + 1)
    breaks = np.concatenate([[0.0], np.cumsum(gaps)]) + rng.uniform(-3.0, 3.0)
    mults = rng.integers(1, max_mult + 1, size=n_breaks)
    if max_dof is not None:
        while n_breaks and mults.sum() + p + 1 > max_dof:
            mults = mults[:-1]
            breaks = np.delete(breaks, -2)
            n_breaks -= 1
    a, b = breaks[0], breaks[-1]
    interior = np.repeat(breaks[1:-1], mults)
    if open_:
        left, right = np.full(p + 1, a), np.full(p + 1, b)
    else:
        left = np.concatenate([np.sort(a - rng.uniform(0.0, 1.5, size=p)), [a]])
        right = np.concatenate([[b], np.sort(b + rng.uniform(0.0, 1.5, size=p))])
    return validate_knot_vector(np.concatenate([left, interior, right]), p)


def random_spline(rng, kv: KnotVector, scale: float = 1.0) -> Spline:
    return Spline(kv, scale * rng.standard_normal(kv.n))


def smooth_spline(rng, kv: KnotVector) -> Spline:
    """Spline whose coefficients sample a random smooth function at Greville-like points."""
    t = kv.knots
    p = kv.degree
    centres = np.array([t[i + 1 : i + p + 1].mean() if p else t[i] for i in range(kv.n)])
    freq = rng.uniform(0.3, 1.2)
    phase = rng.uniform(0, 2 * np.pi)
    noise = 1e-3 * rng.standard_normal(kv.n)
    return Spline(kv, np.sin(freq * centres + phase) + 0.2 * centres + noise)


def scipy_spline(s: Spline) -> BSpline:
    return BSpline(np.asarray(s.knots), np.asarray(s.coefficients), s.degree, extrapolate=False)


def design_matrix(kv: KnotVector, x: np.ndarray) -> np.ndarray:
    """Dense ``B[m, i] = B_i(x_m)`` from scipy (0-based ``i``)."""
    return BSpline.design_matrix(np.asarray(x), np.asarray(kv.knots), kv.degree).toarray()


def collocation_points(kv: KnotVector, per_span: int = 0) -> np.ndarray:
    """Points strictly inside every nonempty span, ``p + 2`` per span by default."""
    q = per_span or kv.degree + 2
    br = kv.breakpoints
    u = (np.arange(q) + 0.5) / q
    return (br[:-1, None] + np.diff(br)[:, None] * u[None, :]).ravel()


def insertion_matrix(coarse: KnotVector, fine: KnotVector) -> np.ndarray:
    """Matrix ``A`` with ``c_fine = A c_coarse`` found by collocation."""
    x = collocation_points(fine)
    Bf = design_matrix(fine, x)
    Bc = design_matrix(coarse, x)
    A, *_ = np.linalg.lstsq(Bf, Bc, rcond=None)
    return A


def weights(kv: KnotVector) -> np.ndarray:
    t, p = np.asarray(kv.knots), kv.degree
    return np.sqrt((t[p + 1 :] - t[: -p - 1]) / (p + 1))


def global_removal_residual(s: Spline, i: int, weighted: bool = True) -> float:
    """``min_b ||E (A b - c)||_2`` for removing the 1-based knot ``i``."""
    coarse = s.space.without_knot(i)
    A = insertion_matrix(coarse, s.space)
    c = np.asarray(s.coefficients)
    w = weights(s.space) if weighted else np.ones(c.size)
    b, *_ = np.linalg.lstsq(w[:, None] * A, w * c, rcond=None)
    return float(np.linalg.norm(w * (A @ b - c)))


def minimax_fit(A: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    """``min_z ||A z - c||_inf`` as a linear program in ``(z, t)``."""
    m, k = A.shape
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    ones = np.ones((m, 1))
    A_ub = np.block([[A, -ones], [-A, -ones]])
    b_ub = np.concatenate([c, -c])
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * k + [(0, None)], method="highs")
    assert res.status == 0, res.message
    return res.x[:k], float(res.x[-1])


def one_sided_derivative(s: Spline, x: float, order: int, side: str) -> float:
    """Derivative of the polynomial piece to the ``side`` of ``x`` (via scipy PPoly)."""
    pp = PPoly.from_spline(scipy_spline(s))
    br = pp.x
    if side == "right":
        k = min(int(np.searchsorted(br, x, side="right")) - 1, br.size - 2)
    else:
        k = int(np.searchsorted(br, x, side="left")) - 1
    coeffs = pp.c[:, k]
    poly = np.poly1d(coeffs)
    return float(poly.deriv(order)(x - br[k])) if order else float(poly(x - br[k]))


def gauss_points(breaks: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-span Gauss-Legendre nodes and weights from numpy."""
    g, w = np.polynomial.legendre.leggauss(q)
    br = np.asarray(breaks, dtype=float)
    lo, h = br[:-1], np.diff(br)
    x = (lo[:, None] + 0.5 * h[:, None] * (g[None, :] + 1)).ravel()
    wt = (0.5 * h[:, None] * w[None, :]).ravel()
    return x, wt


def quad_l2(fun, breaks, q: int) -> float:
    x, w = gauss_points(breaks, q)
    v = fun(x)
    return float(np.sqrt(np.sum(w * v * v)))

"""Knot vectors, B-spline evaluation, norms and coefficient maps.

Indices exposed by this module follow the usual 1-based B-spline notation:
basis function ``i`` is ``B_i`` for ``1 <= i <= n`` and breakpoint ``j`` is
``zeta_j`` for ``1 <= j <= N``.  Arrays are of course stored 0-based, so
``kv.knots[k]`` holds the knot with 1-based index ``k + 1``.

Splines are right-continuous at interior breakpoints and left-continuous at
the right end ``b`` of the domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegreeZero,
    IndexOutOfRange,
    MultiplicityExceeded,
    NotBasic,
    NotContinuous,
    NotInterior,
    NotOpen,
    NotSorted,
    OrderTooHigh,
    OutsideDomain,
    SplineError,
    TooShort,
)

__all__ = [
    "KnotVector",
    "Spline",
    "validate_knot_vector",
    "open_knot_vector",
    "eval_basis",
    "eval_spline",
    "eval_spline_derivative",
    "basis_values",
    "greville",
    "xi_weights",
    "xi_norm",
    "cp_norm",
    "cp_inf_norm",
    "insert_knot",
    "derivative_spline",
    "antiderivative_spline",
]


class KnotVector:
    """A validated ``(p+1)``-basic knot vector of degree ``p``.

    Parameters
    ----------
    knots : sequence of float
        Nondecreasing knots ``xi_1 <= ... <= xi_{n+p+1}``.
    degree : int
        Polynomial degree ``p >= 0``.

    Attributes
    ----------
    degree : int
    knots : numpy.ndarray
        Read-only copy of the knots.
    n : int
        Dimension of the spline space, ``len(knots) - (p + 1)``.
    a, b : float
        Domain end points ``xi_{p+1}`` and ``xi_{n+1}``.
    breakpoints : numpy.ndarray
        ``zeta_1 < ... < zeta_N`` including both ends.
    multiplicities : numpy.ndarray
        Multiplicities ``m_2, ..., m_{N-1}`` of the interior breakpoints.
    last_indices : numpy.ndarray
        1-based index ``i_j`` of the last occurrence of each interior breakpoint.

    Knot equality is exact: multiplicities are counted without a tolerance.
    """

    __slots__ = (
        "degree",
        "knots",
        "n",
        "a",
        "b",
        "breakpoints",
        "multiplicities",
        "last_indices",
        "is_open",
    )

    def __init__(self, knots: Sequence[float] | np.ndarray, degree: int):
        t = np.array(knots, dtype=np.float64).ravel()
        p = int(degree)
        if p < 0:
            raise SplineError(f"degree must be non-negative, got {degree}")
        if not np.all(np.isfinite(t)):
            raise SplineError("knots must be finite")
        if t.size and np.any(np.diff(t) < 0):
            raise NotSorted("knots must be nondecreasing")
        n = t.size - (p + 1)
        if n < p + 1:
            raise TooShort(
                f"need at least {2 * (p + 1)} knots for degree {p}, got {t.size}"
            )
        a, b = t[p], t[n]
        if not a < b:
            raise NotBasic(f"empty domain: xi_(p+1) = {a} and xi_(n+1) = {b}")

        interior = t[p + 1 : n]
        values, counts = np.unique(interior, return_counts=True)
        if counts.size and counts.max() > p + 1:
            k = int(np.argmax(counts))
            raise MultiplicityExceeded(
                f"interior knot {values[k]} has multiplicity {counts[k]} > p+1 = {p + 1}"
            )
        if interior.size and (interior[0] <= a or interior[-1] >= b):
            raise NotBasic("interior knots must lie strictly inside (xi_(p+1), xi_(n+1))")

        t.setflags(write=False)
        self.degree = p
        self.knots = t
        self.n = n
        self.a = float(a)
        self.b = float(b)
        bp = np.concatenate(([a], values, [b]))
        bp.setflags(write=False)
        self.breakpoints = bp
        m = counts.astype(np.int64)
        m.setflags(write=False)
        self.multiplicities = m
        last = p + 1 + np.cumsum(m)
        last.setflags(write=False)
        self.last_indices = last
        self.is_open = bool(np.all(t[: p + 1] == a) and np.all(t[n:] == b))

    # -- bookkeeping -----------------------------------------------------

    @property
    def num_breakpoints(self) -> int:
        return self.breakpoints.size

    @property
    def num_interior_knots(self) -> int:
        """Number of interior knots counted with multiplicity."""
        return self.n - self.degree - 1

    def interior_breakpoint(self, j: int) -> tuple[float, int, int]:
        """Return ``(zeta_j, m_j, i_j)`` for an interior breakpoint ``2 <= j <= N-1``."""
        if not 2 <= j <= self.num_breakpoints - 1:
            raise NotInterior(
                f"breakpoint index {j} is not interior (valid: 2..{self.num_breakpoints - 1})"
            )
        return (
            float(self.breakpoints[j - 1]),
            int(self.multiplicities[j - 2]),
            int(self.last_indices[j - 2]),
        )

    def without_knot(self, i: int) -> "KnotVector":
        """The knot vector with the knot of 1-based index ``i`` deleted."""
        return KnotVector(np.delete(self.knots, i - 1), self.degree)

    def spans(self) -> np.ndarray:
        """0-based indices ``k`` of the nonempty spans ``[t[k], t[k+1])`` inside ``[a, b]``."""
        p, n, t = self.degree, self.n, self.knots
        k = np.arange(p, n)
        return k[t[k + 1] > t[k]]

    def is_subsequence_of(self, other: "KnotVector") -> bool:
        """Whether this vector can be obtained from ``other`` by deleting knots."""
        t, u = self.knots, other.knots
        j = 0
        for v in u:
            if j < t.size and v == t[j]:
                j += 1
        return j == t.size

    def __len__(self) -> int:
        return self.knots.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    def __hash__(self) -> int:
        return hash((self.degree, self.knots.tobytes()))

    def __repr__(self) -> str:
        return f"KnotVector(degree={self.degree}, n={self.n}, N={self.num_breakpoints})"


def validate_knot_vector(knots: Sequence[float] | np.ndarray, p: int) -> KnotVector:
    """Validate ``knots`` as a ``(p+1)``-basic knot vector of degree ``p``."""
    return KnotVector(knots, p)


def open_knot_vector(
    breaks: Sequence[float] | np.ndarray, degree: int, multiplicity: int = 1
) -> KnotVector:
    """Open knot vector on ``breaks`` with a common interior multiplicity."""
    z = np.asarray(breaks, dtype=np.float64)
    p = degree
    knots = np.concatenate(
        (np.full(p + 1, z[0]), np.repeat(z[1:-1], multiplicity), np.full(p + 1, z[-1]))
    )
    return KnotVector(knots, p)


@dataclass(frozen=True)
class Spline:
    """A spline ``sum_i c_i B_i`` on a knot vector."""

    space: KnotVector
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.array(self.coefficients, dtype=np.float64).ravel()
        if c.size != self.space.n:
            raise SplineError(
                f"expected {self.space.n} coefficients for this knot vector, got {c.size}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        return self.space.degree

    @property
    def knots(self) -> np.ndarray:
        return self.space.knots

    @property
    def dof(self) -> int:
        return self.space.n

    def __call__(self, x):
        return eval_spline(self, x)


# -- evaluation ---------------------------------------------------------------


def _as_points(kv: KnotVector, x) -> tuple[np.ndarray, bool]:
    xs = np.asarray(x, dtype=np.float64)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs).ravel()
    if xs.size and (np.any(xs < kv.a) or np.any(xs > kv.b) or np.any(np.isnan(xs))):
        raise OutsideDomain(f"evaluation points must lie in [{kv.a}, {kv.b}]")
    return xs, scalar


def _find_spans(kv: KnotVector, x: np.ndarray, side: str = "right") -> np.ndarray:
    # 0-based k with t[k] <= x < t[k+1] (right) or t[k] < x <= t[k+1] (left)
    if side not in ("left", "right"):
        raise SplineError(f"side must be 'left' or 'right', got {side!r}")
    k = np.searchsorted(kv.knots, x, side=side) - 1
    return np.clip(k, kv.degree, kv.n - 1)


def _basis_funs(t: np.ndarray, p: int, k: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cox-de Boor triangle: values of ``B_{k-p..k}`` (0-based) at each point."""
    m = x.size
    out = np.zeros((m, p + 1))
    out[:, 0] = 1.0
    left = np.empty((m, p + 1))
    right = np.empty((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - t[k + 1 - j]
        right[:, j] = t[k + j] - x
        saved = np.zeros(m)
        for r in range(j):
            temp = out[:, r] / (right[:, r + 1] + left[:, j - r])
            out[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        out[:, j] = saved
    return out


def basis_values(
    kv: KnotVector, x, order: int = 0, side: str = "right"
) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero basis functions (or their derivatives) at the points ``x``.

    Returns
    -------
    first : numpy.ndarray of int
        0-based index of the first active basis function at each point.
    values : numpy.ndarray, shape (len(x), p + 1)
        ``values[m, r]`` is ``D^order B_{first[m] + r}`` at ``x[m]`` (0-based).
    """
    p, t = kv.degree, kv.knots
    if order < 0 or order > p:
        raise OrderTooHigh(f"derivative order must be in 0..{p}, got {order}")
    xs, _ = _as_points(kv, x)
    k = _find_spans(kv, xs, side)
    q = p - order
    low = _basis_funs(t, q, k, xs)
    if order == 0:
        return k - p, low
    # Raise the degree-q values back to degree p through the derivative
    # recurrence applied to unit coefficient vectors.
    eye = np.broadcast_to(np.eye(p + 1), (xs.size, p + 1, p + 1))
    coef = eye.copy()  # coef[m, r, e]: coefficient r of unit vector e
    for lvl in range(1, order + 1):
        deg = p - lvl + 1
        gi = k[:, None] - p + np.arange(lvl, p + 1)[None, :]
        den = t[gi + deg] - t[gi]
        coef[:, lvl:, :] = deg * (coef[:, lvl:, :] - coef[:, lvl - 1 : -1, :]) / den[:, :, None]
    vals = np.einsum("mr,mre->me", low, coef[:, order:, :])
    return k - p, vals


def eval_basis(kv: KnotVector, i: int, x) -> float | np.ndarray:
    """Value of the 1-based basis function ``B_i`` at ``x``."""
    if not 1 <= i <= kv.n:
        raise IndexOutOfRange(f"basis index {i} outside 1..{kv.n}")
    xs, scalar = _as_points(kv, x)
    first, vals = basis_values(kv, xs)
    r = (i - 1) - first
    active = (r >= 0) & (r <= kv.degree)
    out = np.where(active, vals[np.arange(xs.size), np.clip(r, 0, kv.degree)], 0.0)
    return float(out[0]) if scalar else out


def eval_spline(s: Spline, x) -> float | np.ndarray:
    """Evaluate ``s`` at ``x`` using only the ``p+1`` active basis functions."""
    return eval_spline_derivative(s, x, 0, "right")


def eval_spline_derivative(s: Spline, x, order: int = 1, side: str = "right"):
    """One-sided derivative ``D^order s`` at ``x``.

    ``side`` selects the limit from the right (default) or from the left at
    breakpoints; away from breakpoints both agree.
    """
    kv = s.space
    p, t = kv.degree, kv.knots
    if order < 0 or order > p:
        raise OrderTooHigh(f"derivative order must be in 0..{p}, got {order}")
    xs, scalar = _as_points(kv, x)
    k = _find_spans(kv, xs, side)
    idx = k[:, None] - p + np.arange(p + 1)[None, :]
    c = s.coefficients[idx]
    for lvl in range(1, order + 1):
        deg = p - lvl + 1
        gi = idx[:, lvl:]
        c[:, lvl:] = deg * (c[:, lvl:] - c[:, lvl - 1 : -1]) / (t[gi + deg] - t[gi])
    vals = _basis_funs(t, p - order, k, xs)
    out = np.einsum("mr,mr->m", vals, c[:, order:])
    return float(out[0]) if scalar else out


# -- Greville abscissae, weights and norms -----------------------------------


def greville(kv: KnotVector) -> np.ndarray:
    """Greville abscissae ``(xi_{i+1} + ... + xi_{i+p}) / p``, ``i = 1..n``."""
    p = kv.degree
    if p == 0:
        raise DegreeZero("Greville abscissae need degree >= 1")
    win = np.lib.stride_tricks.sliding_window_view(kv.knots[1 : kv.n + p], p)
    return win.sum(axis=1) / p


def _greville_steps(kv: KnotVector) -> np.ndarray:
    # xi*_i - xi*_{i-1} for i = 2..n, written as (xi_{i+p} - xi_i) / p
    p, t = kv.degree, kv.knots
    i = np.arange(1, kv.n)
    return (t[i + p] - t[i]) / p


def xi_weights(kv: KnotVector) -> np.ndarray:
    """Weights ``omega_i = sqrt((xi_{i+p+1} - xi_i) / (p + 1))``."""
    p, t, n = kv.degree, kv.knots, kv.n
    return np.sqrt((t[p + 1 : p + 1 + n] - t[:n]) / (p + 1))


def xi_norm(s: Spline) -> float:
    return float(np.linalg.norm(xi_weights(s.space) * s.coefficients))


def cp_norm(s: Spline) -> float:
    return float(np.linalg.norm(s.coefficients))


def cp_inf_norm(s: Spline) -> float:
    return float(np.max(np.abs(s.coefficients)))


# -- knot insertion and coefficient maps --------------------------------------


def insert_knot(s: Spline, x: float) -> Spline:
    """Insert one occurrence of ``x`` (Boehm's algorithm); the function is unchanged."""
    kv = s.space
    p, t, c = kv.degree, kv.knots, s.coefficients
    x = float(x)
    if not kv.a < x < kv.b:
        raise OutsideDomain(f"inserted knot must lie in the open interval ({kv.a}, {kv.b})")
    mult = int(np.count_nonzero(t == x))
    if mult + 1 > p + 1:
        raise MultiplicityExceeded(f"knot {x} would reach multiplicity {mult + 1} > {p + 1}")
    k = int(np.searchsorted(t, x, side="right")) - 1
    new = np.empty(c.size + 1)
    new[: k - p + 1] = c[: k - p + 1]
    new[k + 1 :] = c[k:]
    i = np.arange(k - p + 1, k + 1)
    lam = (x - t[i]) / (t[i + p] - t[i])
    new[i] = lam * c[i] + (1.0 - lam) * c[i - 1]
    return Spline(KnotVector(np.insert(t, k + 1, x), p), new)


def _require_open_continuous(kv: KnotVector) -> None:
    if not kv.is_open:
        raise NotOpen("operation requires an open knot vector")
    if kv.multiplicities.size and kv.multiplicities.max() > kv.degree:
        raise NotContinuous("interior multiplicities must be at most p for a continuous spline")


def derivative_spline(s: Spline) -> Spline:
    """Right derivative of ``s`` as a degree ``p-1`` spline on ``{xi_2, ..., xi_{n+p}}``."""
    kv = s.space
    if kv.degree < 1:
        raise DegreeZero("cannot differentiate a piecewise constant spline")
    _require_open_continuous(kv)
    c = s.coefficients
    d = np.diff(c) / _greville_steps(kv)
    return Spline(KnotVector(kv.knots[1:-1], kv.degree - 1), d)


def antiderivative_spline(sprime: Spline, left_value: float) -> Spline:
    """Primitive of ``sprime`` taking the value ``left_value`` at ``a``.

    The result has degree one higher and lives on the open vector obtained by
    repeating the first and last knot once more.
    """
    kv = sprime.space
    q, t = kv.degree, kv.knots
    if not kv.is_open:
        raise NotOpen("antiderivative requires an open knot vector")
    hat = KnotVector(np.concatenate(([t[0]], t, [t[-1]])), q + 1)
    inc = sprime.coefficients * _greville_steps(hat)
    c = np.empty(hat.n)
    c[0] = left_value
    c[1:] = left_value + np.cumsum(inc)
    return Spline(hat, c)

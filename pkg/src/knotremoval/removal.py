"""Single knot removal: local error functionals and local best approximations.

Removing one occurrence of an interior breakpoint ``zeta_{j0}`` only involves
``L = p + 2 - ell`` control points ``c_loc = (c_{i0-p-1}, ..., c_{i0-ell})`` and
the ``2p + 3 - ell`` knots around it, where ``i0`` is the index of the last
occurrence of ``zeta_{j0}`` and ``ell + 1`` its multiplicity.  Everything in
:class:`RemovalContext` is computed from that window alone, so the indicator of
a breakpoint is bit-for-bit reproducible whatever happens elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bspline import KnotVector, Spline
from .errors import SingularLocalSystem, SplineError

__all__ = [
    "RemovalContext",
    "build_removal_context",
    "local_coefficients",
    "error_xi",
    "error_cp",
    "indicator_D",
    "jump_value",
    "error_linf",
    "best_local_l2",
    "best_local_linf",
    "remove_knot",
    "REMOVAL_NORMS",
]

REMOVAL_NORMS = ("xi", "cp", "linf")


@dataclass(frozen=True)
class RemovalContext:
    """Local data for removing the last occurrence of breakpoint ``j0``.

    Vectors are indexed ``1..L`` in the formulas and stored 0-based.

    Attributes
    ----------
    j0, i0 : int
        1-based breakpoint index and index of the knot being removed.
    ell : int
        Multiplicity of ``zeta_{j0}`` after the removal.
    size : int
        ``L = p + 2 - ell``.
    alpha : numpy.ndarray
        Convex weights of the local insertion matrix, ``alpha[0] = 1``,
        ``alpha[-1] = 0``.
    e : numpy.ndarray
        Local Xi-norm weights ``omega_{i0-p-1}, ..., omega_{i0-ell}``.
    mu : numpy.ndarray
        Ratios ``(1 - alpha_j) / alpha_{j-1}``, length ``L - 1``.
    gamma : float
        Normaliser making ``E_loc^{-1} r`` a unit vector.
    r : numpy.ndarray
        Xi-norm error functional: ``E(s) = |r . c_loc|``.
    r_cp : numpy.ndarray
        Same functional normalised for the plain coefficient 2-norm.
    d : numpy.ndarray
        Unnormalised functional with last entry 1.
    z : numpy.ndarray
        Jump functional: ``z . c_loc`` is the jump of ``D^(p-ell) s`` at ``zeta``.
    c_loc_const : float
        Positive constant with ``r = c_loc_const * z``.
    window : numpy.ndarray
        The knots ``xi_{i0-p-1}, ..., xi_{i0+p+1-ell}``.
    """

    j0: int
    i0: int
    ell: int
    size: int
    degree: int
    zeta: float
    alpha: np.ndarray
    e: np.ndarray
    mu: np.ndarray
    gamma: float
    r: np.ndarray
    r_cp: np.ndarray
    d: np.ndarray
    z: np.ndarray
    c_loc_const: float
    window: np.ndarray

    @property
    def first(self) -> int:
        """0-based offset of ``c_loc`` inside the full coefficient vector."""
        return self.i0 - self.degree - 2

    @property
    def A_loc(self) -> np.ndarray:
        """Local knot insertion matrix, ``L x (L-1)`` lower bidiagonal."""
        L = self.size
        A = np.zeros((L, L - 1))
        j = np.arange(L - 1)
        A[j, j] = self.alpha[:-1]
        A[j + 1, j] = 1.0 - self.alpha[1:]
        return A


def build_removal_context(kv: KnotVector, j0: int) -> RemovalContext:
    """Local removal data for interior breakpoint ``j0`` (1-based, ``2..N-1``)."""
    zeta, m, i0 = kv.interior_breakpoint(j0)
    p = kv.degree
    ell = m - 1
    L = p + 2 - ell
    # w[k] holds xi_{i0-p-1+k}; zeta = w[p+1]
    w = kv.knots[i0 - p - 2 : i0 + p + 1 - ell].tolist()

    alpha = [0.0] * L
    one_minus = [0.0] * L
    e = [0.0] * L
    for j in range(L):
        lo, hi = w[j], w[j + p + 1]
        span = hi - lo
        alpha[j] = (zeta - lo) / span
        one_minus[j] = (hi - zeta) / span
        e[j] = math.sqrt(span / (p + 1))

    mu = [0.0] * (L - 1)
    for j in range(L - 1):
        if not alpha[j] > 0.0:
            raise SingularLocalSystem(f"alpha_{j + 1} vanished at breakpoint {j0}")
        mu[j] = one_minus[j + 1] / alpha[j]

    # d_L = 1, d_j = -mu_j d_{j+1}; prod2[j] = prod_{i>=j} mu_i^2
    d = [0.0] * L
    prod2 = [0.0] * L
    d[L - 1] = 1.0
    prod2[L - 1] = 1.0
    for j in range(L - 2, -1, -1):
        d[j] = -mu[j] * d[j + 1]
        prod2[j] = prod2[j + 1] * mu[j] * mu[j]

    eL = e[L - 1]
    acc = 0.0
    acc_cp = 0.0
    for j in range(L - 1):
        acc += prod2[j] / (e[j] * e[j])
        acc_cp += prod2[j]
    gamma = 1.0 / math.sqrt(1.0 + eL * eL * acc)
    gamma_cp = 1.0 / math.sqrt(1.0 + acc_cp)
    rL = gamma * eL
    r = [rL * dj for dj in d]
    r_cp = [gamma_cp * dj for dj in d]

    scale = math.factorial(p) / math.factorial(ell)
    z = [0.0] * L
    for j in range(L):
        den = 1.0
        for xk in w[j : j + p + 2]:
            if xk != zeta:
                den *= xk - zeta
        z[j] = scale * (w[j + p + 1] - w[j]) / den
    right = 1.0
    for xk in w[p + 2 : 2 * p + 2 - ell]:
        right *= xk - zeta
    c_loc_const = rL * right / scale

    return RemovalContext(
        j0=j0,
        i0=i0,
        ell=ell,
        size=L,
        degree=p,
        zeta=zeta,
        alpha=np.array(alpha),
        e=np.array(e),
        mu=np.array(mu),
        gamma=gamma,
        r=np.array(r),
        r_cp=np.array(r_cp),
        d=np.array(d),
        z=np.array(z),
        c_loc_const=c_loc_const,
        window=np.array(w),
    )


def local_coefficients(s: Spline, ctx: RemovalContext) -> np.ndarray:
    """The block ``c_loc = (c_{i0-p-1}, ..., c_{i0-ell})``."""
    return s.coefficients[ctx.first : ctx.first + ctx.size]


def _dot(u: np.ndarray, v: np.ndarray) -> float:
    return math.fsum(float(a) * float(b) for a, b in zip(u, v))


def error_xi(s: Spline, ctx: RemovalContext) -> float:
    """Xi-norm distance from ``s`` to the space without the knot."""
    return abs(_dot(ctx.r, local_coefficients(s, ctx)))


def error_cp(s: Spline, ctx: RemovalContext) -> float:
    """Distance in the plain coefficient 2-norm."""
    return abs(_dot(ctx.r_cp, local_coefficients(s, ctx)))


def indicator_D(s: Spline, ctx: RemovalContext) -> float:
    """``|d . c_loc|`` with ``d`` normalised so that its last entry is 1."""
    return abs(_dot(ctx.d, local_coefficients(s, ctx)))


def jump_value(s: Spline, ctx: RemovalContext) -> float:
    """Signed jump of ``D^(p-ell) s`` across ``zeta_{j0}``."""
    return _dot(ctx.z, local_coefficients(s, ctx))


def _linf_weight(ctx: RemovalContext) -> float:
    # d . sgn where sgn_i = (-1)^(p-ell-i); all terms are nonnegative
    sgn = _alternating_signs(ctx.size)
    total = _dot(ctx.d, sgn)
    if not total > 0.0:
        raise SingularLocalSystem(f"[A_loc | s] is singular at breakpoint {ctx.j0}")
    return total


def _alternating_signs(L: int) -> np.ndarray:
    return np.array([1.0 if (L - 1 - i) % 2 == 0 else -1.0 for i in range(L)])


def error_linf(s: Spline, ctx: RemovalContext) -> float:
    """Minimax error ``min_z ||c_loc - A_loc z||_inf`` of the local problem."""
    return abs(_dot(ctx.d, local_coefficients(s, ctx))) / _linf_weight(ctx)


def _bidiagonal_lstsq(
    alpha: np.ndarray, weights: np.ndarray | None, y: np.ndarray
) -> tuple[np.ndarray, float]:
    """Least squares for ``diag(w) A_loc x = diag(w) y`` by Givens rotations.

    Returns the minimiser and the norm of the weighted residual.
    """
    L = len(alpha)
    w = [1.0] * L if weights is None else [float(v) for v in weights]
    # row j of the weighted matrix: sub (col j-1) and diag (col j)
    diag = [w[j] * float(alpha[j]) for j in range(L - 1)]
    sub = [w[j + 1] * (1.0 - float(alpha[j + 1])) for j in range(L - 1)]
    rhs = [w[j] * float(y[j]) for j in range(L)]
    rdiag = [0.0] * (L - 1)
    rsup = [0.0] * (L - 1)
    qtb = [0.0] * (L - 1)
    cur = diag[0]
    cur_rhs = rhs[0]
    for j in range(L - 1):
        # rotate current row j against original row j+1 on column j
        a, b = cur, sub[j]
        rho = math.hypot(a, b)
        if rho == 0.0:
            raise SingularLocalSystem("local insertion matrix lost rank")
        cs, sn = a / rho, b / rho
        rdiag[j] = rho
        nxt_diag = diag[j + 1] if j + 1 < L - 1 else 0.0
        # current row has no entry in column j+1; row j+1 has nxt_diag there
        rsup[j] = sn * nxt_diag
        cur = cs * nxt_diag
        qtb[j] = cs * cur_rhs + sn * rhs[j + 1]
        cur_rhs = -sn * cur_rhs + cs * rhs[j + 1]
    x = [0.0] * (L - 1)
    for j in range(L - 2, -1, -1):
        v = qtb[j]
        if j + 1 < L - 1:
            v -= rsup[j] * x[j + 1]
        x[j] = v / rdiag[j]
    return np.array(x), abs(cur_rhs)


def best_local_l2(
    ctx: RemovalContext, c_loc: np.ndarray, weighted: bool = True
) -> np.ndarray:
    """Local coefficients minimising ``||E_loc (A_loc x - c_loc)||_2``.

    With ``weighted=False`` the plain 2-norm is used instead, which is the best
    approximation for the coefficient norm.
    """
    c_loc = np.asarray(c_loc, dtype=np.float64)
    if c_loc.size != ctx.size:
        raise SplineError(f"c_loc must have length {ctx.size}, got {c_loc.size}")
    x, _ = _bidiagonal_lstsq(ctx.alpha, ctx.e if weighted else None, c_loc)
    return x


def best_local_linf(ctx: RemovalContext, c_loc: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve ``[A_loc | s] x = c_loc`` with alternating signs ``s``.

    Returns ``(x[:-1], |x[-1]|)``: the local minimax coefficients and the error.
    """
    c_loc = np.asarray(c_loc, dtype=np.float64)
    if c_loc.size != ctx.size:
        raise SplineError(f"c_loc must have length {ctx.size}, got {c_loc.size}")
    sgn = _alternating_signs(ctx.size)
    # d annihilates A_loc, so d.c = x_L d.s
    xL = _dot(ctx.d, c_loc) / _linf_weight(ctx)
    x, _ = _bidiagonal_lstsq(ctx.alpha, None, c_loc - xL * sgn)
    return x, abs(xL)


def remove_knot(s: Spline, j0: int, norm: str = "xi") -> tuple[Spline, float]:
    """Remove the last occurrence of breakpoint ``j0`` with the best local refit.

    Parameters
    ----------
    norm : {'xi', 'cp', 'linf'}
        Norm in which the new local coefficients are optimal.

    Returns
    -------
    (Spline, float)
        The coarser spline and the removal error in ``norm``.
    """
    if norm not in REMOVAL_NORMS:
        raise SplineError(f"norm must be one of {REMOVAL_NORMS}, got {norm!r}")
    ctx = build_removal_context(s.space, j0)
    c_loc = local_coefficients(s, ctx)
    if norm == "linf":
        new_loc, err = best_local_linf(ctx, c_loc)
    elif norm == "cp":
        new_loc = best_local_l2(ctx, c_loc, weighted=False)
        err = error_cp(s, ctx)
    else:
        new_loc = best_local_l2(ctx, c_loc)
        err = error_xi(s, ctx)
    return _assemble(s, ctx, new_loc), err


def _assemble(s: Spline, ctx: RemovalContext, new_loc: np.ndarray) -> Spline:
    c = s.coefficients
    lo = ctx.first
    coeffs = np.concatenate((c[:lo], new_loc, c[lo + ctx.size :]))
    return Spline(s.space.without_knot(ctx.i0), coeffs)

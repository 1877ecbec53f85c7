"""Greedy adaptive knot removal with incrementally updated indicators."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .bspline import (
    Spline,
    _require_open_continuous,
    antiderivative_spline,
    derivative_spline,
)
from .errors import BudgetTooLarge, DegreeZero, SplineError, StaleCache
from .removal import (
    build_removal_context,
    error_cp,
    error_linf,
    error_xi,
    indicator_D,
    jump_value,
    remove_knot,
)

__all__ = [
    "INDICATORS",
    "IndicatorCache",
    "RemovalStep",
    "CoarsenStep",
    "CoarsenReport",
    "indicator",
    "compute_all_indicators",
    "update_indicators",
    "coarsen_l2",
    "coarsen_linf",
    "coarsen_h1",
    "coarsen_to_budget",
]

INDICATORS = ("xi", "cp", "D", "jump", "linf")

# norm used for the local refit of each indicator; None means no local refit exists
_LOCAL_REFIT = {"xi": "xi", "cp": "cp", "linf": "linf", "D": None, "jump": None}


def indicator(s: Spline, j: int, norm: str) -> float:
    """Single-removal indicator of interior breakpoint ``j`` in the given norm."""
    ctx = build_removal_context(s.space, j)
    if norm == "xi":
        return error_xi(s, ctx)
    if norm == "cp":
        return error_cp(s, ctx)
    if norm == "D":
        return indicator_D(s, ctx)
    if norm == "jump":
        return abs(jump_value(s, ctx))
    if norm == "linf":
        return error_linf(s, ctx)
    raise SplineError(f"unknown indicator {norm!r}; expected one of {INDICATORS}")


@dataclass
class IndicatorCache:
    """Indicators ``eps_j`` for every interior breakpoint of ``spline``.

    ``values[j - 2]`` belongs to breakpoint ``j``.
    """

    norm: str
    spline: Spline
    values: list[float]

    @property
    def space(self):
        return self.spline.space

    def argmin(self) -> int:
        """1-based breakpoint index of the smallest indicator (first one on ties)."""
        return int(np.argmin(self.values)) + 2

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RemovalStep:
    """What a single removal did to the knot vector."""

    j: int
    i: int
    ell: int

    @property
    def breakpoint_vanished(self) -> bool:
        return self.ell == 0


def compute_all_indicators(s: Spline, norm: str) -> IndicatorCache:
    if norm not in INDICATORS:
        raise SplineError(f"unknown indicator {norm!r}; expected one of {INDICATORS}")
    N = s.space.num_breakpoints
    return IndicatorCache(norm, s, [indicator(s, j, norm) for j in range(2, N)])


def update_indicators(
    cache: IndicatorCache, s_new: Spline, removal: RemovalStep
) -> IndicatorCache:
    """Indicators after one removal, recomputing only the affected band.

    Breakpoints whose last knot index lies at or below ``i* - p - 2`` keep their
    value; those at or above ``i* + p + 1`` take the value of their old
    counterpart (shifted by one breakpoint when the removed knot was simple).
    """
    old_kv, new_kv = cache.space, s_new.space
    if old_kv.degree != new_kv.degree or not np.array_equal(
        np.delete(old_kv.knots, removal.i - 1), new_kv.knots
    ):
        raise StaleCache("cache does not match the spline before this removal")
    p = new_kv.degree
    istar = removal.i
    shift = 1 if removal.ell == 0 else 0
    old = cache.values
    values = []
    for j, ij in enumerate(new_kv.last_indices.tolist(), start=2):
        if ij <= istar - p - 2:
            values.append(old[j - 2])
        elif ij >= istar + p + 1:
            values.append(old[j - 2 + shift])
        else:
            values.append(indicator(s_new, j, cache.norm))
    return IndicatorCache(cache.norm, s_new, values)


@dataclass(frozen=True)
class CoarsenStep:
    step: int
    breakpoint: float
    multiplicity_before: int
    epsilon: float
    cumulative: float
    dof: int


@dataclass
class CoarsenReport:
    """Ordered log of removals and the resulting spline.

    ``stop_reason`` is ``'tolerance'`` when the next smallest indicator no
    longer fits in the remaining budget, ``'exhausted'`` when no interior knot
    is left, and ``'target'`` when a knot budget was reached.
    """

    steps: list[CoarsenStep]
    final: Spline
    budget_remaining: float = math.inf
    stop_reason: str = "tolerance"
    tol: float | None = None

    @property
    def total_error(self) -> float:
        return self.steps[-1].cumulative if self.steps else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "breakpoint", "multiplicity_before", "epsilon", "cumulative", "dof"])
        for st in self.steps:
            w.writerow(
                [
                    st.step,
                    repr(st.breakpoint),
                    st.multiplicity_before,
                    repr(st.epsilon),
                    repr(st.cumulative),
                    st.dof,
                ]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        from .io import spline_to_dict

        return {
            "tol": self.tol,
            "stop_reason": self.stop_reason,
            "budget_remaining": None
            if math.isinf(self.budget_remaining)
            else self.budget_remaining,
            "steps": [st.__dict__ for st in self.steps],
            "final": spline_to_dict(self.final),
        }


StepCallback = Callable[[CoarsenStep, Spline], None]


def _greedy(
    s: Spline,
    norm: str,
    *,
    tol: float | None = None,
    target: int | None = None,
    refit: str = "local",
    original: Spline | None = None,
    on_step: StepCallback | None = None,
    check_cache: bool = False,
) -> CoarsenReport:
    from .galerkin import project_spline

    if norm not in INDICATORS:
        raise SplineError(f"unknown indicator {norm!r}; expected one of {INDICATORS}")
    if refit == "local":
        local = _LOCAL_REFIT[norm]
        if local is None:
            raise SplineError(f"indicator {norm!r} has no local refit; use refit='global-l2'")
    elif refit != "global-l2":
        raise SplineError(f"refit must be 'local' or 'global-l2', got {refit!r}")
    original = s if original is None else original

    cache = compute_all_indicators(s, norm)
    cumulative = 0.0
    steps: list[CoarsenStep] = []
    reason = "exhausted"
    cur = s
    while len(cache):
        if target is not None and cur.space.num_interior_knots <= target:
            reason = "target"
            break
        j = cache.argmin()
        eps = cache.values[j - 2]
        if tol is not None:
            remaining = tol - cumulative
            # second clause guards the strict bound against rounding in the budget
            if not (eps < remaining and cumulative + eps < tol):
                reason = "tolerance"
                break
        zeta, m, i = cur.space.interior_breakpoint(j)
        if refit == "local":
            new, _ = remove_knot(cur, j, local)
            cache = update_indicators(cache, new, RemovalStep(j, i, m - 1))
            if check_cache:
                fresh = np.asarray(compute_all_indicators(new, norm).values)
                cached = np.asarray(cache.values)
                scale = max(1.0, float(np.abs(fresh).max(initial=0.0)))
                if fresh.shape != cached.shape or np.any(np.abs(fresh - cached) > 1e-14 * scale):
                    raise AssertionError(f"incremental indicators diverged at step {len(steps) + 1}")
        else:
            new = project_spline(original, cur.space.without_knot(i))
            cache = compute_all_indicators(new, norm)
        cumulative += eps
        cur = new
        st = CoarsenStep(len(steps) + 1, zeta, m, eps, cumulative, cur.dof)
        steps.append(st)
        if on_step is not None:
            on_step(st, cur)
    else:
        if target is not None and cur.space.num_interior_knots <= target:
            reason = "target"
    budget = math.inf if tol is None else tol - cumulative
    return CoarsenReport(steps, cur, budget, reason, tol)


def _check_tol(tol: float) -> float:
    tol = float(tol)
    if not tol > 0:
        raise SplineError(f"tolerance must be positive, got {tol}")
    return tol


def coarsen_l2(s: Spline, tol: float, **kwargs) -> CoarsenReport:
    """Remove knots greedily while the summed Xi-norm errors stay below ``tol``.

    The result satisfies ``||s - s_hat||_L2 <= ||s - s_hat||_Xi < tol``.
    """
    return _greedy(s, "xi", tol=_check_tol(tol), **kwargs)


def coarsen_linf(s: Spline, tol: float, **kwargs) -> CoarsenReport:
    """Greedy removal with local minimax refits; ``||s - s_hat||_Linf < tol``."""
    return _greedy(s, "linf", tol=_check_tol(tol), **kwargs)


def coarsen_h1(s: Spline, tol: float, **kwargs) -> CoarsenReport:
    """Coarsen a continuous spline so that ``||s - s_hat||_H1 < tol``.

    The derivative is coarsened in the Xi-norm with the reduced tolerance
    ``tol / sqrt((b - a)^2 + 1)`` and integrated back from ``s(a)``.
    """
    tol = _check_tol(tol)
    kv = s.space
    if kv.degree < 1:
        raise DegreeZero("H1 coarsening needs degree >= 1")
    _require_open_continuous(kv)
    ds = derivative_spline(s)
    tol_d = tol / math.sqrt((kv.b - kv.a) ** 2 + 1.0)
    rep = _greedy(ds, "xi", tol=tol_d, **kwargs)
    s_hat = antiderivative_spline(rep.final, s.coefficients[0])
    if not s_hat.space.is_subsequence_of(kv):
        raise AssertionError("coarsened knot vector is not a subsequence of the input")
    steps = [
        CoarsenStep(st.step, st.breakpoint, st.multiplicity_before, st.epsilon, st.cumulative, st.dof + 1)
        for st in rep.steps
    ]
    return CoarsenReport(steps, s_hat, tol_d - rep.total_error, rep.stop_reason, tol)


def coarsen_to_budget(
    s: Spline,
    target_interior_knots: int,
    norm: str = "xi",
    refit: str = "local",
    **kwargs,
) -> CoarsenReport:
    """Greedy removal until ``target_interior_knots`` remain (with multiplicity).

    ``refit='global-l2'`` replaces the coefficients after every step by the L2
    projection of the original ``s`` onto the current space.
    """
    target = int(target_interior_knots)
    have = s.space.num_interior_knots
    if target < 0 or target > have:
        raise BudgetTooLarge(f"target must be in 0..{have}, got {target}")
    return _greedy(s, norm, target=target, refit=refit, **kwargs)


def lifted_difference(s: Spline, s_hat: Spline) -> np.ndarray:
    """Coefficients of ``s - s_hat`` on the knot vector of ``s``.

    ``s_hat`` must live on a subsequence of the knots of ``s``; it is lifted by
    re-inserting the missing knots.
    """
    from .bspline import insert_knot

    missing = _missing_knots(s.space.knots, s_hat.space.knots)
    lifted = s_hat
    for x in missing:
        lifted = insert_knot(lifted, x)
    if lifted.space != s.space:
        raise SplineError("s_hat does not live on a subsequence of the knots of s")
    return s.coefficients - lifted.coefficients


def _missing_knots(fine: Iterable[float], coarse: Iterable[float]) -> list[float]:
    coarse = list(coarse)
    out = []
    j = 0
    for v in fine:
        if j < len(coarse) and coarse[j] == v:
            j += 1
        else:
            out.append(float(v))
    return out

"""The numerical experiments: indicator comparison, L-infinity data reduction
and the heat equation with coarsening in every time step.

Every experiment returns plain dataclasses with a ``to_csv`` method; the CLI
only formats and writes them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .bspline import Spline, eval_spline
from .coarsen import CoarsenReport, coarsen_l2, coarsen_to_budget
from .functions import BUILTINS, heat_u0, runge
from .galerkin import HeatRun, adaptive_refine, heat_solve, l2_error, spline_distance
from .io import SampleSet, samples_to_c0_cubic

__all__ = [
    "STRATEGIES",
    "REFINE_STEPS",
    "CoarseningCurve",
    "IndicatorExperiment",
    "TerminalComparison",
    "LinfReduction",
    "HeatExperiment",
    "refined_spline",
    "coarsening_curve",
    "middle_decade",
    "fitted_slope",
    "indicator_experiment",
    "terminal_comparison",
    "linf_sample",
    "heat_experiment",
]

# strategy number -> (indicator, refit after each removal)
STRATEGIES = {
    1: ("xi", "local"),
    2: ("cp", "local"),
    3: ("D", "global-l2"),
    4: ("jump", "global-l2"),
}

# number of adaptive refinement steps that produce the finest mesh, per
# (function, degree); chosen so the finest mesh has a few hundred DOF
REFINE_STEPS = {
    ("runge", 2): 10,
    ("runge", 4): 12,
    ("root5", 2): 24,
    ("root5", 4): 24,
}


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def refined_spline(name: str, p: int, steps: int | None = None) -> Spline:
    """Projection of a built-in function on its finest adaptively refined C0 mesh."""
    f, domain = BUILTINS[name]
    if steps is None:
        steps = REFINE_STEPS.get((name, p), 10)
    return adaptive_refine(f, p, domain, steps)[-1][1]


@dataclass
class CoarseningCurve:
    """L2 error against the target function after every removal."""

    strategy: int
    dofs: list[int]
    errors: list[float]

    @property
    def indicator(self) -> str:
        return STRATEGIES[self.strategy][0]

    @property
    def refit(self) -> str:
        return STRATEGIES[self.strategy][1]


def coarsening_curve(f, s: Spline, strategy: int) -> CoarseningCurve:
    """Remove every interior knot of ``s`` with one strategy, logging the error."""
    norm, refit = STRATEGIES[strategy]
    dofs = [s.dof]
    errors = [l2_error(f, s)]

    def log(step, cur):
        dofs.append(cur.dof)
        errors.append(l2_error(f, cur))

    coarsen_to_budget(s, 0, norm, refit, on_step=log)
    return CoarseningCurve(strategy, dofs, errors)


def middle_decade(dofs) -> tuple[float, float]:
    """The DOF decade centred (geometrically) on the range of ``dofs``."""
    lo, hi = float(min(dofs)), float(max(dofs))
    centre = math.sqrt(lo * hi)
    return centre / math.sqrt(10.0), centre * math.sqrt(10.0)


def fitted_slope(dofs, errors, window: tuple[float, float]) -> float:
    """Least-squares slope of log(error) against log(DOF) inside ``window``."""
    d = np.asarray(dofs, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = (d >= window[0]) & (d <= window[1]) & (e > 0)
    if keep.sum() < 2:
        raise ValueError("fewer than two points inside the window")
    slope, _ = np.polyfit(np.log(d[keep]), np.log(e[keep]), 1)
    return float(slope)


@dataclass
class IndicatorExperiment:
    """Coarsening curves of several strategies started from the same spline."""

    function: str
    degree: int
    fine: Spline
    curves: dict[int, CoarseningCurve]

    @property
    def window(self) -> tuple[float, float]:
        return middle_decade(next(iter(self.curves.values())).dofs)

    def slopes(self) -> dict[int, float]:
        w = self.window
        return {k: fitted_slope(c.dofs, c.errors, w) for k, c in self.curves.items()}

    def to_csv(self) -> str:
        rows = []
        for k, c in self.curves.items():
            rows.extend((k, c.indicator, c.refit, d, repr(e)) for d, e in zip(c.dofs, c.errors))
        return _csv(["strategy", "indicator", "refit", "dof", "l2_error"], rows)


def indicator_experiment(
    name: str = "runge",
    p: int = 2,
    steps: int | None = None,
    strategies=(1, 2, 3, 4),
) -> IndicatorExperiment:
    """Refine adaptively, then coarsen the finest projection with each strategy."""
    f, _ = BUILTINS[name]
    fine = refined_spline(name, p, steps)
    curves = {k: coarsening_curve(f, fine, k) for k in strategies}
    return IndicatorExperiment(name, p, fine, curves)


@dataclass(frozen=True)
class TerminalComparison:
    """Errors of two strategies at the DOF where a tolerance-driven run stops."""

    tol: float
    dof: int
    error_reference: float
    error_other: float

    @property
    def ratio(self) -> float:
        return self.error_other / self.error_reference


def terminal_comparison(
    f, fine: Spline, tol: float = 1e-4, reference: int = 1, other: int = 4
) -> TerminalComparison:
    """Run ``reference`` under ``tol`` and ``other`` down to the same knot count."""
    norm, refit = STRATEGIES[reference]
    if norm == "xi" and refit == "local":
        ref = coarsen_l2(fine, tol)
    else:
        raise ValueError("the tolerance-driven reference must be strategy 1")
    target = ref.final.space.num_interior_knots
    o_norm, o_refit = STRATEGIES[other]
    oth = coarsen_to_budget(fine, target, o_norm, o_refit)
    return TerminalComparison(tol, ref.final.dof, l2_error(f, ref.final), l2_error(f, oth.final))


@dataclass
class LinfReduction:
    """One knot-budget run of the L-infinity data reduction."""

    target: int
    report: CoarsenReport
    max_sample_error: float
    sample_errors: np.ndarray

    @property
    def indicator_sum(self) -> float:
        return self.report.total_error

    @property
    def interior_knots(self) -> int:
        return self.report.final.space.num_interior_knots


def runge_samples(n: int = 101) -> SampleSet:
    x = np.linspace(-5.0, 5.0, n)
    return SampleSet(x, runge(x))


def linf_sample(n: int = 101, targets=(7, 3)) -> tuple[Spline, list[LinfReduction]]:
    """Reduce the C0 cubic interpolant of Runge samples to few interior knots."""
    data = runge_samples(n)
    s = samples_to_c0_cubic(data)
    out = []
    for t in targets:
        rep = coarsen_to_budget(s, t, "linf", "local")
        err = np.abs(eval_spline(rep.final, data.x) - data.y)
        out.append(LinfReduction(t, rep, float(err.max()), err))
    return s, out


def linf_csv(data: SampleSet, runs: list[LinfReduction]) -> str:
    header = ["x", "y"] + [f"error_{r.target}_knots" for r in runs]
    rows = [
        [repr(float(x)), repr(float(y))] + [repr(float(r.sample_errors[i])) for r in runs]
        for i, (x, y) in enumerate(zip(data.x, data.y))
    ]
    return _csv(header, rows)


@dataclass
class HeatExperiment:
    """Coarsened and uncoarsened Backward Euler runs from the same projection."""

    degree: int
    initial_error: float
    coarsened: HeatRun
    reference: HeatRun

    @property
    def final_difference(self) -> float:
        return spline_distance(self.coarsened.final, self.reference.final, "l2")

    def to_csv(self) -> str:
        rows = zip(
            (repr(t) for t in self.coarsened.times),
            self.coarsened.dofs,
            self.reference.dofs,
        )
        return _csv(["t", "dof_coarsened", "dof_reference"], rows)


def heat_experiment(
    p: int,
    breakpoints: int = 1001,
    dt: float = 0.01,
    t_end: float = 1.0,
    h1_tol: float = 1e-3,
) -> HeatExperiment:
    ref = heat_solve(heat_u0, p, breakpoints, dt, t_end, coarsen=False)
    s0 = ref.initial
    run = heat_solve(heat_u0, p, breakpoints, dt, t_end, coarsen=True, h1_tol=h1_tol, initial=s0)
    return HeatExperiment(p, l2_error(heat_u0, s0), run, ref)

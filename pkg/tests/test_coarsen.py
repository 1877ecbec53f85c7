import math

import numpy as np
import pytest

from knotremoval import (
    Spline,
    build_removal_context,
    coarsen_h1,
    coarsen_l2,
    coarsen_linf,
    coarsen_to_budget,
    compute_all_indicators,
    eval_spline,
    insert_knot,
    open_knot_vector,
    remove_knot,
    update_indicators,
    validate_knot_vector,
    xi_weights,
)
from knotremoval.coarsen import RemovalStep, indicator, lifted_difference
from knotremoval.errors import BudgetTooLarge, NotContinuous, NotOpen, SplineError, StaleCache
from knotremoval.removal import error_xi

from oracles import (
    gauss_points,
    insertion_matrix,
    random_knot_vector,
    random_spline,
    smooth_spline,
)


def random_case(rng, max_mult=None, n_breaks=12):
    p = int(rng.integers(1, 6))
    kv = random_knot_vector(rng, p, n_breaks, max_mult=max_mult or p)
    return smooth_spline(rng, kv)


def quad_distance(s, s_hat, derivative=False):
    """L2 distance (or of first derivatives) on the fine breakpoints, independent Gauss rule."""
    from scipy.interpolate import BSpline

    x, w = gauss_points(s.space.breakpoints, s.degree + 2)
    f = BSpline(s.knots, s.coefficients, s.degree)
    g = BSpline(s_hat.knots, s_hat.coefficients, s_hat.degree)
    if derivative:
        f, g = f.derivative(), g.derivative()
    d = f(x) - g(x)
    return math.sqrt(np.sum(w * d * d))


class TestIndicators:
    def test_empty(self):
        s = Spline(validate_knot_vector([0, 0, 1, 1], 1), np.array([1.0, 2.0]))
        assert len(compute_all_indicators(s, "xi")) == 0
        rep = coarsen_l2(s, 1.0)
        assert rep.steps == [] and rep.stop_reason == "exhausted"

    def test_inserted_knot_has_zero_indicator(self, rng):
        kv = random_knot_vector(rng, 3, 5)
        s = insert_knot(random_spline(rng, kv), 0.5 * (kv.breakpoints[2] + kv.breakpoints[3]))
        cache = compute_all_indicators(s, "xi")
        assert cache.values[2] <= 1e-12 * np.abs(s.coefficients).max()
        assert cache.argmin() == 4

    @pytest.mark.parametrize("norm", ["xi", "cp", "D", "jump", "linf"])
    def test_fresh_contexts(self, rng, norm):
        s = random_case(rng)
        cache = compute_all_indicators(s, norm)
        assert len(cache) == s.space.num_breakpoints - 2
        for j, v in enumerate(cache.values, start=2):
            assert v == indicator(s, j, norm)

    def test_unknown(self, rng):
        with pytest.raises(SplineError):
            compute_all_indicators(random_case(rng), "l1")

    @pytest.mark.parametrize("norm", ["xi", "cp", "linf"])
    @pytest.mark.parametrize("seed", range(8))
    def test_update_equals_recompute(self, norm, seed):
        rng = np.random.default_rng(7000 + seed)
        s = random_case(rng, max_mult=None)
        cache = compute_all_indicators(s, norm)
        for _ in range(min(25, s.space.num_interior_knots)):
            j = int(rng.integers(2, s.space.num_breakpoints))
            _, m, i = s.space.interior_breakpoint(j)
            s, _ = remove_knot(s, j, norm)
            cache = update_indicators(cache, s, RemovalStep(j, i, m - 1))
            fresh = compute_all_indicators(s, norm)
            np.testing.assert_allclose(cache.values, fresh.values, rtol=0, atol=1e-14)

    def test_leftmost_removal_keeps_right_values(self, rng):
        kv = random_knot_vector(rng, 2, 15, max_mult=1)
        s = random_spline(rng, kv)
        cache = compute_all_indicators(s, "xi")
        _, m, i = kv.interior_breakpoint(2)
        s2, _ = remove_knot(s, 2, "xi")
        new = update_indicators(cache, s2, RemovalStep(2, i, m - 1))
        assert len(new) == len(cache) - 1
        # j >= 2 + p + 2 are far from the removal; values shift down by one index
        assert new.values[5:] == cache.values[6:]

    def test_multiple_knot_keeps_breakpoint(self):
        kv = open_knot_vector(np.arange(7.0), 3, multiplicity=2)
        s = Spline(kv, np.sin(np.arange(kv.n)))
        cache = compute_all_indicators(s, "xi")
        _, m, i = kv.interior_breakpoint(4)
        s2, _ = remove_knot(s, 4, "xi")
        new = update_indicators(cache, s2, RemovalStep(4, i, m - 1))
        assert s2.space.num_breakpoints == kv.num_breakpoints
        assert len(new) == len(cache)

    def test_stale(self, rng):
        s = random_case(rng)
        cache = compute_all_indicators(s, "xi")
        with pytest.raises(StaleCache):
            update_indicators(cache, s, RemovalStep(2, 5, 0))


class TestCoarsenL2:
    def test_tolerance_below_all_indicators(self, rng):
        s = random_case(rng)
        tiny = min(compute_all_indicators(s, "xi").values) / 2
        if tiny == 0:
            pytest.skip("spline happens to have a removable knot")
        rep = coarsen_l2(s, tiny)
        assert rep.steps == [] and rep.final is s and rep.stop_reason == "tolerance"

    def test_single_removable_knot(self, rng):
        kv = random_knot_vector(rng, 3, 6, max_mult=1)
        s = random_spline(rng, kv)
        x = 0.5 * (kv.breakpoints[3] + kv.breakpoints[4])
        fine = insert_knot(s, x)
        rep = coarsen_l2(fine, 1e-9)
        assert len(rep.steps) == 1 and rep.steps[0].breakpoint == x
        assert rep.final.space == s.space

    def test_equal_tolerance_does_not_qualify(self):
        s = Spline(validate_knot_vector([0, 0, 0, 1, 2, 3, 4, 4, 4], 2), np.array([0, 1, 0, 2, -1, 3.0]))
        eps = min(compute_all_indicators(s, "xi").values)
        rep = coarsen_l2(s, eps)
        assert rep.steps == []
        rep = coarsen_l2(s, math.nextafter(eps, 1.0))
        assert len(rep.steps) >= 1

    def test_polynomial_removes_everything(self, rng):
        coarse = validate_knot_vector([0.0] * 4 + [3.0] * 4, 3)
        fine = random_knot_vector(rng, 3, 10, max_mult=3)
        fine = validate_knot_vector((fine.knots - fine.a) / (fine.b - fine.a) * 3.0, 3)
        A = insertion_matrix(coarse, fine)
        s = Spline(fine, A @ np.array([1.0, -1.0, 2.0, 0.5]))
        rep = coarsen_l2(s, 1e-8)
        assert rep.final.space == coarse
        assert rep.stop_reason == "exhausted"

    @pytest.mark.parametrize("seed", range(12))
    def test_guarantee(self, seed):
        rng = np.random.default_rng(8000 + seed)
        s = random_case(rng)
        tol = 10 ** rng.uniform(-4, -1)
        rep = coarsen_l2(s, tol, check_cache=True)
        assert rep.total_error < tol
        w = xi_weights(s.space)
        assert np.linalg.norm(w * lifted_difference(s, rep.final)) < tol
        assert quad_distance(s, rep.final) < tol
        assert rep.final.space.is_subsequence_of(s.space)
        dofs = [s.dof] + [st.dof for st in rep.steps]
        assert all(a - b == 1 for a, b in zip(dofs, dofs[1:]))
        assert len(rep.steps) <= s.space.num_interior_knots
        cum = np.cumsum([st.epsilon for st in rep.steps])
        np.testing.assert_allclose([st.cumulative for st in rep.steps], cum, rtol=1e-12)

    def test_greedy_picks_minimum_first_index_on_ties(self):
        # the zero spline: every indicator is exactly zero; breakpoints go left to right
        kv = open_knot_vector(np.arange(6.0), 2)
        s = Spline(kv, np.zeros(kv.n))
        rep = coarsen_l2(s, 1e-10)
        assert [st.breakpoint for st in rep.steps][:2] == [1.0, 2.0]

    def test_rejects_bad_tol(self, rng):
        with pytest.raises(SplineError):
            coarsen_l2(random_case(rng), 0.0)


class TestCoarsenLinf:
    @pytest.mark.parametrize("seed", range(8))
    def test_guarantee(self, seed):
        rng = np.random.default_rng(9000 + seed)
        s = random_case(rng)
        tol = 10 ** rng.uniform(-3, -1)
        rep = coarsen_linf(s, tol, check_cache=True)
        assert rep.total_error < tol
        x = np.linspace(s.space.a, s.space.b, 10_000)
        assert np.max(np.abs(eval_spline(s, x) - eval_spline(rep.final, x))) < tol
        assert np.abs(lifted_difference(s, rep.final)).max() < tol

    def test_round_trip(self, rng):
        kv = random_knot_vector(rng, 3, 6, max_mult=2)
        s = random_spline(rng, kv)
        fine = insert_knot(s, 0.3 * kv.breakpoints[2] + 0.7 * kv.breakpoints[3])
        rep = coarsen_linf(fine, 1e-12)
        assert rep.final.space == kv
        np.testing.assert_allclose(rep.final.coefficients, s.coefficients, atol=1e-12)


class TestCoarsenH1:
    @pytest.mark.parametrize("seed", range(8))
    def test_guarantee(self, seed):
        rng = np.random.default_rng(10_000 + seed)
        s = random_case(rng)
        tol = 10 ** rng.uniform(-3, -1)
        rep = coarsen_h1(s, tol, check_cache=True)
        assert rep.final.coefficients[0] == s.coefficients[0]
        assert eval_spline(rep.final, s.space.a) == eval_spline(s, s.space.a)
        l2 = quad_distance(s, rep.final)
        semi = quad_distance(s, rep.final, derivative=True)
        assert math.hypot(l2, semi) < tol
        assert l2 <= (s.space.b - s.space.a) * semi + 1e-14
        assert rep.final.space.is_subsequence_of(s.space)

    def test_polynomial(self, rng):
        coarse = validate_knot_vector([0.0] * 4 + [2.0] * 4, 3)
        fine = open_knot_vector(np.linspace(0, 2, 9), 3, 2)
        s = Spline(fine, insertion_matrix(coarse, fine) @ np.array([0.2, 1.0, -1.0, 0.4]))
        rep = coarsen_h1(s, 1e-8)
        assert rep.final.space == coarse

    def test_preconditions(self):
        with pytest.raises(NotContinuous):
            coarsen_h1(Spline(validate_knot_vector([0, 0, 1, 1, 2, 2], 1), np.zeros(4)), 0.1)
        with pytest.raises(NotOpen):
            coarsen_h1(Spline(validate_knot_vector([-1, 0, 1, 2, 3], 1), np.zeros(3)), 0.1)


class TestBudget:
    def test_identity_and_zero(self, rng):
        s = random_case(rng)
        have = s.space.num_interior_knots
        assert coarsen_to_budget(s, have).final is s
        rep = coarsen_to_budget(s, 0)
        assert rep.final.space.num_interior_knots == 0
        assert rep.final.dof == s.degree + 1
        assert rep.stop_reason == "target"
        with pytest.raises(BudgetTooLarge):
            coarsen_to_budget(s, have + 1)
        with pytest.raises(BudgetTooLarge):
            coarsen_to_budget(s, -1)

    @pytest.mark.parametrize("norm", ["D", "jump"])
    def test_global_refit_required(self, rng, norm):
        s = random_case(rng)
        with pytest.raises(SplineError):
            coarsen_to_budget(s, 3, norm, "local")
        rep = coarsen_to_budget(s, 3, norm, "global-l2")
        assert rep.final.space.num_interior_knots == 3

    def test_strategies_logged(self, rng):
        s = random_case(rng)
        for norm in ("xi", "cp"):
            errs = []
            coarsen_to_budget(s, 2, norm, on_step=lambda st, cur: errs.append(quad_distance(s, cur)))
            assert len(errs) == s.space.num_interior_knots - 2
            assert all(np.isfinite(errs))

    def test_global_refit_is_projection(self, rng):
        from knotremoval.galerkin import project_spline

        s = random_case(rng)
        rep = coarsen_to_budget(s, 4, "xi", "global-l2")
        ref = project_spline(s, rep.final.space)
        np.testing.assert_allclose(rep.final.coefficients, ref.coefficients, atol=1e-12)


class TestReport:
    def test_csv_and_dict(self, rng):
        s = random_case(rng)
        rep = coarsen_l2(s, 1e-2)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "step,breakpoint,multiplicity_before,epsilon,cumulative,dof"
        assert len(lines) == len(rep.steps) + 1
        if rep.steps:
            fields = lines[1].split(",")
            assert float(fields[3]) == rep.steps[0].epsilon
        d = rep.to_dict()
        assert d["tol"] == 1e-2 and len(d["steps"]) == len(rep.steps)
        assert d["final"]["coefficients"] == rep.final.coefficients.tolist()

    def test_lifted_difference_rejects_unrelated(self, rng):
        s = random_case(rng)
        other = Spline(validate_knot_vector([s.space.a] * 2 + [s.space.b] * 2, 1), np.zeros(2))
        with pytest.raises(SplineError):
            lifted_difference(s, other)


def test_error_xi_of_budget_steps_matches_report(rng):
    s = random_case(rng)
    seen = []

    def check(step, cur):
        seen.append(step.epsilon)

    rep = coarsen_to_budget(s, 0, "xi", on_step=check)
    assert seen == [st.epsilon for st in rep.steps]
    first_j = int(np.argmin(compute_all_indicators(s, "xi").values)) + 2
    assert seen[0] == error_xi(s, build_removal_context(s.space, first_j))

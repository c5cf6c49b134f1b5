import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlkaczmarz import (
    FunctionProblem,
    LinearSystem,
    SolverConfig,
    StepBreakdown,
    compute_eta,
    make_broyden_tridiagonal,
    make_singular_broyden,
    solve,
)
from nlkaczmarz.analysis import (
    EstimationError,
    estimate_alpha,
    estimate_xi,
    recursion_factor,
    sigma_min_at,
    theoretical_constants,
    verify_recursion_bound,
    verify_step_ratio_bound,
)


def _ball_pairs(center, radius, count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        u, v = rng.normal(size=(2, center.size))
        out.append((center + radius * u / np.linalg.norm(u), center + radius * v / np.linalg.norm(v)))
    return out


class TestXi:
    def test_affine_is_zero(self, rng):
        A = rng.normal(size=(6, 4))
        p = LinearSystem(A, rng.normal(size=6))
        est = estimate_xi(p, [tuple(rng.normal(size=(2, 4))) for _ in range(10)])
        assert est.xi < 1e-13
        assert est.exceeds_half == 0

    def test_scalar_square(self):
        p = FunctionProblem(1, 1, lambda i, x: x[0] ** 2, [0.0], row=lambda i, x: ([0], [2 * x[0]]))
        est = estimate_xi(p, [(np.array([1.0]), np.array([1.1]))])
        assert est.xi == pytest.approx(0.01 / 0.21, rel=1e-12)
        assert est.samples == 1

    def test_singular_broyden_regression(self):
        # the squared residual has near-zero differences in some rows, so the
        # sampled ratio is far above 1/2 even at radius 0.01
        p = make_singular_broyden(20)
        est = estimate_xi(p, _ball_pairs(p.initial_point(), 0.01, 20, seed=0))
        assert est.xi == pytest.approx(665.2772199256484, rel=1e-9)
        assert est.exceeds_half == 16 and est.samples == 400

    def test_all_below_floor(self):
        p = LinearSystem(np.eye(2), np.zeros(2))
        x = np.ones(2)
        with pytest.raises(EstimationError):
            estimate_xi(p, [(x, x.copy())])


class TestAlpha:
    def test_identity(self, rng):
        p = LinearSystem(np.eye(5), np.zeros(5))
        assert estimate_alpha(p, [rng.normal(size=5)]) == 1.0

    def test_broyden_interior_rows(self):
        p = make_singular_broyden(10)
        x = p.initial_point()
        # squared form: row = 2 g_i (-1, 5, -2) and g_i = 1/2 at the start for interior rows
        assert estimate_alpha(p, [x]) == 30.0
        assert estimate_alpha(make_broyden_tridiagonal(10), [x]) == 30.0

    def test_monotone(self, rng):
        p = make_singular_broyden(8)
        pts = [rng.normal(size=8) for _ in range(6)]
        vals = [estimate_alpha(p, pts[: k + 1]) for k in range(6)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestSigmaMin:
    def test_identity(self):
        assert sigma_min_at(LinearSystem(np.eye(4), np.zeros(4)), np.zeros(4)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert sigma_min_at(LinearSystem(np.diag([1.0, 2.0, 3.0]), np.zeros(3)), np.zeros(3)) == pytest.approx(1.0)

    def test_rank_deficient_skips_zero(self):
        A = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert sigma_min_at(LinearSystem(A, np.zeros(2)), np.zeros(2)) == pytest.approx(1.0)

    def test_singular_broyden_root_regression(self):
        p = make_singular_broyden(10)
        rep = solve(p, SolverConfig("mrwnk-m", 2, 0.5, 0.2))
        assert rep.converged and rep.iterations == 13
        assert sigma_min_at(p, rep.x) == pytest.approx(0.006960923717942353, rel=1e-9)

    def test_non_finite(self):
        from nlkaczmarz import EvaluationError
        with pytest.raises(EvaluationError):
            sigma_min_at(LinearSystem(np.eye(2), np.zeros(2)), np.array([np.nan, 0.0]))


class TestConstants:
    def test_no_momentum(self):
        rc = theoretical_constants(0.1, 2.0, 0.5, 0.0, 3, 10)
        assert rc.a2 == 0.0 and rc.p == rc.a1 and rc.gamma == 0.0

    def test_linear_greedy_q2(self):
        rc = theoretical_constants(0.0, 4.0, 1.5, 0.0, 2, 7)
        assert rc.a1 == pytest.approx(1 - 1.5 ** 2 / (7 * 4.0), rel=1e-15)
        assert rc.valid

    def test_maxres_rho_one_matches_greedy(self):
        g = theoretical_constants(0.2, 3.0, 0.7, 0.3, 3, 12)
        r = theoretical_constants(0.2, 3.0, 0.7, 0.3, 3, 12, rho=1.0, rule="maxres")
        assert (g.a1, g.a2, g.p) == (r.a1, r.a2, r.p)

    def test_rho_enters_only_maxres(self):
        g = theoretical_constants(0.0, 1.0, 1.0, 0.0, 2, 2, rho=0.5)
        r = theoretical_constants(0.0, 1.0, 1.0, 0.0, 2, 2, rho=0.5, rule="maxres")
        assert g.a1 == pytest.approx(0.5) and r.a1 == pytest.approx(0.75)

    def test_json_keys(self):
        import json
        d = json.loads(theoretical_constants(0.0, 1.0, 1.0, 0.1, 2, 3).to_json())
        assert set(d) == {"xi", "alpha", "sigma_min", "a1", "a2", "p", "valid"}

    @pytest.mark.parametrize("kw", [dict(xi=0.5), dict(omega=1.0), dict(q=1), dict(rho=0.0), dict(rule="x")])
    def test_preconditions(self, kw):
        args = dict(xi=0.0, alpha=1.0, sigma_min=1.0, omega=0.0, q=2, m=3)
        args.update(kw)
        with pytest.raises(ValueError):
            theoretical_constants(**args)


class TestRecursionFactor:
    def test_examples(self):
        assert recursion_factor(0.5, 0.0) == (0.5, 0.0)
        p, g = recursion_factor(0.5, 0.25)
        assert p == pytest.approx((0.5 + math.sqrt(1.25)) / 2, rel=1e-15)
        assert p == pytest.approx(0.80902, abs=5e-6)
        assert g == pytest.approx(p - 0.5)
        p, _ = recursion_factor(0.9, 0.2)
        assert p == pytest.approx((0.9 + math.sqrt(0.81 + 0.8)) / 2, rel=1e-15)
        assert p > 1

    def test_negative_a2(self):
        with pytest.raises(ValueError):
            recursion_factor(0.5, -0.1)

    @given(st.floats(0, 0.999), st.floats(0, 0.999))
    def test_contraction_range(self, a1, a2):
        if a1 + a2 >= 1:
            return
        p, _ = recursion_factor(a1, a2)
        assert a1 + a2 <= p * (1 + 1e-15) and p < 1
        if a2 == 0:
            assert p == a1

    def test_monotone_on_grid(self):
        grid = np.linspace(0, 0.99, 34)
        P = np.array([[recursion_factor(a1, a2)[0] for a2 in grid] for a1 in grid])
        assert np.all(np.diff(P, axis=0) >= 0) and np.all(np.diff(P, axis=1) >= 0)


class TestRecursionBound:
    def test_geometric_tight(self):
        F = [1.0, 1.0] + [0.5 ** k for k in range(1, 30)]
        chk = verify_recursion_bound(F, 0.5, 0.0)
        assert chk.ok and chk.worst_hypothesis == 0.0 and chk.worst_bound == 0.0

    def test_geometric_tight_rounding(self):
        F = [1.0, 1.0]
        for _ in range(20):
            F.append(0.7 * F[-1])
        chk = verify_recursion_bound(F, 0.7, 0.0, rtol=1e-14)
        assert chk.ok and abs(chk.worst_bound) < 1e-14

    def test_constant_sequence_fails(self):
        chk = verify_recursion_bound(np.ones(10), 0.5, 0.3)
        assert not chk.hypothesis_holds and chk.worst_hypothesis == pytest.approx(0.2)

    def test_requires_equal_start(self):
        with pytest.raises(ValueError):
            verify_recursion_bound([1.0, 0.5, 0.2], 0.5, 0.0)

    def test_affine_momentum_run(self):
        # well-conditioned full-rank system with a small momentum weight
        rng = np.random.default_rng(11)
        A = np.eye(3) + 0.1 * rng.normal(size=(3, 3))
        xs = rng.normal(size=3)
        p = LinearSystem(A, A @ xs)
        omega = 0.05
        rep = solve(p, SolverConfig("mrwnk-m", 2, omega, 1.0, eps=1e-28), store_iterates=True)
        assert rep.converged
        rc = theoretical_constants(0.0, estimate_alpha(p, [xs]), sigma_min_at(p, xs), omega, 2, 3,
                                   rho=1.0, rule="maxres")
        assert rc.valid
        F = [float(np.sum((x - xs) ** 2)) for x in rep.iterates]
        chk = verify_recursion_bound([F[0]] + F, rc.a1, rc.a2)
        assert chk.bound_holds


class TestStepRatio:
    def test_single_row(self):
        # lhs = f^4 / (eta^2 ||row||^2) = 16 / 100, rhs = f^2 / alpha
        row = [(np.array([0, 2]), np.array([3.0, 4.0]))]
        ok, slack = verify_step_ratio_bound(np.array([2.0]), np.array([2.0]), row, 2, alpha=25.0)
        assert ok and slack == 0.0
        ok, slack = verify_step_ratio_bound(np.array([2.0]), np.array([2.0]), row, 2, alpha=100.0)
        assert ok and slack == pytest.approx(16 / 100 - 4 / 100)
        # alpha below the row norm is not a valid bound
        ok, slack = verify_step_ratio_bound(np.array([2.0]), np.array([2.0]), row, 2, alpha=10.0)
        assert not ok and slack < 0
        ok, slack = verify_step_ratio_bound(np.array([2.0]), np.array([2.0]), row, 2, alpha=50.0)
        assert ok and slack == pytest.approx(16 / 100 - 4 / 50)

    def test_random_five_rows_q3(self, rng):
        f = rng.normal(size=5)
        rows = [(np.arange(6), rng.normal(size=6)) for _ in range(5)]
        alpha = max(float(v @ v) for _, v in rows)
        ok, slack = verify_step_ratio_bound(f, compute_eta(f, 3), rows, 3, alpha)
        assert ok and slack > 0

    def test_orthonormal_rows_equality(self, rng):
        f = rng.normal(size=4)
        rows = [(np.array([i]), np.array([1.0])) for i in range(4)]
        # lhs = ||f||^2, rhs = ||f||^2 / |tau|: equality only for a single row
        ok, slack = verify_step_ratio_bound(f, compute_eta(f, 2), rows, 2, 1.0)
        assert ok and slack == pytest.approx(0.75 * float(f @ f), rel=1e-14)
        ok, slack = verify_step_ratio_bound(f[:1], compute_eta(f[:1], 2), rows[:1], 2, 1.0)
        assert slack == 0.0

    def test_zero_denominator(self):
        rows = [(np.array([0]), np.array([0.0]))]
        with pytest.raises(StepBreakdown):
            verify_step_ratio_bound(np.array([1.0]), np.array([1.0]), rows, 2, 1.0)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_solver_steps_have_positive_weighted_decrease(q):
    p = make_singular_broyden(40)
    seen = []

    def check(s):
        lq = float(np.sum(np.abs(s.f_tau) ** q))
        assert float(s.eta @ s.f_tau) == pytest.approx(lq, rel=1e-13)
        seen.append(float(s.eta @ s.f_tau) ** 2 / float(s.direction @ s.direction))

    solve(p, SolverConfig("rbwnk-m", q, 0.3, max_iter=100), callback=check)
    assert seen and min(seen) >= 0

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatinv.errors import SingularPencil
from flatinv.numerics import (
    LinearProgram,
    QuadraticProgram,
    SolveKind,
    is_spd,
    solve_lp,
    solve_lyapunov,
    solve_qp,
    sym_eig_max,
)


def box_lp(d):
    lhs = np.vstack([np.eye(d), -np.eye(d)])
    rhs = np.ones(2 * d)
    return lhs, rhs


class TestSolveLP:
    def test_lower_bound_at_zero(self):
        lp = LinearProgram([1.0], [[-1.0], [1.0]], [0.0, 5.0])
        st = solve_lp(lp)
        assert st.kind is SolveKind.OPTIMAL
        assert abs(st.objective) <= 1e-8
        assert abs(st.point[0]) <= 1e-8

    def test_contradictory_bounds_infeasible(self):
        lp = LinearProgram([0.0], [[1.0], [-1.0]], [-1.0, -1.0])
        assert solve_lp(lp).kind is SolveKind.INFEASIBLE

    def test_unit_box_corner(self):
        # oracle: enumerate the box vertices
        lhs, rhs = box_lp(2)
        cost = np.array([1.0, 1.0])
        best = min(
            cost @ np.array(v) for v in itertools.product([-1.0, 1.0], repeat=2)
        )
        st = solve_lp(LinearProgram(cost, lhs, rhs))
        assert st.kind is SolveKind.OPTIMAL
        assert abs(st.objective - best) <= 1e-8
        np.testing.assert_allclose(st.point, [-1.0, -1.0], atol=1e-8)

    def test_unbounded(self):
        st = solve_lp(LinearProgram([1.0, 0.0], [[0.0, 1.0]], [1.0]))
        assert st.kind is SolveKind.UNBOUNDED
        assert st.feasible_point is not None

    def test_no_constraints_zero_cost(self):
        st = solve_lp(LinearProgram([0.0, 0.0], np.zeros((0, 2)), np.zeros(0)))
        assert st.kind is SolveKind.OPTIMAL

    def test_zero_row_feasible_and_infeasible(self):
        st = solve_lp(LinearProgram([1.0], [[0.0], [-1.0]], [1.0, 0.0]))
        assert st.kind is SolveKind.OPTIMAL
        st = solve_lp(LinearProgram([1.0], [[0.0]], [-1.0]))
        assert st.kind is SolveKind.INFEASIBLE

    def test_determinism(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(12, 3))
        x0 = rng.normal(size=3)
        b = A @ x0 + rng.uniform(0.1, 1.0, size=12)
        c = rng.normal(size=3)
        lp = LinearProgram(c, A, b)
        s1 = solve_lp(lp)
        s2 = solve_lp(lp)
        assert s1.kind is s2.kind is SolveKind.OPTIMAL
        assert s1.objective == s2.objective
        assert np.array_equal(s1.point, s2.point)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 10_000))
    def test_random_feasible_lp_is_solved_and_bounded_by_probe(self, d, seed):
        rng = np.random.default_rng(seed)
        m = 3 * d
        A = rng.normal(size=(m, d))
        x0 = rng.normal(size=d)
        b = A @ x0 + rng.uniform(0.05, 1.0, size=m)
        # box rows keep it bounded
        lhs = np.vstack([A, np.eye(d), -np.eye(d)])
        rhs = np.concatenate([b, np.abs(x0) + 2.0, np.abs(x0) + 2.0])
        c = rng.normal(size=d)
        stat = solve_lp(LinearProgram(c, lhs, rhs))
        assert stat.kind is SolveKind.OPTIMAL
        assert np.max(lhs @ stat.point - rhs) <= 1e-8
        assert stat.objective <= c @ x0 + 1e-8


class TestSolveQP:
    def test_unconstrained_minimum_at_origin(self):
        qp = QuadraticProgram(2 * np.eye(3), np.zeros(3), np.zeros((0, 3)), np.zeros(0))
        stq = solve_qp(qp)
        assert stq.kind is SolveKind.OPTIMAL
        assert abs(stq.objective) <= 1e-12
        np.testing.assert_allclose(stq.point, np.zeros(3), atol=1e-10)

    def test_halfspace_projection(self):
        # min ||z||^2 s.t. z1 >= 1  ->  (1, 0), objective 1
        qp = QuadraticProgram(
            2 * np.eye(2), np.zeros(2), np.array([[-1.0, 0.0]]), np.array([-1.0])
        )
        stq = solve_qp(qp)
        assert stq.kind is SolveKind.OPTIMAL
        assert abs(stq.objective - 1.0) <= 1e-9
        np.testing.assert_allclose(stq.point, [1.0, 0.0], atol=1e-9)

    def test_simplex_grid_oracle(self):
        rng = np.random.default_rng(7)
        B = rng.normal(size=(3, 3))
        P = B @ B.T + 0.5 * np.eye(3)
        # simplex x >= l, sum x <= s with the origin outside
        low = np.array([0.2, -0.1, 0.3])
        lhs = np.vstack([-np.eye(3), np.ones((1, 3))])
        rhs = np.concatenate([-low, [2.0]])
        qp = QuadraticProgram(2 * P, np.zeros(3), lhs, rhs)
        stq = solve_qp(qp)
        assert stq.kind is SolveKind.OPTIMAL
        # dense barycentric grid oracle over the simplex vertices
        total = 2.0 - low.sum()
        verts = np.tile(low, (4, 1))
        verts[np.arange(3), np.arange(3)] += total
        n = 160
        i, j, k = np.meshgrid(
            np.arange(n + 1), np.arange(n + 1), np.arange(n + 1), indexing="ij"
        )
        mask = i + j + k <= n
        w = np.stack([i[mask], j[mask], k[mask], n - i[mask] - j[mask] - k[mask]], 1)
        pts = (w / n) @ verts
        vals = np.einsum("ij,jk,ik->i", pts, P, pts)
        best = float(np.min(vals))
        assert stq.objective <= best + 1e-9
        assert abs(stq.objective - best) <= 1e-4 * max(1.0, best)

    def test_feasible_perturbations_do_not_improve(self):
        rng = np.random.default_rng(11)
        for trial in range(5):
            d = 3
            B = rng.normal(size=(d, d))
            P = B @ B.T + np.eye(d)
            lhs = np.vstack([rng.normal(size=(4, d)), np.eye(d), -np.eye(d)])
            x0 = rng.normal(size=d) * 0.3
            rhs = np.concatenate(
                [lhs[:4] @ x0 + rng.uniform(0.1, 1.0, 4), np.ones(2 * d) * 3]
            )
            lin = rng.normal(size=d)
            qp = QuadraticProgram(2 * P, lin, lhs, rhs)
            stq = solve_qp(qp)
            assert stq.kind is SolveKind.OPTIMAL
            x = stq.point
            obj = stq.objective
            found = 0
            while found < 100:
                dvec = rng.normal(size=d)
                dvec /= np.linalg.norm(dvec)
                xp = x + 1e-4 * dvec
                if np.max(lhs @ xp - rhs) <= 0.0:
                    found += 1
                    val = xp @ P @ xp + lin @ xp
                    assert val >= obj - 1e-10
            del trial

    def test_equality_pair_rows(self):
        # min ||z||^2 on the segment {z1 + z2 = 1, |z| <= 2}
        lhs = np.array(
            [[1.0, 1.0], [-1.0, -1.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
        )
        rhs = np.array([1.0, -1.0, 2.0, 2.0, 2.0, 2.0])
        qp = QuadraticProgram(2 * np.eye(2), np.zeros(2), lhs, rhs)
        stq = solve_qp(qp)
        assert stq.kind is SolveKind.OPTIMAL
        np.testing.assert_allclose(stq.point, [0.5, 0.5], atol=1e-9)
        assert abs(stq.objective - 0.5) <= 1e-9

    def test_infeasible(self):
        qp = QuadraticProgram(
            2 * np.eye(1), np.zeros(1), np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0])
        )
        assert solve_qp(qp).kind is SolveKind.INFEASIBLE

    def test_determinism(self):
        rng = np.random.default_rng(5)
        P = np.diag(rng.uniform(0.5, 2.0, 4))
        lhs = rng.normal(size=(9, 4))
        rhs = lhs @ (0.1 * rng.normal(size=4)) + rng.uniform(0.05, 0.8, 9)
        qp = QuadraticProgram(2 * P, rng.normal(size=4), lhs, rhs)
        s1, s2 = solve_qp(qp), solve_qp(qp)
        assert s1.objective == s2.objective
        assert np.array_equal(s1.point, s2.point)

    def test_psd_validation(self):
        with pytest.raises(ValueError):
            QuadraticProgram(-np.eye(2), np.zeros(2), np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ValueError):
            QuadraticProgram(
                np.array([[1.0, 0.5], [0.0, 1.0]]),
                np.zeros(2),
                np.zeros((0, 2)),
                np.zeros(0),
            )


class TestSolveLyapunov:
    def test_diagonal_balance(self):
        X = solve_lyapunov(-np.eye(2), 2 * np.eye(2))
        np.testing.assert_allclose(X, np.eye(2), atol=1e-10)

    def test_residual_is_small_for_shifted_jordan(self):
        F = np.array([[0.0, 1.0], [0.0, 0.0]]) - 0.7 * np.eye(2)
        Q = np.eye(2)
        X = solve_lyapunov(F, Q)
        assert np.linalg.norm(F.T @ X + X @ F + Q, ord=np.inf) <= 1e-8

    def test_hurwitz_gives_pd(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(3, 3))
        A = A - (np.max(np.real(np.linalg.eigvals(A))) + 0.5) * np.eye(3)
        X = solve_lyapunov(A, np.eye(3))
        assert np.min(np.linalg.eigvalsh(X)) > 0
        assert is_spd(X)

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        for seed in range(5):
            A = rng.normal(size=(4, 4)) - 2 * np.eye(4)
            if np.max(np.real(np.linalg.eigvals(A))) >= -1e-3:
                continue
            Q = np.eye(4)
            X = solve_lyapunov(A, Q)
            assert np.max(np.abs(X - X.T)) <= 1e-10
            del seed

    def test_singular_raises(self):
        with pytest.raises(SingularPencil):
            solve_lyapunov(np.zeros((2, 2)), np.eye(2))

    def test_transposed_form(self):
        # passing F' solves F X + X F' + Qm = 0
        rng = np.random.default_rng(9)
        F = rng.normal(size=(3, 3)) - 2.5 * np.eye(3)
        Q = np.eye(3)
        X = solve_lyapunov(F.T, Q)
        assert np.linalg.norm(F @ X + X @ F.T + Q, ord=np.inf) <= 1e-8


def test_sym_eig_max():
    assert abs(sym_eig_max(np.diag([1.0, 5.0, -2.0])) - 5.0) <= 1e-12

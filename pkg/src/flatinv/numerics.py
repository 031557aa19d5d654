"""Dense deterministic LP / convex-QP / Lyapunov kernel.

All other modules funnel their optimization needs through this file:
polytope emptiness tests and facet pruning (LP), weighted-distance minima
over facets and the 1-D safety-filter program (QP), and the small matrix
equations behind gain and terminal-cost synthesis (Lyapunov).

Determinism is a hard requirement downstream (byte-identical pipeline
reruns), so the solvers use fixed pivoting and tie-break rules instead of
delegating to a third-party solver:

* ``solve_lp``   two-phase dense simplex with Bland's rule (cycling-free).
* ``solve_qp``   primal active-set method with lowest-index add/drop rules;
  feasible starting points come from the LP phase 1 unless supplied.
* ``solve_lyapunov``   vectorized Kronecker linear system (adequate for
  the n <= 4 matrices that occur here).

Inequality rows are rescaled to unit 2-norm internally; reported points,
objectives and residual checks always refer to the caller's data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import SingularPencil

# Feasibility / optimality tolerances shared by both solvers.  Phase-1
# objectives above _INFEAS_TOL certify emptiness (reproducibility of the
# empty-cell elimination depends on this exact threshold).
_INFEAS_TOL = 1e-9
_PIVOT_TOL = 1e-11
_RCOST_TOL = 1e-10
_FEAS_TOL = 1e-9
_CERT_TOL = 1e-8


class SolveKind(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"


@dataclass
class SolveStatus:
    """Solver outcome. ``point`` is present exactly when kind is OPTIMAL.

    ``feasible_point`` carries the last feasible iterate for UNBOUNDED
    problems (used by the Chebyshev-center sentinel path).
    """

    kind: SolveKind
    objective: float = np.nan
    point: np.ndarray | None = None
    feasible_point: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.point is not None) != (self.kind is SolveKind.OPTIMAL):
            raise ValueError("point must be present iff kind is OPTIMAL")


def _as_matrix(a, rows, cols, name):
    a = np.asarray(a, dtype=float)
    if a.shape != (rows, cols):
        raise ValueError(f"{name} must have shape {(rows, cols)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass
class LinearProgram:
    """min cost @ x  s.t.  ineq_lhs @ x <= ineq_rhs  (x free)."""

    cost: np.ndarray
    ineq_lhs: np.ndarray
    ineq_rhs: np.ndarray

    def __post_init__(self) -> None:
        self.cost = np.atleast_1d(np.asarray(self.cost, dtype=float))
        d = self.cost.shape[0]
        m = np.asarray(self.ineq_lhs).shape[0] if np.size(self.ineq_lhs) else 0
        self.ineq_lhs = _as_matrix(np.asarray(self.ineq_lhs, dtype=float).reshape(m, d) if m else np.zeros((0, d)), m, d, "ineq_lhs")
        self.ineq_rhs = np.asarray(self.ineq_rhs, dtype=float).reshape(m)
        if not np.all(np.isfinite(self.cost)) or not np.all(np.isfinite(self.ineq_rhs)):
            raise ValueError("LinearProgram entries must be finite")

    @property
    def dim(self) -> int:
        return self.cost.shape[0]


@dataclass
class QuadraticProgram:
    """min 0.5 x' hess x + lin @ x  s.t.  ineq_lhs @ x <= ineq_rhs.

    ``hess`` must be symmetric (1e-12) and positive semidefinite
    (min eigenvalue >= -1e-10); convexity is what makes the reported
    optimum global.
    """

    hess: np.ndarray
    lin: np.ndarray
    ineq_lhs: np.ndarray
    ineq_rhs: np.ndarray

    def __post_init__(self) -> None:
        self.lin = np.atleast_1d(np.asarray(self.lin, dtype=float))
        d = self.lin.shape[0]
        self.hess = _as_matrix(self.hess, d, d, "hess")
        m = np.asarray(self.ineq_lhs).shape[0] if np.size(self.ineq_lhs) else 0
        self.ineq_lhs = _as_matrix(np.asarray(self.ineq_lhs, dtype=float).reshape(m, d) if m else np.zeros((0, d)), m, d, "ineq_lhs")
        self.ineq_rhs = np.asarray(self.ineq_rhs, dtype=float).reshape(m)
        scale = max(1.0, float(np.max(np.abs(self.hess))))
        if np.max(np.abs(self.hess - self.hess.T)) > 1e-12 * scale:
            raise ValueError("hess must be symmetric within 1e-12")
        if d and float(np.min(np.linalg.eigvalsh(0.5 * (self.hess + self.hess.T)))) < -1e-10 * scale:
            raise ValueError("hess must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.lin.shape[0]


# ---------------------------------------------------------------------------
# Simplex
# ---------------------------------------------------------------------------


def _scale_rows(lhs: np.ndarray, rhs: np.ndarray):
    """Unit 2-norm row scaling; zero rows are separated out.

    Returns (lhs_s, rhs_s, keep_idx, zero_infeasible). A zero row
    0 @ x <= b is dropped when b >= -tol and marks the system infeasible
    when b < -tol.
    """
    norms = np.linalg.norm(lhs, axis=1)
    zero = norms <= 0.0
    if np.any(zero) and np.any(rhs[zero] < -_FEAS_TOL):
        return None, None, None, True
    keep = ~zero
    lhs_s = lhs[keep] / norms[keep, None] if np.any(keep) else lhs[:0]
    rhs_s = rhs[keep] / norms[keep] if np.any(keep) else rhs[:0]
    return lhs_s, rhs_s, np.where(keep)[0], False


class _Tableau:
    """Dense simplex tableau with Bland's anti-cycling rule."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = list(basis)
        self.m, self.n = m, n

    def drop(self, rows: list[int], cols_keep: int) -> None:
        """Remove redundant rows and truncate to the first cols_keep columns."""
        keep = [i for i in range(self.m) if i not in rows]
        idx = keep + [self.m]
        self.T = self.T[np.ix_(idx, list(range(cols_keep)) + [self.n])]
        self.basis = [self.basis[i] for i in keep]
        self.m, self.n = len(keep), cols_keep

    def set_cost(self, c: np.ndarray) -> None:
        self.T[self.m, : self.n] = c
        self.T[self.m, self.n] = 0.0
        for i, j in enumerate(self.basis):
            cj = self.T[self.m, j]
            if cj != 0.0:
                self.T[self.m] -= cj * self.T[i]

    def iterate(self, max_iter: int, allowed: np.ndarray) -> str:
        T, m, n = self.T, self.m, self.n
        for _ in range(max_iter):
            red = T[m, :n]
            cand = np.where((red < -_RCOST_TOL) & allowed)[0]
            if cand.size == 0:
                return "optimal"
            j = int(cand[0])  # Bland: lowest index enters
            col = T[:m, j]
            rows = np.where(col > _PIVOT_TOL)[0]
            if rows.size == 0:
                self._ray_col = j
                return "unbounded"
            ratios = T[rows, n] / col[rows]
            best = np.min(ratios)
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            # Bland: among ratio ties leave the basic variable of lowest index
            i = int(ties[np.argmin([self.basis[t] for t in ties])])
            self._pivot(i, j)
        return "max_iter"

    def _pivot(self, i: int, j: int) -> None:
        T = self.T
        T[i] = T[i] / T[i, j]
        col = T[:, j].copy()
        col[i] = 0.0
        T -= np.outer(col, T[i])
        self.basis[i] = j

    def solution(self, nvars: int) -> np.ndarray:
        x = np.zeros(self.n)
        for i, j in enumerate(self.basis):
            x[j] = self.T[i, self.n]
        return x[:nvars]


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> SolveStatus:
    """Two-phase dense simplex.

    OPTIMAL points satisfy every inequality within 1e-8 and the objective
    is optimal within 1e-8.  INFEASIBLE is reported only when the phase-1
    optimum exceeds 1e-9 and the recovered Farkas certificate
    (y >= 0, y'A = 0, y'b < 0) has residual below 1e-8; otherwise the
    status degrades to MAX_ITER so the caller can react.
    """
    d = lp.dim
    lhs_s, rhs_s, _, zero_bad = _scale_rows(lp.ineq_lhs, lp.ineq_rhs)
    if zero_bad:
        return SolveStatus(SolveKind.INFEASIBLE)
    m = lhs_s.shape[0]
    if max_iter is None:
        max_iter = 2000 + 200 * (m + d)

    if m == 0:
        if np.all(lp.cost == 0.0):
            return SolveStatus(SolveKind.OPTIMAL, 0.0, np.zeros(d))
        return SolveStatus(SolveKind.UNBOUNDED, -np.inf, feasible_point=np.zeros(d))

    # standard form: x = xp - xm, slack s:  [A -A I] y = b, y >= 0
    neg = rhs_s < 0.0
    A = np.hstack([lhs_s, -lhs_s, np.eye(m)])
    b = rhs_s.copy()
    A[neg] *= -1.0
    b[neg] *= -1.0
    n_core = 2 * d + m
    n_art = int(np.count_nonzero(neg))
    art_cols = {}
    if n_art:
        E = np.zeros((m, n_art))
        for k, i in enumerate(np.where(neg)[0]):
            E[i, k] = 1.0
            art_cols[int(i)] = n_core + k
        A = np.hstack([A, E])

    basis = []
    for i in range(m):
        basis.append(art_cols[i] if neg[i] else 2 * d + i)

    tab = _Tableau(A, b, basis)
    allowed = np.ones(A.shape[1], dtype=bool)
    if n_art:
        c1 = np.zeros(A.shape[1])
        c1[n_core:] = 1.0
        tab.set_cost(c1)
        status = tab.iterate(max_iter, allowed)
        if status == "max_iter":
            return SolveStatus(SolveKind.MAX_ITER)
        p1_obj = -tab.T[tab.m, tab.n]
        if p1_obj > _INFEAS_TOL:
            if _farkas_ok(tab, lhs_s, rhs_s, neg, art_cols, d, n_core):
                return SolveStatus(SolveKind.INFEASIBLE)
            return SolveStatus(SolveKind.MAX_ITER)
        # drive any remaining artificial variable out of the basis; rows
        # whose artificial cannot leave are redundant and get dropped
        stuck = []
        for i in range(m):
            if tab.basis[i] >= n_core:
                row = tab.T[i, :n_core]
                js = np.where(np.abs(row) > _PIVOT_TOL)[0]
                if js.size:
                    tab._pivot(i, int(js[0]))
                else:
                    stuck.append(i)
        tab.drop(stuck, n_core)
        allowed = np.ones(n_core, dtype=bool)

    c2 = np.zeros(tab.n)
    c2[:d] = lp.cost
    c2[d : 2 * d] = -lp.cost
    tab.set_cost(c2)
    status = tab.iterate(max_iter, allowed)
    y = tab.solution(2 * d)
    x = y[:d] - y[d:]
    if status == "max_iter":
        return SolveStatus(SolveKind.MAX_ITER)
    if status == "unbounded":
        return SolveStatus(SolveKind.UNBOUNDED, -np.inf, feasible_point=x)
    obj = float(lp.cost @ x)
    viol = lp.ineq_lhs @ x - lp.ineq_rhs if lp.ineq_lhs.size else np.zeros(0)
    if viol.size and np.max(viol) > 1e-8 * (1.0 + np.max(np.abs(lp.ineq_rhs))):
        return SolveStatus(SolveKind.MAX_ITER)
    return SolveStatus(SolveKind.OPTIMAL, obj, x)


def _farkas_ok(tab, lhs_s, rhs_s, neg, art_cols, d, n_core) -> bool:
    """Validate the infeasibility certificate recovered from phase 1.

    With phase-1 duals u (read off the reduced costs of the initial
    identity columns: slack for b >= 0 rows, artificial otherwise) the
    Farkas vector for the original system  lhs_s x <= rhs_s  is
    y_i = -u_i on plain rows and y_i = +u_i on sign-flipped rows, and
    must satisfy y >= 0, y' lhs_s = 0, y' rhs_s < 0.
    """
    red = tab.T[tab.m, :]
    m = lhs_s.shape[0]
    y = np.zeros(m)
    for i in range(m):
        if neg[i]:
            y[i] = 1.0 - red[art_cols[i]]
        else:
            y[i] = red[2 * d + i]
    if np.any(y < -1e-8):
        return False
    y = np.maximum(y, 0.0)
    scale = max(1.0, float(np.sum(y)))
    resid_a = np.linalg.norm(y @ lhs_s, ord=np.inf)
    val_b = float(y @ rhs_s)
    return resid_a <= _CERT_TOL * scale and val_b < 0.0


def find_feasible_point(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    """Phase-1 helper: a point with lhs @ x <= rhs, or None if empty."""
    d = lhs.shape[1] if lhs.ndim == 2 else 0
    st = solve_lp(LinearProgram(np.zeros(d), lhs, rhs))
    if st.kind is SolveKind.OPTIMAL:
        return st.point
    if st.kind is SolveKind.UNBOUNDED:
        return st.feasible_point
    return None


# ---------------------------------------------------------------------------
# Active-set QP
# ---------------------------------------------------------------------------


def _detect_equalities(lhs: np.ndarray, rhs: np.ndarray) -> list[tuple[int, int]]:
    """Exactly negated row pairs (a, b) / (-a, -b) encode equalities."""
    pairs = []
    used = set()
    m = lhs.shape[0]
    for i in range(m):
        if i in used:
            continue
        for j in range(i + 1, m):
            if j in used:
                continue
            if np.array_equal(lhs[i], -lhs[j]) and rhs[i] == -rhs[j]:
                pairs.append((i, j))
                used.add(i)
                used.add(j)
                break
    return pairs


def solve_qp(
    qp: QuadraticProgram,
    start: np.ndarray | None = None,
    max_iter: int | None = None,
) -> SolveStatus:
    """Primal active-set method for convex QPs.

    Constraint rows that appear as exactly negated pairs are treated as
    equalities (permanently in the working set); this is how facet
    polytopes encode their supporting hyperplane.  Lowest-index add/drop
    rules keep the path deterministic.  The returned point satisfies the
    KKT conditions with residual <= 1e-8.
    """
    d = qp.dim
    G, c = qp.hess, qp.lin
    lhs_s, rhs_s, keep, zero_bad = _scale_rows(qp.ineq_lhs, qp.ineq_rhs)
    if zero_bad:
        return SolveStatus(SolveKind.INFEASIBLE)
    m = lhs_s.shape[0]
    if max_iter is None:
        max_iter = 100 + 20 * (m + d)

    eq_pairs = _detect_equalities(lhs_s, rhs_s)
    eq_rows = sorted({i for i, _ in eq_pairs})
    mirror_rows = {j for _, j in eq_pairs}

    if start is not None:
        x = np.asarray(start, dtype=float).copy()
        if m and np.max(lhs_s @ x - rhs_s) > _FEAS_TOL:
            x = find_feasible_point(lhs_s, rhs_s)
    else:
        x = np.zeros(d)
        if m and np.max(lhs_s @ x - rhs_s) > _FEAS_TOL:
            x = find_feasible_point(lhs_s, rhs_s)
    if x is None:
        return SolveStatus(SolveKind.INFEASIBLE)
    x = np.asarray(x, dtype=float)

    def kkt_step(work: list[int]):
        k = len(work)
        K = np.zeros((d + k, d + k))
        K[:d, :d] = G
        if k:
            Aw = lhs_s[work]
            K[:d, d:] = Aw.T
            K[d:, :d] = Aw
        rhs_v = np.concatenate([-(G @ x + c), np.zeros(k)])
        try:
            sol = np.linalg.solve(K, rhs_v)
        except np.linalg.LinAlgError:
            K[:d, :d] = G + 1e-12 * max(1.0, np.trace(G) / max(d, 1)) * np.eye(d)
            sol = np.linalg.lstsq(K, rhs_v, rcond=None)[0]
        return sol[:d], sol[d:]

    # initial working set: equalities plus an independent subset of rows
    # active at x (lowest index first)
    work: list[int] = list(eq_rows)
    if m:
        act = np.where(np.abs(lhs_s @ x - rhs_s) <= _FEAS_TOL)[0]
        for i in act:
            i = int(i)
            if i in work or i in mirror_rows:
                continue
            trial = work + [i]
            if np.linalg.matrix_rank(lhs_s[trial], tol=1e-10) == len(trial):
                work.append(i)

    gnorm = max(1.0, float(np.linalg.norm(G, ord=np.inf)), float(np.linalg.norm(c)))
    for _ in range(max_iter):
        p, lam = kkt_step(work)
        if np.linalg.norm(p) <= 1e-11 * (1.0 + np.linalg.norm(x)):
            # Bland-style: among negative multipliers drop the lowest row index
            neg_rows = [
                (row, pos)
                for pos, row in enumerate(work)
                if row not in eq_rows and lam[pos] < -1e-9 * gnorm
            ]
            if not neg_rows:
                return _qp_finish(qp, lhs_s, rhs_s, work, eq_rows, x, lam)
            work.pop(min(neg_rows)[1])
            continue
        alpha = 1.0
        blocker = -1
        if m:
            denom = lhs_s @ p
            slack = rhs_s - lhs_s @ x
            for i in range(m):
                if i in work or i in mirror_rows:
                    continue
                if denom[i] > 1e-12:
                    r = max(slack[i], 0.0) / denom[i]
                    if r < alpha - 1e-14:
                        alpha = r
                        blocker = i
        x = x + alpha * p
        if blocker >= 0 and alpha < 1.0:
            trial = work + [blocker]
            if np.linalg.matrix_rank(lhs_s[trial], tol=1e-10) == len(trial):
                work.append(blocker)
            # dependent blockers cannot occur for a strict descent step;
            # if numerics disagree the loop simply continues
    return SolveStatus(SolveKind.MAX_ITER)


def _qp_finish(qp, lhs_s, rhs_s, work, eq_rows, x, lam) -> SolveStatus:
    """Polish on the final active set and verify the KKT residual."""
    d = qp.dim
    G, c = qp.hess, qp.lin
    k = len(work)
    K = np.zeros((d + k, d + k))
    K[:d, :d] = G
    if k:
        K[:d, d:] = lhs_s[work].T
        K[d:, :d] = lhs_s[work]
    rhs_v = np.concatenate([-c, rhs_s[work] if k else np.zeros(0)])
    try:
        sol = np.linalg.solve(K, rhs_v)
        x_pol, lam_pol = sol[:d], sol[d:]
        ok = (not lhs_s.shape[0]) or np.max(lhs_s @ x_pol - rhs_s) <= _FEAS_TOL
        lam_ok = all(
            lam_pol[pos] >= -1e-9 for pos, row in enumerate(work) if row not in eq_rows
        )
        if ok and lam_ok:
            x, lam = x_pol, lam_pol
    except np.linalg.LinAlgError:
        pass
    grad = G @ x + c
    if k:
        grad = grad + lhs_s[work].T @ lam
    scale = max(1.0, float(np.linalg.norm(G @ x + c)))
    if np.linalg.norm(grad, ord=np.inf) > _CERT_TOL * scale:
        return SolveStatus(SolveKind.MAX_ITER)
    obj = float(0.5 * x @ qp.hess @ x + qp.lin @ x)
    return SolveStatus(SolveKind.OPTIMAL, obj, x)


# ---------------------------------------------------------------------------
# Lyapunov
# ---------------------------------------------------------------------------


def solve_lyapunov(F: np.ndarray, Qm: np.ndarray) -> np.ndarray:
    """Solve F' X + X F + Qm = 0 for symmetric X via Kronecker products.

    Unique solvability requires that no two eigenvalues of F sum to zero.
    The transposed-equation variant needed elsewhere is obtained by
    passing F transposed.  Raises SingularPencil when the vectorized
    system is numerically singular or the residual check fails.
    """
    F = np.asarray(F, dtype=float)
    Qm = np.asarray(Qm, dtype=float)
    n = F.shape[0]
    if F.shape != (n, n) or Qm.shape != (n, n):
        raise ValueError("F and Qm must be square of the same size")
    eye = np.eye(n)
    M = np.kron(eye, F.T) + np.kron(F.T, eye)
    if n and np.linalg.cond(M) > 1e12:
        raise SingularPencil("eigenvalue pairing makes the Lyapunov solve singular")
    vecX = np.linalg.solve(M, -Qm.flatten(order="F"))
    X = vecX.reshape((n, n), order="F")
    X = 0.5 * (X + X.T)
    resid = np.linalg.norm(F.T @ X + X @ F + Qm, ord=np.inf)
    if resid > _CERT_TOL * max(1.0, np.linalg.norm(Qm, ord=np.inf)):
        raise SingularPencil(f"Lyapunov residual {resid:.3e} exceeds tolerance")
    return X


def sym_eig_max(M: np.ndarray) -> float:
    """Largest eigenvalue of the symmetrized matrix."""
    return float(np.max(np.linalg.eigvalsh(0.5 * (M + M.T))))


def is_spd(M: np.ndarray) -> bool:
    """Cholesky-based positive definiteness check."""
    try:
        np.linalg.cholesky(0.5 * (M + M.T))
        return True
    except np.linalg.LinAlgError:
        return False

"""A small dense simplex solver for inequality-constrained linear programs.

Solves  min c.x  subject to  A x <= b  with free variables.  Free
variables are split into positive and negative parts, slacks turn the
inequalities into equalities, and artificial variables provide a phase-1
starting basis when some right-hand sides are negative.  Pivoting uses
Bland's rule throughout, which rules out cycling at the cost of speed;
the problems built here have a few dozen variables and a few hundred
rows, so that trade is free.

The basis inverse is maintained explicitly and refreshed periodically to
keep the accumulated pivot error in check.
"""

from __future__ import annotations

import dataclasses

import numpy as np

FEAS_TOL = 1e-9
#: minimum pivot magnitude accepted in the ratio test; smaller pivots are
#: numerically unreliable as basis updates
PIVOT_TOL = 1e-7
REFRESH_EVERY = 60
MAX_ITER = 20000


@dataclasses.dataclass
class LPSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray | None
    objective: float | None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    farkas: np.ndarray | None = None  # phase-1 duals certifying infeasibility


def _simplex_core(A: np.ndarray, b: np.ndarray, c: np.ndarray,
                  basis: list, iterations: int = 0,
                  n_enter: int | None = None):
    """Phase core: min c.x, A x = b, x >= 0, starting from a feasible basis.

    Columns with index >= n_enter never enter the basis (used to freeze
    leftover artificial variables in phase 2).  Returns (status, x, basis,
    duals, iterations).
    """
    m, n = A.shape
    if n_enter is None:
        n_enter = n
    basis = list(basis)
    try:
        b_inv = np.linalg.inv(A[:, basis])
    except np.linalg.LinAlgError:
        b_inv = np.linalg.pinv(A[:, basis])
    since_refresh = 0
    while iterations < MAX_ITER:
        if since_refresh >= REFRESH_EVERY:
            try:
                b_inv = np.linalg.inv(A[:, basis])
            except np.linalg.LinAlgError:
                # drifted into a numerically singular basis; the
                # pseudo-inverse keeps the iteration moving and the next
                # pivots repair the basis
                b_inv = np.linalg.pinv(A[:, basis])
            since_refresh = 0
        xb = b_inv @ b
        duals = c[basis] @ b_inv
        reduced = c - duals @ A
        entering = -1
        in_basis = set(basis)
        for j in range(n_enter):
            if j not in in_basis and reduced[j] < -FEAS_TOL:
                entering = j
                break
        if entering < 0:
            x = np.zeros(n)
            x[basis] = xb
            return "optimal", x, basis, duals, iterations
        direction = b_inv @ A[:, entering]
        ratios = []
        for i in range(m):
            if direction[i] > PIVOT_TOL:
                ratios.append((xb[i] / direction[i], basis[i], i))
        if not ratios:
            # fall back to marginal pivots before declaring unbounded
            ratios = [(xb[i] / direction[i], basis[i], i)
                      for i in range(m) if direction[i] > FEAS_TOL]
        if not ratios:
            return "unbounded", None, basis, duals, iterations
        best = min(r for r, _, _ in ratios)
        # ties broken by smallest basic-variable index (Bland)
        leaving_row = min((var, i) for r, var, i in ratios
                          if r <= best + FEAS_TOL)[1]
        # pivot: replace the leaving basic variable
        basis[leaving_row] = entering
        pivot = direction[leaving_row]
        eta = -direction / pivot
        eta[leaving_row] = 1.0 / pivot
        update = np.eye(m)
        update[:, leaving_row] = eta
        b_inv = update @ b_inv
        since_refresh += 1
        iterations += 1
    return "iteration_limit", None, basis, None, iterations


def solve_inequalities(A_ub: np.ndarray, b_ub: np.ndarray, c: np.ndarray,
                       sense: str = "min") -> LPSolution:
    """Optimize c.x over {x : A_ub x <= b_ub} with x free."""
    A_ub = np.asarray(A_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A_ub.shape
    if sense == "max":
        inner = solve_inequalities(A_ub, b_ub, -c, "min")
        if inner.objective is not None:
            inner.objective = -inner.objective
        return inner
    if sense != "min":
        raise ValueError("sense must be 'min' or 'max'")

    # columns: x+ (n), x- (n), slack (m), artificial (added as needed)
    A_eq = np.hstack([A_ub, -A_ub, np.eye(m)])
    b_eq = b_ub.copy()
    cost = np.concatenate([c, -c, np.zeros(m)])
    art_cols = []
    basis = []
    for i in range(m):
        if b_eq[i] >= 0:
            basis.append(2 * n + i)  # the slack
        else:
            A_eq[i] *= -1.0
            b_eq[i] *= -1.0
            col = np.zeros((m, 1))
            col[i, 0] = 1.0
            art_cols.append(col)
            basis.append(2 * n + m + len(art_cols) - 1)
    if art_cols:
        A_full = np.hstack([A_eq] + art_cols)
        n_art = len(art_cols)
        phase1_cost = np.concatenate([np.zeros(2 * n + m), np.ones(n_art)])
        status, x1, basis, duals, iters = _simplex_core(
            A_full, b_eq, phase1_cost, basis)
        if status != "optimal":
            return LPSolution(status=status, x=None, objective=None,
                              iterations=iters)
        if phase1_cost @ x1 > 1e-7:
            return LPSolution(status="infeasible", x=None, objective=None,
                              iterations=iters, farkas=duals)
        # drive any artificial still in the basis out by pivoting on a
        # non-artificial column with nonzero entry in its row
        def _inverse(mat):
            try:
                return np.linalg.inv(mat)
            except np.linalg.LinAlgError:
                return np.linalg.pinv(mat)

        b_inv = _inverse(A_full[:, basis])
        for row, var in enumerate(list(basis)):
            if var >= 2 * n + m:
                tableau_row = b_inv[row] @ A_full
                for j in range(2 * n + m):
                    if j not in basis and abs(tableau_row[j]) > 1e-7:
                        basis[row] = j
                        b_inv = _inverse(A_full[:, basis])
                        break
        # degenerate artificial rows that cannot be pivoted out carry a
        # zero basic value; they stay basic but are barred from entering
        full_cost = np.concatenate([cost, np.zeros(n_art)])
        A_phase2 = A_full
        n_enter = 2 * n + m
    else:
        full_cost = cost
        A_phase2 = A_eq
        n_enter = 2 * n + m
        iters = 0

    status, x_std, basis, duals, iters = _simplex_core(
        A_phase2, b_eq, full_cost, basis, iterations=0, n_enter=n_enter)
    if status != "optimal":
        return LPSolution(status=status, x=None, objective=None,
                          iterations=iters)
    x = x_std[:n] - x_std[n:2 * n]
    reduced = full_cost - duals @ A_phase2
    return LPSolution(status="optimal", x=x,
                      objective=float(full_cost @ x_std),
                      reduced_costs=reduced[: 2 * n + m],
                      iterations=iters)

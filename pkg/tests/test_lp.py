"""Dense simplex solver, cross-checked against vertex enumeration."""

import itertools

import numpy as np
import pytest

from qwgeom.lp import solve_inequalities


def _vertex_optimum(A, b, c, sense):
    """Brute-force optimum over all basic feasible points of A x <= b."""
    m, n = A.shape
    best = None
    for rows in itertools.combinations(range(m), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            value = float(c @ x)
            if best is None or (value < best if sense == "min"
                                else value > best):
                best = value
    return best


def test_single_variable_lower_bound():
    # min x subject to x >= 3, written as -x <= -3
    result = solve_inequalities(np.array([[-1.0]]), np.array([-3.0]),
                                np.array([1.0]))
    assert result.status == "optimal"
    assert result.objective == pytest.approx(3.0, abs=1e-9)
    assert result.x[0] == pytest.approx(3.0, abs=1e-9)


def test_maximization_sense():
    # max x + y over the unit box
    A = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([1.0, 1.0, 0.0, 0.0])
    result = solve_inequalities(A, b, np.array([1.0, 1.0]), sense="max")
    assert result.status == "optimal"
    assert result.objective == pytest.approx(2.0, abs=1e-9)


def test_degenerate_ties_terminate():
    # several constraints meet at the optimum; Bland's rule must not cycle
    A = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0],
                  [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([1.0, 1.0, 2.0, 0.0, 0.0])
    result = solve_inequalities(A, b, np.array([-1.0, -1.0]))
    assert result.status == "optimal"
    assert result.objective == pytest.approx(-1.0, abs=1e-9)


def test_infeasible_is_reported_with_farkas_duals():
    A = np.array([[1.0], [-1.0]])
    b = np.array([1.0, -2.0])  # x <= 1 and x >= 2
    result = solve_inequalities(A, b, np.array([1.0]))
    assert result.status == "infeasible"
    assert result.farkas is not None


def test_unbounded_is_reported():
    result = solve_inequalities(np.array([[-1.0]]), np.array([0.0]),
                                np.array([1.0]))  # min x, x >= 0 free below?
    # x >= 0 bounds min x at 0; flip to get an unbounded direction
    assert result.status == "optimal"
    result = solve_inequalities(np.array([[1.0]]), np.array([1.0]),
                                np.array([1.0]))  # min x with only x <= 1
    assert result.status == "unbounded"


def test_free_variables_take_negative_values():
    A = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, 5.0])  # -5 <= x <= -1
    result = solve_inequalities(A, b, np.array([1.0]))
    assert result.status == "optimal"
    assert result.x[0] == pytest.approx(-5.0, abs=1e-9)


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(41)
    solved = 0
    while solved < 60:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(n + 1, 2 * n + 6))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m) + 1.0
        c = rng.normal(size=n)
        sense = "min" if rng.random() < 0.5 else "max"
        result = solve_inequalities(A, b, c, sense)
        reference = _vertex_optimum(A, b, c, sense)
        if result.status != "optimal":
            # agree that no bounded optimum exists at a vertex
            assert reference is None or result.status == "unbounded"
            continue
        assert reference is not None
        assert result.objective == pytest.approx(reference, abs=1e-8)
        assert np.all(A @ result.x <= b + 1e-8)
        solved += 1


def test_solution_satisfies_constraints_tightly():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(30, 6))
    b = rng.normal(size=30) + 2.0
    c = rng.normal(size=6)
    result = solve_inequalities(A, b, c)
    if result.status == "optimal":
        assert np.max(A @ result.x - b) <= 1e-8

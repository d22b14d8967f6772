"""Certified bounds: polytope generation, LP solves, sweeps, soundness."""

import numpy as np
import pytest

from qwgeom.bounds import (N_VARS, SLOT_INDEX, BoundError, bound_performance,
                           build_polytope, dump_lp, mixture_weights,
                           sweep_bounds, sweep_csv, sweep_summary,
                           weighted_sum)
from qwgeom.measure import exact_performance, product_form
from qwgeom.model import (F1, F2, PerformanceFunctional, load_fixture,
                          evaluate_functional)
from qwgeom.oracle import finite_horizon_reward, oracle_performance
from qwgeom.perturbation import (PerturbationResult, build_product_perturbation,
                                 candidate_terms)


def _slot_functional(solution, slot):
    idx = SLOT_INDEX[slot]
    return PerformanceFunctional.from_coefficients(solution[idx:idx + 8])


@pytest.fixture(scope="module")
def ex4_product():
    walk, functional = load_fixture("EX4")
    point = candidate_terms(walk, 12)[6]
    pert = build_product_perturbation(walk, point)
    return walk, functional, pert, bound_performance(pert, functional)


def test_weighted_sum_product_form_origin_reward():
    assert weighted_sum(F2, product_form(0.5, 0.5)) == pytest.approx(0.25)


def test_weighted_sum_unit_reward_is_one():
    ones = PerformanceFunctional(f10=1.0, f20=1.0, f30=1.0, f40=1.0)
    assert weighted_sum(ones, product_form(0.3, 0.8)) == pytest.approx(1.0)


def test_weighted_sum_matches_exact_performance():
    from qwgeom.detection import detect
    from qwgeom.measure import solve_coefficients
    walk, functional = load_fixture("EX3")
    mixture = solve_coefficients(walk, detect(walk).terms)
    assert weighted_sum(functional, mixture) == pytest.approx(
        exact_performance(mixture, functional), abs=1e-10)


def test_zero_perturbation_gives_exact_value(ex4_product):
    """With q = 0 the certification collapses to the exact weighted sum."""
    _, functional, pert, _ = ex4_product
    zero = PerturbationResult(
        input_rescaled=pert.perturbed, perturbed=pert.perturbed, C=1.0,
        rates=pert.rates, q_horizontal={1: 0.0, -1: 0.0},
        q_vertical={1: 0.0, -1: 0.0}, target_measure=pert.target_measure,
        anchors=pert.anchors, policy=pert.policy)
    result = bound_performance(zero, functional)
    exact = weighted_sum(functional, pert.target_measure)
    assert result.F_up == pytest.approx(exact, abs=1e-7)
    assert result.F_low == pytest.approx(exact, abs=1e-7)


def test_ex4_product_bound_is_finite_and_ordered(ex4_product):
    _, _, _, result = ex4_product
    assert np.isfinite(result.F_low) and np.isfinite(result.F_up)
    assert result.F_low <= result.F_up


def test_optimal_solutions_satisfy_all_constraints(ex4_product):
    _, _, _, result = ex4_product
    A = np.array([c.row for c in result.constraints])
    b = np.array([c.rhs for c in result.constraints])
    for solution in (result.solution_up, result.solution_low):
        assert np.max(A @ solution - b) <= 1e-8


def test_constraint_count_is_grid_independent(ex4_product):
    _, functional, pert, result = ex4_product
    again = build_polytope(pert, functional)
    assert len(again) == len(result.constraints)


def test_bias_bounds_dominate_finite_horizon_differences(ex4_product):
    """beta_d(z) >= F^t(z+d) - F^t(z) for the optimal solution, uniformly
    over horizons, on the truncation interior."""
    _, functional, pert, result = ex4_product
    T, N = 120, 40
    rewards = finite_horizon_reward(pert.input_rescaled, functional, T, N)
    sups = {}
    for name, (di, dj) in (("bE", (1, 0)), ("bW", (-1, 0)),
                           ("bN", (0, 1)), ("bS", (0, -1))):
        sup = np.full((N - 2, N - 2), -np.inf)
        for t in range(T + 1):
            grid = rewards[t]
            for i in range(N - 2):
                for j in range(N - 2):
                    if i + di < 0 or j + dj < 0:
                        continue
                    diff = grid[i + di, j + dj] - grid[i, j]
                    if diff > sup[i, j]:
                        sup[i, j] = diff
        sups[name] = sup
    for name, sup in sups.items():
        beta = _slot_functional(result.solution_up, name)
        for i in range(N - 2):
            for j in range(N - 2):
                if not np.isfinite(sup[i, j]):
                    continue
                assert evaluate_functional(beta, i, j) >= sup[i, j] - 1e-6, \
                    (name, i, j)


def test_bound_soundness_sample():
    walk, functional = load_fixture("EX5")
    truth = oracle_performance(walk, functional, N=150).value
    for point in candidate_terms(walk, 5)[1:4]:
        pert = build_product_perturbation(walk, point)
        result = bound_performance(pert, functional)
        assert result.F_low - 1e-6 <= truth <= result.F_up + 1e-6


def test_bound_rejects_signed_rewards(ex4_product):
    _, _, pert, _ = ex4_product
    with pytest.raises(ValueError):
        bound_performance(pert, PerformanceFunctional(f41=-1.0))


def test_sweep_aggregation_is_monotone():
    walk, functional = load_fixture("EX5")
    points = candidate_terms(walk, 6)
    rows, _ = sweep_bounds(walk, functional, points)
    partial = sweep_summary(rows[:3])
    full = sweep_summary(rows)
    if partial["min_F_up"] is not None:
        assert full["min_F_up"] <= partial["min_F_up"] + 1e-12
    if partial["max_F_low"] is not None:
        assert full["max_F_low"] >= partial["max_F_low"] - 1e-12


def test_sweep_records_failures_and_continues():
    walk, functional = load_fixture("EX5")
    points = candidate_terms(walk, 3) + [(0.5, 0.9)]  # last not on Q
    rows, _ = sweep_bounds(walk, functional, points)
    assert len(rows) == 4
    assert rows[-1].error is not None
    assert rows[-1].F_up is None


def test_sweep_csv_format():
    walk, functional = load_fixture("EX5")
    rows, _ = sweep_bounds(walk, functional,
                           candidate_terms(walk, 3) + [(0.5, 0.9)])
    text = sweep_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "candidate_index,rho,sigma,C,F_low,F_up"
    assert len(lines) == 5
    assert lines[-1].endswith(",,,")  # failed candidate leaves blanks
    bounded = 0
    for line, row in zip(lines[1:4], rows[:3]):
        fields = line.split(",")
        assert len(fields) == 6
        if row.error is None:
            float(fields[4]), float(fields[5])
            bounded += 1
    assert bounded >= 1


def test_dump_lp_renders_named_rows(ex4_product):
    _, _, _, result = ex4_product
    text = dump_lp(result.constraints)
    assert "<=" in text
    assert "Fbar.f10" in text or "G.f10" in text
    assert text.count("\n") == len(result.constraints)


def test_mixture_weights_length():
    weights = mixture_weights(product_form(0.4, 0.6))
    assert weights.shape == (8,)
    assert N_VARS == 48


def test_upper_bound_never_below_exact_target_value(ex4_product):
    # the target measure is feasible for the perturbed walk, so its exact
    # value must sit inside the certified interval for that walk
    _, functional, pert, result = ex4_product
    value = exact_performance(pert.target_measure, functional)
    perturbed_truth = oracle_performance(pert.perturbed, functional,
                                         N=150).value
    assert value == pytest.approx(perturbed_truth, abs=1e-6)

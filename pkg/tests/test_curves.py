"""Balance curves: construction, roots, branch points, intersections."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwgeom.curves import (BranchPoints, _real_poly_roots, boundary_explicit,
                           branch_points, build_curves, classify_point,
                           eval_curve, intersect_QH, intersect_QV,
                           q_roots_fixed_x, q_roots_fixed_y)
from qwgeom.model import load_fixture

from conftest import random_walk


def test_all_ones_point_on_q_fixtures():
    for name in ("EX1", "EX2", "EX3", "EX4", "EX5"):
        walk, _ = load_fixture(name)
        system = build_curves(walk)
        assert abs(eval_curve(system, "Q", 1.0, 1.0)) < 1e-12


def test_all_ones_point_on_q_random_walks():
    rng = np.random.default_rng(11)
    for _ in range(200):
        system = build_curves(random_walk(rng))
        assert abs(eval_curve(system, "Q", 1.0, 1.0)) < 1e-12


def test_q_roots_fixed_x_lie_on_q(ex3):
    walk = ex3[0]
    system = build_curves(walk)
    for x in (0.2, 0.3, 0.5, 0.8):
        roots, degenerate = q_roots_fixed_x(system, x)
        assert not degenerate
        for y in roots:
            assert abs(eval_curve(system, "Q", x, float(y))) < 1e-10


def test_q_roots_fixed_y_lie_on_q(ex4):
    walk = ex4[0]
    system = build_curves(walk)
    for y in (0.2, 0.4, 0.7):
        roots, _ = q_roots_fixed_y(system, y)
        for x in roots:
            assert abs(eval_curve(system, "Q", float(x), y)) < 1e-10


def test_boundary_explicit_points_on_curves(ex4):
    walk = ex4[0]
    system = build_curves(walk)
    point = boundary_explicit(system, "H", 0.4)
    assert point is not None
    assert abs(eval_curve(system, "H", *point)) < 1e-12
    point = boundary_explicit(system, "V", 0.4)
    assert point is not None
    assert abs(eval_curve(system, "V", *point)) < 1e-12
    with pytest.raises(ValueError):
        boundary_explicit(system, "Q", 0.4)


def test_branch_points_ordering_and_tangency(ex4):
    walk = ex4[0]
    system = build_curves(walk)
    bp = branch_points(system)
    assert bp.y_b <= bp.y_t
    assert bp.x_r <= bp.x_l
    disc = system.discriminant_y()
    for x, y in ((bp.x_b, bp.y_b), (bp.x_t, bp.y_t)):
        assert abs(np.polynomial.polynomial.polyval(x, disc)) < 1e-9
        assert abs(eval_curve(system, "Q", x, y)) < 1e-9


def test_intersections_lie_on_both_curves():
    for name in ("EX2", "EX3", "EX4", "EX5"):
        walk, _ = load_fixture(name)
        system = build_curves(walk)
        h_set = intersect_QH(system)
        v_set = intersect_QV(system)
        assert len(h_set) <= 3 and len(v_set) <= 3
        for x, y in h_set:
            assert 0.0 < x < 1.0 and 0.0 < y < 1.0
            assert abs(eval_curve(system, "Q", x, y)) < 1e-8
            assert abs(eval_curve(system, "H", x, y)) < 1e-8
        for x, y in v_set:
            assert abs(eval_curve(system, "Q", x, y)) < 1e-8
            assert abs(eval_curve(system, "V", x, y)) < 1e-8
        assert h_set == sorted(h_set)


def test_classify_point_labels(ex4):
    walk = ex4[0]
    system = build_curves(walk)
    bp = branch_points(system)
    xs = np.linspace(bp.x_b + 1e-4, bp.x_t - 1e-4, 25)
    seen = set()
    for x in xs:
        roots, _ = q_roots_fixed_x(system, float(x))
        for y in roots:
            if not 0.0 < y < 1.5:
                continue
            arc, band = classify_point(system, bp, (float(x), float(y)))
            assert arc in ("Q00", "Q01", "Q10", "Q11")
            assert band in ("Q_l", "Q_c", "Q_r")
            seen.add(arc)
    assert len(seen) >= 2  # both y-branches visited


def test_classify_point_rejects_off_curve(ex4):
    system = build_curves(ex4[0])
    bp = branch_points(system)
    with pytest.raises(ValueError):
        classify_point(system, bp, (0.5, 0.99))


@given(st.lists(st.floats(min_value=-3.0, max_value=3.0), min_size=2,
                max_size=4, unique=True))
@settings(max_examples=60, deadline=None)
def test_real_poly_roots_recovers_constructed_roots(roots):
    coeffs = np.array([1.0])
    for r in roots:
        coeffs = np.polynomial.polynomial.polymul(coeffs, [-r, 1.0])
    found = _real_poly_roots(coeffs)
    for r in sorted(roots):
        assert np.min(np.abs(found - r)) < 1e-6


def test_branch_points_is_frozen_record():
    bp = BranchPoints(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    with pytest.raises(Exception):
        bp.x_b = 0.0

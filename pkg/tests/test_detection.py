"""Decision procedure: companions, chains, canonical order, outcomes."""

import numpy as np
import pytest

from qwgeom.curves import build_curves, eval_curve, intersect_QH, intersect_QV
from qwgeom.detection import (DetectionConfig, GeometricTerm,
                              UnsupportedRegimeError, companion_horizontal,
                              companion_vertical, detect)
from qwgeom.model import RandomWalk, load_fixture

from conftest import random_walk


def _on_curve_point(system, rng):
    """A random point of Q inside the open unit square, or None."""
    from qwgeom.curves import q_roots_fixed_x
    for _ in range(20):
        x = rng.uniform(0.05, 0.95)
        roots, _ = q_roots_fixed_x(system, x)
        inside = [float(y) for y in roots if 0.01 < y < 0.99]
        if inside:
            return (x, inside[rng.integers(len(inside))])
    return None


def test_companions_satisfy_vieta_products():
    """rho * rho' = Cbar/Abar at fixed sigma, and the mirror image."""
    import numpy.polynomial.polynomial as npoly
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 200:
        walk = random_walk(rng)
        system = build_curves(walk)
        point = _on_curve_point(system, rng)
        if point is None:
            continue
        term = GeometricTerm(*point)
        partner = companion_horizontal(system, term)
        if partner is not None:
            abar = npoly.polyval(term.sigma, system.Abar)
            cbar = npoly.polyval(term.sigma, system.Cbar)
            assert abs(term.rho * partner.rho - cbar / abar) < 1e-10
            assert abs(eval_curve(system, "Q", partner.rho,
                                  partner.sigma)) < 1e-8
        partner = companion_vertical(system, term)
        if partner is not None:
            a = npoly.polyval(term.rho, system.A)
            c = npoly.polyval(term.rho, system.C)
            assert abs(term.sigma * partner.sigma - c / a) < 1e-10
        checked += 1


def test_companion_returns_none_on_double_root(ex4):
    system = build_curves(ex4[0])
    from qwgeom.curves import branch_points
    bp = branch_points(system)
    # at a vertical-tangent point the two sigma roots coincide
    term = GeometricTerm(bp.x_t, bp.y_t)
    assert companion_vertical(system, term) is None


def test_detect_ex2_not_representable(ex2):
    outcome = detect(ex2)
    assert not outcome.representable
    assert outcome.terms == []
    assert outcome.parity is None


def test_detect_ex3_representable_five_terms(ex3):
    outcome = detect(ex3[0])
    assert outcome.representable
    assert len(outcome.terms) == 5
    assert outcome.parity == "odd"
    assert outcome.endpoints is not None
    # canonical order: consecutive terms share exactly one coordinate,
    # alternating between sigma (horizontal coupling) and rho (vertical)
    terms = outcome.terms
    for k in range(len(terms) - 1):
        share_sigma = abs(terms[k].sigma - terms[k + 1].sigma) < 1e-9
        share_rho = abs(terms[k].rho - terms[k + 1].rho) < 1e-9
        assert share_sigma != share_rho
        if k % 2 == 0:
            assert share_sigma
        else:
            assert share_rho


def test_detect_terms_lie_on_q(ex3):
    walk = ex3[0]
    outcome = detect(walk)
    system = build_curves(walk)
    for term in outcome.terms:
        assert abs(eval_curve(system, "Q", term.rho, term.sigma)) < 1e-8
        assert 0.0 < term.rho < 1.0 and 0.0 < term.sigma < 1.0


def test_detect_endpoints_on_axis_sets(ex3):
    walk = ex3[0]
    outcome = detect(walk)
    system = build_curves(walk)
    h_set = intersect_QH(system)
    v_set = intersect_QV(system)
    (set_a, idx_a), (set_b, idx_b) = outcome.endpoints
    first, last = outcome.terms[0], outcome.terms[-1]
    start = (h_set if set_a == "H" else v_set)[idx_a]
    end = (h_set if set_b == "H" else v_set)[idx_b]
    # endpoints match the sets to the membership tolerance of detection
    assert abs(first.rho - start[0]) < 1e-3
    assert abs(last.rho - end[0]) < 1e-3


def test_detect_is_deterministic(ex3):
    first = detect(ex3[0])
    second = detect(ex3[0])
    assert [(t.rho, t.sigma) for t in first.terms] == \
        [(t.rho, t.sigma) for t in second.terms]


def test_detect_chains_have_no_cycles_and_alternate():
    for name in ("EX1", "EX2", "EX3", "EX4", "EX5"):
        walk, _ = load_fixture(name)
        outcome = detect(walk)
        for chain in outcome.chains:
            points = [(t.rho, t.sigma) for t in chain.terms]
            for a in range(len(points)):
                for b in range(a + 1, len(points)):
                    assert (abs(points[a][0] - points[b][0]) > 1e-9
                            or abs(points[a][1] - points[b][1]) > 1e-9)
            move = chain.first_move
            for a, b in zip(chain.terms, chain.terms[1:]):
                if move == "horizontal":
                    assert abs(a.sigma - b.sigma) < 1e-9
                else:
                    assert abs(a.rho - b.rho) < 1e-9
                move = ("vertical" if move == "horizontal" else "horizontal")


def test_unsupported_regime_raises():
    # no east, northeast or north interior movement
    interior = np.array([[0.2, 0.2, 0.0],
                         [0.3, 0.2, 0.0],
                         [0.1, 0.0, 0.0]])
    walk = RandomWalk(interior,
                      [0.2, 0.8, 0.0],
                      [0.2, 0.7, 0.0])
    with pytest.raises(UnsupportedRegimeError):
        detect(walk)


def test_detect_rejects_invalid_walk():
    walk = RandomWalk(np.full((3, 3), 0.2), [0.1, 0.1, 0.1],
                      [0.1, 0.1, 0.1])
    with pytest.raises(ValueError):
        detect(walk)


def test_membership_tolerance_is_configurable(ex3):
    # an absurdly tight tolerance breaks endpoint matching
    outcome = detect(ex3[0], DetectionConfig(membership_tol=1e-14))
    assert not outcome.representable

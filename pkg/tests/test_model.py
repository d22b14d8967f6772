"""Walk and functional plumbing: validation, regions, serialization."""

import json

import numpy as np
import pytest

from qwgeom.model import (F1, F2, FIXTURE_NAMES, PerformanceFunctional, Region,
                          RandomWalk, evaluate_functional, fixture_path,
                          load_fixture, load_model, normalize_walk, region_of,
                          save_model, transition_rates, validate_walk)

from conftest import random_walk


def test_region_classification():
    assert region_of(0, 0) is Region.ORIGIN
    assert region_of(3, 0) is Region.HORIZONTAL_AXIS
    assert region_of(0, 7) is Region.VERTICAL_AXIS
    assert region_of(2, 5) is Region.INTERIOR
    with pytest.raises(ValueError):
        region_of(-1, 0)


def test_fixtures_are_valid():
    for name in FIXTURE_NAMES:
        walk, _ = load_fixture(name)
        report = validate_walk(walk)
        assert report.ok, (name, report.violations)


def test_transition_rates_are_distributions():
    rng = np.random.default_rng(7)
    for _ in range(20):
        walk = random_walk(rng)
        for state in ((0, 0), (1, 0), (0, 1), (4, 0), (0, 4), (3, 3)):
            rates = transition_rates(walk, *state)
            assert abs(sum(rates.values()) - 1.0) < 1e-12
            # the origin self-loop is a computed remainder, so allow
            # rounding at machine precision
            assert all(p >= -1e-12 for p in rates.values())
            for (di, dj) in rates:
                assert state[0] + di >= 0 and state[1] + dj >= 0


def test_validation_catches_bad_rows():
    walk = RandomWalk(np.full((3, 3), 0.2), [0.1, 0.1, 0.1], [0.1, 0.1, 0.1])
    report = validate_walk(walk)
    assert not report.ok


def test_normalize_walk_restores_row_sums():
    rng = np.random.default_rng(3)
    base = random_walk(rng)
    skewed = RandomWalk(base.interior * 2.0, base.horizontal * 2.0,
                        base.vertical * 2.0)
    fixed = normalize_walk(skewed)
    assert validate_walk(fixed).ok


def test_model_json_round_trip(tmp_path):
    walk, functional = load_fixture("EX4")
    path = tmp_path / "model.json"
    save_model(path, walk, functional)
    walk2, functional2 = load_model(path)
    assert np.allclose(walk.interior, walk2.interior)
    assert np.allclose(walk.horizontal, walk2.horizontal)
    assert np.allclose(walk.vertical, walk2.vertical)
    assert functional2 == functional


def test_bundled_fixture_files_match_builtins():
    for name in FIXTURE_NAMES:
        walk, functional = load_fixture(name)
        walk2, functional2 = load_model(str(fixture_path(name)))
        assert np.allclose(walk.interior, walk2.interior)
        assert functional2 == functional


def test_functional_presets():
    assert F1.f11 == 1.0 and F1.f41 == 1.0
    assert F2.f30 == 1.0
    assert evaluate_functional(F1, 5, 0) == 5.0
    assert evaluate_functional(F1, 5, 3) == 5.0
    assert evaluate_functional(F1, 0, 4) == 0.0
    assert evaluate_functional(F2, 0, 0) == 1.0
    assert evaluate_functional(F2, 1, 0) == 0.0
    with pytest.raises(ValueError):
        PerformanceFunctional.preset("f3")


def test_functional_nonnegativity_check():
    assert F1.is_nonnegative()
    assert F2.is_nonnegative()
    assert not PerformanceFunctional(f41=-1.0).is_nonnegative()
    assert not PerformanceFunctional(f30=-0.1).is_nonnegative()
    # negative offset compensated by the corner value is fine
    assert PerformanceFunctional(f40=-0.5, f41=1.0).is_nonnegative()


def test_coefficient_vector_round_trip():
    functional = PerformanceFunctional(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    again = PerformanceFunctional.from_coefficients(functional.coefficients())
    assert again == functional


def test_load_model_rejects_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"interior": [[1.0]]}))
    with pytest.raises(ValueError):
        load_model(path)

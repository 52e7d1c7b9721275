"""Unit tests for services.rationals."""
# pylint: disable=C

import math
from fractions import Fraction

import pytest

from entities.specs import GridConfig
from services.dp_core import RandomSource
from services.linfeas import FeasibilityTarget, depth
from services.rationals import RationalGrid, grid_enumerate, lf_domain, tukey_bounds, tukey_domain, validate_properness
from services.tukey import TukeyTarget
from utils.errors import ParameterError


def brute_force(s_max, t_max):
    return sorted({Fraction(s, t) for s in range(-s_max, s_max + 1) for t in range(1, t_max + 1)})


def feasible_system(d, X, n, seed):
    rng = RandomSource(seed)
    witness = [rng.integer(-1, 2) for _ in range(d)]
    constraints = []
    while len(constraints) < n:
        a = tuple(rng.integer(-2, 3) for _ in range(d))
        if not any(a):
            continue
        value = sum(c * v for c, v in zip(a, witness))
        w = value - rng.integer(0, 2)
        constraints.append((a, w if w >= -X else value))
    return constraints, tuple(witness)


class TestRationalGrid:
    def test_small_grid(self):
        grid = RationalGrid(2, 2)
        expected = [Fraction(-2), Fraction(-1), Fraction(-1, 2), Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)]
        assert list(grid) == expected
        assert grid.size == 7
        assert grid.size == len(brute_force(2, 2))
        assert not grid.contains(Fraction(3, 2))

    @pytest.mark.parametrize("s_max,t_max", [(1, 1), (3, 4), (7, 6), (12, 10)])
    def test_matches_brute_force(self, s_max, t_max):
        grid = RationalGrid(s_max, t_max)
        expected = brute_force(s_max, t_max)
        assert grid.size == len(expected)
        assert list(grid_enumerate(grid)) == expected
        for rank, value in enumerate(expected):
            assert grid.at(rank) == value
            assert grid.rank(value) == rank + 1
            assert grid.count_below(value) == rank

    def test_rank_between_elements(self):
        grid = RationalGrid(3, 3)
        expected = brute_force(3, 3)
        probe = Fraction(2, 7)
        assert grid.rank(probe) == sum(1 for v in expected if v <= probe)
        assert grid.next_after(probe) == min(v for v in expected if v >= probe)

    def test_next_after_strict(self):
        grid = RationalGrid(4, 2)
        assert grid.next_after(Fraction(1, 2), strict=True) == 1
        assert grid.next_after(Fraction(1, 2)) == Fraction(1, 2)
        assert grid.next_after(4, strict=True) is None

    def test_contains(self):
        grid = RationalGrid(5, 3)
        assert grid.contains(Fraction(5, 3))
        assert not grid.contains(Fraction(1, 4))
        assert not grid.contains(6)

    def test_large_grid_is_not_materialised(self):
        grid = RationalGrid(10 ** 6, 50)
        middle = grid.at(grid.size // 2)
        assert middle == 0
        assert grid.rank(middle) == grid.size // 2 + 1

    def test_rejects_empty_bounds(self):
        with pytest.raises(ParameterError):
            RationalGrid(0, 3)


class TestGridBounds:
    def test_lf_domain_first_coordinate(self):
        grid = lf_domain(1, 2, 3)
        assert grid.s_max == (2 * 2) * 3 ** 2
        assert grid.t_max == 2 * 3 ** 2

    def test_lf_domain_uses_previous_denominator(self):
        grid = lf_domain(2, 2, 3, prev_denominator=5)
        assert grid.t_max == 2 * 5 * 3 ** 2
        assert grid.s_max == 4 ** 2 * 3 ** 4

    def test_tukey_bounds(self):
        assert tukey_bounds(1, 2, 2) == (2 * 32, 32)
        assert tukey_bounds(2, 2, 2, prev_denominator=3) == (2 * 12, 12)

    def test_tukey_scale_and_override(self):
        scaled = GridConfig(denominator_scale=0.5)
        assert tukey_bounds(1, 2, 2, config=scaled) == (2 * 16, 16)
        overridden = GridConfig(overrides={1: (5, 2)})
        assert tukey_domain(1, 2, 2, config=overridden) == RationalGrid(5, 2)

    def test_coordinate_out_of_range(self):
        with pytest.raises(ParameterError):
            tukey_bounds(3, 2, 2)

    def test_factorial_growth(self):
        assert tukey_bounds(1, 3, 1)[1] == math.factorial(3) * 2 ** 3


class TestProperness:
    def test_planar_tukey_grid_is_proper(self):
        points = [(0, 0), (2, 0), (0, 2), (2, 2), (1, 1)]
        report = validate_properness(points, TukeyTarget(2, 2), mesh_step=Fraction(1, 2), max_prefixes=3)
        assert report.proper
        assert report.checks[0].coordinate == 1
        assert any(check.coordinate == 2 for check in report.checks)

    def test_tiny_override_is_flagged(self):
        points = [(3, 3), (3, 4), (4, 3), (4, 4), (3, 3)]
        grid = GridConfig(overrides={1: (1, 1), 2: (1, 1)})
        report = validate_properness(points, TukeyTarget(2, 4, grid), mesh_step=Fraction(1, 2), max_prefixes=1)
        assert not report.proper
        assert report.worst_shortfall > 0

    @pytest.mark.parametrize("offset", range(4))
    def test_feasibility_grids_are_proper(self, seed, offset):
        constraints, witness = feasible_system(2, 4, 8, seed + offset)
        assert depth(constraints, witness) == len(constraints)
        report = validate_properness(constraints, FeasibilityTarget(2, 4), mesh_step=Fraction(1, 4), max_prefixes=4)
        assert report.proper
        assert {check.coordinate for check in report.checks} == {1, 2}

    def test_one_variable_feasibility_grid_is_proper(self, seed):
        constraints, witness = feasible_system(1, 4, 10, seed)
        assert depth(constraints, witness) == len(constraints)
        report = validate_properness(constraints, FeasibilityTarget(1, 4), mesh_step=Fraction(1, 8))
        assert report.proper

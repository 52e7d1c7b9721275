"""Unit tests for services.linfeas."""
# pylint: disable=C

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from scipy.optimize import linprog

from entities.geometry import Constraint, ConstraintSet, Hypothesis, LabeledExample
from entities.privacy import PrivacyParams
from services.approximation import generalization_sample_size, mesh_probes
from services.dp_core import RandomSource
from services.linfeas import (CDepthOracle, FeasibilityTarget, cdepth, depth, empirical_error,
                              feasibility_sample_requirements, learn_halfspace, predict, private_linear_feasibility,
                              q_lf, reduce_examples_to_constraints, threshold_levels)
from utils.errors import InsufficientSamplesError, ParameterError, UnsupportedDimensionError

TRIANGLE = [((1, 0), 0), ((0, 1), 0), ((-1, -1), -2)]


def random_system(n, seed):
    rng = RandomSource(seed)
    constraints = []
    while len(constraints) < n:
        a = (rng.integer(-2, 3), rng.integer(-2, 3))
        if a != (0, 0):
            constraints.append((a, rng.integer(-3, 4)))
    return constraints


def _nonempty(constraints):
    rows = [[-c for c in a] for a, _ in constraints]
    result = linprog(np.zeros(2), A_ub=rows, b_ub=[-w for _, w in constraints], bounds=[(None, None)] * 2,
                     method="highs")
    return result.status == 0


def _in_closed_hull(pieces, x):
    """x in the closed convex hull of a union of nonempty polyhedra {z : <a, z> >= w}, by disjunctive LP."""
    width = 3 * len(pieces)
    rows, equalities = [], [np.zeros(width), np.zeros(width), np.zeros(width)]
    for k, piece in enumerate(pieces):
        for a, w in piece:
            row = np.zeros(width)
            row[3 * k:3 * k + 3] = [-a[0], -a[1], w]
            rows.append(row)
        equalities[0][3 * k] = 1
        equalities[1][3 * k + 1] = 1
        equalities[2][3 * k + 2] = 1
    bounds = [(None, None), (None, None), (0, None)] * len(pieces)
    result = linprog(np.zeros(width), A_ub=np.array(rows), b_ub=np.zeros(len(rows)), A_eq=np.array(equalities),
                     b_eq=[float(x[0]), float(x[1]), 1.0], bounds=bounds, method="highs")
    return result.status == 0


def cdepth_by_lp(constraints, probes):
    """Largest y whose depth region hull holds the probe, from every y-subset of constraints."""
    levels = []
    for y in range(1, len(constraints) + 1):
        pieces = [[constraints[j] for j in subset] for subset in combinations(range(len(constraints)), y)]
        pieces = [piece for piece in pieces if _nonempty(piece)]
        if not pieces:
            break
        levels.append(pieces)
    return {x: max((y for y, pieces in enumerate(levels, start=1) if _in_closed_hull(pieces, x)), default=0)
            for x in probes}


class TestDepth:
    def test_counts_satisfied_constraints(self):
        assert depth(TRIANGLE, (1, 1)) == 3
        assert depth(TRIANGLE, (3, 3)) == 2
        assert depth(TRIANGLE, (Fraction(-1, 2), 0)) == 2

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            depth(TRIANGLE, (1,))


class TestThresholdLevels:
    def test_interval(self):
        assert threshold_levels([(1, 0), (-1, -2)]) == [(None, None), (0, 2)]

    def test_constant_shifts_levels(self):
        assert threshold_levels([(2, 1)], constant=1) == [(None, None), (Fraction(1, 2), None)]

    def test_no_thresholds(self):
        assert threshold_levels([], constant=2) == [(None, None), (None, None)]


class TestCDepth:
    def test_line(self):
        oracle = CDepthOracle([((1,), 0), ((-1,), -2)])
        assert oracle.top == 2
        assert oracle.cdepth((1,)) == 2
        assert oracle.cdepth((5,)) == 1
        assert oracle.breakpoints(()) == [0, 2]

    def test_triangle(self):
        oracle = CDepthOracle(TRIANGLE)
        assert oracle.top == 3
        assert oracle.cdepth((Fraction(1, 2), Fraction(1, 2))) == 3
        assert oracle.cdepth((3, 3)) == 2
        assert oracle.cdepth((-5, -5)) == 2
        assert depth(TRIANGLE, (-5, -5)) == 1
        assert oracle.first_coordinate_max(1) == 3
        assert oracle.first_coordinate_max(3) == 2

    def test_cdepth_dominates_depth(self):
        constraints = [((1, 2), 1), ((-2, 1), -3), ((1, -1), -2), ((0, 1), -1), ((-1, -1), -4)]
        for x in range(-4, 5):
            for y in range(-4, 5):
                assert cdepth(constraints, (x, y)) >= depth(constraints, (x, y))

    def test_parallel_family(self):
        oracle = CDepthOracle([((1, 0), 1), ((-1, 0), -3)])
        assert oracle.cdepth((2, 100)) == 2
        assert oracle.cdepth((5, 0)) == 1
        assert oracle.top == 2

    def test_always_satisfied_constraint(self):
        assert cdepth([((0, 0), 0)], (7, -7)) == 1
        assert q_lf([((0, 0), 0), ((1, 0), 1)], (0, 0)) == Fraction(1, 2)

    def test_three_variables_unsupported(self):
        with pytest.raises(UnsupportedDimensionError):
            CDepthOracle([((1, 0, 0), 0)])
        with pytest.raises(UnsupportedDimensionError):
            FeasibilityTarget(3, 2)


class TestCDepthProperties:
    FAR = [(10, -7), (-9, 9), (0, 12), (-11, -3)]

    def test_triangle_matches_linear_programs(self):
        probes = [(0, 0), (1, 1), (3, 3), (-5, -5), (Fraction(1, 2), Fraction(1, 2)), (-1, 0)]
        expected = cdepth_by_lp(TRIANGLE, probes)
        assert expected[(1, 1)] == 3
        for probe in probes:
            assert cdepth(TRIANGLE, probe) == expected[probe]

    @pytest.mark.parametrize("offset", range(3))
    def test_random_systems_match_linear_programs(self, seed, offset):
        constraints = random_system(5, seed + offset)
        probes = mesh_probes(2, 3, Fraction(1, 1)) + self.FAR
        expected = cdepth_by_lp(constraints, probes)
        for probe in probes:
            assert cdepth(constraints, probe) == expected[probe]

    @pytest.mark.parametrize("offset", range(4))
    def test_depth_is_bounded_by_cdepth(self, seed, offset):
        constraints = random_system(7, seed + offset)
        n, d = len(constraints), 2
        probes = FeasibilityTarget(2, 3).probes(constraints) + mesh_probes(2, 3, Fraction(1, 2))
        for probe in probes:
            convexified = cdepth(constraints, probe)
            assert depth(constraints, probe) <= convexified
            assert depth(constraints, probe) >= (d + 1) * convexified - d * n

    @pytest.mark.parametrize("offset", range(3))
    def test_hull_of_deep_points_keeps_cdepth(self, seed, offset):
        constraints = random_system(7, seed + offset)
        probes = mesh_probes(2, 3, Fraction(1, 1))
        values = {probe: cdepth(constraints, probe) for probe in probes}
        for a in probes:
            for b in probes:
                floor = min(values[a], values[b])
                for weight in (Fraction(1, 3), Fraction(1, 2)):
                    between = tuple(weight * u + (1 - weight) * v for u, v in zip(a, b))
                    assert cdepth(constraints, between) >= floor

    @pytest.mark.parametrize("offset", range(3))
    def test_one_constraint_changes_depth_by_at_most_one(self, seed, offset):
        constraints = random_system(6, seed + offset)
        replacements = [((1, 1), 2), ((-2, 0), 3), ((0, -1), -3)]
        neighbours = [constraints[:k] + [r] + constraints[k + 1:] for k in range(len(constraints)) for r in replacements]
        for probe in mesh_probes(2, 3, Fraction(1, 2)):
            value = depth(constraints, probe)
            for other in neighbours:
                assert abs(depth(other, probe) - value) <= 1


class TestPrivateLinearFeasibility:
    def test_requirements(self):
        requirements = feasibility_sample_requirements(2, 2, 0.2, 0.1, PrivacyParams(epsilon=1.0))
        assert requirements.step_alpha == pytest.approx(0.2 / 16)
        assert requirements.rule == "basic"

    def test_one_variable(self, seed):
        system = ConstraintSet(d=1, X=3, constraints=[Constraint(a=(1,), w=1)] * 100 + [Constraint(a=(-1,), w=-1)] * 100)
        result = private_linear_feasibility(system, 0.2, 0.1, PrivacyParams(epsilon=1.0), RandomSource(seed))
        assert result.point == (1,)
        assert result.satisfied == 200
        assert result.ledger.within(PrivacyParams(epsilon=1.0))

    def test_plane(self, seed):
        kinds = [Constraint(a=(1, 0), w=1), Constraint(a=(-1, 0), w=-1), Constraint(a=(0, 1), w=1),
                 Constraint(a=(0, -1), w=-1)]
        system = ConstraintSet(d=2, X=2, constraints=kinds * 75)
        result = private_linear_feasibility(system, 0.2, 0.1, PrivacyParams(epsilon=2.0), RandomSource(seed))
        assert result.satisfied == depth(system, result.point)
        assert result.satisfied >= 270
        assert len(result.ledger.entries) == 2

    def test_insufficient_samples(self, seed):
        system = ConstraintSet(d=1, X=3, constraints=[Constraint(a=(1,), w=1)] * 4)
        with pytest.raises(InsufficientSamplesError) as info:
            private_linear_feasibility(system, 0.2, 0.1, PrivacyParams(epsilon=1.0), RandomSource(seed))
        assert info.value.available == 4


class TestHalfspaceLearner:
    def test_reduction(self):
        examples = [LabeledExample(x=(2,), y=1), LabeledExample(x=(-3,), y=-1)]
        system = reduce_examples_to_constraints(examples, margin=1)
        assert system.d == 2
        assert system.X == 3
        assert system.as_tuples() == [((2, -1), 1), ((3, 1), 1)]

    def test_zero_margin_admits_origin(self):
        examples = [LabeledExample(x=(2,), y=1), LabeledExample(x=(-3,), y=-1)]
        system = reduce_examples_to_constraints(examples)
        assert depth(system, (0, 0)) == 2

    def test_predict_and_error(self):
        hypothesis = Hypothesis(weights=(1,), threshold=1)
        assert predict(hypothesis, [(0,), (1,), (2,)]) == [-1, 1, 1]
        examples = [LabeledExample(x=(0,), y=1), LabeledExample(x=(2,), y=1)]
        assert empirical_error(hypothesis, examples) == 0.5

    def test_more_than_one_feature(self, seed):
        examples = [LabeledExample(x=(1, 1), y=1)] * 10
        with pytest.raises(UnsupportedDimensionError):
            learn_halfspace(examples, 0.2, 0.1, PrivacyParams(epsilon=1.0), RandomSource(seed))

    def test_learns_threshold(self, seed):
        examples = [LabeledExample(x=(v,), y=1 if v >= 1 else -1) for v in [(i % 5) - 2 for i in range(300)]]
        result = learn_halfspace(examples, 0.5, 0.1, PrivacyParams(epsilon=2.0), RandomSource(seed))
        assert result.sample_bound == generalization_sample_size(2, 0.5, 0.1)
        assert not result.generalization_guaranteed
        assert result.feasibility.n == 300
        assert result.training_error == empirical_error(result.hypothesis, examples)

    def test_strict_learner_requires_generalization_bound(self, seed):
        examples = [LabeledExample(x=(v,), y=1 if v >= 1 else -1) for v in [(i % 5) - 2 for i in range(300)]]
        bound = generalization_sample_size(2, 0.5, 0.1)
        with pytest.raises(InsufficientSamplesError) as info:
            learn_halfspace(examples, 0.5, 0.1, PrivacyParams(epsilon=2.0), RandomSource(seed), strict=True)
        assert info.value.required == bound
        assert info.value.available == 300

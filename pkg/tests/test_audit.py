"""Unit tests for services.audit."""
# pylint: disable=C

import math

import pytest

from entities.audit import TWO_PI, AngleGrid, ThresholdData
from entities.geometry import LabeledExample
from entities.privacy import PrivacyParams
from services.audit import (a_simple_h, build_mechanism, clopper_pearson, counterexample_datasets,
                            estimate_epsilon_lower_bound, example_angle, halfspace_agreement, halfspace_label, make_data,
                            make_thr_data, parse_event, threshold_learner)
from services.dp_core import RandomSource
from utils.errors import InputError, ParameterError

EIGHT = AngleGrid(gamma=TWO_PI / 8)


class TestClopperPearson:
    def test_no_successes(self):
        low, high = clopper_pearson(0, 10)
        assert low == 0.0
        assert high == pytest.approx(1 - 0.025 ** 0.1)

    def test_all_successes(self):
        low, high = clopper_pearson(10, 10)
        assert low == pytest.approx(0.025 ** 0.1)
        assert high == 1.0

    def test_symmetric(self):
        low, high = clopper_pearson(5, 10)
        assert low == pytest.approx(1 - high)

    def test_rejects_bad_counts(self):
        with pytest.raises(ParameterError):
            clopper_pearson(11, 10)


class TestHalfspaces:
    def test_grid_size(self):
        assert AngleGrid(gamma=TWO_PI / 256).size == 256
        assert EIGHT.angle(9) == pytest.approx(TWO_PI / 8)

    def test_labels(self):
        assert halfspace_label(0.0, (1, 0)) == 1
        assert halfspace_label(0.0, (0, -1)) == -1
        assert halfspace_label(math.pi / 2, (1, 0)) == -1
        assert halfspace_label(math.pi, (1, 0)) == 1

    def test_example_angle(self):
        assert example_angle((0, -1)) == pytest.approx(3 * math.pi / 2)
        with pytest.raises(ParameterError):
            example_angle((0, 0))

    def test_agreement_on_counterexample(self):
        S, S_prime = counterexample_datasets(4)
        q = halfspace_agreement(S, EIGHT)
        assert list(q) == [0, 3, 3, 3, 0, 1, 1, 1]
        q_prime = halfspace_agreement(S_prime, EIGHT)
        assert list(q_prime) == [0, 2, 2, 2, 0, 2, 2, 2]

    def test_empty_dataset(self):
        assert list(halfspace_agreement([], EIGHT)) == [0] * 8


class TestCounterexample:
    def test_shape(self):
        S, S_prime = counterexample_datasets(6)
        assert S.count(LabeledExample(x=(1, 0), y=-1)) == 4
        assert S_prime.count(LabeledExample(x=(1, 0), y=-1)) == 3
        assert sum(1 for a, b in zip(S, S_prime) if a != b) == 1

    @pytest.mark.parametrize("n", [2, 5])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ParameterError):
            counterexample_datasets(n)


class TestAngleLearner:
    def test_histogram_covers_grid(self, seed):
        S, _ = counterexample_datasets(4)
        histogram = make_data(1.0, EIGHT, S, RandomSource(seed))
        assert set(histogram) == set(range(8))
        assert histogram == sorted(histogram)

    def test_threshold_data_keeps_best_angles(self, seed):
        S, _ = counterexample_datasets(4)
        data = make_thr_data(list(range(8)), S, 3, EIGHT, RandomSource(seed))
        assert sorted(data.selected) == [1, 2, 3]
        assert data.offset in {0, 4, 5, 6, 7}
        assert data.rotated == [(k - data.offset) % 8 for k in data.selected]
        assert data.best == max(data.rotated)
        assert data.labels == [1, 1, 1]

    def test_threshold_data_needs_more_than_c(self, seed):
        S, _ = counterexample_datasets(4)
        with pytest.raises(ParameterError):
            make_thr_data([1, 2, 3], S, 3, EIGHT, RandomSource(seed))

    def test_threshold_learner_rotates_back(self, seed):
        data = ThresholdData(offset=5, selected=[7] * 30, rotated=[2] * 30, labels=[1] * 30, best=2)
        index = threshold_learner(data, EIGHT, PrivacyParams(epsilon=1.0), 0.1, RandomSource(seed))
        assert index == 7

    def test_outputs_land_in_disjoint_half_circles(self, seed):
        S, S_prime = counterexample_datasets(4)
        for trial in range(5):
            first = a_simple_h(S, TWO_PI / 256, 64, 1.0, 0.0, 0.1, 0.1, RandomSource.for_trial(seed, trial))
            second = a_simple_h(S_prime, TWO_PI / 256, 64, 1.0, 0.0, 0.1, 0.1, RandomSource.for_trial(seed, trial))
            assert 0 < first < math.pi
            assert math.pi < second < TWO_PI


class TestEvents:
    def test_arc_is_open(self):
        event = parse_event("arc:0:pi")
        assert event(math.pi / 2)
        assert not event(math.pi)
        assert not event(0.0)

    def test_arc_with_fractions_of_pi(self):
        event = parse_event("arc:pi/2:3*pi/4")
        assert event(2.0)
        assert not event(2.5)

    def test_thresholds(self):
        assert parse_event("le:1/2")(0.5)
        assert not parse_event("ge:3")(2)

    @pytest.mark.parametrize("spec", ["foo:1", "arc:0", "arc:0:pie", "le:x"])
    def test_malformed(self, spec):
        with pytest.raises(InputError):
            parse_event(spec)

    def test_unknown_mechanism(self):
        with pytest.raises(ParameterError):
            build_mechanism("median", 10, PrivacyParams(epsilon=1.0), 0.1, 0.1)


class TestEstimate:
    def test_counterexample_violates_claim(self, seed):
        S, S_prime = counterexample_datasets(4)
        mechanism = build_mechanism("a-simple-h", 1, PrivacyParams(epsilon=1.0), 0.1, 0.1)
        report = estimate_epsilon_lower_bound(mechanism, S, S_prime, parse_event("arc:0:pi"), 100, 0.0, seed,
                                              claimed_epsilon=1.0, mechanism_name="a-simple-h", event_spec="arc:0:pi")
        assert report.count_first == 100
        assert report.count_second == 0
        assert report.point_unbounded
        assert report.epsilon_point is None
        assert report.epsilon_certified == pytest.approx(math.log(0.025 ** 0.01 / (1 - 0.025 ** 0.01)))
        assert report.verdict == "DP violated"

    def test_interior_point_is_consistent(self, seed):
        S = [-10] * 20 + [10] * 20
        S_prime = S[:-1] + [-10]
        mechanism = build_mechanism("interior-point", 10, PrivacyParams(epsilon=1.0), 0.1, 0.1)
        report = estimate_epsilon_lower_bound(mechanism, S, S_prime, parse_event("le:0"), 200, 0.0, seed,
                                              claimed_epsilon=1.0, max_workers=4)
        assert report.verdict == "consistent with DP"
        assert not report.point_unbounded

    def test_interior_point_epsilon_stays_near_claim(self, seed):
        S = list(range(-9, 11))
        S_prime = S[:-1] + [-10]
        mechanism = build_mechanism("interior-point", 10, PrivacyParams(epsilon=1.0), 0.1, 0.5)
        report = estimate_epsilon_lower_bound(mechanism, S, S_prime, parse_event("le:0"), 20_000, 0.0, seed,
                                              claimed_epsilon=1.0, max_workers=4)
        assert not report.point_unbounded
        assert report.epsilon_point <= 1.0 + 0.3
        assert report.epsilon_certified <= 1.0 + 0.3
        assert report.verdict == "consistent with DP"

    def test_constant_mechanism(self, seed):
        mechanism = build_mechanism("constant", 10, PrivacyParams(epsilon=1.0), 0.1, 0.1)
        report = estimate_epsilon_lower_bound(mechanism, [1], [2], parse_event("le:0"), 100, 0.0, seed,
                                              claimed_epsilon=0.5)
        assert report.count_first == report.count_second == 100
        assert report.epsilon_point == 0.0
        assert report.epsilon_certified == 0.0
        assert report.rate_first == 1.0

    def test_is_reproducible(self, seed):
        S = [-10] * 20 + [10] * 20
        mechanism = build_mechanism("interior-point", 10, PrivacyParams(epsilon=1.0), 0.1, 0.1)
        first = estimate_epsilon_lower_bound(mechanism, S, S[:-1] + [-10], parse_event("le:0"), 100, 0.0, seed, 1.0)
        second = estimate_epsilon_lower_bound(mechanism, S, S[:-1] + [-10], parse_event("le:0"), 100, 0.0, seed, 1.0,
                                              max_workers=3)
        assert first == second

    def test_too_few_trials(self, seed):
        mechanism = build_mechanism("constant", 10, PrivacyParams(epsilon=1.0), 0.1, 0.1)
        with pytest.raises(ParameterError):
            estimate_epsilon_lower_bound(mechanism, [1], [2], parse_event("le:0"), 99, 0.0, seed, 1.0)

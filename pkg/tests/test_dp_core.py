"""Unit tests for services.dp_core."""
# pylint: disable=C

import math

import numpy as np
import pytest
from scipy import stats

from entities.privacy import PrivacyParams
from services.dp_core import (CompositionLedger, RandomSource, advanced_composition, basic_composition,
                              exp_mechanism, exp_mechanism_probabilities, inverse_composition, laplace_sample,
                              ledger_for, split_budget)
from utils.errors import ParameterError


class TestRandomSource:
    def test_same_seed_same_draws(self):
        first, second = RandomSource(7), RandomSource(7)
        assert [first.uniform() for _ in range(5)] == [second.uniform() for _ in range(5)]

    def test_integer_range(self):
        rng = RandomSource(1)
        draws = [rng.integer(-3, 4) for _ in range(500)]
        assert min(draws) == -3
        assert max(draws) == 3

    def test_integer_beyond_int64(self):
        rng = RandomSource(3)
        span = 2 ** 80
        value = rng.integer(0, span)
        assert 0 <= value < span

    def test_empty_range_rejected(self):
        with pytest.raises(ParameterError):
            RandomSource(1).integer(5, 5)

    def test_for_trial_uses_xor(self):
        assert RandomSource.for_trial(12, 5).seed == 12 ^ 5

    def test_spawn_is_independent_of_state(self):
        parent = RandomSource(9)
        child = parent.spawn("blocks")
        parent.uniform()
        assert parent.spawn("blocks").seed == child.seed
        assert parent.spawn("other").seed != child.seed


class TestLaplace:
    def test_matches_distribution(self):
        rng = RandomSource(2024)
        samples = [laplace_sample(2.0, rng) for _ in range(4000)]
        result = stats.kstest(samples, stats.laplace(scale=2.0).cdf)
        assert result.pvalue > 0.001

    def test_unit_scale_median_and_central_mass(self):
        rng = RandomSource(77)
        samples = np.array([laplace_sample(1.0, rng) for _ in range(200_000)])
        assert abs(np.median(samples)) <= 0.01
        assert np.mean(np.abs(samples) <= math.log(2)) == pytest.approx(0.5, abs=0.005)

    @pytest.mark.parametrize("scale", [0.0, -1.0, math.inf])
    def test_bad_scale(self, scale):
        with pytest.raises(ParameterError):
            laplace_sample(scale, RandomSource(1))


class TestExponentialMechanism:
    def test_probabilities_are_softmax(self):
        probabilities = exp_mechanism_probabilities([0, 1, 2], sensitivity=1.0, epsilon=2.0)
        expected = np.exp([0, 1, 2]) / np.exp([0, 1, 2]).sum()
        assert np.allclose(probabilities, expected)

    def test_multiplicities_weight_candidates(self):
        probabilities = exp_mechanism_probabilities([0, 0], 1.0, 1.0, multiplicities=[3, 1])
        assert np.allclose(probabilities, [0.75, 0.25])

    def test_zero_multiplicity_never_chosen(self):
        rng = RandomSource(4)
        draws = {exp_mechanism(["a", "b"], [5, 0], 1.0, 1.0, rng, multiplicities=[0, 1]) for _ in range(50)}
        assert draws == {1}

    def test_empirical_frequencies(self):
        rng = RandomSource(11)
        scores = [0, 2, 4]
        counts = np.bincount([exp_mechanism(scores, scores, 1.0, 1.0, rng) for _ in range(6000)], minlength=3)
        expected = exp_mechanism_probabilities(scores, 1.0, 1.0) * 6000
        assert stats.chisquare(counts, expected).pvalue > 0.001

    def test_two_candidates(self):
        probabilities = exp_mechanism_probabilities([1, 0], sensitivity=1.0, epsilon=2.0)
        assert probabilities[0] == pytest.approx(math.e / (1 + math.e))

    @pytest.mark.parametrize("shift", [-1000.0, -3.5, 0.25, 1e6])
    def test_shifting_scores_changes_nothing(self, shift):
        scores = [0.0, 1.0, 4.0, 2.5]
        base = exp_mechanism_probabilities(scores, 1.0, 0.8)
        shifted = exp_mechanism_probabilities([s + shift for s in scores], 1.0, 0.8)
        assert np.allclose(base, shifted, rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("factor", [0.01, 3.0, 250.0])
    def test_scaling_scores_with_sensitivity_changes_nothing(self, factor):
        scores = [0.0, 1.0, 4.0, 2.5]
        base = exp_mechanism_probabilities(scores, 1.0, 0.8, multiplicities=[1, 2, 1, 5])
        scaled = exp_mechanism_probabilities([s * factor for s in scores], factor, 0.8, multiplicities=[1, 2, 1, 5])
        assert np.allclose(base, scaled, rtol=1e-9, atol=1e-9)

    def test_shifted_sampling_is_identical(self):
        scores = [0, 2, 4]
        first, second = RandomSource(5), RandomSource(5)
        draws = [exp_mechanism(scores, scores, 1.0, 1.0, first) for _ in range(200)]
        shifted = [exp_mechanism(scores, [s - 40 for s in scores], 1.0, 1.0, second) for _ in range(200)]
        assert draws == shifted

    def test_rejects_empty(self):
        with pytest.raises(ParameterError):
            exp_mechanism([], [], 1.0, 1.0, RandomSource(1))


class TestComposition:
    def test_basic(self):
        assert basic_composition(0.5, 0.01, 4) == (2.0, 0.04)

    def test_advanced(self):
        epsilon, delta = advanced_composition(0.1, 0.0, 8, 1e-6)
        assert epsilon == pytest.approx(math.sqrt(16 * math.log(1e6)) * 0.1)
        assert delta == pytest.approx(1e-6)

    @pytest.mark.parametrize("k", [1, 2, 5, 20])
    def test_advanced_grows_with_steps(self, k):
        more_epsilon, more_delta = advanced_composition(0.3, 1e-6, k + 1, 1e-5)
        epsilon, delta = advanced_composition(0.3, 1e-6, k, 1e-5)
        assert more_epsilon >= epsilon
        assert more_delta >= delta

    @pytest.mark.parametrize("epsilon,delta", [(0.1, 0.0), (0.5, 1e-7), (2.0, 1e-3)])
    def test_advanced_grows_with_budget(self, epsilon, delta):
        epsilon_total, delta_total = advanced_composition(epsilon, delta, 4, 1e-5)
        assert advanced_composition(epsilon * 1.5, delta, 4, 1e-5)[0] >= epsilon_total
        assert advanced_composition(epsilon, delta + 1e-6, 4, 1e-5)[1] >= delta_total

    def test_advanced_per_step_example(self):
        step = 1 / math.sqrt(2 * math.log(20))
        assert step == pytest.approx(0.4087, abs=1e-4)
        assert advanced_composition(step, 0.0, 1, 0.05)[0] == pytest.approx(1.0)

    def test_inverse_fits_budget(self):
        step = inverse_composition(1.0, 1e-5, 5)
        epsilon, delta = advanced_composition(step.epsilon, step.delta, 5, 1e-5 / 2)
        assert epsilon == pytest.approx(1.0)
        assert delta == pytest.approx(1e-5)

    def test_split_without_delta_is_even(self):
        step, rule = split_budget(PrivacyParams(epsilon=1.0), 4)
        assert rule == "basic"
        assert step.epsilon == pytest.approx(0.25)

    def test_single_step_keeps_budget(self):
        budget = PrivacyParams(epsilon=1.0, delta=1e-6)
        assert split_budget(budget, 1) == (budget, "single")

    @pytest.mark.parametrize("delta", [0.0, 1e-6])
    def test_ledger_stays_within_budget(self, delta):
        budget = PrivacyParams(epsilon=1.0, delta=delta)
        step, ledger = ledger_for(budget, 3, "interior-point")
        for i in range(3):
            ledger.record(step, f"coordinate {i}")
        assert ledger.within(budget)
        assert len(ledger.entries) == 3

    def test_empty_ledger_total(self):
        assert CompositionLedger().total == (0.0, 0.0)

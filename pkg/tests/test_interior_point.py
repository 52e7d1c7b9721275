"""Unit tests for services.interior_point."""
# pylint: disable=C

import math
from fractions import Fraction

import pytest

from entities.privacy import PrivacyParams
from entities.specs import IPSolverSpec
from services.dp_core import RandomSource
from services.interior_point import (IntegerRange, SortedDomain, is_interior, n_ip, private_interior_point,
                                     q_ip_score, score_runs)
from utils.errors import InsufficientSamplesError, ParameterError


@pytest.fixture
def spec():
    return IPSolverSpec(privacy=PrivacyParams(epsilon=1.0), beta=0.1)


class TestDomains:
    def test_integer_range_ranks(self):
        domain = IntegerRange(-2, 3)
        assert domain.size == 6
        assert domain.rank(0) == 3
        assert domain.count_below(0) == 2
        assert domain.rank(Fraction(1, 2)) == 3
        assert domain.next_after(Fraction(1, 2)) == 1
        assert domain.next_after(3, strict=True) is None
        assert list(domain) == [-2, -1, 0, 1, 2, 3]

    def test_integer_range_clamps(self):
        domain = IntegerRange(0, 4)
        assert domain.rank(-10) == 0
        assert domain.rank(10) == 5
        assert not domain.contains(Fraction(1, 3))

    def test_empty_range_rejected(self):
        with pytest.raises(ParameterError):
            IntegerRange(3, 2)

    def test_sorted_domain_deduplicates(self):
        domain = SortedDomain([3, 1, 2, 3])
        assert list(domain) == [1, 2, 3]
        assert domain.contains(2)
        assert domain.next_after(2, strict=True) == 3


class TestScore:
    def test_q_ip(self):
        values = [1, 2, 3, 4]
        assert q_ip_score(values, 0) == 0
        assert q_ip_score(values, 2) == 2
        assert q_ip_score(values, Fraction(5, 2)) == 2
        assert q_ip_score(values, 5) == 0

    def test_runs_cover_domain_with_matching_scores(self):
        values = [2, 2, 5, 7]
        domain = IntegerRange(0, 9)
        runs = score_runs(values, domain)
        assert sum(size for _, size, _ in runs) == domain.size
        for first_rank, size, score in runs:
            for rank in range(first_rank, first_rank + size):
                assert q_ip_score(values, domain.at(rank)) == score

    def test_n_ip_formula(self):
        assert n_ip(256, 0.1, 1.0) == math.ceil(4 * math.log(2560)) + 2

    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_n_ip_bad_beta(self, beta):
        with pytest.raises(ParameterError):
            n_ip(10, beta, 1.0)


class TestPrivateInteriorPoint:
    def test_returns_interior_point_with_enough_samples(self, spec, seed):
        domain = IntegerRange(-1000, 1000)
        values = [10 + (i % 7) for i in range(80)]
        failures = 0
        for trial in range(40):
            x = private_interior_point(values, domain, spec, RandomSource.for_trial(seed, trial))
            assert domain.contains(x)
            failures += not is_interior(values, x)
        assert failures <= 8

    def test_insufficient_samples(self, spec):
        domain = IntegerRange(0, 100)
        with pytest.raises(InsufficientSamplesError) as info:
            private_interior_point([1, 2, 3], domain, spec, RandomSource(1))
        assert info.value.required == n_ip(101, 0.1, 1.0)
        assert info.value.available == 3

    def test_value_outside_domain(self, spec):
        with pytest.raises(ParameterError):
            private_interior_point([200] * 60, IntegerRange(0, 100), spec, RandomSource(1))

    def test_deterministic_for_seed(self, spec):
        domain = SortedDomain([Fraction(k, 4) for k in range(-400, 401)])
        values = [Fraction(1, 4)] * 30 + [Fraction(3, 2)] * 30
        first = private_interior_point(values, domain, spec, RandomSource(5))
        second = private_interior_point(values, domain, spec, RandomSource(5))
        assert first == second

"""
Privacy primitives: seeded randomness, Laplace noise, the exponential mechanism and
composition accounting.

Every randomised operation takes an explicit RandomSource so that a fixed seed reproduces
every draw bit for bit. Floating-point Laplace noise here is not hardened against
side channels.
"""
import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from entities.privacy import LedgerEntry, PrivacyParams
from utils.errors import ParameterError, ensure
from utils.helper import SEED_MASK, labelled_seed, trial_seed
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)


class RandomSource:
    """
    Seeded source of randomness backed by numpy's PCG64 generator.

    Identical seeds give identical draw sequences. A source is owned by one execution strand;
    use spawn() to hand independent sources to workers.

    Attributes:
        seed (int): The 64-bit unsigned seed.
        draws (int): Number of primitive draws taken so far.
    """

    def __init__(self, seed: int):
        ensure(isinstance(seed, (int, np.integer)), f"seed must be an integer, got {seed!r}")
        self.seed = int(seed) & SEED_MASK
        self.draws = 0
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, draws={self.draws})"

    def uniform(self) -> float:
        """Draw from [0, 1)."""
        self.draws += 1
        return float(self._generator.random())

    def open_uniform(self) -> float:
        """Draw from the open interval (0, 1)."""
        while True:
            value = self.uniform()
            if value > 0.0:
                return value

    def integer(self, low: int, high: int) -> int:
        """Draw an integer uniformly from [low, high)."""
        ensure(high > low, f"empty integer range [{low}, {high})")
        self.draws += 1
        span = high - low
        if span <= np.iinfo(np.int64).max:
            return low + int(self._generator.integers(0, span))
        # Ranks in huge rational grids exceed int64.
        bits = span.bit_length()
        while True:
            words = self._generator.integers(0, 2 ** 32, size=(bits + 31) // 32, dtype=np.uint64)
            candidate = 0
            for word in words:
                candidate = (candidate << 32) | int(word)
            candidate &= (1 << bits) - 1
            if candidate < span:
                return low + candidate

    def permutation(self, n: int) -> list[int]:
        """Uniformly random permutation of range(n)."""
        self.draws += 1
        return [int(i) for i in self._generator.permutation(n)]

    def choice(self, probabilities: np.ndarray) -> int:
        """Draw an index according to a normalised probability vector (inverse CDF on one uniform)."""
        cumulative = np.cumsum(probabilities)
        u = self.uniform() * cumulative[-1]
        index = int(np.searchsorted(cumulative, u, side="right"))
        return min(index, len(probabilities) - 1)

    def spawn(self, label: str) -> "RandomSource":
        """Child source whose seed is derived from (seed, label); independent of this source's state."""
        return RandomSource(labelled_seed(self.seed, label))

    @classmethod
    def for_trial(cls, seed: int, trial_index: int) -> "RandomSource":
        """Source of one experiment trial, seeded with seed XOR trial_index."""
        return cls(trial_seed(seed, trial_index))


def laplace_sample(scale: float, rng: RandomSource) -> float:
    """
    Draw from Laplace(0, scale) by inverting the CDF of one uniform draw.

    Args:
        scale (float): The scale b > 0; density (1/2b)·exp(-|x|/b).
        rng (RandomSource): Source of randomness.

    Returns:
        float: The noise value.

    Raises:
        ParameterError: If scale is not positive and finite.
    """
    ensure(scale > 0 and math.isfinite(scale), f"Laplace scale must be positive, got {scale}")
    u = rng.open_uniform() - 0.5
    return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))


def exp_mechanism_probabilities(scores: Sequence[float], sensitivity: float, epsilon: float,
                                multiplicities: Sequence[int] | None = None) -> np.ndarray:
    """
    Output distribution of the exponential mechanism.

    Candidate i is chosen with probability proportional to
    multiplicity_i · exp(epsilon · score_i / (2 · sensitivity)); the maximum exponent is subtracted
    before exponentiating.

    Raises:
        ParameterError: On an empty candidate list, non-finite scores or non-positive parameters.
    """
    ensure(len(scores) > 0, "exponential mechanism needs at least one candidate")
    ensure(sensitivity > 0, f"sensitivity must be positive, got {sensitivity}")
    ensure(epsilon > 0, f"epsilon must be positive, got {epsilon}")
    values = np.asarray(scores, dtype=float)
    ensure(bool(np.all(np.isfinite(values))), "all scores must be finite")
    exponents = (epsilon / (2.0 * sensitivity)) * values
    if multiplicities is not None:
        counts = np.asarray(multiplicities, dtype=float)
        ensure(counts.shape == values.shape, "multiplicities must match scores")
        ensure(bool(np.all(counts >= 0)) and bool(np.any(counts > 0)), "multiplicities must be non-negative and not all zero")
        with np.errstate(divide="ignore"):
            exponents = exponents + np.log(counts)
    exponents = exponents - np.max(exponents)
    weights = np.exp(exponents)
    return weights / weights.sum()


def exp_mechanism(candidates: Sequence, scores: Sequence[float], sensitivity: float, epsilon: float,
                  rng: RandomSource, multiplicities: Sequence[int] | None = None) -> int:
    """
    Sample a candidate index with the exponential mechanism.

    Args:
        candidates: Ordered candidate list (only its length is used).
        scores: One finite score per candidate.
        sensitivity (float): Sensitivity of the score function.
        epsilon (float): Privacy budget of this selection.
        rng (RandomSource): Source of randomness.
        multiplicities: Optional count of identical-score elements each candidate stands for.

    Returns:
        int: Index into candidates.
    """
    ensure(len(candidates) > 0, "exponential mechanism needs at least one candidate")
    ensure(len(candidates) == len(scores), "one score per candidate is required")
    probabilities = exp_mechanism_probabilities(scores, sensitivity, epsilon, multiplicities)
    return rng.choice(probabilities)


def advanced_composition(epsilon: float, delta: float, k: int, delta_prime: float) -> tuple[float, float]:
    """
    k-fold advanced composition of an (epsilon, delta) mechanism.

    Returns:
        tuple: (sqrt(2k·ln(1/delta_prime))·epsilon, k·delta + delta_prime)

    Raises:
        ParameterError: If k < 1, epsilon <= 0 or delta_prime outside (0, 1).
    """
    ensure(isinstance(k, int) and k >= 1, f"k must be a positive integer, got {k}")
    ensure(epsilon > 0, f"epsilon must be positive, got {epsilon}")
    ensure(delta >= 0, f"delta must be non-negative, got {delta}")
    ensure(0 < delta_prime < 1, f"delta_prime must lie in (0, 1), got {delta_prime}")
    return math.sqrt(2 * k * math.log(1 / delta_prime)) * epsilon, k * delta + delta_prime


def basic_composition(epsilon: float, delta: float, k: int) -> tuple[float, float]:
    """k-fold basic composition: (k·epsilon, k·delta)."""
    ensure(isinstance(k, int) and k >= 1, f"k must be a positive integer, got {k}")
    return k * epsilon, k * delta


def inverse_composition(epsilon_target: float, delta_target: float, k: int) -> PrivacyParams:
    """
    Per-step budget so that k steps under advanced composition with delta' = delta_target/2
    stay within (epsilon_target, delta_target).

    Returns:
        PrivacyParams: (epsilon_target / sqrt(2k·ln(2/delta_target)), delta_target / (2k)).
    """
    ensure(epsilon_target > 0, f"epsilon_target must be positive, got {epsilon_target}")
    ensure(0 < delta_target < 1, f"delta_target must lie in (0, 1), got {delta_target}")
    ensure(isinstance(k, int) and k >= 1, f"k must be a positive integer, got {k}")
    step_epsilon = epsilon_target / math.sqrt(2 * k * math.log(2 / delta_target))
    return PrivacyParams(epsilon=step_epsilon, delta=delta_target / (2 * k))


def split_budget(budget: PrivacyParams, k: int) -> tuple[PrivacyParams, str]:
    """
    Per-step budget for k adaptive steps.

    One step spends the whole budget. With delta > 0 the advanced-composition inverse is used;
    with delta = 0 advanced composition is unavailable and the budget is split evenly.

    Returns:
        tuple: (per-step params, composition rule name "single" | "advanced" | "basic")
    """
    if k == 1:
        return budget, "single"
    if budget.delta > 0:
        return inverse_composition(budget.epsilon, budget.delta, k), "advanced"
    return PrivacyParams(epsilon=budget.epsilon / k, delta=0.0), "basic"


class CompositionLedger(BaseModel):
    """
    Record of mechanism invocations with derived totals.

    Attributes:
        entries (list[LedgerEntry]): Invocations in order.
        rule (str): Composition rule the budget was split with.
        delta_prime (float): Slack used for advanced composition totals (0 when not applicable).
    """
    model_config = ConfigDict(validate_assignment=True, extra="forbid")

    entries: list[LedgerEntry] = Field(default_factory=list, description="Recorded invocations.")
    rule: str = Field(default="basic", pattern=r"^(single|basic|advanced)$", description="Composition rule.")
    delta_prime: float = Field(default=0.0, ge=0, lt=1, description="Advanced composition slack.")

    def record(self, params: PrivacyParams, mechanism: str) -> None:
        """Append one invocation."""
        self.entries = [*self.entries, LedgerEntry(epsilon=params.epsilon, delta=params.delta, mechanism=mechanism)]
        logger.debug("Recorded %s at epsilon=%.6g delta=%.3g", mechanism, params.epsilon, params.delta)

    def basic_total(self) -> tuple[float, float]:
        """Sum of epsilons and deltas."""
        return (math.fsum(e.epsilon for e in self.entries), math.fsum(e.delta for e in self.entries))

    def advanced_total(self, delta_prime: float) -> tuple[float, float]:
        """Advanced composition over the entries, using the largest per-entry epsilon and delta."""
        ensure(len(self.entries) > 0, "ledger is empty")
        return advanced_composition(max(e.epsilon for e in self.entries),
                                    max(e.delta for e in self.entries),
                                    len(self.entries), delta_prime)

    @computed_field(description="Total (epsilon, delta) under the ledger's composition rule.")
    @property
    def total(self) -> tuple[float, float]:
        """Total spent budget under the recorded rule."""
        if not self.entries:
            return 0.0, 0.0
        if self.rule == "advanced":
            return self.advanced_total(self.delta_prime)
        return self.basic_total()

    def within(self, budget: PrivacyParams, slack: float = 1e-9) -> bool:
        """True when the total fits inside budget (up to float slack)."""
        epsilon, delta = self.total
        return epsilon <= budget.epsilon * (1 + slack) and delta <= budget.delta + slack


def ledger_for(budget: PrivacyParams, k: int, mechanism: str) -> tuple[PrivacyParams, CompositionLedger]:
    """Split budget over k steps and return the per-step params with an empty ledger configured for them."""
    if k < 1:
        raise ParameterError(f"k must be positive, got {k}")
    step, rule = split_budget(budget, k)
    ledger = CompositionLedger(rule=rule, delta_prime=budget.delta / 2 if rule == "advanced" else 0.0)
    logger.debug("Budget %s split over %d %s steps by %s composition", budget, k, mechanism, rule)
    return step, ledger

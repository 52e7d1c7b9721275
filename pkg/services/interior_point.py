"""
Private interior point.

Defines the ordered-domain abstraction, the q_ip score, the baseline sample bound and the
PrivateIP interface with its exponential-mechanism realisation. The baseline samples exactly
from the exponential mechanism over the whole domain without enumerating it: q_ip is constant
between consecutive input values, so the domain is cut into runs, a run is drawn with weight
size·exp(epsilon·score/2) and an element is then drawn uniformly inside the run by rank.
"""
import bisect
import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Iterator, Sequence

from entities.specs import IPSolverSpec
from services.dp_core import RandomSource, exp_mechanism
from utils.decorators import log_and_raise_error
from utils.errors import InsufficientSamplesError, ParameterError, ensure
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)


class OrderedDomain(ABC):
    """Finite, totally ordered candidate set with rank arithmetic."""

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of elements."""

    @abstractmethod
    def at(self, rank: int) -> Any:
        """Element with zero-based rank."""

    @abstractmethod
    def rank(self, x: Any) -> int:
        """Number of elements <= x."""

    @abstractmethod
    def count_below(self, x: Any) -> int:
        """Number of elements < x."""

    @abstractmethod
    def next_after(self, x: Any, strict: bool = False) -> Any | None:
        """Smallest element >= x (> x when strict), or None."""

    @abstractmethod
    def __iter__(self) -> Iterator[Any]:
        """Elements in increasing order."""

    def contains(self, x: Any) -> bool:
        """Membership test."""
        return self.rank(x) - self.count_below(x) == 1

    def first(self) -> Any:
        """Smallest element."""
        return self.at(0)

    def last(self) -> Any:
        """Largest element."""
        return self.at(self.size - 1)

    def __len__(self) -> int:
        return self.size


class IntegerRange(OrderedDomain):
    """The integers lo..hi inclusive."""

    def __init__(self, lo: int, hi: int):
        ensure(hi >= lo, f"empty integer range [{lo}, {hi}]")
        self.lo = int(lo)
        self.hi = int(hi)

    def __repr__(self) -> str:
        return f"IntegerRange({self.lo}, {self.hi})"

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def at(self, rank: int) -> int:
        ensure(0 <= rank < self.size, f"rank {rank} outside domain of size {self.size}")
        return self.lo + rank

    def rank(self, x: Any) -> int:
        return min(max(math.floor(x) - self.lo + 1, 0), self.size)

    def count_below(self, x: Any) -> int:
        return min(max(math.ceil(x) - self.lo, 0), self.size)

    def next_after(self, x: Any, strict: bool = False) -> int | None:
        candidate = math.floor(x) + 1 if strict else math.ceil(x)
        candidate = max(candidate, self.lo)
        return candidate if candidate <= self.hi else None

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))


class SortedDomain(OrderedDomain):
    """An explicit strictly increasing list of comparable values."""

    def __init__(self, values: Sequence[Any]):
        ordered = sorted(set(values))
        ensure(len(ordered) >= 1, "domain must not be empty")
        self.values = ordered

    def __repr__(self) -> str:
        return f"SortedDomain(size={len(self.values)})"

    @property
    def size(self) -> int:
        return len(self.values)

    def at(self, rank: int) -> Any:
        ensure(0 <= rank < self.size, f"rank {rank} outside domain of size {self.size}")
        return self.values[rank]

    def rank(self, x: Any) -> int:
        return bisect.bisect_right(self.values, x)

    def count_below(self, x: Any) -> int:
        return bisect.bisect_left(self.values, x)

    def next_after(self, x: Any, strict: bool = False) -> Any | None:
        index = bisect.bisect_right(self.values, x) if strict else bisect.bisect_left(self.values, x)
        return self.values[index] if index < len(self.values) else None

    def __iter__(self) -> Iterator[Any]:
        return iter(self.values)


def q_ip_score(values: Sequence[Any], x: Any) -> int:
    """
    Interior-point score: min(#{v <= x}, #{v >= x}).

    Args:
        values: Multiset of domain elements.
        x: Query element.

    Returns:
        int: The score; it changes by at most 1 when one value is replaced.
    """
    at_most = sum(1 for v in values if v <= x)
    at_least = sum(1 for v in values if v >= x)
    return min(at_most, at_least)


def n_ip(domain_size: int, beta: float, epsilon: float, delta: float = 0.0) -> int:
    """
    Samples the exponential-mechanism baseline needs to return an interior point w.p. >= 1 - beta.

    ceil((4/epsilon)·ln(domain_size/beta)) + 2. delta is accepted for interface compatibility
    with approximate-DP solvers and is unused.
    """
    ensure(domain_size >= 1, f"domain_size must be positive, got {domain_size}")
    ensure(0 < beta < 1, f"beta must lie in (0, 1), got {beta}")
    ensure(epsilon > 0, f"epsilon must be positive, got {epsilon}")
    _ = delta
    return math.ceil((4.0 / epsilon) * math.log(domain_size / beta)) + 2


def score_runs(values: Sequence[Any], domain: OrderedDomain) -> list[tuple[int, int, int]]:
    """
    Cut the domain into maximal runs of constant q_ip score.

    Returns:
        list of (first_rank, run_size, score) for non-empty runs, in domain order.
    """
    ordered = sorted(values)
    n = len(ordered)
    distinct: list[Any] = []
    for v in ordered:
        if not distinct or v != distinct[-1]:
            distinct.append(v)
    runs: list[tuple[int, int, int]] = []
    below = 0  # domain elements already covered
    for v in distinct:
        left_count = bisect.bisect_left(ordered, v)
        right_count = n - bisect.bisect_right(ordered, v)
        # open gap before v: everything <= gap is left_count values, >= gap is n - left_count
        gap_end = domain.count_below(v)
        if gap_end > below:
            runs.append((below, gap_end - below, min(left_count, n - left_count)))
        point_end = domain.rank(v)
        if point_end > gap_end:
            runs.append((gap_end, point_end - gap_end, min(n - right_count, n - left_count)))
        below = max(below, point_end)
    if domain.size > below:
        runs.append((below, domain.size - below, 0))
    return runs


class PrivateIPSolver(ABC):
    """Interface of a private interior-point algorithm over an ordered domain."""

    def __init__(self, spec: IPSolverSpec):
        self.spec = spec

    @abstractmethod
    def required_samples(self, domain_size: int) -> int:
        """Smallest input size for which the 1 - beta interior guarantee holds."""

    @abstractmethod
    def solve(self, values: Sequence[Any], domain: OrderedDomain, rng: RandomSource) -> Any:
        """Return a domain element, interior for values with probability >= 1 - beta."""


class ExpMechIPSolver(PrivateIPSolver):
    """Exponential mechanism over the domain with the q_ip score (sensitivity 1)."""

    def required_samples(self, domain_size: int) -> int:
        return n_ip(domain_size, self.spec.beta, self.spec.privacy.epsilon, self.spec.privacy.delta)

    def solve(self, values: Sequence[Any], domain: OrderedDomain, rng: RandomSource) -> Any:
        runs = score_runs(values, domain)
        index = exp_mechanism(runs, [score for _, _, score in runs], 1.0, self.spec.privacy.epsilon, rng,
                              multiplicities=[size for _, size, _ in runs])
        first_rank, run_size, _ = runs[index]
        chosen = domain.at(first_rank + rng.integer(0, run_size))
        logger.debug("Interior point chosen from a run of %d elements", run_size)
        return chosen


_SOLVERS: dict[str, type[PrivateIPSolver]] = {"exp-mech": ExpMechIPSolver}


def solver_for(spec: IPSolverSpec) -> PrivateIPSolver:
    """Instantiate the solver named by spec.kind."""
    try:
        return _SOLVERS[spec.kind](spec)
    except KeyError as e:
        raise ParameterError(f"unknown interior-point solver '{spec.kind}'") from e


@log_and_raise_error("Private interior point failed")
def private_interior_point(values: Sequence[Any], domain: OrderedDomain, spec: IPSolverSpec, rng: RandomSource) -> Any:
    """
    Privately select a point between min(values) and max(values).

    Args:
        values: Multiset of domain elements.
        domain (OrderedDomain): Candidate domain containing every value.
        spec (IPSolverSpec): Solver kind, budget and failure probability.
        rng (RandomSource): Source of randomness.

    Returns:
        A domain element; interior with probability >= 1 - beta.

    Raises:
        InsufficientSamplesError: If len(values) is below the solver's requirement.
        ParameterError: If a value lies outside the domain.
    """
    solver = solver_for(spec)
    required = solver.required_samples(domain.size)
    if len(values) < required:
        raise InsufficientSamplesError(
            f"private interior point needs at least {required} values for |domain|={domain.size}, "
            f"beta={spec.beta}, epsilon={spec.privacy.epsilon}; got {len(values)}",
            required=required, available=len(values))
    if not (domain.contains(min(values)) and domain.contains(max(values))):
        raise ParameterError("values must be elements of the domain")
    return solver.solve(values, domain, rng)


def is_interior(values: Sequence[Any], x: Any) -> bool:
    """True when min(values) <= x <= max(values)."""
    return min(values) <= x <= max(values)


def as_fraction(x: Any) -> Fraction:
    """Exact Fraction view of an int, Fraction or float."""
    return x if isinstance(x, Fraction) else Fraction(x)

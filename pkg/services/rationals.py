"""
Exact rational candidate grids.

A RationalGrid is the set {s/t : |s| <= S_max, 1 <= t <= T_max} of distinct rationals. It is
never materialised: the number of grid elements up to x is counted per denominator with a
Moebius sum over the squarefree divisors of t, which gives size, rank and (by bisection on
rank) element-at-rank. Enumeration is a lazy heap merge of the reduced fractions of every
denominator.
"""
import heapq
import math
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import islice
from typing import Any, Callable, Iterator, Sequence

from entities.results import CoordinateProperness, ProperReport
from entities.specs import GridConfig
from services.interior_point import OrderedDomain, as_fraction
from services.optimizer import TargetFunction, argmax_over_domain, piece_representatives
from utils.decorators import log_execution_time
from utils.errors import ensure
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)


@lru_cache(maxsize=16)
def _signed_squarefree_divisors(limit: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Entry t lists (e, mu(e)) for the squarefree divisors e of t, 1 <= t <= limit."""
    smallest = list(range(limit + 1))
    for p in range(2, math.isqrt(limit) + 1):
        if smallest[p] == p:
            for multiple in range(p * p, limit + 1, p):
                if smallest[multiple] == multiple:
                    smallest[multiple] = p
    table: list[tuple[tuple[int, int], ...]] = [()]
    for t in range(1, limit + 1):
        divisors = [(1, 1)]
        rest = t
        while rest > 1:
            p = smallest[rest]
            while rest % p == 0:
                rest //= p
            divisors += [(e * p, -mu) for e, mu in divisors]
        table.append(tuple(divisors))
    return tuple(table)


class RationalGrid(OrderedDomain):
    """
    Distinct rationals s/t with |s| <= s_max and 1 <= t <= t_max, in increasing order.

    Attributes:
        s_max (int): Numerator bound.
        t_max (int): Denominator bound.
    """

    def __init__(self, s_max: int, t_max: int):
        ensure(s_max >= 1 and t_max >= 1, f"grid bounds must be positive, got S_max={s_max}, T_max={t_max}")
        self.s_max = int(s_max)
        self.t_max = int(t_max)

    def __repr__(self) -> str:
        return f"RationalGrid(S_max={self.s_max}, T_max={self.t_max})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RationalGrid) and (self.s_max, self.t_max) == (other.s_max, other.t_max)

    def __hash__(self) -> int:
        return hash((self.s_max, self.t_max))

    @cached_property
    def _divisors(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        return _signed_squarefree_divisors(self.t_max)

    def _coprime_in(self, t: int, low: int, high: int) -> int:
        """Number of s in [low, high] with gcd(s, t) = 1."""
        if high < low:
            return 0
        return sum(mu * (high // e - (low - 1) // e) for e, mu in self._divisors[t])

    @cached_property
    def size(self) -> int:
        return self.rank(self.s_max)

    def rank(self, x: Any) -> int:
        x = as_fraction(x)
        total = 0
        for t in range(1, self.t_max + 1):
            high = min(self.s_max, (x.numerator * t) // x.denominator)
            total += self._coprime_in(t, -self.s_max, high)
        return total

    def count_below(self, x: Any) -> int:
        x = as_fraction(x)
        total = 0
        for t in range(1, self.t_max + 1):
            high = min(self.s_max, -((-x.numerator * t) // x.denominator) - 1)
            total += self._coprime_in(t, -self.s_max, high)
        return total

    def contains(self, x: Any) -> bool:
        x = as_fraction(x)
        return x.denominator <= self.t_max and abs(x.numerator) <= self.s_max

    def first(self) -> Fraction:
        return Fraction(-self.s_max)

    def last(self) -> Fraction:
        return Fraction(self.s_max)

    def next_after(self, x: Any, strict: bool = False) -> Fraction | None:
        x = as_fraction(x)
        best: tuple[int, int] | None = None
        for t in range(1, self.t_max + 1):
            scaled = x.numerator * t
            s = scaled // x.denominator + 1 if strict else -((-scaled) // x.denominator)
            s = max(s, -self.s_max)
            if s > self.s_max:
                continue
            if best is None or s * best[1] < best[0] * t:
                best = (s, t)
        return None if best is None else Fraction(*best)

    def at(self, rank: int) -> Fraction:
        ensure(0 <= rank < self.size, f"rank {rank} outside grid of size {self.size}")
        low, high = Fraction(-self.s_max - 1), Fraction(self.s_max)
        low_rank, high_rank = 0, self.size
        # invariant: rank(low) <= rank < rank(high)
        while high_rank - low_rank > 1:
            middle = (low + high) / 2
            middle_rank = self.rank(middle)
            if middle_rank <= rank:
                low, low_rank = middle, middle_rank
            else:
                high, high_rank = middle, middle_rank
        return self.next_after(low, strict=True)

    def __iter__(self) -> Iterator[Fraction]:
        return grid_enumerate(self)


def _reduced_with_denominator(s_max: int, t: int) -> Iterator[Fraction]:
    for s in range(-s_max, s_max + 1):
        if math.gcd(s, t) == 1:
            yield Fraction(s, t)


def grid_enumerate(grid: RationalGrid) -> Iterator[Fraction]:
    """Lazily yield every element of grid once, in strictly increasing order."""
    return heapq.merge(*(_reduced_with_denominator(grid.s_max, t) for t in range(1, grid.t_max + 1)))


def lf_domain(i: int, d: int, X: int, prev_denominator: int = 1) -> RationalGrid:
    """
    Candidate grid for coordinate i of a d-variable feasibility problem with coefficients in [[X]].

    S_max = (d·d!)^i·X^(d·i) and T_max = d!·prev_denominator·X^d, where prev_denominator is the
    denominator of the previously chosen coordinate (ignored for i = 1).
    """
    ensure(1 <= i <= d, f"coordinate {i} outside 1..{d}")
    ensure(X >= 1 and prev_denominator >= 1, "X and prev_denominator must be positive")
    previous = 1 if i == 1 else prev_denominator
    d_fact = math.factorial(d)
    return RationalGrid((d * d_fact) ** i * X ** (d * i), d_fact * previous * X ** d)


def tukey_bounds(i: int, d: int, X: int, prev_denominator: int = 1,
                 config: GridConfig | None = None) -> tuple[int, int]:
    """(S_max, T_max) of tukey_domain without building the grid."""
    ensure(1 <= i <= d, f"coordinate {i} outside 1..{d}")
    ensure(X >= 1 and prev_denominator >= 1, "X and prev_denominator must be positive")
    config = config or GridConfig()
    if i in config.overrides:
        return config.overrides[i]
    remaining = d - i + 1
    previous = 1 if i == 1 else prev_denominator
    t_max = math.factorial(remaining) * (2 * X) ** remaining * previous
    t_max = max(1, math.ceil(t_max * config.denominator_scale))
    return X * t_max, t_max


def tukey_domain(i: int, d: int, X: int, prev_denominator: int = 1, config: GridConfig | None = None) -> RationalGrid:
    """
    Candidate grid for coordinate i of a Tukey-depth target on [[X]]^d.

    A slice maximiser sits where hyperplanes through data points meet; with i - 1 coordinates
    fixed, the remaining d - i + 1 unknowns solve an integer system whose differences of data
    coordinates are bounded by 2X, so by Cramer's rule and Hadamard's bound the denominator
    divides a number at most (d-i+1)!·(2X)^(d-i+1)·prev_denominator. Values stay in [-X, X],
    hence S_max = X·T_max. config may scale the denominator bound or override both bounds.
    """
    return RationalGrid(*tukey_bounds(i, d, X, prev_denominator, config))


def _mesh(bound: int, step: Fraction) -> list[Fraction]:
    count = int(2 * bound / step)
    return [Fraction(-bound) + k * step for k in range(count + 1)]


@log_execution_time()
def validate_properness(dataset: Sequence, target: TargetFunction,
                        domains: Callable[[int, tuple], OrderedDomain] | None = None,
                        tolerance: float = 0.0, mesh_step: Fraction = Fraction(1, 64),
                        bound: int | None = None, max_prefixes: int = 8) -> ProperReport:
    """
    Check that every coordinate grid attains the slice maximum of the target.

    For coordinate 1 and for a set of prefixes built from grid points (the grid maximiser and
    one representative of each constant piece of the previous slice, at most max_prefixes),
    the best slice value over the grid is compared against a reference maximum over a mesh of
    [-bound, bound] with spacing mesh_step, joined with the target's exact breakpoints.

    Args:
        dataset: Data the target is evaluated on.
        target (TargetFunction): Objective under test.
        domains: Grid provider (i, prefix) -> domain; defaults to target.domain_provider.
        tolerance (float): Accepted shortfall.
        mesh_step (Fraction): Spacing of the reference mesh.
        bound (int | None): Mesh half-width; defaults to target.coordinate_bound.
        max_prefixes (int): Extra prefixes explored per coordinate.

    Returns:
        ProperReport: Every check and the worst shortfall.
    """
    provider = domains or target.domain_provider
    half_width = bound if bound is not None else getattr(target, "coordinate_bound", None)
    ensure(half_width is not None, "a mesh bound is required when the target declares none")
    mesh = _mesh(half_width, Fraction(mesh_step))
    report = ProperReport(tolerance=tolerance)

    def check(prefix: tuple) -> None:
        coordinate = len(prefix) + 1
        grid = provider(coordinate, prefix)
        best_x, grid_value = argmax_over_domain(dataset, target, grid, prefix)
        cuts = target.breakpoints(dataset, prefix)
        candidates = mesh + list(cuts or [])
        reference = max(target.slice_eval(dataset, prefix, m) for m in candidates)
        report.checks.append(CoordinateProperness(coordinate=coordinate, prefix=prefix, grid_value=float(grid_value),
                                                  reference_value=float(reference)))
        if coordinate == target.dimension:
            return
        followers = [best_x]
        if cuts:
            followers += list(islice(piece_representatives(grid, cuts), max_prefixes))
        for x in dict.fromkeys(followers):
            check(prefix + (x,))

    check(())
    if not report.proper:
        logger.warning("Grid misses a slice maximum: worst shortfall %.6f", report.worst_shortfall)
    return report

"""
VC subset sizing and empirical approximation checks.

A random subset of m = O((d·ln(d/alpha) + ln(1/beta))/alpha^2) elements approximates every
range of a VC-dimension-d range space within alpha. The checkers measure how far a
normalised target on a subset drifts from its value on the full dataset.
"""
import math
from collections import Counter
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from entities.experiment import CalibrationRow
from entities.specs import ApproxSpec
from services.audit import clopper_pearson
from services.dp_core import RandomSource
from services.optimizer import TargetFunction
from services.planar import cross, dot
from utils.errors import DegenerateArrangementError, ParameterError, ensure
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)


def m_subset_size(spec: ApproxSpec) -> int:
    """ceil(C_VC·(d·ln(d/alpha) + ln(1/beta))/alpha^2)."""
    d, alpha = spec.vc_dimension, spec.alpha
    return math.ceil(spec.c_vc * (d * math.log(d / alpha) + math.log(1 / spec.beta)) / alpha ** 2)


def generalization_sample_size(vc_dimension: int, alpha: float, beta: float) -> int:
    """
    Training-set size after which every hypothesis with empirical error <= alpha/10 has true
    error < alpha with probability 1 - beta: 48/alpha·(10·VC·ln(48e/alpha) + ln(5/beta)).
    """
    ensure(vc_dimension >= 1, f"VC dimension must be positive, got {vc_dimension}")
    ensure(0 < alpha < 1 and 0 < beta < 1, "alpha and beta must lie in (0, 1)")
    return math.ceil(48 / alpha * (10 * vc_dimension * math.log(48 * math.e / alpha) + math.log(5 / beta)))


def _is_sub_multiset(subset: Sequence, dataset: Sequence) -> bool:
    return not (Counter(subset) - Counter(dataset))


def check_alpha_approx(dataset: Sequence, subset: Sequence, target: TargetFunction, probes: Sequence,
                       alpha: float) -> tuple[bool, float]:
    """
    Worst |Q(S, x) - Q(S_sub, x)| over the probes, compared against alpha.

    Returns:
        tuple: (gap <= alpha, gap)

    Raises:
        ParameterError: If probes is empty or subset is not a sub-multiset of dataset.
    """
    ensure(len(probes) > 0, "at least one probe point is required")
    ensure(_is_sub_multiset(subset, dataset), "subset must be a sub-multiset of the dataset")
    gap = max(abs(target.eval(dataset, x) - target.eval(subset, x)) for x in probes)
    return gap <= alpha, float(gap)


def mesh_probes(d: int, bound: int, step: Fraction) -> list[tuple[Fraction, ...]]:
    """Regular mesh of [-bound, bound]^d."""
    count = int(2 * bound / step)
    axis = [Fraction(-bound) + k * step for k in range(count + 1)]
    points: list[tuple[Fraction, ...]] = [()]
    for _ in range(d):
        points = [p + (v,) for p in points for v in axis]
    return points


def default_probes(target: TargetFunction, dataset: Sequence, step: Fraction = Fraction(1, 4)) -> list:
    """Probe points the target publishes for dataset, else a mesh of its coordinate box."""
    published = target.probes(dataset)
    if published is not None:
        return published
    ensure(target.coordinate_bound is not None, "target publishes neither probes nor a coordinate bound")
    return mesh_probes(target.dimension, target.coordinate_bound, step)


def random_subset(dataset: Sequence, m: int, rng: RandomSource) -> list:
    """m elements drawn without replacement."""
    ensure(1 <= m <= len(dataset), f"cannot draw {m} of {len(dataset)} elements")
    order = rng.permutation(len(dataset))
    return [dataset[i] for i in order[:m]]


def sensitivity_probe(target: TargetFunction, pairs: Iterable[tuple[Sequence, Sequence]],
                      probes: Sequence | Callable[[Sequence, Sequence], Sequence] | None = None) -> float:
    """
    Worst |Q(S1, x) - Q(S2, x)| over neighbouring pairs and probe points.

    Args:
        target (TargetFunction): Normalised objective.
        pairs: Neighbouring datasets.
        probes: Fixed probe points, a callable building them per pair, or None for the target's own
            probes on both datasets.
    """
    worst = 0.0
    for first, second in pairs:
        if probes is None:
            points = list(default_probes(target, first)) + list(default_probes(target, second))
        elif callable(probes):
            points = probes(first, second)
        else:
            points = probes
        gap = max(abs(target.eval(first, x) - target.eval(second, x)) for x in points)
        worst = max(worst, float(gap))
    return worst


def replace_one(dataset: Sequence, replacement, rng: RandomSource) -> list:
    """Neighbour of dataset with one uniformly chosen element replaced."""
    neighbour = list(dataset)
    neighbour[rng.integer(0, len(neighbour))] = replacement
    return neighbour


def calibrate_subset_failure_rate(target: TargetFunction, dataset: Sequence, spec: ApproxSpec, trials: int,
                                  rng: RandomSource, probes: Sequence | None = None,
                                  label: str = "Q") -> CalibrationRow:
    """
    Empirical probability that a random m_subset_size(spec) subset fails the alpha check.

    Returns:
        CalibrationRow: failure rate with its 95% Clopper-Pearson interval.
    """
    ensure(trials >= 1, "trials must be positive")
    m = m_subset_size(spec)
    if m > len(dataset):
        raise ParameterError(f"subset size {m} exceeds the dataset size {len(dataset)}")
    points = probes if probes is not None else default_probes(target, dataset)
    failures = 0
    for _ in range(trials):
        passed, _gap = check_alpha_approx(dataset, random_subset(dataset, m, rng), target, points, spec.alpha)
        failures += 0 if passed else 1
    low, high = clopper_pearson(failures, trials)
    logger.info("Calibration of %s at m=%d: %d/%d subsets failed", label, m, failures, trials)
    return CalibrationRow(function=label, d=target.dimension, n=len(dataset), m=m, alpha=spec.alpha,
                          empirical_failure_rate=failures / trials, ci_low=low, ci_high=high)


def is_general_position(halfspaces: Sequence[tuple[Sequence[int], int]]) -> bool:
    """No zero normal, no two parallel boundaries and no three concurrent boundaries."""
    try:
        _arrangement_vertices(halfspaces)
    except DegenerateArrangementError:
        return False
    return True


def _arrangement_vertices(halfspaces: Sequence[tuple[Sequence[int], int]]) -> list[tuple[int, int, tuple]]:
    for index, (a, _w) in enumerate(halfspaces):
        if len(a) != 2:
            raise ParameterError("dichotomy counting is implemented for d = 2 only")
        if a[0] == 0 and a[1] == 0:
            raise DegenerateArrangementError(f"halfspace {index} has a zero normal")
    vertices: list[tuple[int, int, tuple]] = []
    seen: dict[tuple, tuple[int, int]] = {}
    for i in range(len(halfspaces)):
        for j in range(i + 1, len(halfspaces)):
            (a, w), (b, v) = halfspaces[i], halfspaces[j]
            determinant = cross(a, b)
            if determinant == 0:
                raise DegenerateArrangementError(
                    f"boundaries {i} and {j} are parallel; shear one normal slightly to restore general position")
            point = (Fraction(w * b[1] - v * a[1], determinant), Fraction(a[0] * v - b[0] * w, determinant))
            if point in seen:
                raise DegenerateArrangementError(
                    f"boundaries {seen[point]} and {(i, j)} meet in one point; shift one offset slightly")
            seen[point] = (i, j)
            vertices.append((i, j, point))
    return vertices


def count_realized_dichotomies(halfspaces: Sequence[tuple[Sequence[int], int]]) -> int:
    """
    Number of distinct membership vectors (x in H_1, ..., x in H_k) over x in R^2.

    H = {x : <a, x> >= w}. Every cell of a line arrangement in general position touches a vertex,
    so the vectors of the four cells around every vertex, together with the vertices themselves,
    are all vectors realised. Points on boundaries reproduce the vector of the adjacent cell on
    the closed side.

    Raises:
        DegenerateArrangementError: On parallel or concurrent boundaries.
    """
    k = len(halfspaces)
    vertices = _arrangement_vertices(halfspaces)
    if k <= 1:
        return 2 ** k
    realised: set[tuple[bool, ...]] = set()
    for i, j, point in vertices:
        base = [dot(a, point) >= w for a, w in halfspaces]
        realised.add(tuple(base))
        for inside_i in (True, False):
            for inside_j in (True, False):
                vector = list(base)
                vector[i], vector[j] = inside_i, inside_j
                realised.add(tuple(vector))
    return len(realised)

"""
Private linear feasibility and halfspace learning.

depth_S(x) counts the constraints <a, x> >= w that x satisfies; cdepth_S(x) is the largest y
such that x lies in the closed convex hull of {z : depth_S(z) >= y}. cdepth is quasi-concave,
so the optimizer applies; depth(x) >= (d + 1)·cdepth(x) - d·|S| turns a deep point of cdepth
into a point satisfying most constraints.

In the plane the closed hull of each super-level set is conv(V) + cone(R): V are the
arrangement vertices of depth >= y and R the directions along which {depth >= y} is unbounded,
found from the angular sectors between line directions and from the line directions themselves.
"""
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from entities.geometry import Constraint, ConstraintSet, Hypothesis, LabeledExample
from entities.privacy import PrivacyParams
from entities.results import FeasibilityResult, LearnerResult, SampleRequirements
from entities.specs import ApproxSpec, OptimizerConfig
from services.approximation import m_subset_size, generalization_sample_size
from services.dp_core import RandomSource, ledger_for
from services.interior_point import OrderedDomain
from services.optimizer import TargetFunction, block_count, ip_concave_high_dim
from services.planar import ConvexRegion, NestedRegions, angle_key, cross, dot, primitive
from services.rationals import lf_domain
from utils.decorators import log_and_raise_error, log_execution_time
from utils.errors import InsufficientSamplesError, ParameterError, UnsupportedDimensionError, ensure
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)

Pair = tuple[tuple[int, ...], int]
Interval = tuple[Optional[Fraction], Optional[Fraction]]


def _pairs(S: ConstraintSet | Sequence) -> list[Pair]:
    if isinstance(S, ConstraintSet):
        return S.as_tuples()
    return [c.as_tuple() if isinstance(c, Constraint) else (tuple(c[0]), c[1]) for c in S]


def depth(S: ConstraintSet | Sequence, x: Sequence) -> int:
    """
    Number of constraints satisfied by x, in exact arithmetic.

    Raises:
        ParameterError: If x and the constraints differ in dimension.
    """
    point = [Fraction(c) for c in x]
    total = 0
    for a, w in _pairs(S):
        if len(a) != len(point):
            raise ParameterError(f"point has dimension {len(point)}, constraint has {len(a)}")
        total += sum(c * v for c, v in zip(a, point)) >= w
    return total


def threshold_levels(thresholds: Sequence[tuple[int, int]], constant: int = 0) -> list[Interval]:
    """
    Closed hulls of the super-level sets of s -> constant + #{j : lambda_j·s >= c_j} on the line.

    Args:
        thresholds: (lambda_j, c_j) with lambda_j != 0.
        constant (int): Number of always-satisfied constraints.

    Returns:
        list: Entry k - 1 is the hull of {s : value >= k} as (low, high), None for unbounded ends.
    """
    cuts = sorted({Fraction(c, lam) for lam, c in thresholds})

    def value(s: Fraction) -> int:
        return constant + sum(1 for lam, c in thresholds if lam * s >= c)

    pieces: list[tuple[int, Interval]] = []
    if not cuts:
        pieces.append((value(Fraction(0)), (None, None)))
    else:
        pieces.append((value(cuts[0] - 1), (None, cuts[0])))
        for index, cut in enumerate(cuts):
            pieces.append((value(cut), (cut, cut)))
            if index + 1 < len(cuts):
                pieces.append((value((cut + cuts[index + 1]) / 2), (cut, cuts[index + 1])))
        pieces.append((value(cuts[-1] + 1), (cuts[-1], None)))
    top = max(level for level, _ in pieces)
    levels: list[Interval] = []
    for k in range(1, top + 1):
        spans = [span for level, span in pieces if level >= k]
        low = None if any(span[0] is None for span in spans) else min(span[0] for span in spans)
        high = None if any(span[1] is None for span in spans) else max(span[1] for span in spans)
        levels.append((low, high))
    return levels


def _in_interval(x: Fraction, interval: Interval) -> bool:
    low, high = interval
    return (low is None or low <= x) and (high is None or x <= high)


def _canonical_normal(a: tuple[int, int]) -> tuple[tuple[int, int], int]:
    """(primitive normal with positive leading entry, integer multiplier) so that a = multiplier·normal."""
    normal = primitive(a)
    if normal[0] < 0 or (normal[0] == 0 and normal[1] < 0):
        normal = (-normal[0], -normal[1])
    multiplier = a[0] // normal[0] if normal[0] != 0 else a[1] // normal[1]
    return normal, multiplier


def _point_on(normal: tuple[int, int], level: Fraction) -> tuple[Fraction, Fraction]:
    norm = dot(normal, normal)
    return Fraction(level * normal[0], norm), Fraction(level * normal[1], norm)


def _line_intersection(first: Pair, second: Pair) -> tuple[Fraction, Fraction]:
    (a, w), (b, v) = first, second
    determinant = cross(a, b)
    return Fraction(w * b[1] - v * a[1], determinant), Fraction(a[0] * v - b[0] * w, determinant)


def feasibility_regions(constraints: Sequence[Pair]) -> NestedRegions:
    """Closed convex hulls of {z : depth(z) >= y}, y = 1, 2, ..., for planar constraints."""
    constant = sum(1 for a, w in constraints if a == (0, 0) and 0 >= w)
    lines = [(tuple(a), w) for a, w in constraints if a != (0, 0)]
    whole_plane = ConvexRegion([(0, 0)], [(1, 0), (-1, 0), (0, 1), (0, -1)])
    if not lines:
        return NestedRegions([whole_plane] * constant)

    families: dict[tuple[int, int], list[tuple[int, int]]] = {}
    membership: list[tuple[int, int]] = []
    for a, w in lines:
        normal, multiplier = _canonical_normal(a)
        families.setdefault(normal, []).append((multiplier, w))
        membership.append(normal)

    if len(families) == 1:
        (normal, thresholds), = families.items()
        along = (-normal[1], normal[0])
        regions = []
        for low, high in threshold_levels(thresholds, constant):
            vertices, rays = [], [along, (-along[0], -along[1])]
            if low is None:
                rays.append((-normal[0], -normal[1]))
            else:
                vertices.append(_point_on(normal, low))
            if high is None:
                rays.append(normal)
            else:
                vertices.append(_point_on(normal, high))
            regions.append(ConvexRegion(vertices or [(0, 0)], rays))
        return NestedRegions(regions)

    vertex_depths: dict[tuple[Fraction, Fraction], int] = {}
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            if membership[i] != membership[j]:
                point = _line_intersection(lines[i], lines[j])
                if point not in vertex_depths:
                    vertex_depths[point] = depth(constraints, point)

    directions = sorted({u for normal in families for u in ((-normal[1], normal[0]), (normal[1], -normal[0]))},
                        key=angle_key)
    recession: list[tuple[tuple[int, int], int]] = []
    for index, first in enumerate(directions):
        second = directions[(index + 1) % len(directions)]
        inside = (first[0] + second[0], first[1] + second[1])
        far = constant + sum(1 for a, _ in lines if dot(a, inside) > 0)
        recession += [(first, far), (second, far)]
    for normal, thresholds in families.items():
        best_in_family = len(threshold_levels(thresholds))
        for u in ((-normal[1], normal[0]), (normal[1], -normal[0])):
            crossing = sum(1 for (a, _), own in zip(lines, membership) if own != normal and dot(a, u) > 0)
            recession.append((u, constant + best_in_family + crossing))

    top = max(max(vertex_depths.values()), max(level for _, level in recession))
    regions = []
    for y in range(1, top + 1):
        vertices = [v for v, level in vertex_depths.items() if level >= y]
        rays = [u for u, level in recession if level >= y]
        regions.append(ConvexRegion(vertices, rays))
    return NestedRegions(regions)


class CDepthOracle:
    """
    Precomputed super-level hulls of the depth function for d <= 2.

    Attributes:
        d (int): Number of variables.
        n (int): Number of constraints.
    """

    def __init__(self, constraints: Sequence[Pair], d: int | None = None):
        self.constraints = [(tuple(a), w) for a, w in constraints]
        self.d = d if d is not None else (len(self.constraints[0][0]) if self.constraints else 1)
        self.n = len(self.constraints)
        if self.d > 2:
            raise UnsupportedDimensionError(f"exact cdepth is implemented for d <= 2, got d={self.d}")
        if self.d == 1:
            constant = sum(1 for a, w in self.constraints if a[0] == 0 and 0 >= w)
            self.intervals = threshold_levels([(a[0], w) for a, w in self.constraints if a[0] != 0], constant)
            self.regions = None
        else:
            self.intervals = None
            self.regions = feasibility_regions(self.constraints)

    @property
    def top(self) -> int:
        return len(self.intervals) if self.d == 1 else self.regions.top

    def cdepth(self, x: Sequence) -> int:
        ensure(len(x) == self.d, f"point has dimension {len(x)}, constraints have {self.d}")
        if self.d == 1:
            value = Fraction(x[0])
            return max((k for k, span in enumerate(self.intervals, start=1) if _in_interval(value, span)), default=0)
        return self.regions.value_at(tuple(Fraction(c) for c in x))

    def first_coordinate_max(self, x1) -> int:
        """max over x2 of cdepth(x1, x2); for d = 1 simply cdepth(x1)."""
        if self.d == 1:
            return self.cdepth((x1,))
        return self.regions.line_max(Fraction(x1))

    def breakpoints(self, prefix: Sequence) -> list[Fraction]:
        if self.d == 1:
            return sorted({end for span in self.intervals for end in span if end is not None})
        if not prefix:
            return self.regions.line_max_breakpoints()
        return self.regions.line_breakpoints(Fraction(prefix[0]))


@lru_cache(maxsize=4096)
def _oracle_for(constraints: tuple[Pair, ...]) -> CDepthOracle:
    return CDepthOracle(constraints)


def oracle_of(S: ConstraintSet | Sequence) -> CDepthOracle:
    return _oracle_for(tuple(sorted(_pairs(S))))


def cdepth(S: ConstraintSet | Sequence, x: Sequence) -> int:
    """
    Convexified depth of x.

    Raises:
        UnsupportedDimensionError: For d > 2.
    """
    pairs = _pairs(S)
    if not pairs:
        return 0
    return oracle_of(pairs).cdepth(x)


def q_lf(S: ConstraintSet | Sequence, x: Sequence) -> Fraction:
    """cdepth_S(x)/|S|."""
    pairs = _pairs(S)
    ensure(len(pairs) > 0, "cdepth of an empty constraint set is undefined")
    return Fraction(cdepth(pairs, x), len(pairs))


class FeasibilityTarget(TargetFunction):
    """Q_LF(S, x) = cdepth_S(x)/|S| with the cascading feasibility grids."""

    def __init__(self, d: int, X: int):
        if d > 2:
            raise UnsupportedDimensionError(f"feasibility targets are implemented for d <= 2, got d={d}")
        self.d = d
        self.X = X
        self.coordinate_bound = X

    @property
    def dimension(self) -> int:
        return self.d

    def eval(self, dataset: Sequence, point: Sequence) -> Fraction:
        return q_lf(dataset, point)

    def slice_eval(self, dataset: Sequence, prefix: Sequence, x) -> Fraction:
        oracle = oracle_of(dataset)
        if len(prefix) + 1 == self.d:
            return Fraction(oracle.cdepth(tuple(prefix) + (x,)), oracle.n)
        return Fraction(oracle.first_coordinate_max(x), oracle.n)

    def domain_provider(self, i: int, prefix: Sequence) -> OrderedDomain:
        previous = Fraction(prefix[-1]).denominator if prefix else 1
        return lf_domain(i, self.d, self.X, previous)

    def breakpoints(self, dataset: Sequence, prefix: Sequence) -> list | None:
        return oracle_of(dataset).breakpoints(prefix)

    def probes(self, dataset: Sequence) -> list | None:
        oracle = oracle_of(dataset)
        if self.d == 1:
            cuts = oracle.breakpoints(())
            for a, w in oracle.constraints:
                if a[0] != 0:
                    cuts.append(Fraction(w, a[0]))
            cuts = sorted(set(cuts)) or [Fraction(0)]
            gaps = [(p + q) / 2 for p, q in zip(cuts, cuts[1:])]
            return [(v,) for v in [cuts[0] - 1, *cuts, *gaps, cuts[-1] + 1]]
        lines = [(a, w) for a, w in oracle.constraints if a != (0, 0)]
        points = {v for region in oracle.regions.regions for v in region.vertices}
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                if cross(lines[i][0], lines[j][0]) != 0:
                    points.add(_line_intersection(lines[i], lines[j]))
        far = Fraction(4 * (self.X ** 2 + 1))
        points |= {(far, Fraction(0)), (-far, Fraction(0)), (Fraction(0), far), (Fraction(0), -far)}
        return sorted(points)


def worst_lf_domain_size(d: int, X: int) -> int:
    largest, previous = 1, 1
    for i in range(1, d + 1):
        grid = lf_domain(i, d, X, previous)
        largest = max(largest, grid.size)
        previous = grid.t_max
    return largest


def feasibility_sample_requirements(d: int, X: int, alpha: float, beta: float, privacy: PrivacyParams,
                                    t: int | None = None) -> SampleRequirements:
    """Block count and sample sizes with alpha replaced by alpha/(4d^2) and beta by beta/(t + d)."""
    step, ledger = ledger_for(privacy, d, "interior-point")
    size = worst_lf_domain_size(d, X)
    blocks = t if t is not None else block_count(size, beta, d, step)
    step_alpha = alpha / (4 * d * d)
    step_beta = beta / (blocks + d)
    m = m_subset_size(ApproxSpec(alpha=step_alpha, beta=step_beta, vc_dimension=d + 1))
    return SampleRequirements(t=blocks, baseline_n_min=blocks, guarantee_n_min=blocks * m, m=m, domain_size=size,
                              rule=ledger.rule, step_epsilon=step.epsilon, step_delta=step.delta,
                              step_beta=step_beta, step_alpha=step_alpha)


@log_execution_time()
@log_and_raise_error("Private linear feasibility failed")
def private_linear_feasibility(S: ConstraintSet, alpha: float, beta: float, privacy: PrivacyParams,
                               rng: RandomSource, t: int | None = None) -> FeasibilityResult:
    """
    Differentially private point satisfying most constraints of a feasible system.

    Returns:
        FeasibilityResult: Released point, satisfied count and privacy ledger.

    Raises:
        InsufficientSamplesError: If the system has fewer constraints than blocks.
        UnsupportedDimensionError: For d > 2.
    """
    ensure(0 < alpha < 1 and 0 < beta < 1, "alpha and beta must lie in (0, 1)")
    d, n = S.d, S.n
    target = FeasibilityTarget(d, S.X)
    requirements = feasibility_sample_requirements(d, S.X, alpha, beta, privacy, t)
    if n < requirements.t:
        raise InsufficientSamplesError(
            f"private linear feasibility needs n >= {requirements.baseline_n_min} (baseline solver gate, t blocks) "
            f"and n >= {requirements.guarantee_n_min} for the accuracy guarantee (t·m); got n={n}",
            required=requirements.baseline_n_min, available=n)
    if n < requirements.guarantee_n_min:
        logger.warning("n=%d is below t·m=%d: the feasibility guarantee is not in force", n, requirements.guarantee_n_min)

    step, ledger = ledger_for(privacy, d, "interior-point")
    config = OptimizerConfig(alpha=requirements.step_alpha, beta=requirements.step_beta, privacy=step,
                             t=requirements.t)
    trace = ip_concave_high_dim(S.as_tuples(), target, config, rng, ledger=ledger)
    satisfied = depth(S, trace.point)
    logger.info("Private feasibility point satisfies %d of %d constraints (t=%d)", satisfied, n, requirements.t)
    return FeasibilityResult(point=trace.point, satisfied=satisfied, n=n, target=(1 - alpha) * n,
                             requirements=requirements, ledger=ledger, trace=trace)


def reduce_examples_to_constraints(examples: Sequence[LabeledExample], margin: int = 0) -> ConstraintSet:
    """
    ((x_1..x_d), y) -> constraint <y·(x_1, ..., x_d, -1), z> >= margin on d + 1 variables.

    With margin 0 the system always admits z = 0; a positive margin excludes it.
    """
    ensure(len(examples) > 0, "at least one example is required")
    ensure(margin >= 0, f"margin must be non-negative, got {margin}")
    d = len(examples[0].x)
    constraints = [Constraint(a=tuple(e.y * c for c in e.x) + (-e.y,), w=margin) for e in examples]
    bound = max([1, margin] + [abs(c) for e in examples for c in e.x])
    return ConstraintSet(d=d + 1, X=bound, constraints=constraints)


def predict(hypothesis: Hypothesis, xs: Sequence[Sequence[int]]) -> list[int]:
    """Labels h(x) = 1 iff <weights, x> >= threshold, else -1."""
    return [hypothesis.predict_one(x) for x in xs]


def empirical_error(hypothesis: Hypothesis, examples: Sequence[LabeledExample]) -> float:
    """Fraction of misclassified examples."""
    ensure(len(examples) > 0, "at least one example is required")
    wrong = sum(1 for e in examples if hypothesis.predict_one(e.x) != e.y)
    return wrong / len(examples)


@log_execution_time()
def learn_halfspace(examples: Sequence[LabeledExample], alpha: float, beta: float, privacy: PrivacyParams,
                    rng: RandomSource, t: int | None = None, strict: bool = False) -> LearnerResult:
    """
    Private halfspace learner for realizable one-dimensional data.

    The examples become a unit-margin feasibility system on (weights, threshold); a private point
    satisfying a (1 - alpha/10) fraction of the constraints classifies the same fraction of the
    training set correctly.

    The generalization bound only governs the population-error claim. Privacy and the training
    error target hold below it, so by default a short sample is logged and reported through
    generalization_guaranteed; strict=True turns it into an error.

    Raises:
        UnsupportedDimensionError: For more than one feature (the feasibility system would need d > 2).
        InsufficientSamplesError: With strict=True, when the sample is below the generalization bound.
    """
    ensure(0 < alpha < 1 and 0 < beta < 1, "alpha and beta must lie in (0, 1)")
    features = len(examples[0].x)
    if features + 1 > 2:
        raise UnsupportedDimensionError(f"the learner supports one feature, got {features}")
    bound = generalization_sample_size(features + 1, alpha, beta)
    guaranteed = len(examples) >= bound
    if not guaranteed and strict:
        raise InsufficientSamplesError(f"{len(examples)} examples are below the generalization bound {bound}",
                                       required=bound, available=len(examples))
    if not guaranteed:
        logger.warning("%d examples are below the generalization bound %d", len(examples), bound)
    system = reduce_examples_to_constraints(examples, margin=1)
    feasibility = private_linear_feasibility(system, alpha / 10, beta, privacy, rng, t=t)
    hypothesis = Hypothesis(weights=feasibility.point[:features], threshold=feasibility.point[features])
    error = empirical_error(hypothesis, examples)
    logger.info("Learned hypothesis with training error %.4f", error)
    return LearnerResult(hypothesis=hypothesis, training_error=error, target_error=alpha / 10, sample_bound=bound,
                         generalization_guaranteed=guaranteed, feasibility=feasibility)

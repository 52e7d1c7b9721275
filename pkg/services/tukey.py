"""
Tukey depth and the private Tukey-median mechanism.

Depth uses closed halfspaces: TD_S(p) = min over directions v of |{s : <v, s - p> >= 0}|.
Writing u_s = s - p, this is z + N - M where z counts points equal to p, N the others and M
the largest number of the u_s inside one open halfspace through the origin. The planar case
finds M with an angular sweep, the spatial case by enumerating normals spanned by pairs.

For optimisation in the plane every block is turned into its depth regions
R_k = {TD >= k}, each an exact convex polygon, so slice maxima and their breakpoints are
interval computations.
"""
import math
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from entities.geometry import PointSet
from entities.privacy import PrivacyParams
from entities.results import SampleRequirements, TukeyResult
from entities.specs import ApproxSpec, GridConfig, OptimizerConfig
from services.approximation import m_subset_size
from services.dp_core import RandomSource, ledger_for
from services.interior_point import IntegerRange, OrderedDomain, SortedDomain, q_ip_score
from services.optimizer import TargetFunction, block_count, ip_concave_high_dim
from services.planar import ConvexRegion, NestedRegions, angle_key, clip, convex_hull, cross, dot, same_direction
from services.rationals import RationalGrid, tukey_bounds, tukey_domain
from utils.decorators import log_and_raise_error, log_execution_time
from utils.errors import InsufficientSamplesError, ParameterError, UnsupportedDimensionError, ensure
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)


def _scaled_offsets(points: Sequence[Sequence[int]], p: Sequence) -> tuple[int, list[tuple[int, ...]]]:
    """(z, integer vectors L·(s - p) for s != p) with L the lcm of p's denominators."""
    query = [Fraction(c) for c in p]
    scale = math.lcm(*(c.denominator for c in query))
    anchor = [int(c * scale) for c in query]
    coincident = 0
    vectors: list[tuple[int, ...]] = []
    for s in points:
        u = tuple(scale * si - ai for si, ai in zip(s, anchor))
        if any(u):
            vectors.append(u)
        else:
            coincident += 1
    return coincident, vectors


def max_open_halfplane(vectors: Sequence[tuple[int, int]]) -> int:
    """Largest number of non-zero planar vectors inside one open half-plane through the origin."""
    if not vectors:
        return 0
    ordered = sorted(vectors, key=angle_key)
    directions: list[tuple[int, int]] = []
    counts: list[int] = []
    for u in ordered:
        if directions and same_direction(directions[-1], u):
            counts[-1] += 1
        else:
            directions.append(u)
            counts.append(1)
    total_vectors = len(vectors)
    groups = len(directions)
    best = 0
    window, end = 0, 0

    def in_arc(start: int, other: int) -> bool:
        c = cross(directions[start], directions[other])
        return c > 0 or (c == 0 and dot(directions[start], directions[other]) < 0)

    # window holds groups start+1 .. end-1, the angles in (theta_start, theta_start + pi]
    for start in range(groups):
        if end <= start:
            end, window = start + 1, 0
        while end < start + groups and in_arc(start, end % groups):
            window += counts[end % groups]
            end += 1
        best = max(best, window, total_vectors - window)
        if end > start + 1:
            window -= counts[(start + 1) % groups]
    return best


def _max_open_halfspace_3d(vectors: Sequence[tuple[int, int, int]]) -> int:
    if not vectors:
        return 0
    best = 0
    spanning = False
    for j, uj in enumerate(vectors):
        for uk in vectors[j + 1:]:
            normal = _cross3(uj, uk)
            if not any(normal):
                continue
            spanning = True
            in_plane_axis = _cross3(normal, uj)
            for w in (normal, tuple(-c for c in normal)):
                below = 0
                planar: list[tuple[int, int]] = []
                for u in vectors:
                    side = _dot3(w, u)
                    if side < 0:
                        below += 1
                    elif side == 0:
                        planar.append((_dot3(u, uj), _dot3(u, in_plane_axis)))
                best = max(best, below + max_open_halfplane(planar))
    if not spanning:
        reference = vectors[0]
        forward = sum(1 for u in vectors if _dot3(u, reference) > 0)
        return max(forward, len(vectors) - forward)
    return best


def _cross3(u: Sequence[int], v: Sequence[int]) -> tuple[int, int, int]:
    return u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]


def _dot3(u: Sequence[int], v: Sequence[int]) -> int:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def tukey_depth(points: Sequence[Sequence[int]], p: Sequence) -> int:
    """
    Exact Tukey depth of p in the multiset points (closed-halfspace convention).

    Raises:
        UnsupportedDimensionError: For d > 3.
    """
    if not points:
        return 0
    d = len(p)
    if d == 1:
        return q_ip_score([s[0] for s in points], Fraction(p[0]))
    if d > 3:
        raise UnsupportedDimensionError(f"exact Tukey depth is implemented for d <= 3, got d={d}")
    coincident, vectors = _scaled_offsets(points, p)
    reach = max_open_halfplane(vectors) if d == 2 else _max_open_halfspace_3d(vectors)
    return coincident + len(vectors) - reach


def tukey_depth_by_normals(points: Sequence[Sequence[int]], p: Sequence) -> int:
    """
    Planar Tukey depth by enumerating the normals perpendicular to every offset vector.

    Quadratic; used to cross-check the angular sweep.
    """
    ensure(len(p) == 2, "direction enumeration is implemented for d = 2")
    coincident, vectors = _scaled_offsets(points, p)
    reach = 0
    for uj in vectors:
        ahead = sum(1 for u in vectors if same_direction(u, uj))
        behind = sum(1 for u in vectors if cross(u, uj) == 0 and dot(u, uj) < 0)
        for w in ((-uj[1], uj[0]), (uj[1], -uj[0])):
            strictly = sum(1 for u in vectors if dot(w, u) < 0)
            reach = max(reach, strictly + max(ahead, behind))
    return coincident + len(vectors) - reach


def q_td(points: Sequence[Sequence[int]], p: Sequence) -> Fraction:
    """TD_S(p)/|S|."""
    ensure(len(points) > 0, "Tukey depth of an empty dataset is undefined")
    return Fraction(tukey_depth(points, p), len(points))


def _collinear(locations: list[tuple[int, int]]) -> bool:
    origin, other = locations[0], locations[1]
    return all(cross((other[0] - origin[0], other[1] - origin[1]),
                     (q[0] - origin[0], q[1] - origin[1])) == 0 for q in locations[2:])


@lru_cache(maxsize=4096)
def depth_regions(points: tuple[tuple[int, int], ...]) -> NestedRegions:
    """
    The regions {TD >= k}, k = 1, 2, ..., of a planar multiset as exact convex polygons.

    R_1 is the convex hull; R_k is the intersection of all closed half-planes holding at least
    n - k + 1 points, and it suffices to take half-planes bounded by lines through two
    distinct data points. Collinear data reduce to the one-dimensional order statistics.
    """
    n = len(points)
    multiplicity = Counter(points)
    locations = sorted(multiplicity)
    if len(locations) == 1:
        return NestedRegions([ConvexRegion(locations)] * n)
    if _collinear(locations):
        axis = (locations[-1][0] - locations[0][0], locations[-1][1] - locations[0][1])
        ordered = sorted(points, key=lambda q: dot(axis, q))
        regions = []
        for k in range(1, n + 1):
            low, high = ordered[k - 1], ordered[n - k]
            # past the middle only points repeated at the median stay this deep
            if dot(axis, low) > dot(axis, high):
                break
            regions.append(ConvexRegion([low, high]))
        return NestedRegions(regions)

    coords = np.asarray(locations, dtype=np.int64)
    weights = np.asarray([multiplicity[q] for q in locations], dtype=np.int64)
    first, second = np.triu_indices(len(locations), k=1)
    normals = np.stack([coords[first, 1] - coords[second, 1], coords[second, 0] - coords[first, 0]], axis=1)
    offsets = np.einsum("ij,ij->i", normals, coords[first])
    projections = normals @ coords.T
    upper_counts = ((projections >= offsets[:, None]) * weights).sum(axis=1)
    lower_counts = ((projections <= offsets[:, None]) * weights).sum(axis=1)

    # level at which each half-plane starts to bind: count >= n - k + 1
    by_level: dict[int, set[tuple[int, int, int]]] = {}
    for (nx, ny), offset, upper, lower in zip(normals.tolist(), offsets.tolist(),
                                               upper_counts.tolist(), lower_counts.tolist()):
        g = math.gcd(nx, ny)
        nx, ny = nx // g, ny // g
        offset //= g
        for sign, count in ((1, upper), (-1, lower)):
            level = n - count + 1
            if level >= 2:
                by_level.setdefault(level, set()).add((sign * nx, sign * ny, sign * offset))

    polygon = convex_hull(locations)
    regions = [ConvexRegion(polygon)]
    for level in range(2, n + 1):
        for nx, ny, offset in sorted(by_level.get(level, ())):
            polygon = clip(polygon, (nx, ny), offset)
            if not polygon:
                break
        if not polygon:
            break
        regions.append(ConvexRegion(polygon))
    return NestedRegions(regions)


def _regions_of(block: Sequence[Sequence[int]]) -> NestedRegions:
    return depth_regions(tuple(sorted(tuple(s) for s in block)))


class TukeyTarget(TargetFunction):
    """
    Q_TD(S, x) = TD_S(x)/|S| on [[X]]^d with cascading rational grids.

    Attributes:
        d (int): Dimension, 1 to 3.
        coordinate_bound (int): X.
        grid (GridConfig): Grid scaling.
    """

    def __init__(self, d: int, X: int, grid: GridConfig | None = None):
        if d > 3:
            raise UnsupportedDimensionError(f"Tukey targets are implemented for d <= 3, got d={d}")
        ensure(d >= 1 and X >= 1, "d and X must be positive")
        self.d = d
        self.coordinate_bound = X
        self.grid = grid or GridConfig()

    @property
    def dimension(self) -> int:
        return self.d

    def eval(self, dataset: Sequence, point: Sequence) -> Fraction:
        return q_td(dataset, point)

    def slice_eval(self, dataset: Sequence, prefix: Sequence, x) -> Fraction:
        return td_slice_max(dataset, prefix, x, d=self.d)

    def domain_provider(self, i: int, prefix: Sequence) -> OrderedDomain:
        if self.d == 1 and 1 not in self.grid.overrides:
            # a one-dimensional depth maximiser sits at a data point
            return IntegerRange(-self.coordinate_bound, self.coordinate_bound)
        previous = Fraction(prefix[-1]).denominator if prefix else 1
        return tukey_domain(i, self.d, self.coordinate_bound, previous, self.grid)

    def breakpoints(self, dataset: Sequence, prefix: Sequence) -> list | None:
        if self.d == 1:
            return sorted({Fraction(s[0]) for s in dataset})
        if self.d == 2:
            regions = _regions_of(dataset)
            if not prefix:
                return regions.line_max_breakpoints()
            return regions.line_breakpoints(Fraction(prefix[0]))
        return None

    def probes(self, dataset: Sequence) -> list | None:
        if self.d == 1:
            values = sorted({Fraction(s[0]) for s in dataset})
            gaps = [(a + b) / 2 for a, b in zip(values, values[1:])]
            return [(v,) for v in [values[0] - 1, *values, *gaps, values[-1] + 1]]
        if self.d == 2:
            regions = _regions_of(dataset)
            vertices = {v for region in regions.regions for v in region.vertices}
            return sorted(vertices | {tuple(Fraction(c) for c in s) for s in dataset})
        return None


def _suffix_candidates(points: Sequence[Sequence[int]], coordinate: int) -> OrderedDomain:
    values = sorted({Fraction(s[coordinate]) for s in points})
    return SortedDomain(values + [(a + b) / 2 for a, b in zip(values, values[1:])])


def td_slice_max(points: Sequence[Sequence[int]], prefix: Sequence, x, d: int | None = None,
                 suffix_domains: Sequence[OrderedDomain] | None = None) -> Fraction:
    """
    max over the coordinates after prefix + [x] of q_td.

    The planar case is exact over R: it is read off the depth regions. With suffix_domains the
    maximum is instead taken over those domains. The spatial case enumerates suffix domains,
    by default the data coordinates and their midpoints, and is a lower estimate.
    """
    ensure(len(points) > 0, "Tukey depth of an empty dataset is undefined")
    d = d or len(points[0])
    n = len(points)
    head = tuple(Fraction(c) for c in prefix) + (Fraction(x),)
    if len(head) == d:
        return q_td(points, head)
    if suffix_domains is None and d == 2:
        return Fraction(_regions_of(points).line_max(head[0]), n)
    if suffix_domains is None:
        suffix_domains = [_suffix_candidates(points, c) for c in range(len(head), d)]
    best = Fraction(0)
    partial: list[tuple] = [head]
    for domain in suffix_domains:
        partial = [p + (value,) for p in partial for value in domain]
    for candidate in partial:
        best = max(best, q_td(points, candidate))
    return best


def max_depth_on_mesh(points: Sequence[Sequence[int]], X: int, step: Fraction = Fraction(1, 4)) -> tuple[tuple, int]:
    """Brute-force deepest point over the mesh of [-X, X]^d with the given spacing (planar or linear)."""
    d = len(points[0])
    ensure(d <= 2, "mesh search is implemented for d <= 2")
    count = int(2 * X / Fraction(step))
    axis = [Fraction(-X) + k * Fraction(step) for k in range(count + 1)]
    candidates = [(a,) for a in axis] if d == 1 else [(a, b) for a in axis for b in axis]
    best_point, best_depth = candidates[0], -1
    for candidate in candidates:
        depth = tukey_depth(points, candidate)
        if depth > best_depth:
            best_point, best_depth = candidate, depth
    return best_point, best_depth


def worst_domain_size(d: int, X: int, grid: GridConfig | None = None) -> int:
    """Largest grid any coordinate can receive, cascading the largest denominators."""
    grid = grid or GridConfig()
    if d == 1 and 1 not in grid.overrides:
        return 2 * X + 1
    largest, previous = 1, 1
    for i in range(1, d + 1):
        s_max, t_max = tukey_bounds(i, d, X, previous, grid)
        largest = max(largest, RationalGrid(s_max, t_max).size)
        previous = t_max
    return largest


def tukey_sample_requirements(d: int, X: int, alpha: float, beta: float, privacy: PrivacyParams,
                              grid: GridConfig | None = None, t: int | None = None) -> SampleRequirements:
    """
    Block count and sample sizes of the private Tukey median.

    alpha is replaced by alpha/(2d(d+1)) and beta by beta/(t + d); the budget is split over the
    d coordinates (advanced composition when delta > 0, an even split otherwise).
    """
    step, ledger = ledger_for(privacy, d, "interior-point")
    size = worst_domain_size(d, X, grid)
    blocks = t if t is not None else block_count(size, beta, d, step)
    step_alpha = alpha / (2 * d * (d + 1))
    step_beta = beta / (blocks + d)
    m = m_subset_size(ApproxSpec(alpha=step_alpha, beta=step_beta, vc_dimension=d + 1))
    return SampleRequirements(t=blocks, baseline_n_min=blocks, guarantee_n_min=blocks * m, m=m, domain_size=size,
                              rule=ledger.rule, step_epsilon=step.epsilon, step_delta=step.delta,
                              step_beta=step_beta, step_alpha=step_alpha)


@log_execution_time()
@log_and_raise_error("Private Tukey median failed")
def private_tukey_median(S: PointSet, alpha: float, beta: float, privacy: PrivacyParams, rng: RandomSource,
                         grid: GridConfig | None = None, t: int | None = None,
                         record_slices: bool = False) -> TukeyResult:
    """
    Differentially private point of large Tukey depth.

    Args:
        S (PointSet): Integer points in [[X]]^d, d <= 3.
        alpha (float): Accuracy parameter in (0, 1).
        beta (float): Failure probability in (0, 1).
        privacy (PrivacyParams): Total budget.
        rng (RandomSource): Source of randomness.
        grid (GridConfig | None): Grid scaling; scaled or overridden grids should be validated.
        t (int | None): Block-count override; must still satisfy the solver requirement.
        record_slices (bool): Record full-dataset slice maxima in the trace.

    Returns:
        TukeyResult: Released point, its depth and the privacy ledger.

    Raises:
        InsufficientSamplesError: If n is below the block count the solver needs.
    """
    ensure(0 < alpha < 1 and 0 < beta < 1, "alpha and beta must lie in (0, 1)")
    grid = grid or GridConfig()
    d, n = S.d, S.n
    requirements = tukey_sample_requirements(d, S.X, alpha, beta, privacy, grid, t)
    if t is not None:
        minimum = tukey_sample_requirements(d, S.X, alpha, beta, privacy, grid).t
        if t < minimum:
            raise ParameterError(f"t={t} is below the interior-point requirement {minimum}")
    if n < requirements.t:
        raise InsufficientSamplesError(
            f"private Tukey median needs n >= {requirements.baseline_n_min} (baseline solver gate, t blocks) "
            f"and n >= {requirements.guarantee_n_min} for the accuracy guarantee (t·m); got n={n}",
            required=requirements.baseline_n_min, available=n)
    if n < requirements.guarantee_n_min:
        logger.warning("n=%d is below t·m=%d: the depth guarantee is not in force", n, requirements.guarantee_n_min)
    if not grid.is_default and not grid.validated:
        logger.warning("Grid configuration shrinks the provable bounds and has not been validated")

    step, ledger = ledger_for(privacy, d, "interior-point")
    config = OptimizerConfig(alpha=requirements.step_alpha, beta=requirements.step_beta, privacy=step,
                             t=requirements.t)
    target = TukeyTarget(d, S.X, grid)
    trace = ip_concave_high_dim(S.points, target, config, rng, ledger=ledger, record_slices=record_slices)
    depth = tukey_depth(S.points, trace.point)
    logger.info("Private Tukey median released at depth %d of %d (t=%d)", depth, n, requirements.t)
    return TukeyResult(point=trace.point, depth=depth, n=n, target_depth=(1 - alpha) / (d + 1) * n,
                       requirements=requirements, grid_validated=grid.validated or grid.is_default,
                       ledger=ledger, trace=trace)

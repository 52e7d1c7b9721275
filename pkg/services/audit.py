"""
Empirical privacy auditing.

A mechanism is run many times on two neighbouring inputs; the frequencies of an event on
both sides bound its privacy loss from below through Pr[M(S) in E] <= e^eps·Pr[M(S') in E] + delta.

The module also carries a two-dimensional halfspace learner built from a noisy angle
histogram and a threshold learner, together with a neighbouring pair on which its outputs
land in disjoint half-circles.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from entities.audit import TWO_PI, AngleGrid, AuditReport, ThresholdData
from entities.geometry import LabeledExample
from entities.privacy import PrivacyParams
from entities.specs import IPSolverSpec
from services.dp_core import RandomSource, laplace_sample
from services.interior_point import IntegerRange, private_interior_point
from utils.errors import InputError, ParameterError, ensure
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)

Mechanism = Callable[[Sequence, RandomSource], Any]
EventPredicate = Callable[[Any], bool]

DEFAULT_GAMMA = TWO_PI / 256
MIN_AUDIT_TRIALS = 100
_SNAP = 1e-12


def clopper_pearson(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """
    Exact binomial confidence interval for k successes in n trials.

    Raises:
        ParameterError: If k is outside [0, n] or confidence outside (0, 1).
    """
    ensure(n >= 1 and 0 <= k <= n, f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    ensure(0 < confidence < 1, f"confidence must lie in (0, 1), got {confidence}")
    tail = (1 - confidence) / 2
    low = 0.0 if k == 0 else float(stats.beta.ppf(tail, k, n - k + 1))
    high = 1.0 if k == n else float(stats.beta.ppf(1 - tail, k + 1, n - k))
    return low, high


# ------------------------------
# Halfspaces through the origin
# ------------------------------

def example_angle(x: Sequence[int]) -> float:
    """atan2 angle of x in [0, 2pi)."""
    if x[0] == 0 and x[1] == 0:
        raise ParameterError("the angle of the origin is undefined")
    return math.atan2(x[1], x[0]) % TWO_PI


def halfspace_label(phi: float, x: Sequence[int]) -> int:
    """h_phi(x) = 1 iff <(-sin phi, cos phi), x> >= 0, with |<.,.>| < 1e-12 read as 0."""
    value = -math.sin(phi) * x[0] + math.cos(phi) * x[1]
    if abs(value) < _SNAP:
        value = 0.0
    return 1 if value >= 0 else -1


def _example_arrays(S: Sequence[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    if not S:
        return np.zeros((0, 2)), np.zeros(0)
    for e in S:
        ensure(len(e.x) == 2, f"examples must be two-dimensional, got {len(e.x)} features")
        if e.x[0] == 0 and e.x[1] == 0:
            raise ParameterError("example at the origin has no angle")
    points = np.array([e.x for e in S], dtype=float)
    labels = np.array([e.y for e in S], dtype=float)
    return points, labels


def agreement_matrix(S: Sequence[LabeledExample], grid: AngleGrid) -> tuple[np.ndarray, np.ndarray]:
    """
    Per (example, grid angle): whether h_phi agrees with the label, and whether the example's angle
    lies strictly within gamma of phi on the circle.

    Returns:
        tuple: Two boolean arrays of shape (|S|, |grid|).
    """
    points, labels = _example_arrays(S)
    phis = np.arange(grid.size) * grid.gamma
    values = -np.outer(points[:, 0], np.sin(phis)) + np.outer(points[:, 1], np.cos(phis))
    values[np.abs(values) < _SNAP] = 0.0
    predictions = np.where(values >= 0, 1.0, -1.0)
    agree = predictions == labels[:, None]
    angles = np.mod(np.arctan2(points[:, 1], points[:, 0]), TWO_PI)
    gap = np.abs(angles[:, None] - phis[None, :])
    circular = np.minimum(gap, TWO_PI - gap)
    near = circular < grid.gamma * (1 - 1e-9)
    return agree, near


def halfspace_agreement(S: Sequence[LabeledExample], grid: AngleGrid) -> np.ndarray:
    """q(S, phi) = |{(x, y) in S : h_phi(x) = y}| for every grid angle."""
    if not S:
        return np.zeros(grid.size, dtype=int)
    agree, _ = agreement_matrix(S, grid)
    return agree.sum(axis=0).astype(int)


def make_data(epsilon: float, grid: AngleGrid, S: Sequence[LabeledExample], rng: RandomSource) -> list[int]:
    """
    Noisy angle histogram: max{ceil(n_phi + Lap(1/epsilon)), 1} copies of every grid angle, where n_phi
    counts the examples near phi that h_phi labels correctly.

    Returns:
        list[int]: Grid indices, one entry per copy, in grid order.
    """
    ensure(epsilon > 0, f"epsilon must be positive, got {epsilon}")
    if S:
        agree, near = agreement_matrix(S, grid)
        counts = (agree & near).sum(axis=0).astype(int)
    else:
        counts = np.zeros(grid.size, dtype=int)
    histogram: list[int] = []
    for index in range(grid.size):
        copies = max(math.ceil(int(counts[index]) + laplace_sample(1 / epsilon, rng)), 1)
        histogram.extend([index] * copies)
    return histogram


def make_thr_data(S_H: Sequence[int], S: Sequence[LabeledExample], C: int, grid: AngleGrid,
                  rng: RandomSource) -> ThresholdData:
    """
    Keep the C largest entries of S_H in the order of (q(S, phi), phi), rotate so that a random
    non-selected entry sits at 0 and label the kept angles against the best one.

    Raises:
        ParameterError: If |S_H| <= C.
    """
    ensure(C >= 1, f"C must be positive, got {C}")
    if len(S_H) <= C:
        raise ParameterError(f"need more than C={C} histogram entries, got {len(S_H)}")
    q = halfspace_agreement(S, grid)
    order = sorted(range(len(S_H)), key=lambda j: (int(q[S_H[j]]), S_H[j]), reverse=True)
    kept, rest = order[:C], order[C:]
    offset = S_H[rest[rng.integer(0, len(rest))]]
    selected = [S_H[j] for j in kept]
    rotated = [(k - offset) % grid.size for k in selected]
    best = max(zip((int(q[k]) for k in selected), rotated))[1]
    labels = [1 if r <= best else -1 for r in rotated]
    logger.debug("Threshold data: %d angles kept, offset %d, best rotated index %d", C, offset, best)
    return ThresholdData(offset=offset, selected=selected, rotated=rotated, labels=labels, best=best)


def threshold_learner(data: ThresholdData, grid: AngleGrid, privacy: PrivacyParams, beta: float,
                      rng: RandomSource) -> int:
    """Private interior point of the rotated angles, rotated back to a grid index."""
    spec = IPSolverSpec(kind="exp-mech", privacy=privacy, beta=beta)
    chosen = private_interior_point(data.rotated, IntegerRange(0, grid.size - 1), spec, rng)
    return (chosen + data.offset) % grid.size


def a_simple_h(S: Sequence[LabeledExample], gamma: float, C: int, epsilon: float, delta: float, alpha: float,
               beta: float, rng: RandomSource) -> float:
    """
    Angle learner through a noisy histogram and a private threshold learner.

    The threshold step sees only the C best angles, which depend on S directly, so the output is
    not differentially private.

    Returns:
        float: The released angle in [0, 2pi).
    """
    ensure(gamma > 0 and epsilon > 0 and alpha > 0 and beta > 0 and delta >= 0,
           "gamma, epsilon, alpha and beta must be positive and delta non-negative")
    grid = AngleGrid(gamma=gamma)
    histogram = make_data(epsilon, grid, S, rng)
    data = make_thr_data(histogram, S, C, grid, rng)
    index = threshold_learner(data, grid, PrivacyParams(epsilon=epsilon, delta=delta), beta, rng)
    return grid.angle(index)


def counterexample_datasets(n: int) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """
    S = (n/2 + 1)×((1,0), -1) + (n/2 - 1)×((-1,0), -1); S' replaces one ((1,0), -1) by ((-1,0), -1).

    Raises:
        ParameterError: If n < 4 or n is odd.
    """
    if n < 4 or n % 2:
        raise ParameterError(f"n must be an even integer >= 4, got {n}")
    right = LabeledExample(x=(1, 0), y=-1)
    left = LabeledExample(x=(-1, 0), y=-1)
    S = [right] * (n // 2 + 1) + [left] * (n // 2 - 1)
    S_prime = list(S)
    S_prime[n // 2] = left
    return S, S_prime


# ------------------------------
# Events and mechanisms
# ------------------------------

def _parse_angle(text: str) -> float:
    token = text.strip().lower().replace(" ", "")
    try:
        if "pi" not in token:
            return float(Fraction(token))
        coefficient, _, rest = token.partition("pi")
        coefficient = coefficient.rstrip("*")
        value = float(Fraction(coefficient)) if coefficient else 1.0
        if rest.startswith("/"):
            value /= float(Fraction(rest[1:]))
        elif rest:
            raise ValueError(rest)
        return value * math.pi
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"not an angle: {text!r}") from e


def parse_event(spec: str) -> EventPredicate:
    """
    Event predicate from "arc:<lo>:<hi>" (open arc, "pi" allowed), "le:<v>" or "ge:<v>".

    Raises:
        InputError: On an unknown kind or a malformed bound.
    """
    kind, _, rest = spec.partition(":")
    if kind == "arc":
        low_text, sep, high_text = rest.partition(":")
        if not sep:
            raise InputError(f"arc events need two bounds: {spec!r}")
        low, high = _parse_angle(low_text), _parse_angle(high_text)
        return lambda output: low < float(output) < high
    if kind in ("le", "ge"):
        try:
            bound = Fraction(rest.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"not a number in event {spec!r}") from e
        if kind == "le":
            return lambda output: Fraction(output) <= bound
        return lambda output: Fraction(output) >= bound
    raise InputError(f"unknown event kind in {spec!r}")


def build_mechanism(name: str, X: int, privacy: PrivacyParams, alpha: float, beta: float,
                    gamma: float = DEFAULT_GAMMA, C: int = 64) -> Mechanism:
    """
    Mechanism of the audit registry.

    interior-point: private interior point of integer values over [-X, X].
    a-simple-h: the angle learner on two-dimensional labeled examples.
    constant: ignores its input and returns 0.
    """
    if name == "interior-point":
        spec = IPSolverSpec(kind="exp-mech", privacy=privacy, beta=beta)
        domain = IntegerRange(-X, X)
        return lambda dataset, rng: private_interior_point(list(dataset), domain, spec, rng)
    if name == "a-simple-h":
        return lambda dataset, rng: a_simple_h(dataset, gamma, C, privacy.epsilon, privacy.delta, alpha, beta, rng)
    if name == "constant":
        return lambda dataset, rng: 0
    raise ParameterError(f"unknown mechanism '{name}'")


def _loss(first: float, second: float, delta: float) -> float | None:
    """ln((first - delta)/second), None when unbounded, -inf when first <= delta."""
    if first - delta <= 0:
        return -math.inf
    if second <= 0:
        return None
    return math.log((first - delta) / second)


def estimate_epsilon_lower_bound(mechanism: Mechanism, S: Sequence, S_prime: Sequence, event: EventPredicate,
                                 trials: int, delta: float, seed: int, claimed_epsilon: float,
                                 mechanism_name: str = "mechanism", event_spec: str = "",
                                 max_workers: int = 1) -> AuditReport:
    """
    Run mechanism independently on S and S' and bound its epsilon from below.

    Both orderings of (S, S') and both E and its complement are tested; the report keeps the largest loss.
    Run i on S uses the source for_trial(seed, i).spawn("first"), on S' spawn("second").

    Raises:
        ParameterError: If trials < 100.
    """
    if trials < MIN_AUDIT_TRIALS:
        raise ParameterError(f"an audit needs at least {MIN_AUDIT_TRIALS} trials, got {trials}")
    ensure(0 <= delta < 1, f"delta must lie in [0, 1), got {delta}")

    def run(index: int) -> tuple[bool, bool]:
        source = RandomSource.for_trial(seed, index)
        return (bool(event(mechanism(S, source.spawn("first")))),
                bool(event(mechanism(S_prime, source.spawn("second")))))

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        outcomes = list(pool.map(run, range(trials)))
    count_first = sum(1 for hit, _ in outcomes if hit)
    count_second = sum(1 for _, hit in outcomes if hit)

    point: list[float | None] = []
    certified = 0.0
    for a, b in ((count_first, count_second), (count_second, count_first),
                 (trials - count_first, trials - count_second), (trials - count_second, trials - count_first)):
        point.append(_loss(a / trials, b / trials, delta))
        low_a, _ = clopper_pearson(a, trials)
        _, high_b = clopper_pearson(b, trials)
        bound = _loss(low_a, high_b, delta)
        if bound is not None:
            certified = max(certified, bound)
    unbounded = any(value is None for value in point)
    finite = [value for value in point if value is not None and value > -math.inf]
    report = AuditReport(mechanism=mechanism_name, event=event_spec, trials=trials, delta=delta,
                         claimed_epsilon=claimed_epsilon, count_first=count_first, count_second=count_second,
                         ci_first=clopper_pearson(count_first, trials), ci_second=clopper_pearson(count_second, trials),
                         epsilon_point=None if unbounded else max(finite, default=0.0),
                         point_unbounded=unbounded, epsilon_certified=certified)
    logger.info("Audit of %s on %s: %d/%d vs %d/%d, certified epsilon >= %.4f (%s)", mechanism_name, event_spec,
                count_first, trials, count_second, trials, certified, report.verdict)
    return report

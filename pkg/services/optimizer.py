"""
Sample-and-aggregate optimizer for approximated quasi-concave targets.

ip_concave partitions the data into t blocks, maximises the target on every block and
privately aggregates the block maximisers with an interior-point solver. Changing one data
element changes at most one block maximiser, so the privacy of the aggregate is that of the
interior-point solver. ip_concave_high_dim repeats this one coordinate at a time on the slice
functions, reusing a single partition.
"""
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Iterator, Sequence

from entities.privacy import PrivacyParams
from entities.results import CoordinateTrace, OptimizerTrace
from entities.specs import IPSolverSpec, OptimizerConfig, Partition
from services.dp_core import CompositionLedger, RandomSource
from services.interior_point import OrderedDomain, private_interior_point, solver_for
from utils.decorators import log_execution_time
from utils.errors import InsufficientSamplesError, ParameterError
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)


class TargetFunction(ABC):
    """
    A dataset-dependent objective Q(S, x) over R^d.

    slice_eval(S, prefix, x) is the maximum of Q(S, prefix + [x] + rest) over the remaining
    coordinates; with a prefix of length d - 1 it equals eval(S, prefix + [x]).
    """

    #: Bound on |Q(S, x) - Q(S', x)| for neighbouring S, S' of size n, times n.
    sensitivity: float = 1.0
    #: Half-width of the box holding the interesting part of the domain, when known.
    coordinate_bound: int | None = None

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Number of coordinates."""

    @abstractmethod
    def eval(self, dataset: Sequence, point: Sequence) -> Fraction:
        """Q(dataset, point)."""

    @abstractmethod
    def slice_eval(self, dataset: Sequence, prefix: Sequence, x: Any) -> Fraction:
        """Slice maximum over the coordinates after prefix + [x]."""

    @abstractmethod
    def domain_provider(self, i: int, prefix: Sequence) -> OrderedDomain:
        """Candidate domain of coordinate i (1-based) given the chosen prefix."""

    def breakpoints(self, dataset: Sequence, prefix: Sequence) -> list | None:
        """
        Values between which slice_eval(dataset, prefix, .) is constant, or None when unknown.

        When a list b_1 < ... < b_k is returned, the slice function is constant on every open
        interval between consecutive breakpoints and on both unbounded ends.
        """
        return None

    def probes(self, dataset: Sequence) -> list | None:
        """Points at which Q(dataset, .) takes every value it takes anywhere, or None when unknown."""
        return None


def block_count(domain_size: int, beta: float, d: int, step: PrivacyParams, max_rounds: int = 64) -> int:
    """
    Smallest t with t >= n_ip(domain_size, beta/(t + d), step), found by fixed-point iteration.

    The right-hand side grows only logarithmically in t, so the iteration settles after a few rounds.
    """
    solver = solver_for(IPSolverSpec(privacy=step, beta=beta / (1 + d)))
    t = solver.required_samples(domain_size)
    for _ in range(max_rounds):
        solver = solver_for(IPSolverSpec(privacy=step, beta=beta / (t + d)))
        following = solver.required_samples(domain_size)
        if following <= t:
            return t
        t = following
    raise ParameterError(f"block count did not settle after {max_rounds} rounds")


def partition(dataset: Sequence, t: int, rng: RandomSource) -> Partition:
    """
    Uniformly random partition of dataset positions into t blocks.

    The first n mod t blocks receive floor(n/t) + 1 elements, the rest floor(n/t).

    Raises:
        InsufficientSamplesError: If len(dataset) < t.
    """
    n = len(dataset)
    if n < t:
        raise InsufficientSamplesError(f"cannot partition {n} elements into {t} blocks", required=t, available=n)
    order = rng.permutation(n)
    base, remainder = divmod(n, t)
    assignment = [0] * n
    offset = 0
    for block in range(t):
        size = base + (1 if block < remainder else 0)
        for position in order[offset:offset + size]:
            assignment[position] = block
        offset += size
    return Partition(t=t, assignment=tuple(assignment))


def piece_representatives(domain: OrderedDomain, breakpoints: Sequence) -> Iterator[Any]:
    """
    Smallest domain element of every piece cut out by the breakpoints, in increasing order.

    The pieces are the open intervals between consecutive breakpoints, the breakpoints
    themselves and the two unbounded ends.
    """
    cuts = sorted(set(breakpoints))
    if not cuts:
        yield domain.first()
        return
    first = domain.first()
    if first < cuts[0]:
        yield first
    for index, cut in enumerate(cuts):
        if domain.contains(cut):
            yield cut
        following = domain.next_after(cut, strict=True)
        if following is None:
            return
        if index + 1 == len(cuts) or following < cuts[index + 1]:
            yield following


def argmax_over_domain(block: Sequence, target: TargetFunction, domain: OrderedDomain,
                       prefix: Sequence = ()) -> tuple[Any, Fraction]:
    """
    Exact maximiser of the slice function over the domain; ties go to the smallest element.

    Returns:
        tuple: (maximising element, its slice value)
    """
    cuts = target.breakpoints(block, prefix)
    candidates = iter(domain) if cuts is None else piece_representatives(domain, cuts)
    best, best_value = None, None
    for x in candidates:
        value = target.slice_eval(block, prefix, x)
        if best_value is None or value > best_value:
            best, best_value = x, value
    if best is None:
        raise ParameterError("cannot maximise over an empty domain")
    return best, best_value


def coordinate_step(blocks: list[list], target: TargetFunction, domain: OrderedDomain, config: OptimizerConfig,
                    rng: RandomSource, prefix: Sequence = (), coordinate: int = 1,
                    full_dataset: Sequence | None = None) -> CoordinateTrace:
    """
    One aggregation round: per-block argmax followed by a private interior point.

    Args:
        blocks: The partitioned dataset.
        target (TargetFunction): Objective.
        domain (OrderedDomain): Candidates for this coordinate.
        config (OptimizerConfig): Budget and failure probability of the round.
        rng (RandomSource): Source of randomness.
        prefix: Already fixed coordinates.
        coordinate (int): 1-based index, for the trace.
        full_dataset: When given, the slice value on the whole dataset is recorded.
    """
    choices: list[Any] = []
    values: list[Fraction] = []
    for block in blocks:
        y, value = argmax_over_domain(block, target, domain, prefix)
        choices.append(y)
        values.append(value)
    chosen = private_interior_point(choices, domain, config.solver_spec(), rng)
    logger.debug("Coordinate %d: aggregated %d block maxima, chose %s", coordinate, len(choices), chosen)
    slice_value = None
    if full_dataset is not None:
        slice_value = float(target.slice_eval(full_dataset, prefix, chosen))
    return CoordinateTrace(coordinate=coordinate, domain_size=domain.size, block_choices=choices,
                           block_values=[float(v) for v in values], chosen=Fraction(chosen),
                           slice_value=slice_value)


def _blocks_for(dataset: Sequence, config: OptimizerConfig, rng: RandomSource) -> tuple[Partition, list[list]]:
    chosen = config.fixed_partition if config.fixed_partition is not None else partition(dataset, config.t, rng)
    return chosen, chosen.blocks(list(dataset))


def ip_concave(dataset: Sequence, target: TargetFunction, domain: OrderedDomain, config: OptimizerConfig,
               rng: RandomSource) -> Any:
    """
    Private approximate maximiser of a one-dimensional quasi-concave target.

    Returns:
        The selected domain element.

    Raises:
        InsufficientSamplesError: If the dataset cannot fill t blocks or t is below the solver requirement.
    """
    _, blocks = _blocks_for(dataset, config, rng)
    step = coordinate_step(blocks, target, domain, config, rng)
    # traces hold Fractions; hand back the domain's own element
    return domain.at(domain.rank(step.chosen) - 1)


@log_execution_time()
def ip_concave_high_dim(dataset: Sequence, target: TargetFunction, config: OptimizerConfig, rng: RandomSource,
                        ledger: CompositionLedger | None = None, record_slices: bool = False) -> OptimizerTrace:
    """
    Coordinate-by-coordinate private maximiser of a d-dimensional target.

    One partition is drawn (or taken from config.fixed_partition) and reused for all d
    coordinates. Coordinate i maximises slice_eval(., prefix, .) over
    target.domain_provider(i, prefix). Every coordinate spends config.privacy; the caller
    chooses the per-step budget and the ledger records the steps.

    Args:
        dataset: Data elements understood by target.
        target (TargetFunction): Objective with slice evaluation.
        config (OptimizerConfig): Per-step budget, beta and block count.
        rng (RandomSource): Source of randomness.
        ledger (CompositionLedger | None): Receives one entry per coordinate.
        record_slices (bool): Record the full-dataset slice value of every chosen coordinate.

    Returns:
        OptimizerTrace: Trace whose point is the released vector.
    """
    chosen_partition, blocks = _blocks_for(dataset, config, rng)
    trace = OptimizerTrace(t=config.t, block_sizes=chosen_partition.block_sizes)
    prefix: list[Fraction] = []
    for i in range(1, target.dimension + 1):
        domain = target.domain_provider(i, tuple(prefix))
        step = coordinate_step(blocks, target, domain, config, rng, prefix=tuple(prefix), coordinate=i,
                               full_dataset=dataset if record_slices else None)
        if ledger is not None:
            ledger.record(config.privacy, f"interior-point coordinate {i}")
        trace.coordinates.append(step)
        prefix.append(step.chosen)
    logger.info("Optimizer released a %d-dimensional point from %d blocks", target.dimension, config.t)
    return trace

"""
Experiment runner: configuration loading, dataset generation, trial pools and artifacts.

Every experiment writes into its output directory:

    results.csv    one row per trial, ordered by trial index, no timing columns
    timings.csv    wall time per trial
    summary.json   success rate with its exact 95% interval, mean utility, config fingerprint
    plot_data.csv  tidy long-format metrics (only with emit_plot_data)

plus task-specific files (audit_report.json, calibration.csv, predictions.csv, datasets).
Trial i draws from RandomSource.for_trial(seed, i), so reruns reproduce results.csv byte for byte.
"""
import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from entities.experiment import RESULT_COLUMNS, CalibrationRow, ExperimentConfig, ResultRow, RunSummary
from entities.geometry import Constraint, ConstraintSet, Hypothesis, LabeledExample, PointSet
from entities.specs import ApproxSpec, IPSolverSpec
from services import datasets
from services.approximation import calibrate_subset_failure_rate
from services.audit import (DEFAULT_GAMMA, build_mechanism, clopper_pearson, counterexample_datasets,
                            estimate_epsilon_lower_bound, parse_event)
from services.dp_core import CompositionLedger, RandomSource
from services.interior_point import IntegerRange, is_interior, n_ip, private_interior_point
from services.linfeas import FeasibilityTarget, depth, empirical_error, learn_halfspace, private_linear_feasibility
from services.tukey import TukeyTarget, private_tukey_median
from utils.config import ConfigLoader
from utils.decorators import log_execution_time
from utils.errors import InputError, InsufficientSamplesError, ParameterError, ensure
from utils.helper import fingerprint
from utils.logger import LoggerFactory
from utils.parser import format_point, format_rational

logger = LoggerFactory.get_logger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_INSUFFICIENT = 3

TrialFn = Callable[[int, RandomSource], ResultRow]


def load_experiment(path: str | None = None, overrides: Optional[dict[str, Any]] = None) -> ExperimentConfig:
    """
    Read the "experiment" section (and an optional "grid" section) and apply CLI overrides.

    Raises:
        InputError: If the file is missing, the section is absent or validation fails.
    """
    loader = ConfigLoader(path)
    try:
        section = dict(loader.get_config("experiment"))
    except KeyError as e:
        raise InputError(f"configuration '{loader.path}' has no 'experiment' section") from e
    grid = loader.get_optional("grid")
    if grid and "grid" not in section:
        section["grid"] = grid
    section.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return ExperimentConfig.model_validate(section)
    except ValidationError as e:
        raise InputError(f"invalid experiment configuration: {e}") from e


# ------------------------------
# Dataset generators
# ------------------------------

def cluster_points(d: int, X: int, n: int, rng: RandomSource, outlier_rate: float = 0.1) -> list[tuple[int, ...]]:
    """A tight integer cluster around a random centre in [[X/2]]^d plus uniform outliers in [[X]]^d."""
    half = max(1, X // 2)
    centre = [rng.integer(-half, half + 1) for _ in range(d)]
    points = []
    for _ in range(n):
        if rng.uniform() < outlier_rate:
            points.append(tuple(rng.integer(-X, X + 1) for _ in range(d)))
        else:
            points.append(tuple(max(-X, min(X, c + rng.integer(-1, 2))) for c in centre))
    return points


def planted_feasible(d: int, X: int, n: int, rng: RandomSource) -> tuple[ConstraintSet, tuple[int, ...]]:
    """Constraints <a, z> >= w with |a_j|, |w| <= X, all satisfied by a planted point in {-1, 0, 1}^d."""
    planted = tuple(rng.integer(-1, 2) for _ in range(d))
    constraints = []
    while len(constraints) < n:
        a = tuple(rng.integer(-X, X + 1) for _ in range(d))
        if not any(a):
            continue
        w = sum(c * z for c, z in zip(a, planted)) - rng.integer(0, 2)
        if w < -X:
            continue
        constraints.append(Constraint(a=a, w=min(w, X)))
    return ConstraintSet(d=d, X=X, constraints=constraints), planted


def threshold_labeled(d: int, X: int, n: int, rng: RandomSource, weights: tuple[int, ...] | None = None,
                      threshold: int | None = None) -> tuple[list[LabeledExample], tuple[int, ...], int]:
    """Uniform points of [[X]]^d labeled by 1 iff <weights, x> >= threshold; weights and threshold drawn when absent."""
    if weights is None:
        weights = (1,) if d == 1 else tuple(rng.integer(-2, 3) or 1 for _ in range(d))
    if threshold is None:
        threshold = rng.integer(-(X // 2), X // 2 + 1)
    examples = []
    for _ in range(n):
        x = tuple(rng.integer(-X, X + 1) for _ in range(d))
        label = 1 if sum(w * v for w, v in zip(weights, x)) >= threshold else -1
        examples.append(LabeledExample(x=x, y=label))
    return examples, weights, threshold


@log_execution_time()
def generate_dataset(config: ExperimentConfig) -> list[Path]:
    """
    Write the dataset named by config.dataset_kind into config.output_dir.

    Files are a deterministic function of (kind, d, X, n, seed).
    """
    kind = config.dataset_kind
    ensure(kind is not None, "generate needs dataset_kind")
    rng = RandomSource(config.seed).spawn(f"generate:{kind}")
    out = Path(config.output_dir)
    header = [f"kind={kind} d={config.d} X={config.X} n={config.n} seed={config.seed}"]
    if kind == "cluster-points":
        frame = datasets.points_frame(cluster_points(config.d, config.X, config.n, rng))
        return [datasets.write_table(out / f"{kind}.csv", frame, header + [datasets.SCHEMAS["points"]])]
    if kind == "planted-feasible":
        system, planted = planted_feasible(config.d, config.X, config.n, rng)
        comments = header + [datasets.SCHEMAS["constraints"], f"planted={' '.join(map(str, planted))}"]
        return [datasets.write_table(out / f"{kind}.csv", datasets.constraints_frame(system), comments)]
    if kind == "threshold-labeled":
        examples, weights, threshold = threshold_labeled(config.d, config.X, config.n, rng)
        comments = header + [datasets.SCHEMAS["examples"],
                             f"weights={' '.join(map(str, weights))} threshold={threshold}"]
        return [datasets.write_table(out / f"{kind}.csv", datasets.examples_frame(examples), comments)]
    S, S_prime = counterexample_datasets(config.n)
    comments = header + [datasets.SCHEMAS["examples"]]
    return [datasets.write_table(out / "counterexample.csv", datasets.examples_frame(S), comments),
            datasets.write_table(out / "counterexample_neighbour.csv", datasets.examples_frame(S_prime), comments)]


# ------------------------------
# Trial functions
# ------------------------------

def _ledger_fields(ledger: CompositionLedger) -> dict[str, float]:
    epsilon, delta = ledger.total
    return {"ledger_epsilon": epsilon, "ledger_delta": delta}


def _insufficient(config: ExperimentConfig, trial: int, seed: int, error: InsufficientSamplesError) -> ResultRow:
    logger.warning("Trial %d: %s", trial, error)
    return ResultRow(task=config.task, trial=trial, seed=seed, status="insufficient-samples")


def _tukey_trials(config: ExperimentConfig, notes: list[str]) -> TrialFn:
    if config.input_path:
        points = datasets.read_points(config.input_path, config.X)
    else:
        generated = cluster_points(config.d, config.X, config.n, RandomSource(config.seed).spawn("data"))
        points = PointSet(d=config.d, X=config.X, points=generated)

    def trial(index: int, rng: RandomSource) -> ResultRow:
        result = private_tukey_median(points, config.alpha, config.beta, config.privacy, rng, grid=config.grid,
                                      t=config.t)
        if result.n < result.requirements.guarantee_n_min:
            notes.append(f"n={result.n} is below t·m={result.requirements.guarantee_n_min}")
        return ResultRow(task=config.task, trial=index, seed=rng.seed, utility=result.depth,
                         target=result.target_depth, output=" ".join(format_point(result.point)),
                         **_ledger_fields(result.ledger))
    return trial


def _linfeas_trials(config: ExperimentConfig, notes: list[str]) -> TrialFn:
    if config.input_path:
        system = datasets.read_constraints(config.input_path, config.X)
    else:
        system, planted = planted_feasible(config.d, config.X, config.n, RandomSource(config.seed).spawn("data"))
        ensure(depth(system, planted) == system.n, "planted point must satisfy every constraint")

    def trial(index: int, rng: RandomSource) -> ResultRow:
        result = private_linear_feasibility(system, config.alpha, config.beta, config.privacy, rng, t=config.t)
        if result.n < result.requirements.guarantee_n_min:
            notes.append(f"n={result.n} is below t·m={result.requirements.guarantee_n_min}")
        return ResultRow(task=config.task, trial=index, seed=rng.seed, utility=result.satisfied,
                         target=result.target, output=" ".join(format_point(result.point)),
                         **_ledger_fields(result.ledger))
    return trial


def _learner_trials(config: ExperimentConfig, notes: list[str]) -> TrialFn:
    source = RandomSource(config.seed).spawn("data")
    if config.input_path:
        train = datasets.read_examples(config.input_path)
        test = datasets.read_examples(config.test_path) if config.test_path else train
    else:
        train, weights, threshold = threshold_labeled(1, config.X, config.n, source)
        test, _, _ = threshold_labeled(1, config.X, config.n, source, weights, threshold)

    def trial(index: int, rng: RandomSource) -> ResultRow:
        result = learn_halfspace(train, config.alpha, config.beta, config.privacy, rng, t=config.t)
        if not result.generalization_guaranteed:
            notes.append(f"{len(train)} examples are below the generalization bound {result.sample_bound}")
        hypothesis = result.hypothesis
        output = " ".join(format_point(hypothesis.weights)) + f" >= {format_rational(hypothesis.threshold)}"
        return ResultRow(task=config.task, trial=index, seed=rng.seed, utility=empirical_error(hypothesis, test),
                         target=config.alpha, higher_is_better=False, output=output,
                         **_ledger_fields(result.feasibility.ledger))
    return trial


def _ip_bench_trials(config: ExperimentConfig, notes: list[str]) -> TrialFn:
    domain = IntegerRange(0, config.X)
    spec = IPSolverSpec(kind="exp-mech", privacy=config.privacy, beta=config.beta)
    size = config.t if config.t is not None else n_ip(domain.size, config.beta, config.epsilon)
    _ = notes

    def trial(index: int, rng: RandomSource) -> ResultRow:
        values = [rng.integer(0, config.X + 1) for _ in range(size)]
        chosen = private_interior_point(values, domain, spec, rng)
        return ResultRow(task=config.task, trial=index, seed=rng.seed, utility=1.0 if is_interior(values, chosen) else 0.0,
                         target=1.0, output=str(chosen), ledger_epsilon=config.epsilon, ledger_delta=config.delta)
    return trial


_TRIALS: dict[str, Callable[[ExperimentConfig, list[str]], TrialFn]] = {
    "tukey": _tukey_trials,
    "linfeas": _linfeas_trials,
    "learn-halfspace": _learner_trials,
    "ip-bench": _ip_bench_trials,
}


def _run_trials(config: ExperimentConfig, trial_fn: TrialFn) -> list[ResultRow]:
    def run(index: int) -> ResultRow:
        rng = RandomSource.for_trial(config.seed, index)
        start = time.perf_counter()
        try:
            row = trial_fn(index, rng)
        except InsufficientSamplesError as e:
            row = _insufficient(config, index, rng.seed, e)
        return row.model_copy(update={"wall_time": time.perf_counter() - start})

    with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
        return list(pool.map(run, range(config.trials)))


# ------------------------------
# Artifacts
# ------------------------------

EXECUTION_FIELDS = {"max_workers", "output_dir", "emit_plot_data"}


def _config_fingerprint(config: ExperimentConfig) -> str:
    """Fingerprint of the fields that determine results; worker count and output location are excluded."""
    return fingerprint(config.model_dump(mode="json", exclude=EXECUTION_FIELDS))


def _header(config: ExperimentConfig) -> list[str]:
    return [f"task={config.task} seed={config.seed} trials={config.trials}",
            f"config={_config_fingerprint(config)}"]


def write_results(config: ExperimentConfig, rows: list[ResultRow]) -> Path:
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=RESULT_COLUMNS + ["wall_time"])
    out = Path(config.output_dir)
    datasets.write_table(out / "timings.csv", frame[["trial", "wall_time"]])
    if config.emit_plot_data:
        long = frame.melt(id_vars=["task", "trial"], value_vars=["utility", "target", "ledger_epsilon"],
                          var_name="metric", value_name="value")
        datasets.write_table(out / "plot_data.csv", long.sort_values(["trial", "metric"], kind="stable"))
    return datasets.write_table(out / "results.csv", frame[RESULT_COLUMNS], _header(config))


def summarise(config: ExperimentConfig, rows: list[ResultRow], notes: list[str]) -> RunSummary:
    completed = [row for row in rows if row.status == "ok"]
    if completed and len(completed) < len(rows):
        notes = notes + [f"{len(rows) - len(completed)} of {len(rows)} trials stopped on insufficient samples"]
    successes = sum(1 for row in completed if row.success)
    utilities = [row.utility for row in completed if row.utility is not None]
    return RunSummary(task=config.task, trials=len(rows), completed=len(completed), successes=successes,
                      success_rate=successes / len(completed) if completed else None,
                      success_ci=clopper_pearson(successes, len(completed)) if completed else None,
                      mean_utility=float(np.mean(utilities)) if utilities else None,
                      config_fingerprint=_config_fingerprint(config),
                      grid_validated=config.grid.validated or config.grid.is_default,
                      notes=sorted(set(notes)))


def _write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def exit_code(summary: RunSummary) -> int:
    """EXIT_INSUFFICIENT when trials ran and every one stopped on insufficient samples, else EXIT_OK."""
    if summary.trials > 0 and summary.completed == 0:
        return EXIT_INSUFFICIENT
    return EXIT_OK


def _finish(config: ExperimentConfig, rows: list[ResultRow], notes: list[str]) -> int:
    write_results(config, rows)
    summary = summarise(config, rows, notes)
    _write_json(Path(config.output_dir) / "summary.json", summary.model_dump(mode="json"))
    logger.info("Experiment %s finished: %d/%d completed, %d successes", config.task, summary.completed,
                summary.trials, summary.successes)
    return exit_code(summary)


# ------------------------------
# Single-shot tasks
# ------------------------------

def _run_approx_check(config: ExperimentConfig) -> int:
    source = RandomSource(config.seed)
    spec = ApproxSpec(alpha=config.alpha, beta=config.beta, vc_dimension=config.d + 1, c_vc=config.c_vc)
    points = cluster_points(config.d, config.X, config.n, source.spawn("points"))
    system, _ = planted_feasible(config.d, config.X, config.n, source.spawn("constraints"))
    calibrations: list[CalibrationRow] = [
        calibrate_subset_failure_rate(TukeyTarget(config.d, config.X, config.grid), points, spec,
                                      config.calibration_trials, source.spawn("subsets:td"), label="Q_TD"),
        calibrate_subset_failure_rate(FeasibilityTarget(config.d, config.X), system.as_tuples(), spec,
                                      config.calibration_trials, source.spawn("subsets:lf"), label="Q_LF"),
    ]
    frame = pd.DataFrame([row.model_dump() for row in calibrations])
    datasets.write_table(Path(config.output_dir) / "calibration.csv", frame, _header(config))
    rows = [ResultRow(task=config.task, trial=index, seed=config.seed, utility=row.ci_high, target=config.beta,
                      higher_is_better=False, output=f"{row.function} failures={row.empirical_failure_rate:.4f}")
            for index, row in enumerate(calibrations)]
    return _finish(config, rows, ["per-block failure probability is the empirical subset failure rate in calibration.csv"])


def _audit_inputs(config: ExperimentConfig) -> tuple[list, list]:
    if config.mechanism == "a-simple-h":
        if config.input_path:
            return datasets.read_examples(config.input_path), datasets.read_examples(config.neighbour_path)
        return counterexample_datasets(config.n)
    if config.input_path:
        first = datasets.read_points(config.input_path, config.X)
        second = datasets.read_points(config.neighbour_path, config.X)
        return [p[0] for p in first.points], [p[0] for p in second.points]
    S = [-config.X] * (config.n // 2) + [config.X] * (config.n - config.n // 2)
    S_prime = list(S)
    S_prime[-1] = -config.X
    return S, S_prime


def _run_audit(config: ExperimentConfig, acml: bool) -> int:
    mechanism_name = "a-simple-h" if acml else config.mechanism
    event_spec = "arc:0:pi" if acml else config.event
    if acml:
        S, S_prime = counterexample_datasets(config.n)
    else:
        S, S_prime = _audit_inputs(config)
    mechanism = build_mechanism(mechanism_name, config.X, config.privacy, config.alpha, config.beta,
                                gamma=config.gamma or DEFAULT_GAMMA, C=config.C)
    report = estimate_epsilon_lower_bound(mechanism, S, S_prime, parse_event(event_spec), config.trials,
                                          config.delta, config.seed, config.epsilon, mechanism_name=mechanism_name,
                                          event_spec=event_spec, max_workers=config.max_workers)
    _write_json(Path(config.output_dir) / "audit_report.json", report.model_dump(mode="json"))
    print(f"{mechanism_name}: {report.verdict} (certified epsilon >= {report.epsilon_certified:.4f}, "
          f"claimed {config.epsilon})")
    row = ResultRow(task=config.task, trial=0, seed=config.seed, utility=report.epsilon_certified,
                    target=config.epsilon, higher_is_better=False, output=report.verdict)
    return _finish(config, [row], [])


def _run_predict(config: ExperimentConfig) -> int:
    try:
        hypothesis = Hypothesis.model_validate_json(Path(config.hypothesis_path).read_text(encoding="utf-8"))
    except (OSError, ValidationError) as e:
        raise InputError(f"cannot read hypothesis '{config.hypothesis_path}': {e}") from e
    examples = datasets.read_examples(config.test_path)
    frame = datasets.examples_frame(examples)
    frame["prediction"] = [hypothesis.predict_one(e.x) for e in examples]
    datasets.write_table(Path(config.output_dir) / "predictions.csv", frame, _header(config))
    error = empirical_error(hypothesis, examples)
    row = ResultRow(task=config.task, trial=0, seed=config.seed, utility=error, target=config.alpha,
                    higher_is_better=False, output=f"error={error:.4f}")
    return _finish(config, [row], [])


@log_execution_time()
def run_experiment(config: ExperimentConfig) -> int:
    """
    Execute config and write its artifacts.

    Returns:
        int: 3 when every trial stopped on insufficient samples, otherwise 0.
    """
    logger.info("Running %s with seed %d (%d trials)", config.task, config.seed, config.trials)
    if config.task == "generate":
        for path in generate_dataset(config):
            logger.info("Wrote %s", path)
        return EXIT_OK
    if config.task == "approx-check":
        return _run_approx_check(config)
    if config.task in ("audit", "audit-acml"):
        return _run_audit(config, acml=config.task == "audit-acml")
    if config.task == "predict":
        return _run_predict(config)
    if config.task not in _TRIALS:
        raise ParameterError(f"unknown task '{config.task}'")
    notes: list[str] = []
    if not config.grid.is_default and not config.grid.validated:
        notes.append("grid configuration is not validated")
    rows = _run_trials(config, _TRIALS[config.task](config, notes))
    return _finish(config, rows, notes)

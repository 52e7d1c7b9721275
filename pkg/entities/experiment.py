"""
Experiment configuration and result rows.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from entities.privacy import PrivacyParams
from entities.specs import GridConfig

Task = Literal["tukey", "linfeas", "learn-halfspace", "ip-bench", "approx-check", "audit-acml", "audit",
               "generate", "predict"]
DatasetKind = Literal["cluster-points", "planted-feasible", "threshold-labeled", "counterexample"]


class ExperimentConfig(BaseModel):
    """
    One experiment, read from the "experiment" section of the JSON configuration.

    Attributes:
        task (Task): What to run.
        seed (int): Mandatory seed; trial i uses seed XOR i.
        trials (int): Independent runs.
        d, X, n: Dimension, coordinate bound and generated dataset size.
        alpha, beta, epsilon, delta: Accuracy and privacy parameters.
        t (int | None): Block-count override.
        grid (GridConfig): Grid scaling.
        input_path, neighbour_path, test_path, hypothesis_path: Data files.
        output_dir (str): Directory receiving CSV and JSON artifacts.
    """
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    task: Task = Field(description="Task to run.")
    seed: int = Field(ge=0, lt=2 ** 64, description="Experiment seed.")
    trials: int = Field(default=1, ge=1, description="Number of independent trials.")
    d: int = Field(default=1, ge=1, le=3, description="Dimension.")
    X: int = Field(default=4, ge=1, description="Coordinate or coefficient bound.")
    n: int = Field(default=400, ge=1, description="Size of generated datasets.")
    alpha: float = Field(default=0.2, gt=0, lt=1, description="Accuracy parameter.")
    beta: float = Field(default=0.1, gt=0, lt=1, description="Failure probability.")
    epsilon: float = Field(default=1.0, gt=0, description="Privacy budget epsilon.")
    delta: float = Field(default=0.0, ge=0, lt=1, description="Privacy budget delta.")
    t: Optional[int] = Field(default=None, ge=1, description="Block-count override.")
    grid: GridConfig = Field(default_factory=GridConfig, description="Grid scaling knobs.")
    dataset_kind: Optional[DatasetKind] = Field(default=None, description="Generator for the generate task.")
    input_path: Optional[str] = Field(default=None, description="Dataset CSV.")
    neighbour_path: Optional[str] = Field(default=None, description="Neighbouring dataset CSV for audits.")
    test_path: Optional[str] = Field(default=None, description="Held-out examples CSV.")
    hypothesis_path: Optional[str] = Field(default=None, description="Hypothesis JSON for predict.")
    output_dir: str = Field(default="results", description="Artifact directory.")
    mechanism: Literal["interior-point", "a-simple-h", "constant"] = Field(default="interior-point",
                                                                          description="Mechanism under audit.")
    event: str = Field(default="le:0", description="Audited event spec.")
    gamma: Optional[float] = Field(default=None, gt=0, description="Angle grid spacing; default 2pi/256.")
    C: int = Field(default=64, ge=1, description="Selected angles in the threshold reduction.")
    calibration_trials: int = Field(default=200, ge=1, description="Subsets drawn by approx-check.")
    c_vc: float = Field(default=8.0, gt=0, description="Subset-size constant.")
    max_workers: int = Field(default=4, ge=1, description="Worker threads for trials.")
    emit_plot_data: bool = Field(default=False, description="Also write tidy long-format CSV.")

    @field_validator("event")
    @classmethod
    def _event_shape(cls, value: str) -> str:
        kind = value.split(":", 1)[0]
        if kind not in ("arc", "le", "ge"):
            raise ValueError(f"event must start with arc:, le: or ge:, got '{value}'")
        return value

    @model_validator(mode="after")
    def _task_inputs(self) -> "ExperimentConfig":
        if self.task == "generate" and self.dataset_kind is None:
            raise ValueError("the generate task needs dataset_kind")
        if self.task == "predict" and (self.hypothesis_path is None or self.test_path is None):
            raise ValueError("the predict task needs hypothesis_path and test_path")
        if self.task == "audit" and (self.input_path is None) != (self.neighbour_path is None):
            raise ValueError("the audit task needs both input_path and neighbour_path, or neither")
        return self

    @property
    def privacy(self) -> PrivacyParams:
        return PrivacyParams(epsilon=self.epsilon, delta=self.delta)


class ResultRow(BaseModel):
    """
    One trial of an experiment.

    success is derived from utility and target, never taken from the mechanism.
    """
    model_config = ConfigDict(extra="forbid")

    task: str = Field(description="Task name.")
    trial: int = Field(ge=0, description="Trial index.")
    seed: int = Field(ge=0, description="Seed of the trial.")
    status: Literal["ok", "insufficient-samples"] = Field(default="ok", description="Completion status.")
    utility: Optional[float] = Field(default=None, description="Achieved utility.")
    target: Optional[float] = Field(default=None, description="Theoretical target.")
    higher_is_better: bool = Field(default=True, description="Direction of the comparison.")
    ledger_epsilon: float = Field(default=0.0, ge=0, description="Total epsilon spent.")
    ledger_delta: float = Field(default=0.0, ge=0, description="Total delta spent.")
    output: str = Field(default="", description="Released value, rendered.")
    wall_time: float = Field(default=0.0, ge=0, description="Seconds; kept out of the results CSV.")

    @computed_field(description="utility meets target.")
    @property
    def success(self) -> Optional[bool]:
        if self.status != "ok" or self.utility is None or self.target is None:
            return None
        if self.higher_is_better:
            return self.utility >= self.target
        return self.utility <= self.target


RESULT_COLUMNS = ["task", "trial", "seed", "status", "utility", "target", "success", "ledger_epsilon",
                  "ledger_delta", "output"]


class CalibrationRow(BaseModel):
    """Empirical subset failure rate for one target."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    function: str = Field(description="Target label.")
    d: int = Field(ge=1, description="Dimension.")
    n: int = Field(ge=1, description="Dataset size.")
    m: int = Field(ge=1, description="Subset size.")
    alpha: float = Field(gt=0, lt=1, description="Accuracy parameter.")
    empirical_failure_rate: float = Field(ge=0, le=1, description="Fraction of failing subsets.")
    ci_low: float = Field(ge=0, le=1, description="Lower 95% bound.")
    ci_high: float = Field(ge=0, le=1, description="Upper 95% bound.")


class RunSummary(BaseModel):
    """Summary JSON of one experiment."""
    model_config = ConfigDict(extra="forbid")

    task: str = Field(description="Task name.")
    trials: int = Field(ge=0, description="Trials attempted.")
    completed: int = Field(ge=0, description="Trials that produced an output.")
    successes: int = Field(ge=0, description="Completed trials meeting their target.")
    success_rate: Optional[float] = Field(default=None, description="successes / completed.")
    success_ci: Optional[tuple[float, float]] = Field(default=None, description="95% Clopper-Pearson interval.")
    mean_utility: Optional[float] = Field(default=None, description="Mean utility of completed trials.")
    config_fingerprint: str = Field(description="xxhash of the validated configuration.")
    grid_validated: bool = Field(default=False, description="Whether the grid configuration was validated.")
    notes: list[str] = Field(default_factory=list, description="Guarantees not in force and substitutions.")

"""
Result records returned by the optimizer and the geometric applications.
"""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

from entities.geometry import Hypothesis
from entities.types import Rational, RationalPoint
from services.dp_core import CompositionLedger


class CoordinateTrace(BaseModel):
    """
    One coordinate step of the optimizer.

    Attributes:
        coordinate (int): 1-based coordinate index.
        domain_size (int): Size of the candidate domain searched.
        block_choices (list[Rational]): Per-block maximiser y_i.
        block_values (list[float]): Q(S_i, y_i) per block.
        chosen (Rational): The privately selected value.
        slice_value (float | None): Slice maximum on the full dataset at the chosen value, when recorded.
    """
    model_config = ConfigDict(extra="forbid")

    coordinate: int = Field(ge=1, description="1-based coordinate index.")
    domain_size: int = Field(ge=1, description="Size of the candidate domain.")
    block_choices: list[Rational] = Field(description="Per-block argmax values.")
    block_values: list[float] = Field(description="Per-block maxima.")
    chosen: Rational = Field(description="Privately selected coordinate value.")
    slice_value: Optional[float] = Field(default=None, description="Full-dataset slice maximum at chosen.")


class OptimizerTrace(BaseModel):
    """Trace of a complete optimizer run; point holds the selected coordinates in order."""
    model_config = ConfigDict(extra="forbid")

    t: int = Field(ge=1, description="Number of blocks.")
    block_sizes: list[int] = Field(description="Size of every block of the shared partition.")
    coordinates: list[CoordinateTrace] = Field(default_factory=list, description="Per-coordinate steps.")

    @computed_field(description="Selected point.")
    @property
    def point(self) -> RationalPoint:
        return tuple(step.chosen for step in self.coordinates)


class SampleRequirements(BaseModel):
    """
    Sample sizes an application needs under the configured interior-point solver.

    Attributes:
        t (int): Block count, the fixed point of t = n_ip(|domain|, beta/(t + d), step budget).
        baseline_n_min (int): Smallest n the run accepts (every block non-empty).
        guarantee_n_min (int): t·m, the size at which every block is an approximation with the
            analytic probability; below it the accuracy guarantee is not in force.
        m (int): Subset size of one block for the accuracy guarantee.
        domain_size (int): Largest candidate domain over the coordinates.
        rule (str): Composition rule of the per-step budget.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    t: int = Field(ge=1, description="Number of blocks.")
    baseline_n_min: int = Field(ge=1, description="Execution gate.")
    guarantee_n_min: int = Field(ge=1, description="Accuracy-guarantee requirement t·m.")
    m: int = Field(ge=1, description="Per-block subset size.")
    domain_size: int = Field(ge=1, description="Worst-case domain size.")
    rule: str = Field(description="Composition rule of the per-step budget.")
    step_epsilon: float = Field(gt=0, description="Per-coordinate epsilon.")
    step_delta: float = Field(ge=0, description="Per-coordinate delta.")
    step_beta: float = Field(gt=0, lt=1, description="Per-coordinate failure probability beta/(t + d).")
    step_alpha: float = Field(gt=0, lt=1, description="Substituted approximation parameter.")


class TukeyResult(BaseModel):
    """Output of the private Tukey-median mechanism."""
    model_config = ConfigDict(extra="forbid")

    point: RationalPoint = Field(description="Released point.")
    depth: int = Field(ge=0, description="Tukey depth of point, recomputed on the full dataset.")
    n: int = Field(ge=1, description="Dataset size.")
    target_depth: float = Field(description="((1 - alpha)/(d + 1))·n.")
    requirements: SampleRequirements = Field(description="Sample sizes in force for this run.")
    grid_validated: bool = Field(default=False, description="Whether the grid configuration was validated.")
    ledger: CompositionLedger = Field(description="Privacy spent.")
    trace: OptimizerTrace = Field(description="Optimizer trace.")

    @computed_field(description="depth >= target_depth.")
    @property
    def success(self) -> bool:
        return self.depth >= self.target_depth


class FeasibilityResult(BaseModel):
    """Output of the private linear-feasibility solver."""
    model_config = ConfigDict(extra="forbid")

    point: RationalPoint = Field(description="Released point.")
    satisfied: int = Field(ge=0, description="Number of constraints the point satisfies.")
    n: int = Field(ge=1, description="Number of constraints.")
    target: float = Field(description="(1 - alpha)·n.")
    requirements: SampleRequirements = Field(description="Sample sizes in force for this run.")
    ledger: CompositionLedger = Field(description="Privacy spent.")
    trace: OptimizerTrace = Field(description="Optimizer trace.")

    @computed_field(description="satisfied >= target.")
    @property
    def success(self) -> bool:
        return self.satisfied >= self.target


class LearnerResult(BaseModel):
    """Output of the private halfspace learner."""
    model_config = ConfigDict(extra="forbid")

    hypothesis: Hypothesis = Field(description="Learned halfspace.")
    training_error: float = Field(ge=0, le=1, description="Fraction of misclassified training examples.")
    target_error: float = Field(description="Empirical error target alpha/10.")
    sample_bound: int = Field(ge=1, description="Sample size the generalization bound asks for.")
    generalization_guaranteed: bool = Field(description="Whether the sample met the generalization bound.")
    feasibility: FeasibilityResult = Field(description="Underlying feasibility run.")


class CoordinateProperness(BaseModel):
    """Properness check of one coordinate grid under one prefix."""
    model_config = ConfigDict(extra="forbid")

    coordinate: int = Field(ge=1, description="1-based coordinate index.")
    prefix: RationalPoint = Field(description="Prefix the slice is conditioned on.")
    grid_value: float = Field(description="Best slice value over the grid.")
    reference_value: float = Field(description="Best slice value over the reference mesh and breakpoints.")

    @computed_field(description="max(0, reference - grid).")
    @property
    def shortfall(self) -> float:
        return max(0.0, self.reference_value - self.grid_value)


class ProperReport(BaseModel):
    """Result of validating that per-coordinate grids attain the slice maxima."""
    model_config = ConfigDict(extra="forbid")

    tolerance: float = Field(ge=0, description="Accepted shortfall.")
    checks: list[CoordinateProperness] = Field(default_factory=list, description="Individual checks.")

    @computed_field(description="Largest shortfall over all checks.")
    @property
    def worst_shortfall(self) -> float:
        return max((check.shortfall for check in self.checks), default=0.0)

    @computed_field(description="worst_shortfall <= tolerance.")
    @property
    def proper(self) -> bool:
        return self.worst_shortfall <= self.tolerance

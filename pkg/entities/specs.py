"""
Configuration records for the mechanisms: interior-point solver, optimizer, VC subset
sizing and rational grid scaling.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from entities.privacy import PrivacyParams


class IPSolverSpec(BaseModel):
    """
    Selects and parameterises a private interior-point solver.

    Attributes:
        kind (str): Solver realisation; only the exponential-mechanism baseline exists.
        privacy (PrivacyParams): Budget of one solver call.
        beta (float): Failure probability in (0, 1).
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["exp-mech"] = Field(default="exp-mech", description="Interior-point solver realisation.")
    privacy: PrivacyParams = Field(description="Budget of one solver call.")
    beta: float = Field(gt=0, lt=1, description="Failure probability.")


class Partition(BaseModel):
    """
    Assignment of dataset positions to t disjoint blocks.

    Attributes:
        t (int): Number of blocks.
        assignment (tuple[int, ...]): assignment[j] is the block of dataset element j.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    t: int = Field(ge=1, description="Number of blocks.")
    assignment: tuple[int, ...] = Field(description="Block index per dataset position.")

    @model_validator(mode="after")
    def _check_blocks(self) -> "Partition":
        n = len(self.assignment)
        if n < self.t:
            raise ValueError(f"{n} elements cannot fill {self.t} blocks")
        sizes = [0] * self.t
        for block in self.assignment:
            if not 0 <= block < self.t:
                raise ValueError(f"block index {block} outside [0, {self.t})")
            sizes[block] += 1
        if min(sizes) < n // self.t:
            raise ValueError(f"every block needs at least {n // self.t} elements, got sizes {sizes}")
        return self

    @property
    def block_sizes(self) -> list[int]:
        """Number of elements per block."""
        sizes = [0] * self.t
        for block in self.assignment:
            sizes[block] += 1
        return sizes

    def blocks(self, dataset: list) -> list[list]:
        """Split dataset by position into the t blocks (original order kept inside each block)."""
        if len(dataset) != len(self.assignment):
            raise ValueError(f"partition covers {len(self.assignment)} elements, dataset has {len(dataset)}")
        grouped: list[list] = [[] for _ in range(self.t)]
        for element, block in zip(dataset, self.assignment):
            grouped[block].append(element)
        return grouped


class OptimizerConfig(BaseModel):
    """Parameters of one optimizer run."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(gt=0, lt=1, description="Approximation parameter.")
    beta: float = Field(gt=0, lt=1, description="Failure probability handed to the interior-point solver.")
    privacy: PrivacyParams = Field(description="Budget of one coordinate step.")
    t: int = Field(ge=1, description="Number of blocks.")
    fixed_partition: Optional[Partition] = Field(default=None, description="Partition to reuse instead of drawing one.")

    @model_validator(mode="after")
    def _partition_matches_t(self) -> "OptimizerConfig":
        if self.fixed_partition is not None and self.fixed_partition.t != self.t:
            raise ValueError("fixed_partition.t must equal t")
        return self

    def solver_spec(self) -> IPSolverSpec:
        """Interior-point solver spec for one coordinate step."""
        return IPSolverSpec(privacy=self.privacy, beta=self.beta)


class ApproxSpec(BaseModel):
    """VC-based subset sizing parameters."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(gt=0, lt=1, description="Uniform approximation error.")
    beta: float = Field(gt=0, lt=1, description="Failure probability of the random subset.")
    vc_dimension: int = Field(ge=1, description="VC dimension of the range space.")
    c_vc: float = Field(default=8.0, gt=0, description="Constant inside the subset-size bound.")


class GridConfig(BaseModel):
    """
    Scaling knobs for the candidate grids.

    Attributes:
        denominator_scale (float): Multiplies every derived denominator bound (rounded up, at least 1).
        overrides (dict[int, tuple[int, int]]): Per-coordinate (S_max, T_max), 1-based coordinate keys.
        validated (bool): Whether properness was checked for this configuration; echoed into results.
    """
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    denominator_scale: float = Field(default=1.0, gt=0, description="Scale applied to denominator bounds.")
    overrides: dict[int, tuple[int, int]] = Field(default_factory=dict, description="Per-coordinate (S_max, T_max).")
    validated: bool = Field(default=False, description="Properness was validated for this configuration.")

    @field_validator("overrides")
    @classmethod
    def _positive_bounds(cls, value: dict[int, tuple[int, int]]) -> dict[int, tuple[int, int]]:
        for coordinate, (s_max, t_max) in value.items():
            if coordinate < 1 or s_max < 1 or t_max < 1:
                raise ValueError(f"override for coordinate {coordinate} must be positive, got {(s_max, t_max)}")
        return value

    @property
    def is_default(self) -> bool:
        """True when no scaling or override shrinks the provable bounds."""
        return self.denominator_scale >= 1.0 and not self.overrides

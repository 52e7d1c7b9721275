"""
Audit records: the angle grid of the halfspace reduction and empirical privacy reports.
"""
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

TWO_PI = 2 * math.pi


class AngleGrid(BaseModel):
    """
    Uniform grid {k·gamma : 0 <= k < ceil(2pi/gamma)} of [0, 2pi).

    Attributes:
        gamma (float): Grid spacing.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(gt=0, le=TWO_PI, description="Grid spacing in radians.")

    @computed_field(description="Number of grid angles.")
    @property
    def size(self) -> int:
        # 2pi/(2pi/K) may land a hair above K in floating point.
        return max(1, math.ceil(TWO_PI / self.gamma - 1e-9))

    def angle(self, index: int) -> float:
        return (index % self.size) * self.gamma


class ThresholdData(BaseModel):
    """
    Labeled angles handed to the threshold learner.

    Attributes:
        offset (int): Grid index of the non-selected angle rotated to 0.
        selected (list[int]): Selected grid indices before rotation.
        rotated (list[int]): The same indices after rotation, (k - offset) mod K.
        labels (list[int]): +1 iff the rotated angle is <= the rotated best angle.
        best (int): Rotated index of the best selected angle.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    offset: int = Field(ge=0, description="Rotation offset.")
    selected: list[int] = Field(description="Selected grid indices.")
    rotated: list[int] = Field(description="Rotated grid indices.")
    labels: list[Literal[-1, 1]] = Field(description="Threshold labels.")
    best: int = Field(ge=0, description="Rotated index of the best angle.")


class AuditReport(BaseModel):
    """
    Event frequencies of a mechanism on two neighbouring inputs and the implied privacy loss.

    epsilon_point is None when some ordering has p_first - delta > 0 while p_second = 0, i.e. the
    loss is unbounded at this resolution. epsilon_certified uses the pessimistic ends of the 95%
    Clopper-Pearson intervals and is 0 when no ordering certifies any loss.
    """
    model_config = ConfigDict(extra="forbid")

    mechanism: str = Field(description="Audited mechanism.")
    event: str = Field(description="Event spec.")
    trials: int = Field(ge=1, description="Runs per input.")
    delta: float = Field(ge=0, lt=1, description="Additive slack of the tested inequality.")
    claimed_epsilon: float = Field(gt=0, description="Epsilon the mechanism claims.")
    count_first: int = Field(ge=0, description="Runs on S with the event.")
    count_second: int = Field(ge=0, description="Runs on S' with the event.")
    ci_first: tuple[float, float] = Field(description="95% interval of Pr[M(S) in E].")
    ci_second: tuple[float, float] = Field(description="95% interval of Pr[M(S') in E].")
    epsilon_point: Optional[float] = Field(default=None, description="Point estimate; None when unbounded.")
    point_unbounded: bool = Field(default=False, description="Whether the point estimate is unbounded.")
    epsilon_certified: float = Field(ge=0, description="Confidence-pessimistic lower bound on epsilon.")

    @computed_field(description="Rate of the event on S.")
    @property
    def rate_first(self) -> float:
        return self.count_first / self.trials

    @computed_field(description="Rate of the event on S'.")
    @property
    def rate_second(self) -> float:
        return self.count_second / self.trials

    @computed_field(description="Outcome of the audit.")
    @property
    def verdict(self) -> str:
        return "DP violated" if self.epsilon_certified > self.claimed_epsilon else "consistent with DP"

"""
Geometric input records: Tukey point sets, linear constraints and labeled examples.
"""
from fractions import Fraction
from typing import Literal, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from entities.types import IntVector, Rational


class PointSet(BaseModel):
    """
    Multiset of integer points in [[X]]^d.

    Attributes:
        d (int): Dimension.
        X (int): Coordinate bound.
        points (list[IntVector]): The points, repetitions allowed.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    d: int = Field(ge=1, description="Dimension.")
    X: int = Field(ge=1, description="Coordinate bound.")
    points: list[IntVector] = Field(description="Integer points with |coordinate| <= X.")

    @model_validator(mode="after")
    def _check_points(self) -> "PointSet":
        for index, point in enumerate(self.points):
            if len(point) != self.d:
                raise ValueError(f"point {index} has dimension {len(point)}, expected {self.d}")
            if any(abs(c) > self.X for c in point):
                raise ValueError(f"point {index} has a coordinate outside [-{self.X}, {self.X}]")
        return self

    @property
    def n(self) -> int:
        return len(self.points)


class Constraint(BaseModel):
    """The predicate <a, x> >= w."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    a: IntVector = Field(description="Coefficient vector.")
    w: int = Field(description="Right-hand side.")

    def satisfied_by(self, x: Sequence[Fraction | int]) -> bool:
        """Exact evaluation of <a, x> >= w."""
        if len(x) != len(self.a):
            raise ValueError(f"point has dimension {len(x)}, constraint has {len(self.a)}")
        return sum(Fraction(c) * v for c, v in zip(self.a, x)) >= self.w

    def as_tuple(self) -> tuple[IntVector, int]:
        return self.a, self.w


class ConstraintSet(BaseModel):
    """
    Multiset of constraints sharing dimension d and coefficient bound X.

    Attributes:
        d (int): Number of variables.
        X (int): Bound on |a_j| and |w|.
        constraints (list[Constraint]): The constraints, repetitions allowed.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    d: int = Field(ge=1, description="Number of variables.")
    X: int = Field(ge=1, description="Coefficient bound.")
    constraints: list[Constraint] = Field(description="Constraints <a, x> >= w.")

    @model_validator(mode="after")
    def _check_constraints(self) -> "ConstraintSet":
        for index, constraint in enumerate(self.constraints):
            if len(constraint.a) != self.d:
                raise ValueError(f"constraint {index} has {len(constraint.a)} coefficients, expected {self.d}")
            if any(abs(c) > self.X for c in constraint.a) or abs(constraint.w) > self.X:
                raise ValueError(f"constraint {index} has a coefficient outside [-{self.X}, {self.X}]")
        return self

    @property
    def n(self) -> int:
        return len(self.constraints)

    def as_tuples(self) -> list[tuple[IntVector, int]]:
        return [c.as_tuple() for c in self.constraints]


class LabeledExample(BaseModel):
    """An integer feature vector with a binary label."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    x: IntVector = Field(description="Feature vector.")
    y: Literal[-1, 1] = Field(description="Label.")


class Hypothesis(BaseModel):
    """
    Halfspace classifier h(x) = 1 iff <weights, x> >= threshold, else -1.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    weights: tuple[Rational, ...] = Field(description="Weight vector.")
    threshold: Rational = Field(description="Threshold.")

    def predict_one(self, x: Sequence[Fraction | int]) -> int:
        if len(x) != len(self.weights):
            raise ValueError(f"example has dimension {len(x)}, hypothesis has {len(self.weights)}")
        return 1 if sum(wj * v for wj, v in zip(self.weights, x)) >= self.threshold else -1

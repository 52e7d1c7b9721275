"""
Privacy budget entities.

PrivacyParams is the (epsilon, delta) pair every mechanism consumes; LedgerEntry is one
line of a composition ledger (see services.dp_core.CompositionLedger).
"""
import math

from pydantic import BaseModel, ConfigDict, Field, field_validator


class PrivacyParams(BaseModel):
    """
    An (epsilon, delta) differential-privacy budget.

    Attributes:
        epsilon (float): Multiplicative privacy loss, strictly positive and finite.
        delta (float): Additive slack in [0, 1).
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    epsilon: float = Field(gt=0, description="Multiplicative privacy loss; epsilon > 0.")
    delta: float = Field(default=0.0, ge=0, lt=1, description="Additive slack; 0 <= delta < 1.")

    @field_validator("epsilon")
    @classmethod
    def _finite_epsilon(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("epsilon must be finite")
        return value

    def dominates(self, other: "PrivacyParams", slack: float = 1e-12) -> bool:
        """True when self is at least as large as other in both coordinates (up to float slack)."""
        return other.epsilon <= self.epsilon * (1 + slack) and other.delta <= self.delta + slack


class LedgerEntry(BaseModel):
    """One mechanism invocation recorded against a budget."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(gt=0, description="Per-invocation epsilon.")
    delta: float = Field(default=0.0, ge=0, lt=1, description="Per-invocation delta.")
    mechanism: str = Field(min_length=1, description="Label of the invoked mechanism.")

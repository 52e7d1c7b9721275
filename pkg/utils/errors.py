"""Exception hierarchy for the toolkit.

Every failure the library raises on purpose derives from ToolkitError so that the
CLI can map it to an exit code, while foreign exceptions are wrapped by the
decorators in utils.decorators.
"""


class ToolkitError(Exception):
    """Base class for all deliberate toolkit failures."""


class ParameterError(ToolkitError, ValueError):
    """A parameter lies outside its documented range."""


class InsufficientSamplesError(ToolkitError):
    """The dataset is too small for the requested guarantee.

    Attributes:
        required (int): The number of samples the gate requires.
        available (int): The number of samples provided.
    """

    def __init__(self, message: str, required: int | None = None, available: int | None = None):
        super().__init__(message)
        self.required = required
        self.available = available


class UnsupportedDimensionError(ToolkitError, ValueError):
    """Exact evaluation is not implemented for the requested dimension."""


class DegenerateArrangementError(ToolkitError):
    """Hyperplanes are parallel or concurrent where general position is required."""


class InputError(ToolkitError):
    """Configuration or data files could not be read or parsed."""


def ensure(condition: bool, message: str, exception_class: type[ToolkitError] = ParameterError) -> None:
    """Raise exception_class(message) unless condition holds."""
    if not condition:
        raise exception_class(message)

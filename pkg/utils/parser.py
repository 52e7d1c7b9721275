"""Parsing helpers for the textual forms used in CSV and JSON files.

Rationals are written as "num/den" (or a bare integer) and integer vectors as
separate integer columns.
"""
from fractions import Fraction
from typing import Iterable

from utils.errors import InputError


def parse_rational(text: str | int | Fraction) -> Fraction:
    """
    Parse a "num/den" string, an integer string or an int into an exact Fraction.

    Args:
        text: The value to parse.

    Returns:
        Fraction: The value in lowest terms.

    Raises:
        InputError: If text is not an exact rational (floats such as "0.5" are rejected).
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"Not a rational value: {text!r}")
    cleaned = text.strip()
    numerator, _, denominator = cleaned.partition("/")
    try:
        if denominator:
            value = Fraction(int(numerator), int(denominator))
        else:
            value = Fraction(int(numerator))
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"Not a rational value: {text!r}") from e
    return value


def format_rational(value: Fraction | int) -> str:
    """Render a rational as "num/den", or as a bare integer when the denominator is 1."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_point(point: Iterable[Fraction | int]) -> list[str]:
    """Render every coordinate of a point with format_rational."""
    return [format_rational(c) for c in point]


def parse_int(text: str, line_number: int, column: str) -> int:
    """
    Parse one integer cell of a CSV row.

    Raises:
        InputError: Naming the line number and column of the malformed cell.
    """
    try:
        return int(str(text).strip())
    except ValueError as e:
        raise InputError(f"line {line_number}: column '{column}' is not an integer: {text!r}") from e


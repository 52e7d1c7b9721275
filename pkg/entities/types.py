"""Shared annotated field types for the pydantic models.

Rationals are held as fractions.Fraction and travel through JSON as "num/den" strings.
"""
from fractions import Fraction
from typing import Annotated

from pydantic import PlainSerializer, PlainValidator

from utils.parser import format_rational, parse_rational

Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
]

RationalPoint = tuple[Rational, ...]

IntVector = tuple[int, ...]

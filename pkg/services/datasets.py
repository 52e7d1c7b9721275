"""
CSV ingestion and emission for point sets, constraint systems and labeled examples.

Files start with '#' comment lines documenting the schema, followed by a header row:

    points       x1, ..., xd          integer coordinates
    constraints  a1, ..., ad, w       <a, z> >= w
    examples     x1, ..., xd, y       y in {-1, 1}

Row i of the table is reported with its line number in the file, counting comments and blanks.
"""
import csv
import io
from pathlib import Path
from typing import Sequence

import pandas as pd
from pydantic import ValidationError

from entities.geometry import Constraint, ConstraintSet, LabeledExample, PointSet
from utils.decorators import log_and_raise_error
from utils.errors import InputError
from utils.logger import LoggerFactory
from utils.parser import parse_int

logger = LoggerFactory.get_logger(__name__)

SCHEMAS = {
    "points": "x1..xd: integer coordinates in [-X, X]",
    "constraints": "a1..ad, w: integer constraint <a, z> >= w with |a_j|, |w| <= X",
    "examples": "x1..xd, y: integer features and a label in {-1, 1}",
}


def _data_line_numbers(text: str) -> list[int]:
    """1-based line numbers of the non-comment, non-blank lines (header first)."""
    return [number for number, line in enumerate(text.splitlines(), start=1)
            if line.strip() and not line.lstrip().startswith("#")]


def _read_table(path: str | Path) -> tuple[pd.DataFrame, list[int]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read '{path}': {e}") from e
    lines = _data_line_numbers(text)
    if not lines:
        raise InputError(f"'{path}' has no header row")
    try:
        frame = pd.read_csv(io.StringIO(text), comment="#", dtype=str, skip_blank_lines=True,
                            keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"'{path}': {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame, lines[1:]


def _indexed_columns(frame: pd.DataFrame, prefix: str, path: str | Path) -> list[str]:
    columns = []
    while f"{prefix}{len(columns) + 1}" in frame.columns:
        columns.append(f"{prefix}{len(columns) + 1}")
    if not columns:
        raise InputError(f"'{path}' has no {prefix}1 column; found {list(frame.columns)}")
    return columns


def _int_rows(frame: pd.DataFrame, columns: Sequence[str], lines: Sequence[int]) -> list[tuple[int, ...]]:
    rows = []
    for position, record in enumerate(frame[list(columns)].itertuples(index=False)):
        line = lines[position]
        rows.append(tuple(parse_int(value, line, column) for value, column in zip(record, columns)))
    return rows


@log_and_raise_error("Failed to read point set")
def read_points(path: str | Path, X: int) -> PointSet:
    """
    Read a points file.

    Raises:
        InputError: On unreadable files, malformed cells (naming the line) or out-of-range coordinates.
    """
    frame, lines = _read_table(path)
    columns = _indexed_columns(frame, "x", path)
    points = _int_rows(frame, columns, lines)
    try:
        point_set = PointSet(d=len(columns), X=X, points=points)
    except ValidationError as e:
        raise InputError(f"'{path}': {e.errors()[0]['msg']}") from e
    logger.info("Read %d points of dimension %d from %s", point_set.n, point_set.d, path)
    return point_set


@log_and_raise_error("Failed to read constraint system")
def read_constraints(path: str | Path, X: int) -> ConstraintSet:
    """Read a constraints file."""
    frame, lines = _read_table(path)
    columns = _indexed_columns(frame, "a", path)
    if "w" not in frame.columns:
        raise InputError(f"'{path}' has no w column")
    rows = _int_rows(frame, columns + ["w"], lines)
    try:
        system = ConstraintSet(d=len(columns), X=X,
                               constraints=[Constraint(a=row[:-1], w=row[-1]) for row in rows])
    except ValidationError as e:
        raise InputError(f"'{path}': {e.errors()[0]['msg']}") from e
    logger.info("Read %d constraints on %d variables from %s", system.n, system.d, path)
    return system


@log_and_raise_error("Failed to read labeled examples")
def read_examples(path: str | Path) -> list[LabeledExample]:
    """Read an examples file."""
    frame, lines = _read_table(path)
    columns = _indexed_columns(frame, "x", path)
    if "y" not in frame.columns:
        raise InputError(f"'{path}' has no y column")
    examples = []
    for row, line in zip(_int_rows(frame, columns + ["y"], lines), lines):
        if row[-1] not in (-1, 1):
            raise InputError(f"line {line}: label must be -1 or 1, got {row[-1]}")
        examples.append(LabeledExample(x=row[:-1], y=row[-1]))
    logger.info("Read %d examples with %d features from %s", len(examples), len(columns), path)
    return examples


def points_frame(points: Sequence[Sequence[int]]) -> pd.DataFrame:
    d = len(points[0]) if points else 1
    return pd.DataFrame([list(p) for p in points], columns=[f"x{j + 1}" for j in range(d)])


def constraints_frame(system: ConstraintSet) -> pd.DataFrame:
    rows = [list(c.a) + [c.w] for c in system.constraints]
    return pd.DataFrame(rows, columns=[f"a{j + 1}" for j in range(system.d)] + ["w"])


def examples_frame(examples: Sequence[LabeledExample]) -> pd.DataFrame:
    d = len(examples[0].x) if examples else 1
    rows = [list(e.x) + [e.y] for e in examples]
    return pd.DataFrame(rows, columns=[f"x{j + 1}" for j in range(d)] + ["y"])


def write_table(path: str | Path, frame: pd.DataFrame, comments: Sequence[str] = ()) -> Path:
    """
    Write frame as CSV preceded by '# ' comment lines.

    Output is byte-identical for identical inputs: fixed column order, '\\n' line endings, no index.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        frame.to_csv(handle, index=False, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    logger.debug("Wrote %d rows to %s", len(frame), target)
    return target

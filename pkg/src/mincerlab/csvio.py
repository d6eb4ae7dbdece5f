"""CSV reading and writing for microdata files.

Header required, UTF-8, comma separated. Booleans are ``0``/``1``;
``edu_level`` and ``he_field`` use the enumeration names and ``he_field`` is
empty for people without higher education.
"""

from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import SchemaError
from .model_spec import FIELDS, LEVELS, NO_FIELD, EducationLevel, Microdata

COLUMNS = (
    "age", "gender", "married", "hours_per_week", "weeks_worked", "big_town",
    "urban", "edu_level", "he_field", "gross_income", "employed",
)

_LEVEL_BY_NAME = {lvl.value: i for i, lvl in enumerate(LEVELS)}
_FIELD_BY_NAME = {f.value: i for i, f in enumerate(FIELDS)}
_HIGHER_CODES = {_LEVEL_BY_NAME[lvl.value] for lvl in EducationLevel if lvl.is_higher}


def format_number(x) -> str:
    """Shortest round-tripping text for a number; integral values print without a decimal point."""
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _bool(text: str) -> bool:
    if text == "1":
        return True
    if text == "0":
        return False
    raise ValueError(f"expected 0 or 1, got {text!r}")


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite number {text!r}")
    return v


def _parse_row(row: dict[str, str]) -> tuple:
    """Parse one CSV row; raises ``(column, message)`` pairs via ValueError args."""
    problems = []
    out = {}

    def grab(col, fn):
        try:
            out[col] = fn(row[col].strip())
        except (ValueError, KeyError) as exc:
            problems.append((col, str(exc) or "invalid value"))

    def age(t):
        v = int(t)
        if v < 0:
            raise ValueError(f"negative age {v}")
        return v

    def gender(t):
        if t not in ("male", "female"):
            raise ValueError(f"expected 'male' or 'female', got {t!r}")
        return t == "male"

    def bounded(lo, hi):
        def f(t):
            v = _finite(t)
            if not lo <= v <= hi:
                raise ValueError(f"{v} outside [{lo}, {hi}]")
            return v
        return f

    def level(t):
        if t not in _LEVEL_BY_NAME:
            raise ValueError(f"unknown education level {t!r}")
        return _LEVEL_BY_NAME[t]

    def field(t):
        if t == "":
            return NO_FIELD
        if t not in _FIELD_BY_NAME:
            raise ValueError(f"unknown higher-education field {t!r}")
        return _FIELD_BY_NAME[t]

    grab("age", age)
    grab("gender", gender)
    grab("married", _bool)
    grab("hours_per_week", bounded(0, 168))
    grab("weeks_worked", bounded(0, 53))
    grab("big_town", _bool)
    grab("urban", _bool)
    grab("edu_level", level)
    grab("he_field", field)
    grab("gross_income", _finite)
    grab("employed", _bool)
    if "edu_level" in out and "he_field" in out:
        if (out["he_field"] != NO_FIELD) != (out["edu_level"] in _HIGHER_CODES):
            problems.append(("he_field", "must be set exactly for Bachelor, Masters and Doctorate"))
    if problems:
        raise ValueError(problems)
    return tuple(out[c] for c in COLUMNS)


def read_microdata(source: str | Path | TextIO, max_problems: int = 1000) -> Microdata:
    """Stream a microdata CSV into columnar arrays.

    Every row is validated; all violations (up to ``max_problems``) are
    collected and raised together as a :class:`SchemaError`.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_microdata(fh, max_problems)
    reader = csv.DictReader(source)
    header = reader.fieldnames
    if header is None:
        raise SchemaError([(0, "<header>", "file is empty; a header row is required")])
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise SchemaError([(0, c, "missing column") for c in missing])
    columns: list[list] = [[] for _ in COLUMNS]
    problems: list[tuple[int, str, str]] = []
    for i, row in enumerate(reader, start=1):
        if None in row:
            problems.append((i, "<row>", "too many fields"))
            continue
        try:
            parsed = _parse_row(row)
        except ValueError as exc:
            problems.extend((i, c, m) for c, m in exc.args[0])
            if len(problems) >= max_problems:
                break
            continue
        for col, v in zip(columns, parsed):
            col.append(v)
    if problems:
        raise SchemaError(problems)
    a = dict(zip(COLUMNS, columns))
    return Microdata(
        age=np.array(a["age"], dtype=np.int64),
        male=np.array(a["gender"], dtype=bool),
        married=np.array(a["married"], dtype=bool),
        hours_per_week=np.array(a["hours_per_week"], dtype=np.float64),
        weeks_worked=np.array(a["weeks_worked"], dtype=np.float64),
        big_town=np.array(a["big_town"], dtype=bool),
        urban=np.array(a["urban"], dtype=bool),
        edu_level=np.array(a["edu_level"], dtype=np.int64),
        he_field=np.array(a["he_field"], dtype=np.int64),
        gross_income=np.array(a["gross_income"], dtype=np.float64),
        employed=np.array(a["employed"], dtype=bool),
    )


def write_microdata(data: Microdata, dest: str | Path | TextIO) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_microdata(data, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(COLUMNS)
    level_names = [lvl.value for lvl in LEVELS]
    field_names = [f.value for f in FIELDS]
    for i in range(len(data)):
        f = int(data.he_field[i])
        w.writerow((
            int(data.age[i]),
            "male" if data.male[i] else "female",
            int(data.married[i]),
            format_number(data.hours_per_week[i]),
            format_number(data.weeks_worked[i]),
            int(data.big_town[i]),
            int(data.urban[i]),
            level_names[data.edu_level[i]],
            "" if f == NO_FIELD else field_names[f],
            format_number(data.gross_income[i]),
            int(data.employed[i]),
        ))


def write_ability(ability: np.ndarray, dest: str | Path) -> None:
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        fh.write("ability\n")
        for v in ability:
            fh.write(repr(float(v)) + "\n")


def read_ability(path: str | Path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "ability":
            raise SchemaError([(0, "<header>", "expected a single 'ability' column")])
        return np.array([float(line) for line in fh if line.strip()], dtype=np.float64)


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()

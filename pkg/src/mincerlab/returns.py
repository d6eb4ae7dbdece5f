"""Relative effects and annualized returns from semilog dummy coefficients.

A dummy coefficient ``b`` in a log-income regression corresponds to a
relative income difference of ``100 * (exp(b) - 1)`` percent. Annualized
rates divide that percentage by the schooling years it took (not the
geometric ``(1 + R)**(1/S) - 1``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import InputError
from .model_spec import (
    CONTROLS,
    EDUCATION_YEARS,
    FIELD_DUMMIES,
    LEVEL_DUMMIES,
    EducationLevel,
    HigherEdField,
)


def relative_effect(b: float) -> float:
    """Percent income difference implied by a semilog dummy coefficient."""
    return 100.0 * math.expm1(b)


def annualized_rate(b: float, total_years: float) -> float:
    """Relative effect spread evenly over ``total_years`` of schooling."""
    if not total_years > 0:
        raise InputError(f"schooling years must be positive, got {total_years}")
    return relative_effect(b) / total_years


def incremental_rate(b_hi: float, b_lo: float, years_hi: float, years_lo: float) -> float:
    """Annualized return of moving from one level to a longer one."""
    if not years_hi > years_lo:
        raise InputError(f"need years_hi > years_lo, got {years_hi} and {years_lo}")
    return relative_effect(b_hi - b_lo) / (years_hi - years_lo)


@dataclass(frozen=True)
class FieldDurations:
    """Years of study per higher-education field."""

    name: str
    years: Mapping[HigherEdField, float]

    def __post_init__(self):
        missing = set(HigherEdField) - set(self.years)
        if missing:
            raise InputError(f"durations missing for: {sorted(f.value for f in missing)}")
        for f, y in self.years.items():
            if not y >= 1:
                raise InputError(f"duration for {f.value} must be >= 1 year, got {y}")


UNIFORM_DURATIONS = FieldDurations("uniform", {f: 4 for f in HigherEdField})
# Only economics (3) and medicine (6) depart from four years; these are the
# durations that reproduce the reference differentiated rates.
DIFFERENTIATED_DURATIONS = FieldDurations("differentiated", {
    HigherEdField.TECHNICAL: 4,
    HigherEdField.SCIENCE: 4,
    HigherEdField.ECONOMICS: 3,
    HigherEdField.LAW: 4,
    HigherEdField.MEDICINE: 6,
    HigherEdField.ARTS: 4,
})
DURATION_PRESETS = {d.name: d for d in (UNIFORM_DURATIONS, DIFFERENTIATED_DURATIONS)}


@dataclass(frozen=True)
class ReturnsRow:
    label: str
    coefficient: float
    years: float
    relative_effect: float
    annualized_rate: float


@dataclass(frozen=True)
class IncrementalRow:
    label_hi: str
    label_lo: str
    years_hi: float
    years_lo: float
    rate: float

    @property
    def label_pair(self) -> str:
        return f"{self.label_hi}/{self.label_lo}"


@dataclass(frozen=True)
class ReturnsTable:
    kind: str
    rows: tuple[ReturnsRow, ...]
    incremental: tuple[IncrementalRow, ...] = ()
    durations: str | None = None
    notes: tuple[str, ...] = field(default=())

    def row(self, label: str) -> ReturnsRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def incremental_row(self, label_pair: str) -> IncrementalRow:
        for r in self.incremental:
            if r.label_pair == label_pair:
                return r
        raise KeyError(label_pair)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "durations": self.durations,
            "rows": [asdict(r) for r in self.rows],
            "incremental": [dict(asdict(r), label_pair=r.label_pair) for r in self.incremental],
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block", "label", "coefficient", "years", "relative_effect", "annualized_rate"])
        for r in self.rows:
            w.writerow(["level" if self.kind == "levels" else "field", r.label, repr(r.coefficient),
                        repr(float(r.years)), repr(r.relative_effect), repr(r.annualized_rate)])
        for r in self.incremental:
            w.writerow(["incremental", r.label_pair, "", repr(float(r.years_hi - r.years_lo)), "", repr(r.rate)])
        return buf.getvalue()

    def render(self, digits: int = 2) -> str:
        lines = [f"{'label':<16}{'coef':>10}{'years':>7}{'relative %':>12}{'annual %':>10}"]
        for r in self.rows:
            lines.append(f"{r.label:<16}{r.coefficient:>10.4f}{r.years:>7g}"
                         f"{r.relative_effect:>12.{digits}f}{r.annualized_rate:>10.{digits}f}")
        if self.incremental:
            lines.append("")
            lines.append(f"{'increment':<30}{'annual %':>10}")
            for r in self.incremental:
                lines.append(f"{r.label_hi + ' vs ' + r.label_lo:<30}{r.rate:>10.{digits}f}")
        lines.extend(self.notes)
        return "\n".join(lines)


# -- level and field tables ---------------------------------------------------

_LEVEL_BY_DUMMY = {v: k for k, v in LEVEL_DUMMIES.items()}
_FIELD_BY_DUMMY = {v: k for k, v in FIELD_DUMMIES.items()}
_IGNORED = set(CONTROLS) | {"INTERCEPT"}


def resolve_label(label: str) -> EducationLevel | HigherEdField | None:
    """Map a coefficient label to a level or field; ``None`` for control variables.

    Accepts dummy names (``HAS_HE``, ``HE_MED``) and enumeration names
    (``Bachelor``, ``Medicine``).
    """
    label = label.strip()
    if label in _LEVEL_BY_DUMMY:
        return _LEVEL_BY_DUMMY[label]
    if label in _FIELD_BY_DUMMY:
        return _FIELD_BY_DUMMY[label]
    for enum_cls in (EducationLevel, HigherEdField):
        try:
            return enum_cls(label)
        except ValueError:
            pass
    if label in _IGNORED:
        return None
    raise InputError(f"unknown coefficient label {label!r}")


def level_rates(
    coefficients: Mapping[EducationLevel, float],
    years: Mapping[EducationLevel, float] | None = None,
) -> ReturnsTable:
    """Relative effects, annualized rates and the incremental chain for levels.

    Incremental rows pair each level with the next shorter level present.
    """
    years = dict(EDUCATION_YEARS if years is None else years)
    present = sorted(coefficients, key=lambda lvl: years[lvl])
    rows = tuple(
        ReturnsRow(lvl.value, float(coefficients[lvl]), float(years[lvl]),
                   relative_effect(coefficients[lvl]),
                   annualized_rate(coefficients[lvl], years[lvl]))
        for lvl in present
    )
    incremental = tuple(
        IncrementalRow(hi.value, lo.value, float(years[hi]), float(years[lo]),
                       incremental_rate(coefficients[hi], coefficients[lo], years[hi], years[lo]))
        for lo, hi in zip(present, present[1:])
    )
    return ReturnsTable("levels", rows, incremental)


def field_rates(coefficients: Mapping[HigherEdField, float], durations: FieldDurations = UNIFORM_DURATIONS) -> ReturnsTable:
    """Annualized return per field of study for the given study durations."""
    missing = set(HigherEdField) - set(coefficients)
    if missing:
        raise InputError(f"coefficients missing for field(s): {sorted(f.value for f in missing)}")
    rows = tuple(
        ReturnsRow(f.value, float(coefficients[f]), float(durations.years[f]),
                   relative_effect(coefficients[f]),
                   annualized_rate(coefficients[f], durations.years[f]))
        for f in HigherEdField
    )
    return ReturnsTable("fields", rows, durations=durations.name)


def returns_from_labels(
    coefficients: Mapping[str, float],
    years: Mapping[str, float] | None = None,
    durations: FieldDurations = UNIFORM_DURATIONS,
) -> ReturnsTable:
    """Dispatch labelled coefficients to :func:`level_rates` or :func:`field_rates`."""
    if not coefficients:
        raise InputError("no coefficients given")
    levels: dict[EducationLevel, float] = {}
    fields: dict[HigherEdField, float] = {}
    for label, b in coefficients.items():
        key = resolve_label(label)
        if isinstance(key, EducationLevel):
            levels[key] = b
        elif isinstance(key, HigherEdField):
            fields[key] = b
    if levels and fields:
        raise InputError("coefficients mix education levels and fields of study")
    if levels:
        year_map = None
        if years:
            year_map = dict(EDUCATION_YEARS)
            for label, y in years.items():
                key = resolve_label(label)
                if not isinstance(key, EducationLevel):
                    raise InputError(f"years given for non-level label {label!r}")
                year_map[key] = y
        return level_rates(levels, year_map)
    if fields:
        if years:
            custom = dict(durations.years)
            for label, y in years.items():
                key = resolve_label(label)
                if not isinstance(key, HigherEdField):
                    raise InputError(f"years given for non-field label {label!r}")
                custom[key] = y
            durations = FieldDurations("custom", custom)
        return field_rates(fields, durations)
    raise InputError("no education-level or field-of-study coefficients found")


# -- coefficient files and published reference values -------------------------

COEFFICIENT_PRESETS = {
    "paper-table6": "published_levels.csv",
    "paper-table9": "published_fields.csv",
    "paper-table3": "published_ols.csv",
    "paper-table4": "published_2sls.csv",
}


def read_label_values(source, value_column: str = "coefficient") -> dict[str, float]:
    """Read a two-column ``label,<value>`` CSV into an ordered dict."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_label_values(fh, value_column)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        raise InputError("coefficient file is empty")
    header = [h.strip() for h in header]
    if len(header) != 2 or header[0] != "label":
        raise InputError(f"expected header 'label,{value_column}', got {','.join(header)!r}")
    out: dict[str, float] = {}
    for i, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputError(f"row {i}: expected 2 fields, got {len(row)}")
        label = row[0].strip()
        try:
            value = float(row[1])
        except ValueError:
            raise InputError(f"row {i}: {row[1]!r} is not a number") from None
        if not math.isfinite(value):
            raise InputError(f"row {i}: non-finite value")
        if label in out:
            raise InputError(f"row {i}: duplicate label {label!r}")
        out[label] = value
    if not out:
        raise InputError("coefficient file has no rows")
    return out


def load_preset(name: str) -> dict[str, float]:
    try:
        filename = COEFFICIENT_PRESETS[name]
    except KeyError:
        raise InputError(f"unknown preset {name!r}; choose from {sorted(COEFFICIENT_PRESETS)}") from None
    text = resources.files("mincerlab.data").joinpath(filename).read_text(encoding="utf-8")
    return read_label_values(io.StringIO(text))


def published_rates() -> dict:
    text = resources.files("mincerlab.data").joinpath("published_rates.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class Comparison:
    quantity: str
    label: str
    computed: float
    published: float
    tolerance: float
    status: str  # "match", "discrepancy" (known, documented) or "mismatch"
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def compare_with_published(table: ReturnsTable) -> list[Comparison]:
    """Check a returns table against the published reference values.

    Entries listed as known discrepancies are reported with status
    ``"discrepancy"`` whatever their distance; they are never counted as
    matches.
    """
    ref = published_rates()
    out: list[Comparison] = []

    def check(quantity, label, computed):
        block = ref[quantity]
        if label not in block["values"]:
            return
        pub = block["values"][label]
        tol = block["tolerance"]
        note = block["discrepancies"].get(label, "")
        if note:
            status = "discrepancy"
        else:
            status = "match" if abs(computed - pub) <= tol else "mismatch"
        out.append(Comparison(quantity, label, computed, pub, tol, status, note))

    if table.kind == "levels":
        for r in table.rows:
            check("relative_effect", r.label, r.relative_effect)
        for r in table.rows:
            check("annualized_rate", r.label, r.annualized_rate)
        for r in table.incremental:
            check("incremental_rate", r.label_pair, r.rate)
    elif table.durations in ("uniform", "differentiated"):
        for r in table.rows:
            check(f"field_rate_{table.durations}", r.label, r.annualized_rate)
    return out

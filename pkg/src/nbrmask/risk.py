"""Operational risk checks: find rare records, follow their fate through
masking, and test presence disclosure for rare category labels.

Fates come from masker provenance, never from guessing which released row is
which by value matching; value comparison is only used to list the columns a
provenance-resampled record actually changed in.  Missing cells satisfy no
predicate condition, so suppressed (all-missing) released rows match nothing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import CATEGORICAL, CONTINUOUS, Dataset
from .masker import (PASSTHROUGH_INCOMPLETE, PASSTHROUGH_RANDOM, RESAMPLED,
                     SUPPRESSED, MaskedDataset, RecordFate)


class PredicateError(ValueError):
    """Invalid predicate against a schema."""


OPS = ("=", "!=", "<", "<=", ">", ">=")
_ORDER_OPS = ("<", "<=", ">", ">=")


@dataclass(frozen=True)
class Condition:
    column: str
    op: str
    value: str | float

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise PredicateError(f"unknown comparator {self.op!r} (use one of {OPS})")


@dataclass(frozen=True)
class RecordPredicate:
    """Conjunction of atomic conditions."""

    conditions: tuple[Condition, ...] = ()

    def validate(self, d: Dataset) -> None:
        for cond in self.conditions:
            j = d.column_index(cond.column)  # raises for unknown names
            kind = d.schema[j].kind
            if cond.op in _ORDER_OPS and kind != CONTINUOUS:
                raise PredicateError(
                    f"comparator {cond.op!r} needs a continuous column, "
                    f"{cond.column!r} is categorical")
            if kind == CONTINUOUS:
                try:
                    float(cond.value)
                except (TypeError, ValueError):
                    raise PredicateError(
                        f"{cond.column!r} is continuous but value "
                        f"{cond.value!r} is not numeric") from None

    @staticmethod
    def from_json(text: str | bytes | list) -> "RecordPredicate":
        raw = text if isinstance(text, list) else json.loads(text)
        return RecordPredicate(tuple(
            Condition(e["col"], e["op"], e["value"]) for e in raw))

    @staticmethod
    def parse(compact: str) -> "RecordPredicate":
        """Parse the compact CLI form, e.g. "sex=2,phd=1,age<31"."""
        conds = []
        for part in compact.split(","):
            part = part.strip()
            if not part:
                continue
            for op in ("<=", ">=", "!=", "=", "<", ">"):
                if op in part:
                    col, value = part.split(op, 1)
                    conds.append(Condition(col.strip(), op, value.strip()))
                    break
            else:
                raise PredicateError(f"no comparator in condition {part!r}")
        return RecordPredicate(tuple(conds))

    def to_json_dict(self) -> list[dict]:
        return [{"col": c.column, "op": c.op, "value": c.value}
                for c in self.conditions]

    def describe(self) -> str:
        return " & ".join(f"{c.column}{c.op}{c.value}" for c in self.conditions) or "<all rows>"


def _condition_mask(d: Dataset, cond: Condition) -> np.ndarray:
    j = d.column_index(cond.column)
    kind = d.schema[j].kind
    col = d.columns[j]
    if kind == CONTINUOUS:
        target = float(cond.value)
        vals = col.astype(np.float64)
        with np.errstate(invalid="ignore"):
            if cond.op == "=":
                out = vals == target
            elif cond.op == "!=":
                out = vals != target
            elif cond.op == "<":
                out = vals < target
            elif cond.op == "<=":
                out = vals <= target
            elif cond.op == ">":
                out = vals > target
            else:
                out = vals >= target
        return out & ~np.isnan(vals)  # missing cells satisfy no condition
    label = str(cond.value)
    if cond.op == "=":
        return np.array([v is not None and v == label for v in col], dtype=bool)
    return np.array([v is not None and v != label for v in col], dtype=bool)


def query(d: Dataset, pred: RecordPredicate) -> list[int]:
    """Row indices satisfying every condition (an empty predicate matches all)."""
    pred.validate(d)
    mask = np.ones(d.n, dtype=bool)
    for cond in pred.conditions:
        mask &= _condition_mask(d, cond)
    return [int(i) for i in np.flatnonzero(mask)]


@dataclass(frozen=True)
class TrackedFate:
    row: int
    status: str
    changed_columns: tuple[str, ...]

    def describe(self) -> str:
        if self.status == SUPPRESSED:
            return f"row {self.row}: suppressed (all cells now missing)"
        if self.status in (PASSTHROUGH_RANDOM, PASSTHROUGH_INCOMPLETE):
            return f"row {self.row}: unmodified"
        if not self.changed_columns:
            return f"row {self.row}: resampled, no values changed"
        return f"row {self.row}: {', '.join(c + ' changed' for c in self.changed_columns)}"

    def to_json_dict(self) -> dict:
        return {"row": self.row, "status": self.status,
                "changed_columns": list(self.changed_columns)}


@dataclass
class RiskReport:
    predicate: RecordPredicate
    original_matches: list[int]
    released_match_count: int
    same_individual_released: bool  # any released match is an original match row
    fates: list[TrackedFate]

    def to_json_dict(self) -> dict:
        return {
            "predicate": self.predicate.to_json_dict(),
            "original_matches": {"count": len(self.original_matches),
                                 "rows": self.original_matches},
            "released_matches": {"count": self.released_match_count,
                                 "same_individual": self.same_individual_released},
            "fates": [f.to_json_dict() for f in self.fates],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"predicate: {self.predicate.describe()}",
                 f"original matches: {len(self.original_matches)} "
                 f"(rows {self.original_matches})",
                 f"released matches: {self.released_match_count}"
                 + (" (includes the same individual)" if self.same_individual_released
                    else " (none are the same individual)" if self.released_match_count
                    else "")]
        lines += ["  " + f.describe() for f in self.fates]
        return "\n".join(lines)


def _cells_equal(kind: str, a, b) -> bool:
    if kind == CONTINUOUS:
        fa, fb = float(a), float(b)
        if math.isnan(fa) or math.isnan(fb):
            return math.isnan(fa) and math.isnan(fb)
        return fa == fb
    return a == b


def track(original: Dataset, masked: MaskedDataset,
          pred: RecordPredicate) -> RiskReport:
    """Evaluate the predicate on both datasets and report each match's fate."""
    released = masked.released
    if original.n != released.n:
        raise ValueError(
            f"row counts differ: original {original.n}, released {released.n}")
    if len(masked.provenance) != original.n:
        raise ValueError("provenance does not cover every row")
    original_rows = query(original, pred)
    released_rows = query(released, pred)
    fates = []
    for i in original_rows:
        fate: RecordFate = masked.provenance[i]
        changed: tuple[str, ...] = ()
        if fate.status == RESAMPLED:
            changed = tuple(
                spec.name for j, spec in enumerate(original.schema)
                if not _cells_equal(spec.kind, original.columns[j][i],
                                    released.columns[j][i]))
        fates.append(TrackedFate(row=i, status=fate.status, changed_columns=changed))
    return RiskReport(
        predicate=pred,
        original_matches=original_rows,
        released_match_count=len(released_rows),
        same_individual_released=bool(set(original_rows) & set(released_rows)),
        fates=fates,
    )


@dataclass
class PresenceReport:
    column: str
    value: str
    original_count: int
    released_count: int
    rarity_threshold: int
    hazard: bool

    def to_json_dict(self) -> dict:
        return {
            "column": self.column,
            "value": self.value,
            "original_count": self.original_count,
            "released_count": self.released_count,
            "rarity_threshold": self.rarity_threshold,
            "hazard": self.hazard,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self) -> str:
        status = ("HAZARD: rare label survives into the release"
                  if self.hazard else
                  "label absent from release" if self.released_count == 0
                  else "label present but not rare")
        return (f"{self.column}={self.value}: original count {self.original_count}, "
                f"released count {self.released_count} "
                f"(rarity threshold {self.rarity_threshold}) -> {status}")


def presence_check(original: Dataset, masked: MaskedDataset, column: str,
                   value: str, rarity_threshold: int = 1) -> PresenceReport:
    """Flag the presence-disclosure hazard: a rare label surviving into the
    release reveals that *someone* with that label is in the data, even if
    the released record belongs to a different individual."""
    j = original.column_index(column)
    spec = original.schema[j]
    if spec.kind != CATEGORICAL:
        raise PredicateError(f"presence check needs a categorical column, "
                             f"{column!r} is continuous")
    if value not in spec.categories:
        raise PredicateError(f"label {value!r} not in categories of {column!r}")
    original_count = int(sum(1 for v in original.columns[j] if v == value))
    released_count = int(sum(1 for v in masked.released.columns[j] if v == value))
    hazard = original_count <= rarity_threshold and released_count >= 1
    return PresenceReport(
        column=column, value=value,
        original_count=original_count, released_count=released_count,
        rarity_threshold=rarity_threshold, hazard=hazard,
    )

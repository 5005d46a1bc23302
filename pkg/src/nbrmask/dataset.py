"""Typed tabular microdata: schema, CSV I/O, and the scaled numeric encoding.

A :class:`Dataset` holds mixed continuous/categorical columns with missing
cells.  :func:`encode` produces the representation the distance metric runs
on: continuous columns centered and scaled to sample standard deviation 1,
categorical columns expanded to one-hot dummies with each dummy column scaled
by its own sample standard deviation.  Rows with any missing cell are left out
of the encoded matrix (they cannot serve as donors) but keep their original
indices so downstream consumers can pass them through untouched.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

MISSING_TOKENS = ("", "NA")

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


class SchemaError(ValueError):
    """Schema construction or validation failure."""


class ParseError(ValueError):
    """Malformed CSV input."""


class EncodingError(ValueError):
    """Dataset cannot be encoded (e.g. fewer than 2 complete rows)."""


@dataclass(frozen=True)
class ColumnSpec:
    """One column's name, type, and (for categorical columns) label set."""

    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if not self.categories:
                raise SchemaError(f"column {self.name!r}: categorical column needs categories")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"column {self.name!r}: duplicate categories")
        elif self.categories:
            raise SchemaError(f"column {self.name!r}: continuous column cannot have categories")
        object.__setattr__(self, "categories", tuple(self.categories))


class Dataset:
    """Immutable n x p grid of typed cells.

    Continuous columns are float64 arrays with NaN for missing; categorical
    columns are object arrays of labels with None for missing.
    """

    def __init__(self, schema: Sequence[ColumnSpec], columns: Sequence[np.ndarray],
                 validate: bool = True):
        schema = list(schema)
        names = [c.name for c in schema]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        if len(columns) != len(schema):
            raise SchemaError(f"{len(schema)} schema columns but {len(columns)} data columns")
        lengths = {len(c) for c in columns}
        if len(lengths) > 1:
            raise SchemaError(f"columns have differing lengths {sorted(lengths)}")
        cols: list[np.ndarray] = []
        for spec, col in zip(schema, columns):
            if spec.kind == CONTINUOUS:
                arr = np.asarray(col, dtype=np.float64)
            else:
                arr = np.asarray(col, dtype=object)
                if validate:
                    allowed = set(spec.categories)
                    for v in arr:
                        if v is not None and v not in allowed:
                            raise SchemaError(
                                f"column {spec.name!r}: label {v!r} not in categories")
            arr.setflags(write=False)
            cols.append(arr)
        self.schema = schema
        self.columns = cols
        self._index = {c.name: j for j, c in enumerate(schema)}
        self._complete: np.ndarray | None = None

    @property
    def n(self) -> int:
        return 0 if not self.columns else len(self.columns[0])

    @property
    def p(self) -> int:
        return len(self.schema)

    def column(self, name: str) -> np.ndarray:
        return self.columns[self._index[name]]

    def column_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"unknown column {name!r}") from None

    def cell(self, i: int, j: int):
        return self.columns[j][i]

    def missing_mask(self, j: int) -> np.ndarray:
        col = self.columns[j]
        if self.schema[j].kind == CONTINUOUS:
            return np.isnan(col)
        return np.array([v is None for v in col], dtype=bool)

    def complete_mask(self) -> np.ndarray:
        """Boolean mask of rows with no missing cell."""
        if self._complete is None:
            mask = np.ones(self.n, dtype=bool)
            for j in range(self.p):
                mask &= ~self.missing_mask(j)
            mask.setflags(write=False)
            self._complete = mask
        return self._complete

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.schema != other.schema:
            return False
        for spec, a, b in zip(self.schema, self.columns, other.columns):
            if len(a) != len(b):
                return False
            if spec.kind == CONTINUOUS:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif not all(x == y for x, y in zip(a, b)):
                return False
        return True

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, p={self.p})"


def schema_from_json(text: str | bytes) -> list[ColumnSpec]:
    """Parse the schema JSON form: [{"name", "kind", "categories"?}, ...]."""
    raw = json.loads(text)
    if not isinstance(raw, list):
        raise SchemaError("schema JSON must be a list of column objects")
    specs = []
    for entry in raw:
        specs.append(ColumnSpec(
            name=entry["name"],
            kind=entry["kind"],
            categories=tuple(str(c) for c in entry.get("categories", ())),
        ))
    return specs


def schema_to_json(schema: Sequence[ColumnSpec]) -> str:
    out = []
    for spec in schema:
        entry: dict = {"name": spec.name, "kind": spec.kind}
        if spec.kind == CATEGORICAL:
            entry["categories"] = list(spec.categories)
        out.append(entry)
    return json.dumps(out, indent=2)


def _open_text(source) -> IO[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    # binary file-like
    return io.TextIOWrapper(source, encoding="utf-8")


def load_csv(source, schema: Sequence[ColumnSpec] | None = None,
             missing_tokens: Iterable[str] = MISSING_TOKENS) -> Dataset:
    """Read a header CSV into a Dataset, inferring the schema when omitted.

    Inference rule: a column whose non-missing tokens all parse as numbers is
    continuous; anything else is categorical with the sorted distinct labels
    as categories.  Missing tokens are the empty string and "NA".

    `source` may be a path string (no newline), CSV text/bytes, or a file
    object.
    """
    if isinstance(source, str) and "\n" not in source:
        # a newline-free string is a path; anything else is CSV text
        fh: IO[str] = open(source, "r", encoding="utf-8", newline="")
    else:
        fh = _open_text(source)
    missing = set(missing_tokens)
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty CSV: no header row") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    if not rows:
        raise ParseError("CSV has a header but zero data rows")
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in CSV header")

    raw_cols = [[row[j] for row in rows] for j in range(len(header))]

    if schema is not None:
        schema = list(schema)
        if [c.name for c in schema] != header:
            raise SchemaError(
                f"schema columns {[c.name for c in schema]} do not match header {header}")
    else:
        schema = []
        for name, tokens in zip(header, raw_cols):
            values = [t for t in tokens if t not in missing]
            if all(_parses_as_number(t) for t in values):
                schema.append(ColumnSpec(name, CONTINUOUS))
            else:
                schema.append(ColumnSpec(name, CATEGORICAL, tuple(sorted(set(values)))))

    columns: list[np.ndarray] = []
    for spec, tokens in zip(schema, raw_cols):
        if spec.kind == CONTINUOUS:
            col = np.empty(len(tokens), dtype=np.float64)
            for i, t in enumerate(tokens):
                if t in missing:
                    col[i] = np.nan
                else:
                    try:
                        col[i] = float(t)
                    except ValueError:
                        raise ParseError(
                            f"column {spec.name!r}: {t!r} is not numeric") from None
        else:
            allowed = set(spec.categories)
            vals: list[str | None] = []
            for t in tokens:
                if t in missing:
                    vals.append(None)
                elif t in allowed:
                    vals.append(t)
                else:
                    raise SchemaError(
                        f"column {spec.name!r}: label {t!r} not in schema categories")
            col = np.array(vals, dtype=object)
        columns.append(col)
    return Dataset(schema, columns, validate=False)


def _parses_as_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _format_cell(spec: ColumnSpec, value) -> str:
    if spec.kind == CONTINUOUS:
        v = float(value)
        if math.isnan(v):
            return "NA"
        return repr(v)
    return "NA" if value is None else str(value)


def write_csv(d: Dataset, sink) -> None:
    """Write the canonical CSV form: repr() floats, "NA" missing, LF endings.

    load_csv(write_csv(d)) == d for any Dataset (repr round-trips floats
    exactly).
    """
    own = False
    if isinstance(sink, str):
        fh: IO[str] = open(sink, "w", encoding="utf-8", newline="")
        own = True
    elif _is_binary(sink):
        fh = io.TextIOWrapper(sink, encoding="utf-8", newline="")
    else:
        fh = sink
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c.name for c in d.schema])
        for i in range(d.n):
            writer.writerow([
                _format_cell(spec, col[i]) for spec, col in zip(d.schema, d.columns)])
        fh.flush()
    finally:
        if own:
            fh.close()
        elif isinstance(fh, io.TextIOWrapper):
            fh.detach()


def _is_binary(fh) -> bool:
    mode = getattr(fh, "mode", "")
    return "b" in mode or isinstance(fh, (io.RawIOBase, io.BufferedIOBase))


def to_csv_text(d: Dataset) -> str:
    buf = io.StringIO()
    write_csv(d, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class Block:
    """Maps one original column to its contiguous encoded-column range."""

    column: str
    start: int
    stop: int
    labels: tuple[str, ...] = ()  # dummy labels, () for continuous

    @property
    def width(self) -> int:
        return self.stop - self.start


@dataclass
class EncodedMatrix:
    """Scaled numeric view of the complete rows of a Dataset.

    values[r] is the encoded row for original row row_index[r]; rows listed in
    `skipped` had missing cells and are absent.  values[:, j] equals
    (raw[:, j] - means[j]) / scales[j]; dummy columns are never centered
    (means 0) and constant columns get scale 1 and a `constant` flag.
    """

    values: np.ndarray
    blocks: list[Block]
    scales: np.ndarray
    means: np.ndarray
    constant: np.ndarray
    row_index: np.ndarray
    skipped: tuple[int, ...]
    n_rows: int
    _positions: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        pos = np.full(self.n_rows, -1, dtype=np.int64)
        pos[self.row_index] = np.arange(len(self.row_index))
        self._positions = pos

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n_complete(self) -> int:
        return self.values.shape[0]

    def position_of(self, original_index: int) -> int:
        """Encoded-row position of an original row; raises for skipped rows."""
        if not 0 <= original_index < self.n_rows:
            raise IndexError(f"row index {original_index} out of range 0..{self.n_rows - 1}")
        pos = int(self._positions[original_index])
        if pos < 0:
            raise IndexError(f"row {original_index} has missing cells and was not encoded")
        return pos

    def block_for(self, column: str) -> Block:
        for b in self.blocks:
            if b.column == column:
                return b
        raise KeyError(f"no block for column {column!r}")


def encode(d: Dataset) -> EncodedMatrix:
    """Center/scale continuous columns, one-hot + scale categorical columns.

    Scaling uses the sample standard deviation (ddof=1) of the complete rows,
    so every nonconstant encoded column has sample sd exactly 1.  Constant
    columns (sd 0) keep scale 1 and are flagged; they contribute nothing to
    distances once centered.
    """
    complete = d.complete_mask()
    keep = np.flatnonzero(complete)
    if len(keep) < 2:
        raise EncodingError(f"need at least 2 complete rows to encode, have {len(keep)}")
    skipped = tuple(int(i) for i in np.flatnonzero(~complete))

    parts: list[np.ndarray] = []
    blocks: list[Block] = []
    start = 0
    for spec, col in zip(d.schema, d.columns):
        if spec.kind == CONTINUOUS:
            raw = col[keep].astype(np.float64)[:, None]
            labels: tuple[str, ...] = ()
        else:
            labels = spec.categories
            sub = col[keep]
            raw = np.empty((len(keep), len(labels)), dtype=np.float64)
            for l, lab in enumerate(labels):
                raw[:, l] = [1.0 if v == lab else 0.0 for v in sub]
        parts.append(raw)
        blocks.append(Block(spec.name, start, start + raw.shape[1], labels))
        start += raw.shape[1]

    raw_all = np.hstack(parts)
    sds = raw_all.std(axis=0, ddof=1)
    constant = sds == 0.0
    scales = np.where(constant, 1.0, sds)
    means = np.zeros(raw_all.shape[1])
    for b in blocks:
        if not b.labels:  # continuous columns are centered, dummies are not
            means[b.start] = raw_all[:, b.start].mean()
    values = (raw_all - means) / scales
    return EncodedMatrix(
        values=values,
        blocks=blocks,
        scales=scales,
        means=means,
        constant=constant,
        row_index=keep.astype(np.int64),
        skipped=skipped,
        n_rows=d.n,
    )

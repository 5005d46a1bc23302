"""Record masking by independent per-column resampling from donor neighborhoods.

For each complete record: with probability 1-q the record passes through
unchanged; otherwise its donor set S (eps-ball or k nearest, computed on the
encoded matrix of the *original* data) supplies one independently and
uniformly drawn donor per column, with replacement across columns, and the
donor's raw value is copied.  An empty donor set suppresses the record to an
all-missing row.  Rows with missing input cells are never modified and never
serve as donors.

Reproducibility contract: every random draw comes from a numpy Philox
counter-based generator keyed by (seed, record index).  Within a record the
draw order is fixed: one selection uniform, then one donor index per column
(per encoded column when block_sampling is off).  Output is therefore
byte-identical across runs, platforms, evaluation orders, and worker counts.

With block_sampling (the default) a categorical variable is drawn whole from
a single donor, so released categories are always schema labels.  With
block_sampling off, every dummy column draws its own donor; the reassembled
dummy vector can be invalid, in which case a multi-hot vector is released as
a pipe-joined composite label and a zero-hot vector as a missing cell, with
the affected columns listed in the record's provenance.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Literal, Sequence

import numpy as np

from .dataset import CONTINUOUS, Dataset, encode
from .metric import WeightError, WeightSpec, expand_weights
from .neighbors import EpsBall, Knn, NeighborhoodMode, build_index

PASSTHROUGH_RANDOM = "passthrough_random"
PASSTHROUGH_INCOMPLETE = "passthrough_incomplete"
RESAMPLED = "resampled"
SUPPRESSED = "suppressed"

_CHUNK = 4096


class ParamError(ValueError):
    """Parameter validation failure; `field` names the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


@dataclass(frozen=True)
class MaskingParams:
    """Tuning surface: neighborhood mode, modification proportion q, weights, seed."""

    mode: NeighborhoodMode
    q: float = 1.0
    weights: WeightSpec = field(default_factory=WeightSpec)
    seed: int = 0
    block_sampling: bool = True

    def to_json_dict(self) -> dict:
        mode = {"eps": self.mode.eps} if isinstance(self.mode, EpsBall) else {"knn": self.mode.k}
        return {
            "mode": mode,
            "q": self.q,
            "weights": self.weights.to_json_dict(),
            "seed": self.seed,
            "block_sampling": self.block_sampling,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def params_from_json(text: str | bytes | dict) -> MaskingParams:
    """Parse the params JSON form; raises ParamError with the offending field."""
    raw = text if isinstance(text, dict) else json.loads(text)
    mode_raw = raw.get("mode")
    if not isinstance(mode_raw, dict) or not ({"eps", "knn"} & set(mode_raw)):
        raise ParamError("mode", 'expected {"eps": <number>} or {"knn": <int>}')
    try:
        mode: NeighborhoodMode
        if "eps" in mode_raw:
            mode = EpsBall(float(mode_raw["eps"]))
        else:
            mode = Knn(int(mode_raw["knn"]))
    except (TypeError, ValueError) as exc:
        raise ParamError("mode", str(exc)) from None
    try:
        weights = WeightSpec(raw.get("weights", {}))
    except WeightError as exc:
        raise ParamError("weights", str(exc)) from None
    return MaskingParams(
        mode=mode,
        q=float(raw.get("q", 1.0)),
        weights=weights,
        seed=int(raw.get("seed", 0)),
        block_sampling=bool(raw.get("block_sampling", True)),
    )


def validate_params(params: MaskingParams, d: Dataset) -> MaskingParams:
    """Check q range, mode parameters, weight names, and donor availability."""
    if not 0.0 < params.q <= 1.0:
        raise ParamError("q", f"q must be in (0,1], got {params.q}")
    if not 0 <= params.seed < 2**64:
        raise ParamError("seed", f"seed must be a 64-bit unsigned integer, got {params.seed}")
    if isinstance(params.mode, EpsBall):
        if not params.mode.eps > 0:
            raise ParamError("mode.eps", f"eps must be > 0, got {params.mode.eps}")
    elif isinstance(params.mode, Knn):
        complete = int(d.complete_mask().sum())
        if params.mode.k < 1:
            raise ParamError("mode.k", f"k must be >= 1, got {params.mode.k}")
        if params.mode.k >= complete:
            raise ParamError(
                "mode.k",
                f"k={params.mode.k} needs {params.mode.k + 1} complete rows, have {complete}")
    else:
        raise ParamError("mode", f"unknown neighborhood mode {params.mode!r}")
    names = {c.name for c in d.schema}
    unknown = set(params.weights.entries) - names
    if unknown:
        raise ParamError("weights", f"unknown columns: {sorted(unknown)}")
    return params


@dataclass(frozen=True)
class RecordFate:
    """Provenance for one released record.

    donors: per original column, the donor row indices used (one entry per
    dummy column when block sampling is off); None unless resampled.
    donor_count: |S| when the donor set was computed (resampled or suppressed).
    """

    status: str
    donors: tuple[tuple[int, ...], ...] | None = None
    donor_count: int = 0
    invalid_columns: tuple[str, ...] = ()


@dataclass(frozen=True)
class MaskSummary:
    total: int
    resampled: int
    suppressed: int
    passthrough_random: int
    passthrough_incomplete: int
    median_donor_count: float | None

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "resampled": self.resampled,
            "suppressed": self.suppressed,
            "passthrough_random": self.passthrough_random,
            "passthrough_incomplete": self.passthrough_incomplete,
            "median_donor_count": self.median_donor_count,
        }


@dataclass
class MaskedDataset:
    """Released data plus per-record provenance (kept out of the release)."""

    released: Dataset
    provenance: list[RecordFate]
    params: MaskingParams | None = None

    def summary(self) -> MaskSummary:
        counts = {PASSTHROUGH_RANDOM: 0, PASSTHROUGH_INCOMPLETE: 0, RESAMPLED: 0, SUPPRESSED: 0}
        sizes = []
        for fate in self.provenance:
            counts[fate.status] += 1
            if fate.status in (RESAMPLED, SUPPRESSED):
                sizes.append(fate.donor_count)
        return MaskSummary(
            total=len(self.provenance),
            resampled=counts[RESAMPLED],
            suppressed=counts[SUPPRESSED],
            passthrough_random=counts[PASSTHROUGH_RANDOM],
            passthrough_incomplete=counts[PASSTHROUGH_INCOMPLETE],
            median_donor_count=float(np.median(sizes)) if sizes else None,
        )

    def write_audit(self, sink: str | IO[str]) -> None:
        """JSON-lines audit trail, one record per row.  DSO-only: leaks fates."""
        fh = open(sink, "w", encoding="utf-8") if isinstance(sink, str) else sink
        try:
            for i, fate in enumerate(self.provenance):
                fh.write(json.dumps(_fate_to_json(i, fate)) + "\n")
        finally:
            if isinstance(sink, str):
                fh.close()

    def audit_text(self) -> str:
        buf = io.StringIO()
        self.write_audit(buf)
        return buf.getvalue()


def _fate_to_json(row: int, fate: RecordFate) -> dict:
    donors = None
    if fate.donors is not None:
        donors = [list(t) if len(t) != 1 else t[0] for t in fate.donors]
    entry: dict = {"row": row, "fate": fate.status, "donors": donors,
                   "donor_count": fate.donor_count}
    if fate.invalid_columns:
        entry["invalid_columns"] = list(fate.invalid_columns)
    return entry


def load_audit(source: str | IO[str]) -> list[RecordFate]:
    """Rebuild provenance from an audit file (for post-hoc risk assessment)."""
    fh = open(source, "r", encoding="utf-8") if isinstance(source, str) else source
    try:
        fates: list[RecordFate] = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            donors = raw.get("donors")
            if donors is not None:
                donors = tuple(
                    tuple(t) if isinstance(t, list) else (t,) for t in donors)
            fates.append(RecordFate(
                status=raw["fate"],
                donors=donors,
                donor_count=int(raw.get("donor_count", 0)),
                invalid_columns=tuple(raw.get("invalid_columns", ())),
            ))
        return fates
    finally:
        if isinstance(source, str):
            fh.close()


def mask(d: Dataset, params: MaskingParams, workers: int = 1,
         selection_override: Literal["modify", "skip"] | None = None) -> MaskedDataset:
    """Mask a dataset; total apart from parameter validation.

    `selection_override` is a test hook replacing the per-record selection
    draw's outcome ("skip" releases every record unchanged, "modify" masks
    every complete record); the selection uniform is still consumed so donor
    draws are unaffected.
    """
    validate_params(params, d)
    n, p = d.n, d.p
    complete = d.complete_mask()
    complete_idx = np.flatnonzero(complete)
    fates: list[RecordFate | None] = [
        None if complete[i] else RecordFate(PASSTHROUGH_INCOMPLETE) for i in range(n)]
    released_cols = [col.copy() for col in d.columns]

    if selection_override == "skip":
        for i in complete_idx:
            fates[i] = RecordFate(PASSTHROUGH_RANDOM)
        return MaskedDataset(Dataset(d.schema, released_cols, validate=False),
                             list(fates), params)  # type: ignore[arg-type]

    if len(complete_idx) == 0:
        return MaskedDataset(Dataset(d.schema, released_cols, validate=False),
                             list(fates), params)  # type: ignore[arg-type]

    if len(complete_idx) >= 2:
        m = encode(d)
        w = expand_weights(params.weights, m.blocks)
        index = build_index(m, w)
        encoded_width = m.d
        blocks = m.blocks
    else:
        # a single complete row cannot be encoded; its donor set is empty
        index = None
        encoded_width = p
        blocks = None

    cat_labels = [spec.categories for spec in d.schema]
    is_continuous = [spec.kind == CONTINUOUS for spec in d.schema]

    def process(rows: np.ndarray) -> None:
        for lo in range(0, len(rows), _CHUNK):
            chunk = rows[lo:lo + _CHUNK]
            if index is not None:
                donor_lists = index.donors(list(chunk), params.mode)
            else:
                donor_lists = [np.empty(0, dtype=np.int64)] * len(chunk)
            for i, donors in zip(chunk, donor_lists):
                i = int(i)
                rng = np.random.Generator(
                    np.random.Philox(key=np.array([params.seed, i], dtype=np.uint64)))
                u = rng.random()
                modify = (u < params.q) if selection_override is None else True
                if not modify:
                    fates[i] = RecordFate(PASSTHROUGH_RANDOM)
                    continue
                if len(donors) == 0:
                    for j in range(p):
                        released_cols[j][i] = np.nan if is_continuous[j] else None
                    fates[i] = RecordFate(SUPPRESSED, donor_count=0)
                    continue
                if params.block_sampling:
                    draws = rng.integers(0, len(donors), size=p)
                    per_col = []
                    for j in range(p):
                        donor = int(donors[draws[j]])
                        released_cols[j][i] = d.columns[j][donor]
                        per_col.append((donor,))
                    fates[i] = RecordFate(RESAMPLED, donors=tuple(per_col),
                                          donor_count=len(donors))
                else:
                    draws = rng.integers(0, len(donors), size=encoded_width)
                    per_col = []
                    invalid = []
                    for j, block in enumerate(blocks):  # type: ignore[arg-type]
                        if is_continuous[j]:
                            donor = int(donors[draws[block.start]])
                            released_cols[j][i] = d.columns[j][donor]
                            per_col.append((donor,))
                            continue
                        block_donors = tuple(
                            int(donors[draws[c]]) for c in range(block.start, block.stop))
                        hot = [lab for lab, donor in zip(block.labels, block_donors)
                               if d.columns[j][donor] == lab]
                        if len(hot) == 1:
                            released_cols[j][i] = hot[0]
                        elif not hot:
                            released_cols[j][i] = None
                            invalid.append(d.schema[j].name)
                        else:
                            released_cols[j][i] = "|".join(hot)
                            invalid.append(d.schema[j].name)
                        per_col.append(block_donors)
                    fates[i] = RecordFate(RESAMPLED, donors=tuple(per_col),
                                          donor_count=len(donors),
                                          invalid_columns=tuple(invalid))

    if workers <= 1 or len(complete_idx) < 2 * _CHUNK:
        process(complete_idx)
    else:
        shards = np.array_split(complete_idx, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(process, shards))

    assert all(f is not None for f in fates)
    released = Dataset(d.schema, released_cols, validate=False)
    return MaskedDataset(released, fates, params)  # type: ignore[arg-type]

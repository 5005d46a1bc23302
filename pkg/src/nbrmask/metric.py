"""Weighted Euclidean distance over encoded rows.

Per-variable weight factors multiply the coordinate difference, which is the
same as rescaling each encoded column by its factor: the metric stays a true
Euclidean metric on rescaled data, and an eps-ball under weights c*w equals
the (c*eps)-ball under w.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import Block


class WeightError(ValueError):
    """Invalid weight specification."""


@dataclass(frozen=True)
class WeightSpec:
    """Map from original column name to a nonnegative factor (default 1.0)."""

    entries: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {}
        for name, factor in dict(self.entries).items():
            factor = float(factor)
            if not factor >= 0.0:
                raise WeightError(f"weight for {name!r} must be >= 0, got {factor}")
            clean[str(name)] = factor
        object.__setattr__(self, "entries", clean)

    def factor(self, name: str) -> float:
        return self.entries.get(name, 1.0)

    def to_json_dict(self) -> dict[str, float]:
        return dict(self.entries)


def expand_weights(weights: WeightSpec, blocks: Sequence[Block]) -> np.ndarray:
    """Copy each original column's factor to every encoded column in its block."""
    known = {b.column for b in blocks}
    unknown = set(weights.entries) - known
    if unknown:
        raise WeightError(f"weights name unknown columns: {sorted(unknown)}")
    d = max(b.stop for b in blocks) if blocks else 0
    out = np.ones(d)
    for b in blocks:
        out[b.start:b.stop] = weights.factor(b.column)
    return out


def distance(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    """sqrt(sum((w_j * (x_j - y_j))^2)); zero iff weighted coordinates coincide."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if not (x.shape == y.shape == w.shape) or x.ndim != 1:
        raise ValueError(f"length mismatch: x{x.shape} y{y.shape} w{w.shape}")
    diff = w * (x - y)
    return float(np.sqrt(diff @ diff))


def weighted_sq_dists(weighted_rows: np.ndarray, pos: int,
                      subset: np.ndarray | None = None) -> np.ndarray:
    """Squared distances from row `pos` of an already weight-scaled matrix.

    Shared by the brute-force and indexed neighbor paths so both compare the
    bit-identical quantity (each row's sum is accumulated independently, so a
    candidate subset yields the same per-row values as the full matrix).
    """
    target = weighted_rows[pos]
    rows = weighted_rows if subset is None else weighted_rows[subset]
    diff = rows - target
    return np.einsum("ij,ij->i", diff, diff)

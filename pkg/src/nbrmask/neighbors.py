"""Donor-set search: all records within eps, or the k nearest.

Two paths compute every neighborhood: a brute-force reference (`eps_ball`,
`knn`) and a KD-tree index (`build_index`).  The index only *generates
candidates* (with an inflated radius); membership is always decided by the
same squared-distance comparator the brute-force path uses, so the two paths
agree exactly, boundary ties included.  "Within eps" is a closed ball
(distance <= eps), making duplicated records mutual neighbors at any eps.

Row indices here are original Dataset indices; rows skipped by encode()
(missing cells) are never returned and cannot be queried.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .dataset import EncodedMatrix
from .metric import weighted_sq_dists

# beyond this dimension a KD-tree degenerates to a linear scan with overhead
MAX_TREE_DIM = 20

# relative slack on candidate radii; covers ulp-level disagreement between the
# tree's internal arithmetic and the exact comparator
_RADIUS_SLACK = 1e-9


@dataclass(frozen=True)
class EpsBall:
    """Closed-ball neighborhoods of radius eps."""

    eps: float

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class Knn:
    """k-nearest-neighbor neighborhoods (always nonempty)."""

    k: int

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k}")
        object.__setattr__(self, "k", int(self.k))


NeighborhoodMode = Union[EpsBall, Knn]


def eps_ball(m: EncodedMatrix, w: np.ndarray, i: int, eps: float) -> set[int]:
    """Brute force: { j != i : distance(row_j, row_i, w) <= eps }."""
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    pos = m.position_of(i)
    weighted = m.values * w
    ssq = weighted_sq_dists(weighted, pos)
    hits = np.flatnonzero(ssq <= eps * eps)
    return {int(m.row_index[h]) for h in hits if h != pos}


def knn(m: EncodedMatrix, w: np.ndarray, i: int, k: int) -> set[int]:
    """Brute force: the k rows nearest to row i, ties broken by lower index."""
    pos = m.position_of(i)
    _check_k(m, k)
    weighted = m.values * w
    ssq = weighted_sq_dists(weighted, pos)
    order = np.lexsort((m.row_index, ssq))
    picked = [int(m.row_index[h]) for h in order if h != pos][:k]
    return set(picked)


def _check_k(m: EncodedMatrix, k: int) -> None:
    if int(k) != k or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k}")
    available = m.n_complete - 1
    if k > available:
        raise ValueError(f"k={k} exceeds available donor count {available}")


class NeighborIndex:
    """Spatial index over the weight-scaled encoded rows.

    Queries return exactly the brute-force answers.  For d > MAX_TREE_DIM no
    tree is built and queries fall back to the linear scan.
    """

    def __init__(self, m: EncodedMatrix, w: np.ndarray):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (m.d,):
            raise ValueError(f"weight vector has shape {w.shape}, matrix d={m.d}")
        self.matrix = m
        self.weights = w
        self.n_complete = m.n_complete
        self.weighted = m.values * w
        self.tree = cKDTree(self.weighted) if m.d <= MAX_TREE_DIM else None

    # -- single-row queries (spec contract: sets of original row indices) --

    def eps_ball(self, i: int, eps: float) -> set[int]:
        arrs = self.eps_ball_rows([i], eps)
        return set(int(j) for j in arrs[0])

    def knn(self, i: int, k: int) -> set[int]:
        arrs = self.knn_rows([i], k)
        return set(int(j) for j in arrs[0])

    # -- batch queries (masker fast path; sorted original-index arrays) --

    def eps_ball_rows(self, rows: Sequence[int], eps: float) -> list[np.ndarray]:
        """Donor arrays (ascending original indices) for each queried row."""
        if not eps > 0:
            raise ValueError(f"eps must be > 0, got {eps}")
        m = self.matrix
        positions = [m.position_of(i) for i in rows]
        limit = eps * eps
        if self.tree is None:
            out = []
            for pos in positions:
                ssq = weighted_sq_dists(self.weighted, pos)
                hits = np.flatnonzero(ssq <= limit)
                out.append(np.sort(m.row_index[hits[hits != pos]]))
            return out
        pts = self.weighted[positions]
        r = eps * (1.0 + _RADIUS_SLACK)
        candidate_lists = self.tree.query_ball_point(pts, r)
        out = []
        for pos, cand in zip(positions, candidate_lists):
            cand = np.asarray(cand, dtype=np.int64)
            ssq = weighted_sq_dists(self.weighted, pos, subset=cand)
            keep = cand[(ssq <= limit) & (cand != pos)]
            out.append(np.sort(m.row_index[keep]))
        return out

    def knn_rows(self, rows: Sequence[int], k: int) -> list[np.ndarray]:
        m = self.matrix
        _check_k(m, k)
        positions = [m.position_of(i) for i in rows]
        if self.tree is None:
            out = []
            for pos in positions:
                ssq = weighted_sq_dists(self.weighted, pos)
                order = np.lexsort((m.row_index, ssq))
                picked = [m.row_index[h] for h in order if h != pos][:k]
                out.append(np.sort(np.asarray(picked, dtype=np.int64)))
            return out
        pts = self.weighted[positions]
        # tree gives the kth-neighbor distance; the exact comparator then
        # re-ranks everything inside that (inflated) radius with index ties
        dists, _ = self.tree.query(pts, k=k + 1)
        radii = dists[:, -1] * (1.0 + _RADIUS_SLACK)
        candidate_lists = self.tree.query_ball_point(pts, radii)
        out = []
        for pos, cand in zip(positions, candidate_lists):
            cand = np.asarray(cand, dtype=np.int64)
            ssq = weighted_sq_dists(self.weighted, pos, subset=cand)
            keep = cand != pos
            cand, ssq = cand[keep], ssq[keep]
            order = np.lexsort((m.row_index[cand], ssq))
            picked = m.row_index[cand[order[:k]]]
            out.append(np.sort(picked))
        return out

    def donors(self, rows: Sequence[int], mode: NeighborhoodMode) -> list[np.ndarray]:
        if isinstance(mode, EpsBall):
            return self.eps_ball_rows(rows, mode.eps)
        return self.knn_rows(rows, mode.k)


def build_index(m: EncodedMatrix, w: np.ndarray) -> NeighborIndex:
    return NeighborIndex(m, w)

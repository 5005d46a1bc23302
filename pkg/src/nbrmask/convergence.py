"""Monte Carlo check that shrinking neighborhoods preserve joint structure.

Coordinates are resampled *independently* within each record's neighborhood,
yet as eps shrinks the released joint distribution approaches the original
one.  The harness masks one synthetic dataset at a descending ladder of eps
values and reports, per eps: the median donor-set size, the drift in the
sample correlation, the sup-distance between the empirical joint CDFs on a
quantile grid, and the suppressed fraction (small eps empties neighborhoods).

The whole-window limit is the built-in negative control: with eps covering
the entire dataset, released coordinates are independent draws from the
marginals and any correlation is destroyed - a sensitive metric must see
that.

eps values are specified as quantiles of the pairwise-distance distribution
(absolute scale depends on n and dimension); reports carry both forms.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .dataset import CATEGORICAL, CONTINUOUS, ColumnSpec, Dataset, EncodedMatrix, encode
from .masker import MaskingParams, RESAMPLED, SUPPRESSED, mask
from .metric import WeightSpec, expand_weights
from .neighbors import EpsBall


class GeneratorError(ValueError):
    """Degenerate or invalid synthetic-data specification."""


@dataclass(frozen=True)
class BivariateNormal:
    """Standard normal margins with correlation rho."""

    rho: float

    def __post_init__(self) -> None:
        if not abs(self.rho) < 1:
            raise GeneratorError(f"|rho| must be < 1, got {self.rho}")


@dataclass(frozen=True)
class DiscretePair:
    """Two categorical variables drawn from an explicit joint probability table."""

    table: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        t = np.asarray(self.table, dtype=np.float64)
        if t.ndim != 2:
            raise GeneratorError("joint table must be 2-dimensional")
        if np.any(t < 0):
            raise GeneratorError("joint table has negative entries")
        if abs(float(t.sum()) - 1.0) > 1e-12:
            raise GeneratorError(f"joint table sums to {t.sum()}, not 1")
        if np.count_nonzero(t.sum(axis=1)) < 2 or np.count_nonzero(t.sum(axis=0)) < 2:
            raise GeneratorError("a margin is concentrated on one category (zero variance)")
        object.__setattr__(self, "table", tuple(tuple(float(v) for v in row) for row in t))


@dataclass(frozen=True)
class MixedNormalBinary:
    """Correlated normal pair plus a binary flag tied to the first coordinate.

    Empirical probe for more than two columns; the limit statement itself is
    bivariate.
    """

    rho: float

    def __post_init__(self) -> None:
        if not abs(self.rho) < 1:
            raise GeneratorError(f"|rho| must be < 1, got {self.rho}")


Generator = Union[BivariateNormal, DiscretePair, MixedNormalBinary]


@dataclass(frozen=True)
class SyntheticSpec:
    generator: Generator
    n: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise GeneratorError(f"n must be >= 2, got {self.n}")


def generate(spec: SyntheticSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    g = spec.generator
    if isinstance(g, BivariateNormal):
        x = rng.standard_normal(spec.n)
        y = g.rho * x + np.sqrt(1.0 - g.rho**2) * rng.standard_normal(spec.n)
        return Dataset(
            [ColumnSpec("x", CONTINUOUS), ColumnSpec("y", CONTINUOUS)], [x, y])
    if isinstance(g, DiscretePair):
        t = np.asarray(g.table)
        r, c = t.shape
        flat = rng.choice(r * c, size=spec.n, p=t.ravel())
        rows, cols = np.divmod(flat, c)
        a_labels = tuple(f"a{i}" for i in range(r))
        b_labels = tuple(f"b{i}" for i in range(c))
        return Dataset(
            [ColumnSpec("a", CATEGORICAL, a_labels),
             ColumnSpec("b", CATEGORICAL, b_labels)],
            [np.array([a_labels[i] for i in rows], dtype=object),
             np.array([b_labels[i] for i in cols], dtype=object)])
    if isinstance(g, MixedNormalBinary):
        x = rng.standard_normal(spec.n)
        y = g.rho * x + np.sqrt(1.0 - g.rho**2) * rng.standard_normal(spec.n)
        flag = np.where(x + rng.standard_normal(spec.n) > 0, "1", "0").astype(object)
        return Dataset(
            [ColumnSpec("x", CONTINUOUS), ColumnSpec("y", CONTINUOUS),
             ColumnSpec("b", CATEGORICAL, ("0", "1"))],
            [x, y, flag])
    raise GeneratorError(f"unknown generator {g!r}")


def pairwise_distance_quantiles(m: EncodedMatrix, w: np.ndarray,
                                quantiles: Sequence[float], seed: int = 0,
                                max_pairs: int = 200_000) -> np.ndarray:
    """Quantiles of the weighted pairwise-distance distribution.

    Enumerates all pairs when there are at most max_pairs of them, otherwise
    estimates from a seeded random sample of max_pairs index pairs.
    """
    quantiles = np.asarray(list(quantiles), dtype=np.float64)
    if np.any((quantiles <= 0) | (quantiles >= 1)):
        raise ValueError("quantiles must lie strictly between 0 and 1")
    weighted = m.values * w
    nc = m.n_complete
    total = nc * (nc - 1) // 2
    if total <= max_pairs:
        ii, jj = np.triu_indices(nc, k=1)
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, nc, size=max_pairs)
        jj = rng.integers(0, nc - 1, size=max_pairs)
        jj = np.where(jj >= ii, jj + 1, jj)  # exclude self-pairs
    diff = weighted[ii] - weighted[jj]
    dists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return np.quantile(dists, quantiles)


def quantile_grid(d: Dataset, levels: int = 20) -> np.ndarray:
    """Tensor-product grid of per-axis empirical quantiles of the continuous
    columns; adapts the CDF evaluation points to any generator."""
    idx = [j for j, c in enumerate(d.schema) if c.kind == CONTINUOUS]
    if not idx:
        raise ValueError("no continuous columns to build a grid on")
    probs = (np.arange(levels) + 0.5) / levels
    axes = []
    for j in idx:
        col = d.columns[j].astype(np.float64)
        col = col[~np.isnan(col)]
        if col.size == 0:
            raise ValueError("continuous column is entirely missing")
        axes.append(np.quantile(col, probs))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([ax.ravel() for ax in mesh])


def _continuous_matrix(d: Dataset) -> np.ndarray:
    idx = [j for j, c in enumerate(d.schema) if c.kind == CONTINUOUS]
    M = np.column_stack([d.columns[j].astype(np.float64) for j in idx])
    M = M[~np.isnan(M).any(axis=1)]
    if M.shape[0] == 0:
        raise ValueError("no rows left after removing missing values")
    return M


def joint_cdf_distance(a: Dataset, b: Dataset, grid: np.ndarray) -> float:
    """max over grid points of |F_a - F_b| using empirical joint CDFs."""
    if [c.kind for c in a.schema] != [c.kind for c in b.schema]:
        raise ValueError("datasets must share a schema")
    Ma, Mb = _continuous_matrix(a), _continuous_matrix(b)
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    if grid.shape[1] != Ma.shape[1]:
        raise ValueError(
            f"grid has {grid.shape[1]} axes, data has {Ma.shape[1]} continuous columns")
    return float(np.max(np.abs(_ecdf(Ma, grid) - _ecdf(Mb, grid))))


def _ecdf(M: np.ndarray, grid: np.ndarray) -> np.ndarray:
    inside = np.ones((M.shape[0], grid.shape[0]), dtype=bool)
    for ax in range(M.shape[1]):
        inside &= M[:, ax, None] <= grid[None, :, ax]
    return inside.mean(axis=0)


@dataclass(frozen=True)
class ConvergenceRow:
    eps: float
    eps_quantile: float | None
    median_neighbors: float
    correlation_error: float
    cdf_distance: float
    suppressed_fraction: float

    def to_json_dict(self) -> dict:
        return {
            "eps": self.eps,
            "eps_quantile": self.eps_quantile,
            "median_neighbors": self.median_neighbors,
            "correlation_error": self.correlation_error,
            "cdf_distance": self.cdf_distance,
            "suppressed_fraction": self.suppressed_fraction,
        }


def _correlation(d: Dataset) -> float:
    M = _continuous_matrix(d)
    if M.shape[1] < 2:
        raise ValueError("need two continuous columns for a correlation")
    return float(np.corrcoef(M[:, 0], M[:, 1])[0, 1])


def _categorical_pair(d: Dataset) -> tuple[int, int]:
    idx = [j for j, c in enumerate(d.schema) if c.kind == CATEGORICAL]
    if len(idx) < 2:
        raise ValueError("need two categorical columns")
    return idx[0], idx[1]


def _joint_pmf(d: Dataset, ja: int, jb: int) -> tuple[np.ndarray, int]:
    """Joint frequency table of two categorical columns over complete pairs."""
    a_labels = d.schema[ja].categories
    b_labels = d.schema[jb].categories
    table = np.zeros((len(a_labels), len(b_labels)))
    count = 0
    a_pos = {lab: i for i, lab in enumerate(a_labels)}
    b_pos = {lab: i for i, lab in enumerate(b_labels)}
    for va, vb in zip(d.columns[ja], d.columns[jb]):
        if va is None or vb is None:
            continue
        table[a_pos[va], b_pos[vb]] += 1
        count += 1
    if count == 0:
        raise ValueError("no rows left after removing missing values")
    return table / count, count


def _code_correlation(d: Dataset, ja: int, jb: int) -> float:
    """Pearson correlation of the category indices (dependence summary for
    discrete pairs, where a continuous correlation is unavailable)."""
    a_pos = {lab: i for i, lab in enumerate(d.schema[ja].categories)}
    b_pos = {lab: i for i, lab in enumerate(d.schema[jb].categories)}
    pairs = [(a_pos[va], b_pos[vb])
             for va, vb in zip(d.columns[ja], d.columns[jb])
             if va is not None and vb is not None]
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.shape[0] < 2 or arr[:, 0].std() == 0 or arr[:, 1].std() == 0:
        return 0.0
    return float(np.corrcoef(arr[:, 0], arr[:, 1])[0, 1])


def run_convergence(spec: SyntheticSpec,
                    eps_list: Sequence[float] | None = None,
                    eps_quantiles: Sequence[float] | None = None,
                    weights: WeightSpec | None = None,
                    grid_levels: int = 20) -> list[ConvergenceRow]:
    """Generate one dataset and mask it (q=1) at each eps, largest first.

    Provide eps_list (absolute radii) or eps_quantiles (pairwise-distance
    quantiles, converted here); rows come back in the given order.
    Reproducible: the same spec and eps ladder give identical rows.
    """
    if (eps_list is None) == (eps_quantiles is None):
        raise ValueError("provide exactly one of eps_list or eps_quantiles")
    weights = weights or WeightSpec()
    d = generate(spec)
    m = encode(d)
    w = expand_weights(weights, m.blocks)
    if eps_quantiles is not None:
        qs = list(eps_quantiles)
        eps_values = pairwise_distance_quantiles(m, w, qs, seed=spec.seed)
        pairs = list(zip(eps_values, qs))
    else:
        pairs = [(e, None) for e in eps_list]  # type: ignore[union-attr]
    if not pairs:
        raise ValueError("empty eps ladder")

    continuous_pair = sum(c.kind == CONTINUOUS for c in d.schema) >= 2
    if continuous_pair:
        rho_orig = _correlation(d)
        grid = quantile_grid(d, grid_levels)
    else:
        # discrete pair: compare joint frequency tables and code correlations
        ja, jb = _categorical_pair(d)
        pmf_orig, _ = _joint_pmf(d, ja, jb)
        rho_orig = _code_correlation(d, ja, jb)

    rows = []
    for eps, quantile in pairs:
        eps = float(eps)
        if not eps > 0:
            raise ValueError(f"eps must be > 0, got {eps}")
        masked = mask(d, MaskingParams(mode=EpsBall(eps), q=1.0, weights=weights,
                                       seed=spec.seed))
        sizes = [f.donor_count for f in masked.provenance
                 if f.status in (RESAMPLED, SUPPRESSED)]
        suppressed = sum(f.status == SUPPRESSED for f in masked.provenance)
        if continuous_pair:
            corr_err = abs(_correlation(masked.released) - rho_orig)
            cdf_dist = joint_cdf_distance(d, masked.released, grid)
        else:
            pmf_rel, _ = _joint_pmf(masked.released, ja, jb)
            corr_err = abs(_code_correlation(masked.released, ja, jb) - rho_orig)
            cdf_dist = float(np.max(np.abs(pmf_rel - pmf_orig)))
        rows.append(ConvergenceRow(
            eps=eps,
            eps_quantile=quantile,
            median_neighbors=float(np.median(sizes)) if sizes else 0.0,
            correlation_error=corr_err,
            cdf_distance=cdf_dist,
            suppressed_fraction=suppressed / d.n,
        ))
    return rows


def rows_to_csv(rows: Sequence[ConvergenceRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eps", "eps_quantile", "median_neighbors",
                     "correlation_error", "cdf_distance", "suppressed_fraction"])
    for r in rows:
        writer.writerow([
            repr(r.eps), "" if r.eps_quantile is None else repr(float(r.eps_quantile)),
            repr(r.median_neighbors), repr(r.correlation_error),
            repr(r.cdf_distance), repr(r.suppressed_fraction)])
    return buf.getvalue()


def rows_to_json(rows: Sequence[ConvergenceRow]) -> str:
    return json.dumps([r.to_json_dict() for r in rows], indent=2)

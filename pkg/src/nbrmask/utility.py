"""Operational utility checks: run the same analyses on original and released
data and tabulate the drift, instead of summarizing distributional distance.

Regression uses ordinary least squares with classical standard errors
sqrt(sigma2 * (X'X)^-1_jj), sigma2 = RSS / (n - rank).  Categorical
predictors enter as dummies with the first schema category dropped as the
reference level.  PCA compares explained-variance fractions and |cosine|
between matched loading vectors (sign-invariant).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import CATEGORICAL, CONTINUOUS, Dataset


class ModelError(ValueError):
    """Regression/PCA specification or fitting failure."""


class RankDeficientError(ModelError):
    """Design matrix is not full column rank."""


@dataclass(frozen=True)
class RegressionSpec:
    target: str
    predictors: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.target in self.predictors:
            raise ModelError(f"target {self.target!r} cannot also be a predictor")
        object.__setattr__(self, "predictors", tuple(self.predictors))

    @staticmethod
    def from_formula(formula: str) -> "RegressionSpec":
        """Parse "target ~ a + b + c"."""
        if "~" not in formula:
            raise ModelError(f"formula needs a '~': {formula!r}")
        lhs, rhs = formula.split("~", 1)
        predictors = tuple(t.strip() for t in rhs.split("+") if t.strip())
        if not lhs.strip() or not predictors:
            raise ModelError(f"empty side in formula {formula!r}")
        return RegressionSpec(lhs.strip(), predictors)


@dataclass
class OLSFit:
    names: list[str]
    coef: np.ndarray
    se: np.ndarray
    n_used: int
    n_dropped: int
    sigma2: float

    def coefficient(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])


def _design(d: Dataset, spec: RegressionSpec) -> tuple[np.ndarray, np.ndarray, list[str], int]:
    tj = d.column_index(spec.target)
    if d.schema[tj].kind != CONTINUOUS:
        raise ModelError(f"target {spec.target!r} must be continuous")
    used = ~d.missing_mask(tj)
    pidx = [d.column_index(name) for name in spec.predictors]
    for j in pidx:
        used &= ~d.missing_mask(j)
    rows = np.flatnonzero(used)
    y = d.columns[tj][rows].astype(np.float64)

    cols: list[np.ndarray] = [np.ones(len(rows))]
    names = ["(intercept)"]
    for name, j in zip(spec.predictors, pidx):
        spec_j = d.schema[j]
        col = d.columns[j][rows]
        if spec_j.kind == CONTINUOUS:
            cols.append(col.astype(np.float64))
            names.append(name)
        else:
            # first schema category is the reference level
            for lab in spec_j.categories[1:]:
                cols.append(np.array([1.0 if v == lab else 0.0 for v in col]))
                names.append(f"{name}={lab}")
    X = np.column_stack(cols)
    return X, y, names, d.n - len(rows)


def fit_ols(d: Dataset, spec: RegressionSpec) -> OLSFit:
    """OLS estimates with classical standard errors."""
    X, y, names, n_dropped = _design(d, spec)
    n, k = X.shape
    if n < len(spec.predictors) + 2:
        raise ModelError(
            f"need at least {len(spec.predictors) + 2} usable rows, have {n}")
    rank = np.linalg.matrix_rank(X)
    if rank < k:
        raise RankDeficientError(
            f"design matrix rank {rank} < {k} columns (collinear predictors?)")
    xtx = X.T @ X
    coef = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ coef
    dof = n - rank
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(xtx)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return OLSFit(names=names, coef=coef, se=se, n_used=n, n_dropped=n_dropped,
                  sigma2=sigma2)


@dataclass(frozen=True)
class CoefficientDrift:
    name: str
    original: float
    released: float
    rel_diff: float | None  # |released-original| / |original|; None when original == 0
    original_se: float
    se_units: float | None  # |released-original| / original_se; None when se == 0

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "original": self.original,
            "released": self.released,
            "rel_diff": self.rel_diff,
            "original_se": self.original_se,
            "se_units": self.se_units,
        }


@dataclass
class UtilityReport:
    spec: RegressionSpec
    coefficients: list[CoefficientDrift]
    original_rows_used: int
    original_rows_dropped: int
    released_rows_used: int
    released_rows_dropped: int
    notes: list[str]

    def to_json_dict(self) -> dict:
        return {
            "model": f"{self.spec.target} ~ {' + '.join(self.spec.predictors)}",
            "coefficients": [c.to_json_dict() for c in self.coefficients],
            "original_rows": {"used": self.original_rows_used,
                              "dropped_missing": self.original_rows_dropped},
            "released_rows": {"used": self.released_rows_used,
                              "dropped_missing": self.released_rows_dropped},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self) -> str:
        headers = ["coefficient", "original", "released", "rel_diff", "orig_se", "se_units"]
        rows = []
        for c in self.coefficients:
            rows.append([
                c.name,
                f"{c.original:.4g}",
                f"{c.released:.4g}",
                "-" if c.rel_diff is None else f"{100 * c.rel_diff:.1f}%",
                f"{c.original_se:.4g}",
                "-" if c.se_units is None else f"{c.se_units:.2f}",
            ])
        lines = [_align([headers] + rows)]
        lines.append(f"rows used: original {self.original_rows_used} "
                     f"(dropped {self.original_rows_dropped}), "
                     f"released {self.released_rows_used} "
                     f"(dropped {self.released_rows_dropped})")
        lines.extend(self.notes)
        return "\n".join(lines)


def _align(table: list[list[str]]) -> str:
    widths = [max(len(row[j]) for row in table) for j in range(len(table[0]))]
    return "\n".join(
        "  ".join(cell.rjust(w) if j else cell.ljust(w)
                  for j, (cell, w) in enumerate(zip(row, widths)))
        for row in table)


def compare_regression(original: Dataset, released: Dataset,
                       spec: RegressionSpec) -> UtilityReport:
    """Fit the model on both datasets and tabulate per-coefficient drift.

    Suppressed (all-missing) released rows drop out of the released fit the
    same way missing rows always do.
    """
    if original.schema != released.schema:
        raise ModelError("original and released schemas differ")
    fit_o = fit_ols(original, spec)
    fit_r = fit_ols(released, spec)
    drifts = []
    for name, co, cr, se in zip(fit_o.names, fit_o.coef, fit_r.coef, fit_o.se):
        diff = abs(float(cr) - float(co))
        drifts.append(CoefficientDrift(
            name=name,
            original=float(co),
            released=float(cr),
            rel_diff=diff / abs(float(co)) if co != 0 else None,
            original_se=float(se),
            se_units=diff / float(se) if se > 0 else None,
        ))
    notes = []
    for name in spec.predictors:
        cs = original.schema[original.column_index(name)]
        if cs.kind == CATEGORICAL:
            notes.append(f"{name} coded as dummies, reference level {cs.categories[0]!r}")
    return UtilityReport(
        spec=spec,
        coefficients=drifts,
        original_rows_used=fit_o.n_used,
        original_rows_dropped=fit_o.n_dropped,
        released_rows_used=fit_r.n_used,
        released_rows_dropped=fit_r.n_dropped,
        notes=notes,
    )


@dataclass(frozen=True)
class ComponentComparison:
    component: int
    explained_original: float
    explained_released: float
    loading_cosine: float
    unstable: bool

    def to_json_dict(self) -> dict:
        return {
            "component": self.component,
            "explained_original": self.explained_original,
            "explained_released": self.explained_released,
            "loading_cosine": self.loading_cosine,
            "unstable": self.unstable,
        }


@dataclass
class PCAComparison:
    columns: list[str]
    components: list[ComponentComparison]

    def to_json_dict(self) -> dict:
        return {"columns": self.columns,
                "components": [c.to_json_dict() for c in self.components]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self) -> str:
        headers = ["component", "var_frac_orig", "var_frac_released", "|cosine|", "stable"]
        rows = [[str(c.component),
                 f"{c.explained_original:.4f}",
                 f"{c.explained_released:.4f}",
                 f"{c.loading_cosine:.4f}",
                 "no (degenerate spectrum)" if c.unstable else "yes"]
                for c in self.components]
        return _align([headers] + rows)


# adjacent eigenvalue gaps below this fraction of the leading eigenvalue make
# the eigenvectors ill-determined, so the loading comparison is flagged
_EIGENGAP_FRACTION = 0.05


def _pca(d: Dataset) -> tuple[np.ndarray, np.ndarray, list[str]]:
    cols = [c.name for c in d.schema if c.kind == CONTINUOUS]
    idx = [d.column_index(name) for name in cols]
    used = np.ones(d.n, dtype=bool)
    for j in idx:
        used &= ~d.missing_mask(j)
    M = np.column_stack([d.columns[j][np.flatnonzero(used)] for j in idx]).astype(np.float64)
    if M.shape[0] < 2:
        raise ModelError("fewer than 2 usable rows for PCA")
    sd = M.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise ModelError("constant continuous column; PCA on scaled data undefined")
    Z = (M - M.mean(axis=0)) / sd
    cov = (Z.T @ Z) / (Z.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    return evals[order], evecs[:, order], cols


def compare_pca(original: Dataset, released: Dataset,
                num_components: int) -> PCAComparison:
    """PCA on the scaled continuous columns of each dataset."""
    if original.schema != released.schema:
        raise ModelError("original and released schemas differ")
    evals_o, evecs_o, cols = _pca(original)
    evals_r, evecs_r, _ = _pca(released)
    if num_components < 1 or num_components > len(cols):
        raise ModelError(
            f"num_components={num_components} but only {len(cols)} continuous columns")
    total_o, total_r = evals_o.sum(), evals_r.sum()
    comps = []
    lead = evals_o[0] if evals_o[0] > 0 else 1.0
    for c in range(num_components):
        gaps = []
        if c > 0:
            gaps.append(evals_o[c - 1] - evals_o[c])
        if c + 1 < len(evals_o):
            gaps.append(evals_o[c] - evals_o[c + 1])
        unstable = bool(gaps and min(gaps) / lead < _EIGENGAP_FRACTION)
        cos = float(abs(evecs_o[:, c] @ evecs_r[:, c]))
        comps.append(ComponentComparison(
            component=c + 1,
            explained_original=float(evals_o[c] / total_o),
            explained_released=float(evals_r[c] / total_r),
            loading_cosine=cos,
            unstable=unstable,
        ))
    return PCAComparison(columns=cols, components=comps)

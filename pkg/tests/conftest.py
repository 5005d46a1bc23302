from __future__ import annotations

import numpy as np
import pytest

from nbrmask.dataset import (CATEGORICAL, CONTINUOUS, Block, ColumnSpec,
                             Dataset, EncodedMatrix)


def make_matrix(values, row_index=None, n_rows=None, skipped=()) -> EncodedMatrix:
    """Hand-built EncodedMatrix over raw coordinates (no centering/scaling),
    so neighborhood tests can use literal geometry."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n, d = values.shape
    if row_index is None:
        row_index = np.arange(n, dtype=np.int64)
    if n_rows is None:
        n_rows = (int(max(row_index)) + 1) if len(row_index) else 0
    blocks = [Block(f"c{j}", j, j + 1) for j in range(d)]
    return EncodedMatrix(
        values=values,
        blocks=blocks,
        scales=np.ones(d),
        means=np.zeros(d),
        constant=np.zeros(d, dtype=bool),
        row_index=np.asarray(row_index, dtype=np.int64),
        skipped=tuple(skipped),
        n_rows=n_rows,
    )


def employee_dataset(n: int, seed: int = 0, with_missing: int = 0) -> Dataset:
    """Census-style synthetic employees: wage = 450*age - 9000*[sex=2] + 1300*weeks + noise."""
    rng = np.random.default_rng(seed)
    age = rng.uniform(22.0, 65.0, n)
    sex = rng.choice(["1", "2"], n).astype(object)
    weeks = rng.uniform(0.0, 52.0, n)
    wage = (450.0 * age - 9000.0 * (sex == "2") + 1300.0 * weeks
            + rng.normal(0.0, 5000.0, n))
    if with_missing:
        holes = rng.choice(n, size=with_missing, replace=False)
        age = age.copy()
        age[holes] = np.nan
    return Dataset(
        [ColumnSpec("age", CONTINUOUS),
         ColumnSpec("sex", CATEGORICAL, ("1", "2")),
         ColumnSpec("wkswrkd", CONTINUOUS),
         ColumnSpec("wage", CONTINUOUS)],
        [age, sex, weeks, wage])


@pytest.fixture
def small_mixed() -> Dataset:
    return Dataset(
        [ColumnSpec("age", CONTINUOUS),
         ColumnSpec("sex", CATEGORICAL, ("1", "2")),
         ColumnSpec("wage", CONTINUOUS)],
        [np.array([30.0, 40.0, 31.0, 41.0, np.nan]),
         np.array(["2", "1", "2", "1", "1"], dtype=object),
         np.array([50000.0, 60000.0, 52000.0, 61000.0, 58000.0])])

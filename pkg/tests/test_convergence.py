from __future__ import annotations

import math

import numpy as np
import pytest

from nbrmask.convergence import (BivariateNormal, DiscretePair, GeneratorError,
                                 MixedNormalBinary, SyntheticSpec, generate,
                                 joint_cdf_distance, pairwise_distance_quantiles,
                                 quantile_grid, rows_to_csv, rows_to_json,
                                 run_convergence)
from nbrmask.dataset import CONTINUOUS, ColumnSpec, Dataset, encode
from nbrmask.masker import MaskingParams, mask
from nbrmask.metric import WeightSpec, expand_weights
from nbrmask.neighbors import EpsBall


def two_col(xs, ys):
    return Dataset([ColumnSpec("x", CONTINUOUS), ColumnSpec("y", CONTINUOUS)],
                   [np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)])


def test_cdf_distance_identical_is_zero():
    d = two_col([1, 2, 3, 4], [4, 3, 2, 1])
    grid = quantile_grid(d, levels=5)
    assert joint_cdf_distance(d, d, grid) == 0.0


def test_cdf_distance_disjoint_masses_is_one():
    a = two_col([0, 0, 0], [0, 0, 0])
    b = two_col([1, 1, 1], [1, 1, 1])
    assert joint_cdf_distance(a, b, np.array([[0.5, 0.5]])) == 1.0


def test_cdf_distance_two_independent_samples_below_dkw_bound():
    n = 10_000
    a = generate(SyntheticSpec(BivariateNormal(0.3), n=n, seed=1))
    b = generate(SyntheticSpec(BivariateNormal(0.3), n=n, seed=2))
    grid = quantile_grid(a, levels=20)
    got = joint_cdf_distance(a, b, grid)
    # two-sample DKW-style bound at 99%: the grid-restricted sup cannot
    # exceed the full sup, so the closed-form bound applies
    n_eff = n * n / (n + n)
    bound = math.sqrt(math.log(2 / 0.01) / (2 * n_eff))
    assert got < bound


def test_cdf_distance_schema_mismatch_rejected():
    a = two_col([1, 2], [3, 4])
    b = Dataset([ColumnSpec("x", CONTINUOUS)], [np.array([1.0, 2.0])])
    with pytest.raises(ValueError):
        joint_cdf_distance(a, b, np.array([[0.0, 0.0]]))


def test_cdf_distance_empty_after_missing_removal():
    a = two_col([np.nan, np.nan], [1.0, 2.0])
    with pytest.raises(ValueError, match="no rows left"):
        joint_cdf_distance(a, a, np.array([[0.0, 0.0]]))


def test_quantile_grid_shape_and_monotone_axes():
    d = generate(SyntheticSpec(BivariateNormal(0.0), n=500, seed=3))
    grid = quantile_grid(d, levels=20)
    assert grid.shape == (400, 2)
    xs = np.unique(grid[:, 0])
    assert len(xs) == 20 and np.all(np.diff(xs) >= 0)


def test_generator_validation():
    with pytest.raises(GeneratorError):
        BivariateNormal(1.0)
    with pytest.raises(GeneratorError):
        MixedNormalBinary(-1.5)
    with pytest.raises(GeneratorError, match="sums to"):
        DiscretePair(((0.5, 0.2), (0.1, 0.1)))
    with pytest.raises(GeneratorError, match="zero variance"):
        DiscretePair(((0.7, 0.3), (0.0, 0.0)))
    with pytest.raises(GeneratorError):
        SyntheticSpec(BivariateNormal(0.5), n=1)


def test_generated_shapes():
    d = generate(SyntheticSpec(BivariateNormal(0.5), n=100, seed=4))
    assert d.n == 100 and d.p == 2
    d = generate(SyntheticSpec(DiscretePair(((0.4, 0.1), (0.1, 0.4))), n=100, seed=4))
    assert d.schema[0].categories == ("a0", "a1")
    d = generate(SyntheticSpec(MixedNormalBinary(0.5), n=100, seed=4))
    assert d.p == 3 and d.schema[2].categories == ("0", "1")


def test_generation_matches_requested_correlation():
    d = generate(SyntheticSpec(BivariateNormal(0.7), n=50_000, seed=5))
    got = float(np.corrcoef(d.column("x"), d.column("y"))[0, 1])
    assert abs(got - 0.7) < 0.02


def test_pairwise_quantiles_exact_enumeration_small_n():
    d = two_col([0, 1, 3], [0, 0, 0])
    m = encode(d)
    w = expand_weights(WeightSpec(), m.blocks)
    # scaled x values: distances between all 3 pairs, y constant contributes 0
    xv = m.values[:, 0]
    dists = sorted(abs(xv[i] - xv[j]) for i, j in [(0, 1), (0, 2), (1, 2)])
    got = pairwise_distance_quantiles(m, w, [0.5])
    assert got[0] == pytest.approx(np.quantile(dists, 0.5))
    with pytest.raises(ValueError):
        pairwise_distance_quantiles(m, w, [0.0])


def test_pairwise_quantiles_sampled_close_to_exact():
    d = generate(SyntheticSpec(BivariateNormal(0.2), n=900, seed=6))
    m = encode(d)
    w = expand_weights(WeightSpec(), m.blocks)
    exact = pairwise_distance_quantiles(m, w, [0.1, 0.5], max_pairs=10**9)
    sampled = pairwise_distance_quantiles(m, w, [0.1, 0.5], seed=7, max_pairs=50_000)
    assert np.allclose(exact, sampled, rtol=0.05)


def test_discrete_diagonal_support_preserved_exactly():
    table = ((0.5, 0.0, 0.0), (0.0, 0.3, 0.0), (0.0, 0.0, 0.2))
    spec = SyntheticSpec(DiscretePair(table), n=400, seed=8)
    d = generate(spec)
    # below the minimum inter-category encoded distance every neighborhood
    # holds only identical pairs, so the release is the original
    masked = mask(d, MaskingParams(mode=EpsBall(1e-9), q=1.0, seed=8))
    assert masked.released == d
    rows = run_convergence(spec, eps_list=[1e-9])
    assert rows[0].cdf_distance == 0.0
    assert rows[0].correlation_error == 0.0
    assert rows[0].suppressed_fraction == 0.0


def _whole_window_eps(d: Dataset) -> float:
    m = encode(d)
    # diameter bound of the encoded cloud
    return float(2 * np.linalg.norm(m.values, axis=1).max() + 1.0)


def test_full_window_destroys_dependence():
    spec = SyntheticSpec(BivariateNormal(0.8), n=4000, seed=9)
    d = generate(spec)
    rows = run_convergence(spec, eps_list=[_whole_window_eps(d)])
    assert rows[0].correlation_error > 0.6
    assert rows[0].median_neighbors == spec.n - 1


def test_monotone_trend_and_negative_control():
    spec = SyntheticSpec(BivariateNormal(0.8), n=4000, seed=10)
    d = generate(spec)
    m = encode(d)
    w = expand_weights(WeightSpec(), m.blocks)
    small = float(pairwise_distance_quantiles(m, w, [0.01], seed=1)[0])
    rows = run_convergence(spec, eps_list=[_whole_window_eps(d), small])
    usable = [r for r in rows if r.suppressed_fraction <= 0.10]
    assert len(usable) == 2
    assert usable[-1].cdf_distance < usable[0].cdf_distance
    assert usable[-1].correlation_error < usable[0].correlation_error


def test_mixed_probe_runs_and_improves_with_small_eps():
    spec = SyntheticSpec(MixedNormalBinary(0.6), n=3000, seed=11)
    d = generate(spec)
    m = encode(d)
    w = expand_weights(WeightSpec(), m.blocks)
    small = float(pairwise_distance_quantiles(m, w, [0.01], seed=1)[0])
    rows = run_convergence(spec, eps_list=[_whole_window_eps(d), small])
    assert rows[1].correlation_error < rows[0].correlation_error


def test_rows_reproducible():
    spec = SyntheticSpec(BivariateNormal(0.5), n=1500, seed=12)
    a = run_convergence(spec, eps_quantiles=[0.05, 0.01])
    b = run_convergence(spec, eps_quantiles=[0.05, 0.01])
    assert a == b
    assert a[0].eps_quantile == 0.05


def test_run_convergence_argument_validation():
    spec = SyntheticSpec(BivariateNormal(0.5), n=100, seed=13)
    with pytest.raises(ValueError, match="exactly one"):
        run_convergence(spec)
    with pytest.raises(ValueError, match="exactly one"):
        run_convergence(spec, eps_list=[1.0], eps_quantiles=[0.1])
    with pytest.raises(ValueError, match="empty eps ladder"):
        run_convergence(spec, eps_list=[])
    with pytest.raises(ValueError, match="eps must be > 0"):
        run_convergence(spec, eps_list=[-1.0])


def test_row_serializations():
    spec = SyntheticSpec(BivariateNormal(0.4), n=800, seed=14)
    rows = run_convergence(spec, eps_quantiles=[0.05, 0.01])
    csv_text = rows_to_csv(rows)
    lines = csv_text.strip().splitlines()
    assert lines[0].startswith("eps,eps_quantile,median_neighbors")
    assert len(lines) == 3
    import json
    parsed = json.loads(rows_to_json(rows))
    assert parsed[0]["eps_quantile"] == 0.05
    assert all(np.isfinite(v) for v in parsed[0].values() if isinstance(v, float))

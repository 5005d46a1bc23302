from __future__ import annotations

import numpy as np
import pytest

from nbrmask.neighbors import (EpsBall, Knn, NeighborIndex, build_index,
                               eps_ball, knn)

from conftest import make_matrix


def brute_ball(values, w, pos, eps):
    """Independent plain-python oracle: squared comparator, closed ball."""
    out = set()
    for j in range(len(values)):
        if j == pos:
            continue
        ssq = sum((wk * (a - b)) ** 2 for a, b, wk in zip(values[j], values[pos], w))
        if ssq <= eps * eps:
            out.add(j)
    return out


def brute_knn(values, w, pos, k):
    scored = []
    for j in range(len(values)):
        if j == pos:
            continue
        ssq = sum((wk * (a - b)) ** 2 for a, b, wk in zip(values[j], values[pos], w))
        scored.append((ssq, j))
    scored.sort()
    return {j for _, j in scored[:k]}


def test_identical_rows_are_mutual_neighbors_self_excluded():
    m = make_matrix([[1.0, 2.0], [1.0, 2.0]])
    w = np.ones(2)
    assert eps_ball(m, w, 0, 1e-12) == {1}
    assert eps_ball(m, w, 1, 1e-12) == {0}


def test_single_row_matrix_empty_ball():
    m = make_matrix([[0.0]])
    assert eps_ball(m, np.ones(1), 0, 10.0) == set()


def test_line_points_ball_hand_enumerated():
    m = make_matrix([0.0, 1.0, 2.0, 3.0, 4.0])
    got = eps_ball(m, np.ones(1), 2, 1.5)
    assert got == {1, 3}
    assert got == brute_ball(m.values, np.ones(1), 2, 1.5)


def test_knn_exhaustive_when_k_is_n_minus_1():
    m = make_matrix(np.random.default_rng(0).normal(size=(8, 2)))
    assert knn(m, np.ones(2), 3, 7) == {0, 1, 2, 4, 5, 6, 7}


def test_knn_line_points():
    m = make_matrix([0.0, 1.0, 2.0, 3.0, 4.0])
    got = knn(m, np.ones(1), 0, 2)
    assert got == {1, 2}
    assert got == brute_knn(m.values, np.ones(1), 0, 2)


def test_knn_tie_breaks_to_lower_row_index():
    # rows 1 and 2 both at distance 1 from row 0
    m = make_matrix([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert knn(m, np.ones(2), 0, 1) == {1}
    idx = build_index(m, np.ones(2))
    assert idx.knn(0, 1) == {1}


def test_ball_boundary_is_closed():
    m = make_matrix([0.0, 3.0, 6.0])
    w = np.ones(1)
    assert eps_ball(m, w, 0, 3.0) == {1}
    idx = build_index(m, w)
    assert idx.eps_ball(0, 3.0) == {1}
    assert idx.eps_ball(1, 3.0) == {0, 2}


def test_invalid_index_rejected():
    m = make_matrix([0.0, 1.0])
    with pytest.raises(IndexError):
        eps_ball(m, np.ones(1), 5, 1.0)
    with pytest.raises(ValueError, match="eps must be > 0"):
        eps_ball(m, np.ones(1), 0, 0.0)


def test_skipped_rows_never_returned_and_not_queryable():
    # original rows 0,2,3 encoded; row 1 skipped
    m = make_matrix([0.0, 1.0, 2.0], row_index=[0, 2, 3], n_rows=4, skipped=(1,))
    assert eps_ball(m, np.ones(1), 0, 10.0) == {2, 3}
    with pytest.raises(IndexError, match="missing cells"):
        eps_ball(m, np.ones(1), 1, 1.0)


def test_k_exceeding_donor_count_rejected():
    m = make_matrix([0.0, 1.0, 2.0])
    with pytest.raises(ValueError, match="exceeds available donor count"):
        knn(m, np.ones(1), 0, 3)
    idx = build_index(m, np.ones(1))
    with pytest.raises(ValueError, match="exceeds available donor count"):
        idx.knn(0, 3)


def test_all_zero_weights_make_everything_a_neighbor():
    m = make_matrix(np.random.default_rng(1).normal(size=(6, 3)))
    w = np.zeros(3)
    assert eps_ball(m, w, 2, 1e-9) == {0, 1, 3, 4, 5}
    idx = build_index(m, w)
    assert idx.eps_ball(2, 1e-9) == {0, 1, 3, 4, 5}


def test_monotone_in_eps():
    rng = np.random.default_rng(5)
    m = make_matrix(rng.normal(size=(60, 3)))
    w = rng.uniform(0.2, 2.0, 3)
    for i in (0, 17, 59):
        previous = set()
        for eps in (0.1, 0.4, 0.8, 1.6, 3.2):
            current = eps_ball(m, w, i, eps)
            assert previous <= current
            assert i not in current
            previous = current


def test_index_matches_brute_force_random():
    rng = np.random.default_rng(11)
    for trial in range(12):
        n = int(rng.integers(5, 140))
        d = int(rng.integers(1, 6))
        values = rng.normal(size=(n, d))
        if trial % 3 == 0:
            # inject exact duplicates to force ties
            values[:: max(2, n // 5)] = values[0]
        w = rng.uniform(0.0, 2.0, d)
        m = make_matrix(values)
        idx = build_index(m, w)
        eps = float(rng.uniform(0.2, 2.0))
        k = int(rng.integers(1, n))
        for i in rng.integers(0, n, size=8):
            i = int(i)
            assert idx.eps_ball(i, eps) == eps_ball(m, w, i, eps)
            assert idx.knn(i, k) == knn(m, w, i, k)


def test_brute_matches_plain_python_oracle():
    rng = np.random.default_rng(23)
    values = rng.normal(size=(30, 3))
    w = rng.uniform(0.1, 2.0, 3)
    m = make_matrix(values)
    for i in range(0, 30, 7):
        assert eps_ball(m, w, i, 1.0) == brute_ball(values, w, i, 1.0)
        assert knn(m, w, i, 4) == brute_knn(values, w, i, 4)


def test_high_dimension_falls_back_to_brute():
    rng = np.random.default_rng(2)
    values = rng.normal(size=(40, 25))
    w = np.ones(25)
    m = make_matrix(values)
    idx = build_index(m, w)
    assert idx.tree is None
    for i in (0, 13):
        assert idx.eps_ball(i, 5.0) == eps_ball(m, w, i, 5.0)
        assert idx.knn(i, 3) == knn(m, w, i, 3)


def test_index_records_weights_and_row_count():
    m = make_matrix(np.random.default_rng(0).normal(size=(10, 2)))
    w = np.array([1.0, 0.5])
    idx = build_index(m, w)
    assert np.array_equal(idx.weights, w)
    assert idx.n_complete == 10


def test_batch_rows_match_single_queries():
    rng = np.random.default_rng(9)
    m = make_matrix(rng.normal(size=(50, 3)))
    w = np.ones(3)
    idx = build_index(m, w)
    rows = [0, 7, 20, 49]
    for arr, i in zip(idx.eps_ball_rows(rows, 1.2), rows):
        assert set(arr.tolist()) == eps_ball(m, w, i, 1.2)
        assert np.all(np.diff(arr) > 0)  # sorted, duplicate-free
    for arr, i in zip(idx.knn_rows(rows, 6), rows):
        assert set(arr.tolist()) == knn(m, w, i, 6)


def test_mode_dataclass_validation():
    with pytest.raises(ValueError):
        EpsBall(0.0)
    with pytest.raises(ValueError):
        EpsBall(-1.0)
    with pytest.raises(ValueError):
        Knn(0)
    assert Knn(3).k == 3
    assert EpsBall(0.5).eps == 0.5

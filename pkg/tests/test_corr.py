"""Autocorrelation vectors and the nearest-centroid classifier."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nanonmr.corr import (
    CorrelationCentroids,
    classify,
    classify_batch,
    correlation_matrix,
    correlation_vector,
    default_k_max,
    distances,
    fit_centroids,
    is_partial,
)


def corr_double_loop(x, k_max):
    s = [1 if b else -1 for b in x]
    n = len(s)
    out = []
    for k in range(1, k_max + 1):
        acc = 0
        for i in range(n - k):
            acc += s[i] * s[i + k]
        out.append(acc / (n - k))
    return np.array(out)


def test_all_ones():
    assert np.all(correlation_vector(np.ones(20, int), 19) == 1.0)


def test_alternating():
    x = np.arange(30) % 2
    k = np.arange(1, 30)
    assert np.array_equal(correlation_vector(x, 29), (-1.0) ** k)


@settings(max_examples=100, deadline=None)
@given(x=arrays(np.uint8, st.integers(2, 40), elements=st.integers(0, 1)), data=st.data())
def test_matches_double_loop_exactly(x, data):
    k_max = data.draw(st.integers(1, x.size - 1))
    ref = corr_double_loop(x, k_max)
    assert np.array_equal(correlation_vector(x, k_max), ref)
    assert np.array_equal(correlation_matrix(x[None, :], k_max)[0], ref)


def test_random_length_twelve():
    x = np.random.default_rng(0).integers(0, 2, 12)
    assert np.array_equal(correlation_vector(x, 11), corr_double_loop(x, 11))


def test_fft_matrix_exact_at_scale():
    X = np.random.default_rng(1).integers(0, 2, (6, 1000)).astype(np.uint8)
    M = correlation_matrix(X, 999, chunk=4)
    for i in range(6):
        assert np.array_equal(M[i], correlation_vector(X[i], 999))


@settings(max_examples=50, deadline=None)
@given(x=arrays(np.uint8, st.integers(2, 60), elements=st.integers(0, 1)))
def test_bounds_and_flip_symmetry(x):
    c = correlation_vector(x, x.size - 1)
    assert np.all(np.abs(c) <= 1.0)
    assert np.array_equal(c, correlation_vector(1 - x, x.size - 1))


def test_k_max_range():
    with pytest.raises(ValueError):
        correlation_vector(np.ones(5), 5)
    with pytest.raises(ValueError):
        correlation_vector(np.ones(5), 0)


def test_default_lag_range():
    assert default_k_max(1000) == 999 and not is_partial(1000, 999)
    assert default_k_max(25_000) == 4096 and is_partial(25_000, 4096)


def test_single_record_centroids():
    rng = np.random.default_rng(2)
    X = rng.integers(0, 2, (2, 30))
    cen = fit_centroids(X, [0, 1], 10)
    assert np.array_equal(cen.c0, correlation_vector(X[0], 10))
    assert np.array_equal(cen.c1, correlation_vector(X[1], 10))


def test_duplicates_and_midpoint():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 2, (4, 30))
    y = np.array([0, 0, 1, 1])
    cen = fit_centroids(X, y, 12)
    assert np.allclose(cen.c0, (correlation_vector(X[0], 12) + correlation_vector(X[1], 12)) / 2)
    dup = fit_centroids(np.concatenate([X, X]), np.concatenate([y, y]), 12)
    assert np.allclose(dup.c0, cen.c0) and np.allclose(dup.c1, cen.c1)


def test_order_invariance():
    rng = np.random.default_rng(4)
    X = rng.integers(0, 2, (40, 25))
    y = np.arange(40) % 2
    perm = rng.permutation(40)
    a, b = fit_centroids(X, y, 24), fit_centroids(X[perm], y[perm], 24, chunk=7)
    assert np.allclose(a.c0, b.c0, atol=1e-15) and np.allclose(a.c1, b.c1, atol=1e-15)


def test_missing_class_rejected():
    with pytest.raises(ValueError):
        fit_centroids(np.ones((3, 10)), [0, 0, 0], 5)


def test_classify_exact_centroid():
    rng = np.random.default_rng(5)
    X = rng.integers(0, 2, (2, 40))
    cen = fit_centroids(X, [0, 1], 39)
    out = classify(X[0], cen)
    assert out["label"] == 0 and out["distances"][0] == 0.0


def test_swap_and_tie():
    rng = np.random.default_rng(6)
    cen = CorrelationCentroids(rng.uniform(-1, 1, 8), rng.uniform(-1, 1, 8), 8)
    swapped = CorrelationCentroids(cen.c1, cen.c0, 8)
    X = rng.integers(0, 2, (30, 9))
    la, ma = classify_batch(X, cen)
    lb, mb = classify_batch(X, swapped)
    nz = ma != 0
    assert np.all(la[nz] != lb[nz])
    assert np.allclose(ma, -mb)
    same = CorrelationCentroids(cen.c0, cen.c0, 8)
    assert classify(X[0], same)["label"] == 1


def test_permutation_of_lags_invariance():
    rng = np.random.default_rng(7)
    X = rng.integers(0, 2, (20, 16))
    y = np.arange(20) % 2
    cen = fit_centroids(X, y, 15)
    perm = rng.permutation(15)
    C = correlation_matrix(X, 15)
    d = distances(C, cen)
    dp = distances(C[:, perm], CorrelationCentroids(cen.c0[perm], cen.c1[perm], 15))
    assert np.allclose(d, dp)


def test_batch_matches_single():
    rng = np.random.default_rng(8)
    X = rng.integers(0, 2, (10, 50))
    cen = fit_centroids(X, np.arange(10) % 2, 49)
    labels, margins = classify_batch(X, cen, chunk=3)
    for i in range(10):
        out = classify(X[i], cen)
        assert labels[i] == out["label"]
        assert margins[i] == pytest.approx(out["distances"][0] - out["distances"][1])

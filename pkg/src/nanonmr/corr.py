"""Nearest-centroid classification on two-point autocorrelation vectors.

Bits are mapped 0 -> -1, 1 -> +1 before correlating;
``C_k = sum_i s_i s_{i+k} / (N - k)`` for ``k = 1..k_max``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# above this window length the default lag range is truncated
FULL_LAG_LIMIT = 1000
PARTIAL_K_MAX = 4096


def default_k_max(n_intervals: int) -> int:
    if n_intervals <= FULL_LAG_LIMIT:
        return n_intervals - 1
    return min(PARTIAL_K_MAX, n_intervals - 1)


def is_partial(n_intervals: int, k_max: int) -> bool:
    return k_max < n_intervals - 1


def _check_k(n: int, k_max: int):
    if not 1 <= k_max <= n - 1:
        raise ValueError(f"k_max must lie in [1, {n - 1}], got {k_max}")


def correlation_vector(x, k_max: int) -> np.ndarray:
    s = 2 * np.asarray(x, dtype=np.int64) - 1
    n = s.shape[0]
    _check_k(n, k_max)
    full = np.correlate(s, s, mode="full")[n : n + k_max]
    return full / (n - np.arange(1, k_max + 1))


def correlation_matrix(X, k_max: int, chunk: int = 256) -> np.ndarray:
    """Row-wise ``correlation_vector`` for a bit matrix.

    Lag sums are integers, so the FFT result is rounded back to them before
    normalizing; the output equals the direct sum exactly.
    """
    X = np.atleast_2d(X)
    n = X.shape[1]
    _check_k(n, k_max)
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    denom = n - np.arange(1, k_max + 1)
    out = np.empty((X.shape[0], k_max))
    for start in range(0, X.shape[0], chunk):
        s = 2.0 * X[start : start + chunk] - 1.0
        f = np.fft.rfft(s, nfft, axis=1)
        ac = np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, 1 : k_max + 1]
        out[start : start + chunk] = np.rint(ac) / denom
    return out


@dataclass
class CorrelationCentroids:
    c0: np.ndarray
    c1: np.ndarray
    k_max: int

    def __post_init__(self):
        self.c0 = np.asarray(self.c0, dtype=float)
        self.c1 = np.asarray(self.c1, dtype=float)
        if self.c0.shape != (self.k_max,) or self.c1.shape != (self.k_max,):
            raise ValueError("centroids must both have length k_max")


def fit_centroids(X, labels, k_max: int, chunk: int = 4096) -> CorrelationCentroids:
    labels = np.asarray(labels)
    if not (np.any(labels == 0) and np.any(labels == 1)):
        raise ValueError("both classes must be present to fit centroids")
    sums = np.zeros((2, k_max))
    for start in range(0, labels.shape[0], chunk):
        C = correlation_matrix(X[start : start + chunk], k_max)
        lab = labels[start : start + chunk]
        sums[0] += C[lab == 0].sum(axis=0)
        sums[1] += C[lab == 1].sum(axis=0)
    counts = np.array([np.sum(labels == 0), np.sum(labels == 1)])[:, None]
    mean = sums / counts
    return CorrelationCentroids(mean[0], mean[1], k_max)


def distances(C, centroids: CorrelationCentroids) -> np.ndarray:
    """(D1, D2) per row of correlation vectors, shape (n, 2)."""
    C = np.atleast_2d(C)
    if C.shape[1] != centroids.k_max:
        raise ValueError("correlation vectors and centroids differ in k_max")
    d0 = np.linalg.norm(C - centroids.c0, axis=1)
    d1 = np.linalg.norm(C - centroids.c1, axis=1)
    return np.stack([d0, d1], axis=1)


def classify(x, centroids: CorrelationCentroids) -> dict:
    """Single record: label 0 iff strictly closer to the class-0 centroid."""
    d = distances(correlation_vector(x, centroids.k_max), centroids)[0]
    return {"label": 0 if d[0] < d[1] else 1, "distances": (float(d[0]), float(d[1]))}


def classify_batch(X, centroids: CorrelationCentroids, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Labels and margins ``D1 - D2`` for every row of a bit matrix."""
    X = np.atleast_2d(X)
    d = np.concatenate(
        [distances(correlation_matrix(X[s : s + chunk], centroids.k_max), centroids) for s in range(0, X.shape[0], chunk)]
    ) if X.shape[0] else np.zeros((0, 2))
    return np.where(d[:, 0] < d[:, 1], 0, 1), d[:, 0] - d[:, 1]

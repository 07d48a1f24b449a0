"""Likelihood-ratio discrimination with nuisance maximization.

Frequency discrimination maximizes the Bernoulli log-likelihood over a uniform
grid of signal phases; frequency resolution maximizes it over a finite set of
sampled OU quadrature paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import substream
from .signal_model import (
    DetectorSpec,
    QUARTER_PI,
    ResolutionSpec,
    detector_success_prob,
    interval_times,
    ou_basis,
    ou_phases,
    ramsey_success_prob,
    sample_ou_quadratures,
)


@dataclass(frozen=True)
class LikelihoodConfig:
    phase_grid_size: int = 128
    probability_floor: float = 1e-12
    ou_sample_count: int = 1000

    def __post_init__(self):
        if self.phase_grid_size < 2:
            raise ValueError("phase_grid_size must be >= 2")
        if not 0.0 < self.probability_floor < 0.5:
            raise ValueError("probability_floor must lie in (0, 0.5)")
        if self.ou_sample_count < 1:
            raise ValueError("ou_sample_count must be >= 1")

    @property
    def phases(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.phase_grid_size) / self.phase_grid_size


def _clamp(p, floor):
    return np.clip(p, floor, 1.0 - floor)


def log_likelihood(x, probs, floor: float = 1e-12) -> float:
    x = np.asarray(x, dtype=float)
    p = _clamp(np.asarray(probs, dtype=float), floor)
    if x.shape != p.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {p.shape}")
    return float(np.sum(x * np.log(p) + (1.0 - x) * np.log1p(-p)))


def _log_tables(p, floor):
    p = _clamp(p, floor)
    return np.log(p), np.log1p(-p)


def batch_log_likelihood(X, probs, floor: float = 1e-12) -> np.ndarray:
    """Log-likelihood of every record (rows of X) under every candidate (rows of probs).

    Returns shape (n_records, n_candidates).
    """
    lp, lq = _log_tables(np.atleast_2d(probs), floor)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != lp.shape[1]:
        raise ValueError(f"length mismatch: {X.shape[1]} vs {lp.shape[1]}")
    return X @ (lp - lq).T + lq.sum(axis=1)


def phase_grid_probs(omega: float, g: float, dt: float, n: int, det: DetectorSpec, cfg: LikelihoodConfig) -> np.ndarray:
    """Click probabilities for every grid phase, shape (phase_grid_size, n)."""
    t = interval_times(dt, n)
    p = ramsey_success_prob(g, omega, cfg.phases[:, None], t[None, :], dt)
    return detector_success_prob(p, det)


def max_likelihood_over_phases(x, omega, g, dt, det: DetectorSpec = DetectorSpec(), cfg: LikelihoodConfig = LikelihoodConfig()):
    """Return ``(best_phase, best_loglik)``; ties resolve to the smaller phase."""
    x = np.asarray(x, dtype=float)
    ll = batch_log_likelihood(x, phase_grid_probs(omega, g, dt, x.shape[0], det, cfg), cfg.probability_floor)[0]
    k = int(np.argmax(ll))
    return float(cfg.phases[k]), float(ll[k])


@dataclass
class PhaseGridDiscriminator:
    """Two-class likelihood-ratio test for ideal-model signals (precomputed phase tables)."""

    class0: tuple  # (omega, g)
    class1: tuple
    dt: float
    n_intervals: int
    det: DetectorSpec = DetectorSpec()
    cfg: LikelihoodConfig = LikelihoodConfig()

    def __post_init__(self):
        self._tables = []
        for omega, g in (self.class0, self.class1):
            lp, lq = _log_tables(phase_grid_probs(omega, g, self.dt, self.n_intervals, self.det, self.cfg), self.cfg.probability_floor)
            self._tables.append(((lp - lq).T.copy(), lq.sum(axis=1)))

    def class_logliks(self, X, chunk: int = 512) -> np.ndarray:
        """Max log-likelihood per class, shape (n_records, 2)."""
        X = np.atleast_2d(X)
        out = np.empty((X.shape[0], 2))
        for start in range(0, X.shape[0], chunk):
            xb = X[start : start + chunk].astype(float)
            for c, (w, b) in enumerate(self._tables):
                out[start : start + chunk, c] = (xb @ w + b).max(axis=1)
        return out

    def margins(self, X) -> np.ndarray:
        """L1 - L2 per record (positive favours class 0)."""
        ll = self.class_logliks(X)
        return ll[:, 0] - ll[:, 1]

    def predict(self, X) -> np.ndarray:
        return np.where(self.margins(X) > 0, 0, 1)


def discriminate(x, class0, class1, dt, det: DetectorSpec = DetectorSpec(), cfg: LikelihoodConfig = LikelihoodConfig()) -> dict:
    """Label 0 iff the class-0 maximized log-likelihood is strictly larger."""
    _, l1 = max_likelihood_over_phases(x, class0[0], class0[1], dt, det, cfg)
    _, l2 = max_likelihood_over_phases(x, class1[0], class1[1], dt, det, cfg)
    margin = l1 - l2
    return {"label": 0 if margin > 0 else 1, "margin": margin}


def ou_log_likelihoods(x, res: ResolutionSpec, quad_paths: np.ndarray, floor: float = 1e-12, basis=None) -> np.ndarray:
    """Log-likelihood of one record under each sampled path set (leading axis of quad_paths)."""
    x = np.asarray(x, dtype=float)
    arg = ou_phases(res, quad_paths, basis) + QUARTER_PI
    p = detector_success_prob(np.sin(arg) ** 2, res.detector)
    lp, lq = _log_tables(p, floor)
    return lp @ x + lq @ (1.0 - x)


def max_likelihood_over_ou(
    x,
    res: ResolutionSpec,
    n_samples: int = 1000,
    rng: Optional[np.random.Generator] = None,
    quad_paths: Optional[np.ndarray] = None,
    floor: float = 1e-12,
) -> float:
    """Max log-likelihood over ``n_samples`` independently drawn OU path sets.

    Pass ``quad_paths`` (shape (K, n_components, 2, N)) to reuse draws across hypotheses.
    """
    if quad_paths is None:
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        quad_paths = sample_ou_quadratures(res, rng, size=n_samples)
    return float(ou_log_likelihoods(x, res, quad_paths, floor).max())


def resolve(x, delta_n: float, res_base: ResolutionSpec, n_samples: int, rng: np.random.Generator, floor: float = 1e-12) -> dict:
    """Single line (label 0) versus two lines split by ``delta_n`` (label 1).

    The same path draws serve both hypotheses.
    """
    if delta_n <= 0:
        raise ValueError("delta_n must be > 0")
    paths = sample_ou_quadratures(res_base, rng, size=n_samples)
    l1 = max_likelihood_over_ou(x, res_base.with_gap(0.0), quad_paths=paths, floor=floor)
    l2 = max_likelihood_over_ou(x, res_base.with_gap(delta_n), quad_paths=paths, floor=floor)
    margin = l1 - l2
    return {"label": 0 if margin > 0 else 1, "margin": margin}


@dataclass
class OUResolver:
    """Batch resolution test; record ``i`` draws its paths from ``substream(seed, i)``."""

    res_base: ResolutionSpec
    delta_n: float
    cfg: LikelihoodConfig = LikelihoodConfig()
    seed: int = 0

    def __post_init__(self):
        self._h0 = self.res_base.with_gap(0.0)
        self._h1 = self.res_base.with_gap(self.delta_n)
        self._b0 = ou_basis(self._h0)
        self._b1 = ou_basis(self._h1)

    def margins(self, X, offset: int = 0) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0])
        K = self.cfg.ou_sample_count
        for i, x in enumerate(X):
            paths = sample_ou_quadratures(self.res_base, substream(self.seed, offset + i), size=K)
            l1 = ou_log_likelihoods(x, self._h0, paths, self.cfg.probability_floor, self._b0).max()
            l2 = ou_log_likelihoods(x, self._h1, paths, self.cfg.probability_floor, self._b1).max()
            out[i] = l1 - l2
        return out

    def predict(self, X) -> np.ndarray:
        return np.where(self.margins(X) > 0, 0, 1)

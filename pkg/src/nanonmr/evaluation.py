"""Scoring and diagnostics: balanced error, ROC/AUC, power spectra, detector
calibration and bias-variance decomposition."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .rng import substream
from .signal_model import DetectorSpec, ramsey_success_prob, interval_times, detector_success_prob


class CalibrationError(RuntimeError):
    pass


def _check_both_classes(labels):
    if not (np.any(labels == 0) and np.any(labels == 1)):
        raise ValueError("both label classes must be present")


def error_probability(predictions, labels) -> dict:
    """Mean of the two class-conditional mislabel rates."""
    p = np.asarray(predictions).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if p.shape != y.shape or p.size == 0:
        raise ValueError("predictions and labels must be nonempty and of equal length")
    _check_both_classes(y)
    e0 = float(np.mean(p[y == 0] != 0))
    e1 = float(np.mean(p[y == 1] != 1))
    return {"error_probability": 0.5 * (e0 + e1), "class_errors": (e0, e1), "accuracy": float(np.mean(p == y))}


def roc_auc(scores, labels) -> tuple[np.ndarray, float]:
    """ROC points (fpr, tpr) over a descending threshold sweep, and trapezoidal AUC.

    Class 1 is positive. Equal scores form one step, so ties contribute half.
    """
    s = np.asarray(scores, dtype=float).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    _check_both_classes(y)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tp = np.cumsum(y == 1)
    fp = np.cumsum(y == 0)
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tpr = np.r_[0.0, tp[last] / tp[-1]]
    fpr = np.r_[0.0, fp[last] / fp[-1]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return np.stack([fpr, tpr], axis=1), auc


def power_spectrum(x, dt: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """One-sided power of the mean-subtracted record at ``k / (N dt)``, ``k = 1..N//2``.

    Normalized so the returned powers sum to ``N * var(x)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise ValueError("need at least two samples")
    f = np.fft.rfft(x - x.mean(axis=-1, keepdims=True), axis=-1)[..., 1 : n // 2 + 1]
    power = 2.0 * np.abs(f) ** 2 / n
    if n % 2 == 0:
        power[..., -1] /= 2.0
    freqs = np.arange(1, n // 2 + 1) / (n * dt)
    return freqs, power


def signal_bin(omega: float, dt: float, n: int) -> int:
    """Index into ``power_spectrum`` output of the bin nearest the (aliased) signal frequency."""
    f = omega / (2.0 * np.pi)
    fs = 1.0 / dt
    f = abs(((f + fs / 2.0) % fs) - fs / 2.0)
    # round away float fuzz first so an exact half-bin tie always goes up
    k = int(math.floor(round(f * n * dt, 9) + 0.5))
    return min(max(k, 1), n // 2) - 1


def peak_power(X, omega: float, dt: float) -> float:
    """Average power over records at the bin nearest the signal frequency."""
    X = np.atleast_2d(X)
    _, p = power_spectrum(X, dt)
    return float(p[:, signal_bin(omega, dt, X.shape[1])].mean())


@dataclass
class Calibration:
    eta_true: float
    eta_false: float
    g: Optional[float]
    achieved_power: Optional[float] = None
    target_power: Optional[float] = None


def _synthetic_peak_power(omega, dt, n, det, n_records, seed):
    t = interval_times(dt, n)
    phases = np.empty(n_records)
    uniforms = np.empty((n_records, n))
    for r in range(n_records):
        rng = substream(seed, r)
        phases[r] = rng.uniform(0.0, 2.0 * np.pi)
        uniforms[r] = rng.random(n)

    def power_at(g):
        q = detector_success_prob(ramsey_success_prob(g, omega, phases[:, None], t[None, :], dt), det)
        return peak_power((uniforms < q).astype(np.uint8), omega, dt)

    return power_at


def calibrate(
    data_mean: float,
    target_power: Optional[float],
    omega: float,
    dt: float,
    n_intervals: int,
    ratio: float = 0.7,
    n_records: int = 200,
    seed: int = 0,
    g_bracket: Optional[tuple] = None,
) -> Calibration:
    """Fit detector efficiencies from the record mean and the amplitude from the spectral peak.

    ``eta_false = ratio * eta_true`` and ``mean = (eta_true + eta_false) / 2``. ``g``
    is found by bracketing root-finding on the Monte-Carlo peak power of synthetic
    records (common random numbers across trial amplitudes).
    """
    if not 0.0 < data_mean < 1.0:
        raise ValueError("data_mean must lie in (0, 1)")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must lie in [0, 1]")
    eta_true = 2.0 * data_mean / (1.0 + ratio)
    if eta_true > 1.0:
        raise CalibrationError(f"data_mean {data_mean} with ratio {ratio} implies eta_true {eta_true} > 1")
    eta_false = ratio * eta_true
    if ratio == 1.0:
        warnings.warn("ratio = 1 gives zero detector contrast; amplitude is not identifiable", RuntimeWarning, stacklevel=2)
        return Calibration(eta_true, eta_false, None, target_power=target_power)
    if target_power is None:
        return Calibration(eta_true, eta_false, None)
    if n_records < 200:
        raise ValueError("calibration needs at least 200 synthetic records")
    det = DetectorSpec(eta_true, eta_false)
    power_at = _synthetic_peak_power(omega, dt, n_intervals, det, n_records, seed)
    if g_bracket is None:
        # keep the phase swing below pi/4 where the spectral peak is monotone in g
        g_bracket = (0.0, (np.pi / 4) * omega / max(abs(np.sin(omega * dt / 2.0)), 1e-300))
    lo, hi = g_bracket
    f_lo, f_hi = power_at(lo) - target_power, power_at(hi) - target_power
    if f_lo * f_hi > 0:
        raise CalibrationError(
            f"target power {target_power:.6g} not bracketed for g in [{lo:.6g}, {hi:.6g}] "
            f"(powers {f_lo + target_power:.6g} .. {f_hi + target_power:.6g})"
        )
    g = brentq(lambda v: power_at(v) - target_power, lo, hi, xtol=1e-6 * max(hi, 1.0), rtol=1e-6)
    return Calibration(eta_true, eta_false, float(g), power_at(g), target_power)


def estimate_bias_variance(
    classifier_factory: Callable,
    train_sets: Callable[[int], object],
    X_test,
    y_test,
    n_resamples: int,
    reference: Optional[np.ndarray] = None,
) -> dict:
    """Bias-variance split of squared error over independently resampled training sets.

    ``classifier_factory(train_set)`` returns a callable mapping a bit matrix to an
    output per record; ``train_sets(r)`` yields the r-th training set. With
    ``reference`` (an estimate of E[y|x]) bias is measured against it and the
    remainder is reported as noise; otherwise bias is measured against ``y`` and
    the noise term is the (zero up to rounding) residual.
    """
    if n_resamples < 2:
        raise ValueError("n_resamples must be >= 2")
    y = np.asarray(y_test, dtype=float)
    outputs = np.stack([np.asarray(classifier_factory(train_sets(r))(X_test), dtype=float) for r in range(n_resamples)])
    mean_out = outputs.mean(axis=0)
    target = y if reference is None else np.asarray(reference, dtype=float)
    mse = float(np.mean((outputs - y) ** 2))
    bias2 = float(np.mean((mean_out - target) ** 2))
    var = float(np.mean((outputs - mean_out) ** 2))
    return {"mse": mse, "bias2": bias2, "variance": var, "noise": mse - bias2 - var, "n_resamples": n_resamples}


@dataclass
class EvalReport:
    error_probability: float
    class_errors: tuple
    accuracy: float
    auc: float
    roc_points: list
    n_test: int
    fit_s: float = 0.0
    predict_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def evaluate(predictions, labels, scores, fit_s: float = 0.0, predict_s: float = 0.0, **extra) -> EvalReport:
    err = error_probability(predictions, labels)
    roc, auc = roc_auc(scores, labels)
    return EvalReport(
        err["error_probability"],
        err["class_errors"],
        err["accuracy"],
        auc,
        roc.tolist(),
        int(np.asarray(labels).size),
        fit_s,
        predict_s,
        dict(extra),
    )

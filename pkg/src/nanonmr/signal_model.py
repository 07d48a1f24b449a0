"""Per-interval success probabilities and nuisance-process samplers.

All frequencies and amplitudes are angular (rad/s). Interval ``j`` (0-based)
ends at ``t_j = (j + 1) * dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import lfilter

QUARTER_PI = np.pi / 4

PHI_POLICIES = ("fixed", "uniform_random", "jump_once")


@dataclass(frozen=True)
class DetectorSpec:
    eta_true: float = 1.0
    eta_false: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta_false <= self.eta_true <= 1.0:
            raise ValueError(
                f"need 0 <= eta_false <= eta_true <= 1, got {self.eta_false}, {self.eta_true}"
            )

    @property
    def ideal(self) -> bool:
        return self.eta_true == 1.0 and self.eta_false == 0.0


@dataclass(frozen=True)
class MagneticNoise:
    sigma_b: float
    jump_once: bool = True

    def __post_init__(self):
        if self.sigma_b < 0:
            raise ValueError("sigma_b must be >= 0")


@dataclass(frozen=True)
class AmplitudeNoise:
    mean: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("amplitude sigma must be >= 0")


@dataclass(frozen=True)
class NoiseSpec:
    phase_jump: bool = False
    magnetic: Optional[MagneticNoise] = None
    amplitude: Optional[AmplitudeNoise] = None

    @property
    def any(self) -> bool:
        return self.phase_jump or self.magnetic is not None or self.amplitude is not None


@dataclass(frozen=True)
class SignalSpec:
    """Generative description of one discrimination class."""

    omega: float
    g: float
    dt: float
    n_intervals: int
    phi_policy: str = "uniform_random"
    phi_value: float = 0.0
    detector: DetectorSpec = field(default_factory=DetectorSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.g < 0:
            raise ValueError("g must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        if self.phi_policy not in PHI_POLICIES:
            raise ValueError(f"phi_policy must be one of {PHI_POLICIES}")

    @property
    def times(self) -> np.ndarray:
        return interval_times(self.dt, self.n_intervals)


@dataclass
class NoiseRealization:
    phase: np.ndarray
    amplitude: np.ndarray
    b_offset: np.ndarray

    def __post_init__(self):
        self.phase = np.asarray(self.phase, dtype=float)
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        self.b_offset = np.asarray(self.b_offset, dtype=float)
        if not (self.phase.shape == self.amplitude.shape == self.b_offset.shape) or self.phase.ndim != 1:
            raise ValueError("phase, amplitude and b_offset must be 1-D sequences of equal length")

    def __len__(self) -> int:
        return self.phase.shape[0]


@dataclass(frozen=True)
class OUParams:
    """Ornstein-Uhlenbeck parameters; ``theta = 1/tau`` and ``sigma = sqrt(c)``."""

    mean: float = 0.0
    theta: float = 1.0 / 256.0
    sigma: float = 0.0
    x0_policy: str = "stationary_draw"

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.x0_policy not in ("zero", "stationary_draw"):
            raise ValueError("x0_policy must be 'zero' or 'stationary_draw'")

    @classmethod
    def from_relaxation(cls, tau: float, c: float, **kw) -> "OUParams":
        return cls(theta=1.0 / tau, sigma=float(np.sqrt(c)), **kw)

    @property
    def stationary_variance(self) -> float:
        return self.sigma**2 / (2.0 * self.theta)


@dataclass(frozen=True)
class ResolutionSpec:
    """One frequency-resolution hypothesis: ``n_components`` lines spread over ``delta_gap``."""

    delta_c: float
    delta_gap: float
    ou: OUParams
    dt: float
    n_intervals: int
    n_components: int = 2
    detector: DetectorSpec = field(default_factory=DetectorSpec)

    def __post_init__(self):
        if self.delta_gap < 0:
            raise ValueError("delta_gap must be >= 0")
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.delta_c - self.delta_gap / 2 <= 0:
            raise ValueError("delta_c - delta_gap/2 must be > 0")
        if self.dt <= 0 or self.n_intervals < 1:
            raise ValueError("dt must be > 0 and n_intervals >= 1")

    @property
    def deltas(self) -> np.ndarray:
        if self.n_components == 1:
            return np.array([self.delta_c])
        return np.linspace(self.delta_c - self.delta_gap / 2, self.delta_c + self.delta_gap / 2, self.n_components)

    @property
    def times(self) -> np.ndarray:
        return interval_times(self.dt, self.n_intervals)

    def with_gap(self, delta_gap: float) -> "ResolutionSpec":
        return ResolutionSpec(
            delta_c=self.delta_c,
            delta_gap=delta_gap,
            ou=self.ou,
            dt=self.dt,
            n_intervals=self.n_intervals,
            n_components=self.n_components,
            detector=self.detector,
        )


def interval_times(dt: float, n: int) -> np.ndarray:
    return dt * np.arange(1, n + 1, dtype=float)


def ramsey_success_prob(g, omega, phi, t, dt):
    """Probability of reading 1 after free evolution over ``[t - dt, t]``.

    Broadcasts over array arguments.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega == 0):
        raise ValueError("omega must be nonzero")
    acc = (np.asarray(g, dtype=float) / (2.0 * omega)) * (
        np.sin(omega * t + phi) - np.sin(omega * (t - dt) + phi)
    )
    return np.sin(acc + QUARTER_PI) ** 2


def detector_success_prob(p, det: DetectorSpec):
    """Click probability through a detector with true/false efficiencies."""
    p = np.asarray(p, dtype=float)
    return det.eta_true * p + det.eta_false * (1.0 - p)


def _accumulated_phase(spec: SignalSpec, real: NoiseRealization, t: np.ndarray) -> np.ndarray:
    w = spec.omega
    ph = real.phase
    return (real.amplitude / (2.0 * w)) * (np.sin(w * t + ph) - np.sin(w * (t - spec.dt) + ph)) + real.b_offset * (
        spec.dt / 2.0
    )


def noisy_success_prob(spec: SignalSpec, realization: NoiseRealization, interval_index: int) -> float:
    """Success probability of one interval under a drawn noise realization (no detector)."""
    if len(realization) != spec.n_intervals:
        raise ValueError(f"realization length {len(realization)} != n_intervals {spec.n_intervals}")
    j = int(interval_index)
    if not 0 <= j < spec.n_intervals:
        raise IndexError(f"interval_index {j} out of range")
    t = (j + 1) * spec.dt
    w = spec.omega
    ph = realization.phase[j]
    acc = (realization.amplitude[j] / (2.0 * w)) * (np.sin(w * t + ph) - np.sin(w * (t - spec.dt) + ph))
    acc = acc + realization.b_offset[j] * (spec.dt / 2.0)
    return float(np.sin(acc + QUARTER_PI) ** 2)


def noisy_success_probs(spec: SignalSpec, realization: NoiseRealization) -> np.ndarray:
    """Vectorized ``noisy_success_prob`` over the full interval grid."""
    if len(realization) != spec.n_intervals:
        raise ValueError(f"realization length {len(realization)} != n_intervals {spec.n_intervals}")
    return np.sin(_accumulated_phase(spec, realization, spec.times) + QUARTER_PI) ** 2


def _initial_phase(spec: SignalSpec, rng: np.random.Generator) -> float:
    if spec.phi_policy == "fixed":
        return float(spec.phi_value)
    return float(rng.uniform(0.0, 2.0 * np.pi))


def _jump_index(n: int, rng: np.random.Generator) -> int:
    # change point j means the new value applies from interval j onward
    return int(rng.integers(1, n)) if n > 1 else n


def sample_noise_realization(spec: SignalSpec, rng: np.random.Generator) -> NoiseRealization:
    n = spec.n_intervals
    phase = np.full(n, _initial_phase(spec, rng))
    if spec.noise.phase_jump or spec.phi_policy == "jump_once":
        j = _jump_index(n, rng)
        phase[j:] = rng.uniform(0.0, 2.0 * np.pi)

    amp = spec.noise.amplitude
    if amp is None:
        amplitude = np.full(n, float(spec.g))
    else:
        amplitude = rng.normal(amp.mean, amp.sigma, size=n)

    mag = spec.noise.magnetic
    if mag is None:
        b = np.zeros(n)
    else:
        b = np.full(n, rng.normal(0.0, mag.sigma_b))
        if mag.jump_once:
            j = _jump_index(n, rng)
            b[j:] = rng.normal(0.0, mag.sigma_b)
    return NoiseRealization(phase=phase, amplitude=amplitude, b_offset=b)


def sample_ou_paths(
    params: OUParams, n_steps: int, dt: float, rng: np.random.Generator, size=(), x0: Optional[float] = None
) -> np.ndarray:
    """Euler-Maruyama OU paths, shape ``size + (n_steps,)``.

    An explicit ``x0`` overrides ``params.x0_policy``.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    decay = params.theta * dt
    if decay >= 1:
        raise ValueError(f"theta*dt = {decay} >= 1: Euler-Maruyama recursion unstable")
    size = (size,) if isinstance(size, (int, np.integer)) else tuple(size)
    if n_steps == 0:
        return np.empty(size + (0,))
    if x0 is not None:
        x = np.full(size, float(x0))
    elif params.x0_policy == "zero":
        x = np.zeros(size)
    else:
        x = params.mean + np.sqrt(params.stationary_variance) * rng.standard_normal(size)
    kicks = params.sigma * np.sqrt(dt) * rng.standard_normal(size + (n_steps - 1,))
    # x[j+1] = (1 - decay) x[j] + decay * mean + kick[j], run as an IIR filter
    drive = np.empty(size + (n_steps,))
    drive[..., 0] = x
    drive[..., 1:] = decay * params.mean + kicks
    return lfilter([1.0], [1.0, -(1.0 - decay)], drive, axis=-1)


def sample_ou_path(params: OUParams, n_steps: int, dt: float, rng: np.random.Generator, x0: Optional[float] = None) -> np.ndarray:
    return sample_ou_paths(params, n_steps, dt, rng, x0=x0)


def ou_basis(res: ResolutionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-component coefficient rows multiplying A_i and B_i, each shape (n_components, N)."""
    d = res.deltas
    if np.any(d <= 0):
        raise ValueError("all component frequencies must be > 0")
    t = res.times[None, :]
    dc = d[:, None]
    sa = (np.sin(dc * t) - np.sin(dc * (t - res.dt))) / dc
    cb = (np.cos(dc * t) - np.cos(dc * (t - res.dt))) / dc
    return sa, cb


def ou_success_prob(res: ResolutionSpec, quadratures, t: float) -> float:
    """Success probability at the interval ending at ``t`` given per-component (A_i, B_i)."""
    q = np.asarray(quadratures, dtype=float).reshape(-1, 2)
    if q.shape[0] != res.n_components:
        raise ValueError(f"expected {res.n_components} (A, B) pairs, got {q.shape[0]}")
    d = res.deltas
    if np.any(d <= 0):
        raise ValueError("all component frequencies must be > 0")
    acc = np.sum(
        q[:, 0] / d * (np.sin(d * t) - np.sin(d * (t - res.dt)))
        + q[:, 1] / d * (np.cos(d * t) - np.cos(d * (t - res.dt)))
    )
    return float(np.sin(acc + QUARTER_PI) ** 2)


def ou_phases(res: ResolutionSpec, quad_paths: np.ndarray, basis=None) -> np.ndarray:
    """Accumulated phase per interval for quadrature paths.

    ``quad_paths`` has shape ``(..., n_components, 2, N)`` with ``[..., i, 0, :]`` = A_i
    and ``[..., i, 1, :]`` = B_i.
    """
    sa, cb = ou_basis(res) if basis is None else basis
    return np.einsum("...in,in->...n", quad_paths[..., 0, :], sa) + np.einsum(
        "...in,in->...n", quad_paths[..., 1, :], cb
    )


def ou_success_probs(res: ResolutionSpec, quad_paths: np.ndarray, basis=None) -> np.ndarray:
    return np.sin(ou_phases(res, quad_paths, basis) + QUARTER_PI) ** 2


def sample_ou_quadratures(res: ResolutionSpec, rng: np.random.Generator, size=()) -> np.ndarray:
    """Independent OU paths for every (component, quadrature): shape ``size + (n, 2, N)``."""
    size = (size,) if isinstance(size, (int, np.integer)) else tuple(size)
    return sample_ou_paths(res.ou, res.n_intervals, res.dt, rng, size=size + (res.n_components, 2))

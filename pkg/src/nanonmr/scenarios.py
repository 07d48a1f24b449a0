"""Scenario presets and experiment configuration.

Physical constants are tabulated once in the units the experiments were
described in (Hz for frequencies and amplitudes stated as ``x Hz``) and
converted to angular rad/s when a config is built.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .signal_model import (
    AmplitudeNoise,
    DetectorSpec,
    MagneticNoise,
    NoiseSpec,
    OUParams,
    ResolutionSpec,
    SignalSpec,
)

TWO_PI = 2.0 * np.pi
METHODS = ("bayes", "corr", "dl", "linear")

T2 = 256.0
# OU volatility of the quadratures, in 1/sqrt(s)
OU_SIGMA = (np.pi / 10.0) * np.sqrt(4.0 / (np.pi * T2))

_DL_DEFAULT = {"learning_rate": 1e-4, "batch_size": 256, "max_epochs": 200, "early_stop_patience": 20, "recode_pm1": True}

# frequencies in Hz (converted by 2*pi at load), times in s
_PRESET_TABLE = {
    "ideal": {
        "omega1_hz": 10 / TWO_PI, "g1_hz": 10 / TWO_PI, "g2_hz": 10 / TWO_PI, "dt": 0.5, "n_intervals": 1000,
        "sweep": np.geomspace(1e-4, 2e-3, 8).tolist(),
        "n_train_per_class": 100_000, "n_test_per_class": 5000,
    },
    "phase_noise": {
        "omega1_hz": 10 / TWO_PI, "g1_hz": 10 / TWO_PI, "g2_hz": 10 / TWO_PI, "dt": 0.5, "n_intervals": 1000,
        "phase_jump": True,
        "sweep": np.geomspace(3e-4, 3e-2, 8).tolist(),
    },
    "magnetic_noise": {
        "omega1_hz": 10 / TWO_PI, "g1_hz": 10 / TWO_PI, "g2_hz": 10 / TWO_PI, "dt": 0.5, "n_intervals": 1000,
        "sigma_b_hz": 2 / TWO_PI,
        "sweep": np.geomspace(1e-4, 1e-2, 8).tolist(),
    },
    "amplitude_noise": {
        "omega1_hz": 10 / TWO_PI, "g1_hz": 10 / TWO_PI, "g2_hz": 10 / TWO_PI, "dt": 0.5, "n_intervals": 1000,
        "amplitude_noise": True,
        "sweep": np.geomspace(1e-4, 1e-2, 8).tolist(),
    },
    "mixed_noise": {
        "omega1_hz": 10 / TWO_PI, "g1_hz": 10 / TWO_PI, "g2_hz": 10 / TWO_PI, "dt": 0.5, "n_intervals": 1000,
        "phase_jump": True, "sigma_b_hz": 2 / TWO_PI, "amplitude_noise": True,
        "sweep": np.geomspace(1e-3, 5e-2, 8).tolist(),
        "n_train_per_class": 50_000, "n_test_per_class": 1000,
    },
    "low_efficiency": {
        "omega1_hz": 250.0, "g1_hz": 12_500.0, "g2_hz": 11_250.0, "dt": 10e-6, "n_intervals": 25_000,
        "data_mean": 0.063, "eta_ratio": 0.7,
        "sweep": (TWO_PI * np.array([0.4, 0.8, 1.6, 3.2])).tolist(),
        "n_train_per_class": 10_000, "n_test_per_class": 500,
    },
    "resolution": {
        "kind": "resolution", "delta_c_hz": 1 / TWO_PI, "dt": 1.0, "n_intervals": int(2 * T2),
        "t2": T2, "ou_sigma": OU_SIGMA, "n_components": 2,
        "sweep": np.geomspace(0.01, 0.1, 6).tolist(),
        "n_train_per_class": 50_000, "n_test_per_class": 1000,
    },
}

PRESETS = tuple(_PRESET_TABLE)


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one sweep. All frequencies are rad/s."""

    preset: str
    kind: str = "discrimination"
    omega1: float = 10.0
    g1: float = 10.0
    g2: float = 10.0
    dt: float = 0.5
    n_intervals: int = 1000
    eta_true: float = 1.0
    eta_false: float = 0.0
    phase_jump: bool = False
    sigma_b: Optional[float] = None
    amplitude_noise: bool = False
    delta_c: float = 1.0
    t2: float = T2
    ou_sigma: float = OU_SIGMA
    n_components: int = 2
    sweep: list = field(default_factory=list)
    seed: int = 0
    n_train_per_class: int = 4000
    n_test_per_class: int = 1000
    methods: list = field(default_factory=lambda: list(METHODS))
    phase_grid_size: int = 128
    ou_samples: int = 1000
    k_max: Optional[int] = None
    linear_max_per_class: int = 10_000
    dl: dict = field(default_factory=lambda: dict(_DL_DEFAULT))

    def __post_init__(self):
        if self.kind not in ("discrimination", "resolution"):
            raise ValueError("kind must be 'discrimination' or 'resolution'")
        self.sweep = [float(v) for v in self.sweep]
        if not self.sweep:
            raise ValueError("sweep must be nonempty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}; choose from {METHODS}")

    @property
    def detector(self) -> DetectorSpec:
        return DetectorSpec(self.eta_true, self.eta_false)

    def noise_for(self, g: float) -> NoiseSpec:
        return NoiseSpec(
            phase_jump=self.phase_jump,
            magnetic=MagneticNoise(self.sigma_b) if self.sigma_b is not None else None,
            amplitude=AmplitudeNoise(g, g) if self.amplitude_noise else None,
        )

    def resolution_base(self) -> ResolutionSpec:
        ou = OUParams(mean=0.0, theta=1.0 / self.t2, sigma=self.ou_sigma, x0_policy="stationary_draw")
        return ResolutionSpec(self.delta_c, 0.0, ou, self.dt, self.n_intervals, self.n_components, self.detector)

    def class_specs(self, delta: float):
        """Generative specs of (class 0, class 1) at sweep value ``delta``."""
        if self.kind == "resolution":
            base = self.resolution_base()
            return base, base.with_gap(delta)
        mk = lambda omega, g: SignalSpec(
            omega=omega, g=g, dt=self.dt, n_intervals=self.n_intervals, detector=self.detector, noise=self.noise_for(g)
        )
        return mk(self.omega1, self.g1), mk(self.omega1 + delta, self.g2)

    def class_names(self, delta: float) -> tuple:
        if self.kind == "resolution":
            return ("single", f"double:{delta!r}")
        return (f"omega={self.omega1!r}", f"omega={self.omega1 + delta!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "preset" in doc and doc["preset"] in _PRESET_TABLE:
            base = preset(doc["preset"]).to_dict()
            base.update(doc)
            doc = base
        return cls(**doc)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def preset(name: str, **overrides) -> ScenarioConfig:
    """Build the named preset, converting tabulated Hz values to rad/s."""
    if name not in _PRESET_TABLE:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    row = dict(_PRESET_TABLE[name])
    kw = {"preset": name}
    for key, value in row.items():
        if key.endswith("_hz"):
            kw[key[:-3]] = TWO_PI * value
        elif key == "data_mean":
            continue
        elif key == "eta_ratio":
            eta_true = 2.0 * row["data_mean"] / (1.0 + value)
            kw["eta_true"], kw["eta_false"] = eta_true, value * eta_true
        else:
            kw[key] = value
    if "sweep" in kw:
        kw["sweep"] = list(kw["sweep"])
    kw.update(overrides)
    return ScenarioConfig(**kw)


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ScenarioConfig.from_dict(json.load(fh))


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)

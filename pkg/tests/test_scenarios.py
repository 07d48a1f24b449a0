"""Preset constants, config round trips and sweep output."""

import csv
import json

import numpy as np
import pytest

from nanonmr.scenarios import OU_SIGMA, PRESETS, ScenarioConfig, load_config, preset, save_config
from nanonmr.sweep import CSV_COLUMNS, TIMING_COLUMNS, run_sweep, sweep_rows, write_outputs


def test_ideal_constants_are_angular():
    cfg = preset("ideal")
    assert (cfg.omega1, cfg.g1, cfg.g2, cfg.dt, cfg.n_intervals) == pytest.approx((10, 10, 10, 0.5, 1000))
    assert len(cfg.sweep) == 8


def test_low_efficiency_constants():
    cfg = preset("low_efficiency")
    assert cfg.omega1 == pytest.approx(2 * np.pi * 250)
    assert cfg.g1 == pytest.approx(2 * np.pi * 12_500) and cfg.g2 == pytest.approx(2 * np.pi * 11_250)
    assert cfg.n_intervals == 25_000 and cfg.dt == pytest.approx(1e-5)
    assert cfg.eta_true == pytest.approx(0.0741, abs=1e-4)
    assert cfg.eta_false == pytest.approx(0.7 * cfg.eta_true)
    assert 2 * np.pi * 1.6 in cfg.sweep


def test_resolution_constants():
    cfg = preset("resolution")
    base = cfg.resolution_base()
    assert cfg.n_intervals == 512 and cfg.dt == 1.0
    assert base.ou.theta == pytest.approx(1 / 256)
    assert base.ou.stationary_variance == pytest.approx(np.pi / 50)
    assert OU_SIGMA == pytest.approx((np.pi / 10) * np.sqrt(4 / (np.pi * 256)))
    s0, s1 = cfg.class_specs(0.05)
    assert s0.delta_gap == 0 and s1.delta_gap == 0.05


def test_noise_presets():
    mixed = preset("mixed_noise")
    spec, _ = mixed.class_specs(mixed.sweep[0])
    assert spec.noise.phase_jump
    assert spec.noise.magnetic.sigma_b == pytest.approx(2.0)
    assert spec.noise.amplitude.mean == spec.noise.amplitude.sigma == pytest.approx(10.0)
    assert not preset("phase_noise").class_specs(1e-3)[0].noise.amplitude


def test_config_round_trip(tmp_path):
    for name in PRESETS:
        cfg = preset(name, seed=3)
        path = tmp_path / f"{name}.json"
        save_config(cfg, path)
        back = load_config(path)
        assert back == cfg and back.config_hash() == cfg.config_hash()


def test_partial_config_merges_onto_preset():
    cfg = ScenarioConfig.from_dict({"preset": "resolution", "sweep": [0.1]})
    assert cfg.kind == "resolution" and cfg.sweep == [0.1] and cfg.n_intervals == 512


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({"preset": "ideal", "bogus": 1})
    with pytest.raises(ValueError):
        preset("ideal", sweep=[])
    with pytest.raises(ValueError):
        preset("ideal", methods=["svm"])
    with pytest.raises(ValueError):
        preset("nope")


def test_hash_tracks_content():
    assert preset("ideal").config_hash() != preset("ideal", seed=1).config_hash()


def _tiny(name="ideal", **kw):
    dl = {"learning_rate": 1e-3, "batch_size": 32, "max_epochs": 3, "early_stop_patience": 2, "recode_pm1": True}
    base = dict(sweep=[5e-3, 5e-2], n_train_per_class=40, n_test_per_class=20, dl=dl, linear_max_per_class=40)
    base.update(kw)
    return preset(name, **base)


def _strip_timing(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]


def test_sweep_rows_and_determinism(tmp_path):
    cfg = _tiny()
    a = write_outputs(cfg, run_sweep(cfg), tmp_path / "a")
    b = write_outputs(cfg, run_sweep(cfg, threads=2), tmp_path / "b")
    assert a["rows"] == len(cfg.sweep) * 4
    ra, rb = _strip_timing(a["csv"]), _strip_timing(b["csv"])
    assert ra == rb
    with open(a["csv"]) as fh:
        assert next(csv.reader(fh)) == list(CSV_COLUMNS)
    assert all(r["seed"] == "0" and r["config_hash"] == cfg.config_hash() for r in ra)
    roc = json.loads((tmp_path / "a" / "roc" / "ideal_p00_dl.json").read_text())
    assert roc["roc"][0] == [0.0, 0.0] and roc["roc"][-1] == [1.0, 1.0]


def test_large_records_mark_correlation_partial():
    cfg = _tiny("low_efficiency", sweep=[2 * np.pi * 1.6], n_train_per_class=2, n_test_per_class=2, methods=["corr"])
    rows = sweep_rows(cfg, run_sweep(cfg))
    assert rows[0]["status"] == "partial"


def test_resolution_sweep_runs():
    cfg = _tiny("resolution", sweep=[0.1], ou_samples=5, methods=["bayes", "dl"])
    rows = sweep_rows(cfg, run_sweep(cfg))
    assert [r["method"] for r in rows] == ["bayes", "dl"]
    assert all(0 <= float(r["error_prob"]) <= 1 for r in rows)

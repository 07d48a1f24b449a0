"""Run every configured method at every sweep point and collect reports."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import corr, mlp
from .bayes import LikelihoodConfig, OUResolver, PhaseGridDiscriminator
from .dataset import Dataset, generate_dataset
from .evaluation import EvalReport, evaluate
from .rng import derive_seed
from .scenarios import ScenarioConfig

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "scenario",
    "delta_omega_rad_s",
    "method",
    "error_prob",
    "auc",
    "fit_s",
    "predict_s",
    "n_test",
    "seed",
    "status",
    "config_hash",
)
TIMING_COLUMNS = ("fit_s", "predict_s")

# substream slots under derive_seed(cfg.seed, point, slot)
_TRAIN, _TEST, _BAYES, _DL = 0, 1, 2, 3


@dataclass
class MethodResult:
    method: str
    report: EvalReport
    status: str = "ok"


def point_datasets(cfg: ScenarioConfig, point: int, need_train: bool = True):
    delta = cfg.sweep[point]
    spec0, spec1 = cfg.class_specs(delta)
    names = cfg.class_names(delta)
    train = None
    if need_train:
        train = generate_dataset(spec0, spec1, cfg.n_train_per_class, derive_seed(cfg.seed, point, _TRAIN), cfg.preset, names)
    test = generate_dataset(spec0, spec1, cfg.n_test_per_class, derive_seed(cfg.seed, point, _TEST), cfg.preset, names)
    return train, test


def bayes_classifier(cfg: ScenarioConfig, delta: float, seed: int = 0):
    lcfg = LikelihoodConfig(phase_grid_size=cfg.phase_grid_size, ou_sample_count=cfg.ou_samples)
    if cfg.kind == "resolution":
        return OUResolver(cfg.resolution_base(), delta, lcfg, seed)
    return PhaseGridDiscriminator(
        (cfg.omega1, cfg.g1), (cfg.omega1 + delta, cfg.g2), cfg.dt, cfg.n_intervals, cfg.detector, lcfg
    )


def dl_train_config(cfg: ScenarioConfig, point: int) -> mlp.TrainConfig:
    base = derive_seed(cfg.seed, point, _DL)
    return mlp.TrainConfig(**{"init_seed": base, "order_seed": base + 1, **cfg.dl})


def run_method(method: str, cfg: ScenarioConfig, point: int, train: Optional[Dataset], test: Dataset) -> MethodResult:
    delta = cfg.sweep[point]
    status = "ok"
    t0 = time.perf_counter()
    if method == "bayes":
        clf = bayes_classifier(cfg, delta, derive_seed(cfg.seed, point, _BAYES))
        t1 = time.perf_counter()
        margin = clf.margins(test.bits)
        pred = np.where(margin > 0, 0, 1)
        scores = -margin
    elif method == "corr":
        k_max = cfg.k_max or corr.default_k_max(cfg.n_intervals)
        if corr.is_partial(cfg.n_intervals, k_max):
            status = "partial"
        cen = corr.fit_centroids(train.bits, train.labels, k_max)
        t1 = time.perf_counter()
        pred, scores = corr.classify_batch(test.bits, cen)
    elif method == "dl":
        result = mlp.train(train.bits, train.labels, dl_train_config(cfg, point))
        t1 = time.perf_counter()
        out = mlp.classify(result.model, test.bits)
        pred, scores = out["label"], out["score"]
    elif method == "linear":
        cap = 2 * cfg.linear_max_per_class
        # records alternate labels, so a prefix stays balanced
        lin = mlp.train_linear_baseline(train.bits[:cap], train.labels[:cap])
        t1 = time.perf_counter()
        scores = lin.scores(test.bits)
        pred = np.where(scores >= 0.5, 1, 0)
    else:
        raise ValueError(f"unknown method {method!r}")
    t2 = time.perf_counter()
    report = evaluate(pred, test.labels, scores, fit_s=t1 - t0, predict_s=t2 - t1)
    return MethodResult(method, report, status)


def run_point(cfg: ScenarioConfig, point: int) -> list[MethodResult]:
    need_train = any(m in cfg.methods for m in ("corr", "dl", "linear"))
    train, test = point_datasets(cfg, point, need_train)
    results = []
    for method in cfg.methods:
        log.info("point %d (delta=%g): %s", point, cfg.sweep[point], method)
        results.append(run_method(method, cfg, point, train, test))
    return results


def _run_point_star(args):
    return run_point(*args)


def run_sweep(cfg: ScenarioConfig, threads: int = 1) -> list[list[MethodResult]]:
    jobs = [(cfg, p) for p in range(len(cfg.sweep))]
    if threads <= 1 or len(jobs) == 1:
        return [run_point(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_point_star, jobs))


def sweep_rows(cfg: ScenarioConfig, results: list[list[MethodResult]]) -> list[dict]:
    chash = cfg.config_hash()
    rows = []
    for point, per_method in enumerate(results):
        for r in per_method:
            rows.append(
                {
                    "scenario": cfg.preset,
                    "delta_omega_rad_s": repr(float(cfg.sweep[point])),
                    "method": r.method,
                    "error_prob": repr(float(r.report.error_probability)),
                    "auc": repr(float(r.report.auc)),
                    "fit_s": f"{r.report.fit_s:.3f}",
                    "predict_s": f"{r.report.predict_s:.3f}",
                    "n_test": r.report.n_test,
                    "seed": cfg.seed,
                    "status": r.status,
                    "config_hash": chash,
                }
            )
    return rows


def write_outputs(cfg: ScenarioConfig, results: list[list[MethodResult]], out_dir: str) -> dict:
    """Write ``sweep.csv``, ``reports.json`` and one ROC file per (point, method)."""
    os.makedirs(os.path.join(out_dir, "roc"), exist_ok=True)
    rows = sweep_rows(cfg, results)
    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    reports = []
    for point, per_method in enumerate(results):
        for r in per_method:
            doc = {"point": point, "delta": cfg.sweep[point], "method": r.method, "status": r.status, **r.report.__dict__}
            reports.append(doc)
            roc_path = os.path.join(out_dir, "roc", f"{cfg.preset}_p{point:02d}_{r.method}.json")
            with open(roc_path, "w", encoding="utf-8") as fh:
                json.dump({"delta": cfg.sweep[point], "method": r.method, "auc": r.report.auc, "roc": r.report.roc_points}, fh)
    with open(os.path.join(out_dir, "reports.json"), "w", encoding="utf-8") as fh:
        json.dump({"config": cfg.to_dict(), "config_hash": cfg.config_hash(), "reports": reports}, fh, indent=1)
    return {"csv": csv_path, "rows": len(rows)}

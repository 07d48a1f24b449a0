"""Command-line entry point: ``nanonmr <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import corr, mlp
from .dataset import concat, generate_dataset, ingest_raw_counts, read_dataset, write_dataset
from .evaluation import calibrate, estimate_bias_variance, evaluate, peak_power
from .rng import derive_seed
from .scenarios import METHODS, PRESETS, ScenarioConfig, load_config, preset, save_config
from .sweep import bayes_classifier, point_datasets, run_sweep, write_outputs

log = logging.getLogger("nanonmr")


class CLIError(Exception):
    pass


def _config_from_args(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = preset(args.preset or "ideal")
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "delta_omega", None):
        changes["sweep"] = list(args.delta_omega)
    if getattr(args, "methods", None):
        changes["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    if getattr(args, "n_train", None) is not None:
        changes["n_train_per_class"] = args.n_train
    if getattr(args, "n_test", None) is not None:
        changes["n_test_per_class"] = args.n_test
    return cfg.replace(**changes) if changes else cfg


def _ensure_writable(path: str, force: bool):
    if os.path.exists(path) and not force:
        raise CLIError(f"{path} exists; pass --force to overwrite")


def cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    manifest = {"config_hash": cfg.config_hash(), "files": []}
    targets = [os.path.join(args.out, f"{cfg.preset}_p{p:02d}.txt") for p in range(len(cfg.sweep))]
    for t in targets:
        _ensure_writable(t, args.force)
    n = args.n if args.n is not None else cfg.n_test_per_class
    for p, path in enumerate(targets):
        delta = cfg.sweep[p]
        spec0, spec1 = cfg.class_specs(delta)
        seed = derive_seed(cfg.seed, p, 1)
        ds = generate_dataset(spec0, spec1, n, seed, cfg.preset, cfg.class_names(delta), workers=args.threads)
        write_dataset(ds, path)
        manifest["files"].append({"path": path, "delta": delta, "seed": seed, "records": len(ds), "n_intervals": ds.n_intervals})
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    print(json.dumps(manifest, indent=2))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    out = args.out
    _ensure_writable(os.path.join(out, "sweep.csv"), args.force)
    results = run_sweep(cfg, threads=args.threads)
    info = write_outputs(cfg, results, out)
    for per_method in results:
        for r in per_method:
            print(f"{r.method:7s} error={r.report.error_probability:.4f} auc={r.report.auc:.4f} [{r.status}]")
    print(f"wrote {info['rows']} rows to {info['csv']}")
    return 0


def _dl_config(args, cfg: ScenarioConfig) -> mlp.TrainConfig:
    kw = dict(cfg.dl)
    for key in ("learning_rate", "batch_size", "max_epochs"):
        value = getattr(args, key, None)
        if value is not None:
            kw[key] = value
    seed = cfg.seed if args.seed is None else args.seed
    return mlp.TrainConfig(init_seed=seed, order_seed=seed + 1, **kw)


def cmd_train_dl(args) -> int:
    cfg = _config_from_args(args)
    _ensure_writable(args.out, args.force)
    ds = read_dataset(args.data)
    tcfg = _dl_config(args, cfg)
    result = mlp.train(ds.bits, ds.labels, tcfg, log=log.info)
    mlp.save_checkpoint(result.model, args.out, tcfg, {"best_epoch": result.best_epoch, "history": result.history})
    print(f"best epoch {result.best_epoch}, val loss {result.history[result.best_epoch - 1]['val_loss'] if result.best_epoch else float('nan'):.5f}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    test = read_dataset(args.data)
    method = args.method
    t0 = time.perf_counter()
    if method == "bayes":
        delta = cfg.sweep[0]
        clf = bayes_classifier(cfg, delta, derive_seed(cfg.seed, 0, 2))
        t1 = time.perf_counter()
        margin = clf.margins(test.bits)
        pred, scores = np.where(margin > 0, 0, 1), -margin
    elif method == "dl":
        if args.model:
            model = mlp.load_checkpoint(args.model)
        elif args.train:
            tr = read_dataset(args.train)
            model = mlp.train(tr.bits, tr.labels, _dl_config(args, cfg)).model
        else:
            raise CLIError("dl evaluation needs --model or --train")
        t1 = time.perf_counter()
        out = mlp.classify(model, test.bits)
        pred, scores = out["label"], out["score"]
    elif method in ("corr", "linear"):
        if not args.train:
            raise CLIError(f"{method} evaluation needs --train")
        tr = read_dataset(args.train)
        if method == "corr":
            cen = corr.fit_centroids(tr.bits, tr.labels, cfg.k_max or corr.default_k_max(tr.n_intervals))
            t1 = time.perf_counter()
            pred, scores = corr.classify_batch(test.bits, cen)
        else:
            lin = mlp.train_linear_baseline(tr.bits, tr.labels)
            t1 = time.perf_counter()
            scores = lin.scores(test.bits)
            pred = np.where(scores >= 0.5, 1, 0)
    else:
        raise CLIError(f"unknown method {method!r}")
    report = evaluate(pred, test.labels, scores, t1 - t0, time.perf_counter() - t1, method=method)
    text = report.to_json()
    if args.out:
        _ensure_writable(args.out, args.force)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(f"{method}: error={report.error_probability:.4f} auc={report.auc:.4f} n_test={report.n_test}")
    return 0


def cmd_calibrate(args) -> int:
    _ensure_writable(args.out, args.force)
    if len(args.raw) != len(args.signal_freq):
        raise CLIError("give one --signal-freq per --raw file")
    per_class = [
        (ingest_raw_counts(path, n_intervals=args.n_intervals, label=min(i, 1), dt=args.dt, threshold_policy=args.threshold), freq)
        for i, (path, freq) in enumerate(zip(args.raw, args.signal_freq))
    ]
    data = concat([d for d, _ in per_class])
    if len(data) == 0:
        raise CLIError("no complete records in the raw files")
    mean = float(data.bits.mean())
    fits = []
    for ds, freq in per_class:
        omega = 2.0 * np.pi * freq
        target = peak_power(ds.bits, omega, ds.dt)
        fits.append(calibrate(mean, target, omega, ds.dt, ds.n_intervals, ratio=args.ratio, n_records=args.records, seed=args.seed or 0))
    eta_true = fits[0].eta_true
    omega1 = 2.0 * np.pi * args.signal_freq[0]
    sweep = [2.0 * np.pi * (f - args.signal_freq[0]) for f in args.signal_freq[1:]] or [2.0 * np.pi * 1.6]
    cfg = preset(
        "low_efficiency",
        omega1=omega1,
        g1=fits[0].g,
        g2=fits[-1].g,
        dt=data.dt,
        n_intervals=data.n_intervals,
        eta_true=eta_true,
        eta_false=fits[0].eta_false,
        sweep=sweep,
    )
    save_config(cfg, args.out)
    print(json.dumps({"eta_true": eta_true, "eta_false": fits[0].eta_false, "g": [f.g for f in fits], "mean": mean}, indent=2))
    return 0


def cmd_bias_variance(args) -> int:
    cfg = _config_from_args(args)
    point = 0
    _, test = point_datasets(cfg, point, need_train=False)
    delta = cfg.sweep[point]
    spec0, spec1 = cfg.class_specs(delta)

    def train_set(r):
        return generate_dataset(spec0, spec1, cfg.n_train_per_class, derive_seed(cfg.seed, point, 10 + r), cfg.preset)

    def factory(ds):
        if args.method == "dl":
            model = mlp.train(ds.bits, ds.labels, _dl_config(args, cfg)).model
            return lambda X: mlp.classify(model, X)["label"]
        if args.method == "corr":
            cen = corr.fit_centroids(ds.bits, ds.labels, cfg.k_max or corr.default_k_max(ds.n_intervals))
            return lambda X: corr.classify_batch(X, cen)[0]
        lin = mlp.train_linear_baseline(ds.bits, ds.labels)
        return lin.predict

    out = estimate_bias_variance(factory, train_set, test.bits, test.labels, args.resamples)
    print(json.dumps(out, indent=2))
    if args.out:
        _ensure_writable(args.out, args.force)
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(out, fh, indent=2)
    return 0


def _add_common(p, out_required=True):
    p.add_argument("--preset", choices=PRESETS, help="scenario preset (default: ideal)")
    p.add_argument("--config", help="JSON config file (overrides --preset)")
    p.add_argument("--seed", type=int)
    p.add_argument("--delta-omega", type=float, action="append", help="sweep value in rad/s (repeatable)")
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--out", required=out_required)
    p.add_argument("--force", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--n-train", type=int, help="training records per class")
    p.add_argument("--n-test", type=int, help="test records per class")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nanonmr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write one dataset file per sweep point")
    _add_common(p)
    p.add_argument("--n", type=int, help="records per class (default: preset test size)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sweep", help="fit, predict and score every method at every sweep point")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train-dl", help="train the network on a dataset file and save a checkpoint")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.set_defaults(func=cmd_train_dl)

    p = sub.add_parser("eval", help="score one method on a dataset file")
    _add_common(p, out_required=False)
    p.add_argument("--data", required=True, help="test dataset file")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--train", help="training dataset file (corr, linear, dl)")
    p.add_argument("--model", help="network checkpoint (dl)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("calibrate", help="fit detector efficiencies and amplitudes from raw readout")
    p.add_argument("--raw", action="append", required=True, help="raw stream file, one per class")
    p.add_argument("--signal-freq", type=float, action="append", required=True, help="signal frequency in Hz, one per --raw")
    p.add_argument("--n-intervals", type=int, default=25_000)
    p.add_argument("--dt", type=float, default=10e-6)
    p.add_argument("--ratio", type=float, default=0.7, help="eta_false / eta_true")
    p.add_argument("--records", type=int, default=200, help="synthetic records per amplitude trial")
    p.add_argument("--threshold", default="binary")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="calibrated config JSON")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bias-variance", help="bias-variance decomposition over resampled training sets")
    _add_common(p, out_required=False)
    p.add_argument("--method", choices=("dl", "corr", "linear"), default="dl")
    p.add_argument("--resamples", type=int, default=5)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.set_defaults(func=cmd_bias_variance)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (CLIError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: train, predict, sweep, report, gencheck.

Every command reads one JSON config (plus dotted flag overrides) and writes
its outputs atomically.  Exit codes: 0 success, 1 runtime failure, 2
configuration or contract error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import booster, config as config_mod, report as report_mod, selfcheck, tuner
from .datasets import Dataset, load_csv, load_libsvm, load_matrix_csv
from .errors import CBBoostError, ConfigError, ParameterError
from .losses import LossSpec
from .metrics import f1
from .splitting import make_split_plan

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_dataset_block(block: dict) -> Dataset:
    path = block.get("path")
    if path is None:
        raise ConfigError("missing required config key 'dataset.path'", key="dataset.path")
    if not os.path.exists(path):
        raise ConfigError(f"dataset file not found: {path}", key="dataset.path")
    fmt = block.get("format", "csv")
    task = block.get("task")
    if task is None:
        raise ConfigError("missing required config key 'dataset.task'", key="dataset.task")
    name = block.get("name") or os.path.splitext(os.path.basename(path))[0]
    if fmt == "csv":
        label = block.get("label", "label")
        return load_csv(path, label, task, name=name)
    if fmt == "libsvm":
        return load_libsvm(path, task, name=name)
    raise ConfigError(f"unknown dataset format {fmt!r}", key="dataset.format")


def _loss_spec_from_config(doc: dict, dataset: Dataset, fit_index=None) -> LossSpec:
    block = dict(doc.get("loss", {}))
    kind = block.pop("kind", "ce").lower()
    params = {k: v for k, v in block.items() if v is not None}
    if kind == "cbce":
        params["class_counts"] = tuple(int(c) for c in dataset.labels.class_counts(fit_index))
    return LossSpec(kind=kind, task=dataset.task, **params)


def _boost_params_from_config(doc: dict, seed: int) -> booster.BoostParams:
    block = dict(doc.get("booster", {}))
    block.setdefault("seed", seed)
    return booster.BoostParams(**block)


def _split_plan_from_config(doc: dict, dataset: Dataset, seed: int):
    block = doc.get("split", {})
    return make_split_plan(
        dataset,
        seed=int(block.get("seed", seed)),
        test_fraction=float(block.get("test_fraction", 0.2)),
        k=int(block.get("k", 5)),
        stratify=bool(block.get("stratify", True)),
    )


def _master_seed(doc: dict, args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(doc.get("seed", 0))


def _out_dir(doc: dict, args) -> str:
    if getattr(args, "out", None):
        return args.out
    return doc.get("out_dir", ".")


def cmd_train(doc: dict, args) -> int:
    seed = _master_seed(doc, args)
    out_dir = _out_dir(doc, args)
    dataset = _load_dataset_block(doc.get("dataset", {}))
    plan = _split_plan_from_config(doc, dataset, seed)
    fit_idx, valid_idx = plan.folds[0]
    spec = _loss_spec_from_config(doc, dataset, fit_index=fit_idx)
    params = _boost_params_from_config(doc, seed)
    model = booster.fit(dataset, spec, params, train_index=fit_idx, valid_index=valid_idx)

    X = dataset.features.values
    train_f1 = f1(model.predict_proba(X[fit_idx]), _labels_at(dataset, fit_idx)).aggregate
    valid_f1 = f1(model.predict_proba(X[valid_idx]), _labels_at(dataset, valid_idx)).aggregate
    model_path = os.path.join(out_dir, "model.json")
    metrics_path = os.path.join(out_dir, "metrics.json")
    _atomic_write(model_path, model.to_json())
    _atomic_write(
        metrics_path,
        json.dumps(
            {
                "best_iteration": model.best_iteration,
                "train_loss": model.train_history,
                "valid_loss": model.valid_history,
                "train_f1": train_f1,
                "valid_f1": valid_f1,
            }
        ),
    )
    print(f"wrote {model_path} (best iteration {model.best_iteration})")
    print(f"wrote {metrics_path} (train F1 {train_f1:.2f}, valid F1 {valid_f1:.2f})")
    return EXIT_OK


def _labels_at(dataset: Dataset, index):
    from .datasets import LabelBlock

    return LabelBlock(dataset.task, dataset.labels.y[np.asarray(index)])


def cmd_predict(args) -> int:
    if not os.path.exists(args.model):
        raise ConfigError(f"model file not found: {args.model}", key="model")
    if not os.path.exists(args.data):
        raise ConfigError(f"data file not found: {args.data}", key="data")
    model = booster.Ensemble.load(args.model)
    matrix = load_matrix_csv(args.data)
    prob = model.predict_proba(matrix.values)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["id"] + [f"p_{k}" for k in range(prob.shape[1])])
    for i, row in enumerate(prob):
        writer.writerow([i] + [repr(float(v)) for v in row])
    _atomic_write(args.output, buf.getvalue())
    print(f"wrote {args.output} ({prob.shape[0]} rows, {prob.shape[1]} outputs)")
    return EXIT_OK


def _dataset_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _cell_key(digest: str, profile: str, loss: str, seed: int) -> str:
    return hashlib.sha256(f"{digest}|{profile}|{loss}|{seed}".encode()).hexdigest()[:16]


def _run_cell(dataset, block, profile, loss, doc, seed, out_dir, cell_key) -> report_mod.SummaryRow:
    tuner_block = doc.get("tuner", {})
    n_trials = int(tuner_block.get("n_trials", 100))
    boost_overrides = dict(doc.get("booster", {})) or None
    plan = _split_plan_from_config(doc, dataset, seed)
    trials_dir = os.path.join(out_dir, "trials")
    os.makedirs(trials_dir, exist_ok=True)
    best, _records = tuner.run_search(
        dataset,
        plan,
        loss,
        profile,
        n_trials=n_trials,
        seed=seed,
        boost_overrides=boost_overrides,
        trial_log=os.path.join(trials_dir, f"{cell_key}.jsonl"),
    )
    summary = tuner.final_evaluate(dataset, plan, loss, profile, best.params, boost_overrides)
    params_rel = os.path.join("params", f"{cell_key}.json")
    _atomic_write(
        os.path.join(out_dir, params_rel),
        json.dumps({"cell": cell_key, "params": best.params, "cv_f1": best.mean_f1}),
    )
    return report_mod.SummaryRow(
        dataset=dataset.name,
        profile=profile,
        loss=loss,
        f1_mean=summary["f1_mean"],
        f1_std=summary["f1_std"],
        best_params_path=params_rel,
        status="ok",
    )


def cmd_sweep(doc: dict, args) -> int:
    seed = _master_seed(doc, args)
    out_dir = _out_dir(doc, args)
    blocks = doc.get("datasets")
    if not blocks:
        raise ConfigError("sweep needs a non-empty 'datasets' list", key="datasets")
    profiles = doc.get("profiles") or ["sketch"]
    losses = [l.lower() for l in (doc.get("losses") or ["ce", "wce", "fl", "asl", "ace", "awe"])]
    for profile in profiles:
        if profile not in tuner.PROFILES:
            raise ConfigError(f"unknown profile {profile!r}", key="profiles")

    cells = []
    for block in blocks:
        path = block.get("path")
        if path is None or not os.path.exists(path):
            raise ConfigError(f"dataset file not found: {path}", key="datasets.path")
        digest = _dataset_digest(path)
        for profile in profiles:
            for loss in losses:
                cells.append((block, profile, loss, _cell_key(digest, profile, loss, seed)))

    cell_dir = os.path.join(out_dir, "cells")
    os.makedirs(cell_dir, exist_ok=True)

    def run_one(cell) -> report_mod.SummaryRow:
        block, profile, loss, key = cell
        cell_path = os.path.join(cell_dir, f"{key}.json")
        if os.path.exists(cell_path):
            with open(cell_path, encoding="utf-8") as fh:
                doc_row = json.load(fh)
            return report_mod.SummaryRow(**doc_row)
        dataset = _load_dataset_block(block)
        try:
            row = _run_cell(dataset, block, profile, loss, doc, seed, out_dir, key)
        except CBBoostError as exc:
            row = report_mod.SummaryRow(
                dataset=dataset.name,
                profile=profile,
                loss=loss,
                f1_mean=float("nan"),
                f1_std=float("nan"),
                best_params_path="",
                status=f"failed: {exc}",
            )
        _atomic_write(cell_path, json.dumps(row.__dict__))
        return row

    threads = max(1, int(getattr(args, "threads", None) or 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_one, cells))
    else:
        rows = [run_one(c) for c in cells]

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(report_mod.SUMMARY_HEADER)
    for r in rows:
        writer.writerow(
            [r.dataset, r.profile, r.loss, f"{r.f1_mean:.2f}", f"{r.f1_std:.2f}", r.best_params_path, r.status]
        )
    summary_path = os.path.join(out_dir, "summary.csv")
    _atomic_write(summary_path, buf.getvalue())
    n_failed = sum(1 for r in rows if r.status != "ok")
    print(f"wrote {summary_path} ({len(rows)} cells, {n_failed} failed)")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for path in args.summaries:
        if not os.path.exists(path):
            raise ConfigError(f"summary file not found: {path}", key="summaries")
        rows.extend(report_mod.read_summary_csv(path))
    built = report_mod.build_report(rows)
    out_dir = getattr(args, "out", None) or "."
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, "report.csv")
    delta_path = os.path.join(out_dir, "deltas.csv")

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["dataset", "bmp", "cmp", "delta", "best_baseline_cell", "best_balanced_cell"])
    for r in built.rows:
        writer.writerow([r.dataset, f"{r.bmp:.2f}", f"{r.cmp:.2f}", f"{r.delta:.2f}", r.best_baseline_cell, r.best_balanced_cell])
    _atomic_write(report_path, buf.getvalue())

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["dataset", "delta"])
    for r in built.rows:
        writer.writerow([r.dataset, f"{r.delta:.2f}"])
    _atomic_write(delta_path, buf.getvalue())
    print(f"wrote {report_path} and {delta_path} ({len(built.rows)} datasets)")
    return EXIT_OK


def cmd_gencheck(args) -> int:
    failed = []
    for result in selfcheck.fd_suite():
        state = "PASS" if result.passed else "FAIL"
        print(f"{state} {result.name} (g err {result.max_g_err:.2e}, h err {result.max_h_err:.2e})")
        if not result.passed:
            failed.append(result.name)
    identities = selfcheck.identity_suite()
    print(f"identity checks: {len(identities)}")
    for result in identities:
        state = "PASS" if result.passed else "FAIL"
        print(f"{state} identity/{result.name} (max diff {result.max_g_err:.2e})")
        if not result.passed:
            failed.append(result.name)
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_RUNTIME
    print("all checks passed")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    # Global flags live on a parent parser with SUPPRESS defaults so they can
    # appear before or after the subcommand without clobbering each other.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="path to the JSON run configuration")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed override")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for sweep cells")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory override")
    parser = argparse.ArgumentParser(prog="cbboost", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", help="fit one model with the configured loss", parents=[common])
    sub.add_parser("sweep", help="run the (dataset x profile x loss) search grid", parents=[common])
    p_pred = sub.add_parser("predict", help="score a feature CSV with a saved model", parents=[common])
    p_pred.add_argument("model")
    p_pred.add_argument("data")
    p_pred.add_argument("output")
    p_rep = sub.add_parser("report", help="build BMP/CMP improvement tables", parents=[common])
    p_rep.add_argument("summaries", nargs="+")
    sub.add_parser("gencheck", help="self-check loss gradients and identities", parents=[common])
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command in ("train", "sweep"):
            config_path = getattr(args, "config", None)
            if not config_path:
                raise ConfigError(f"{args.command} requires --config", key="config")
            doc = config_mod.load_config(config_path)
            doc = config_mod.apply_overrides(doc, extra)
            config_mod.validate_config(doc)
            if args.command == "train":
                return cmd_train(doc, args)
            return cmd_sweep(doc, args)
        if extra:
            raise ConfigError(f"unexpected argument {extra[0]!r}", key=extra[0])
        if args.command == "predict":
            return cmd_predict(args)
        if args.command == "report":
            return cmd_report(args)
        return cmd_gencheck(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CBBoostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS lines.  Every tolerance is fixed here, not configurable.
"""

import csv
import json
import os
import time

import numpy as np
import pytest

from oracles import brute_force_stump
from table1 import BINARY_F1, summary_rows
from test_losses_fd import ALL_PAIRS, check_pair
from cbboost.booster import BoostParams, base_score, fit
from cbboost.cli import main
from cbboost.datasets import Dataset, FeatureMatrix, LabelBlock, Task, save_csv
from cbboost.losses import LossSpec, sigmoid
from cbboost.metrics import recall_positive
from cbboost.report import write_summary_csv
from cbboost.selfcheck import identity_suite
from cbboost.splitting import make_split_plan
from cbboost.synthetic import block_multilabel, gaussian_blobs_binary, plateau_binary
from cbboost.tuner import final_evaluate, run_search


def announce(n, text):
    print(f"\nACCEPTANCE {n} PASS: {text}")


def test_criterion_1_gradient_hessian_conformance():
    """1000 seeded draws per supported (loss, task) pass central FD checks."""
    start = time.time()
    worst = {}
    for kind, task_kind in ALL_PAIRS:
        checked, g_err, h_err = check_pair(kind, task_kind)
        assert checked >= 980, f"{kind}/{task_kind}: too few draws after band exclusion"
        assert g_err <= 1e-6, f"{kind}/{task_kind}: gradient error {g_err:.3e}"
        assert h_err <= 1e-5, f"{kind}/{task_kind}: hessian error {h_err:.3e}"
        worst[(kind, task_kind)] = (g_err, h_err)
    elapsed = time.time() - start
    assert elapsed < 10.0, f"conformance sweep took {elapsed:.1f}s, budget is 10s"
    g_max = max(v[0] for v in worst.values())
    h_max = max(v[1] for v in worst.values())
    announce(
        1,
        f"{len(ALL_PAIRS)} (loss, task) pairs x 1000 draws within FD tolerances "
        f"(max g err {g_max:.2e}, max h err {h_max:.2e}, {elapsed:.1f}s)",
    )


def test_criterion_2_reduction_identities():
    """Six parameter reductions agree to 1e-12 on value, g and pre-floor h."""
    results = identity_suite(n_draws=400, seed=2024)
    assert len(results) == 6
    for result in results:
        assert result.passed, f"{result.name}: max diff {result.max_g_err:.3e}"
    worst = max(r.max_g_err for r in results)
    announce(2, f"6 reduction identities exact to 1e-12 (worst diff {worst:.2e})")


def test_criterion_3_newton_step_oracle():
    """Hand-derived stump plus 5 random datasets match exhaustive minimization."""
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0, 0, 1, 1])
    dataset = Dataset(FeatureMatrix(X), LabelBlock(Task.binary(), y))
    spec = LossSpec("ce", Task.binary())
    model = fit(dataset, spec, BoostParams(n_rounds=1, learning_rate=1.0, max_depth=1,
                                           max_leaves=2, lambda_l2=0.0, seed=0))
    tree = model.rounds[0][0]
    assert tree.threshold[0] == 2.5
    left_w = tree.leaf_value[tree.left[0], 0]
    right_w = tree.leaf_value[tree.right[0], 0]
    assert left_w == pytest.approx(-2.0, abs=1e-12)
    assert right_w == pytest.approx(2.0, abs=1e-12)
    oracle = brute_force_stump(X[:, 0], np.array([0.5, 0.5, -0.5, -0.5]), np.full(4, 0.25),
                               lam=0.0, alpha=0.0)
    assert oracle[0] == 2.5

    checked = 0
    for seed in range(5):
        rng = np.random.default_rng(9000 + seed)
        n = int(rng.integers(8, 33))
        Xr = np.round(rng.normal(size=(n, 1)) * 3, 1)
        yr = rng.integers(0, 2, n)
        yr[0], yr[1] = 0, 1
        dr = Dataset(FeatureMatrix(Xr), LabelBlock(Task.binary(), yr))
        lam = float(rng.choice([0.0, 0.5, 1.5]))
        alpha = float(rng.choice([0.0, 0.1]))
        modelr = fit(dr, spec, BoostParams(n_rounds=1, learning_rate=1.0, max_depth=1,
                                           max_leaves=2, lambda_l2=lam, alpha_l1=alpha, seed=0))
        base = base_score(dr, spec)[0]
        p = sigmoid(np.full(n, base))
        best = brute_force_stump(Xr[:, 0], p - yr, p * (1 - p), lam=lam, alpha=alpha)
        if best is None:
            assert len(modelr.rounds) == 0
            continue
        thr, wl, wr, _ = best
        treer = modelr.rounds[0][0]
        assert treer.threshold[0] == pytest.approx(thr, abs=1e-12)
        assert treer.leaf_value[treer.left[0], 0] == pytest.approx(wl[0], abs=1e-9)
        assert treer.leaf_value[treer.right[0], 0] == pytest.approx(wr[0], abs=1e-9)
        checked += 1
    assert checked >= 4
    announce(3, f"stump Newton step matches brute force (+-2.0 example, {checked} random datasets)")


def test_criterion_4_bmp_cmp_table_oracle(tmp_path):
    """The published binary grid reproduces the reported improvement deltas."""
    summary_path = tmp_path / "summary.csv"
    write_summary_csv(summary_rows(), summary_path)
    out = str(tmp_path / "report")
    assert main(["report", str(summary_path), "--out", out]) == 0
    with open(os.path.join(out, "deltas.csv")) as fh:
        deltas = {r["dataset"]: float(r["delta"]) for r in csv.DictReader(fh)}
    assert len(deltas) == 15
    assert deltas["arrhythmia"] == pytest.approx(28.91, abs=0.01)
    assert deltas["us_crime"] == pytest.approx(-0.43, abs=0.01)
    assert deltas["sick_euthyroid"] == pytest.approx(-0.46, abs=0.011)
    assert max(deltas.values()) == pytest.approx(28.91, abs=0.01)
    assert min(deltas.values()) == pytest.approx(-0.46, abs=0.011)
    announce(
        4,
        f"table oracle deltas: arrhythmia {deltas['arrhythmia']:+.2f}, "
        f"us_crime {deltas['us_crime']:+.2f}, sick_euthyroid {deltas['sick_euthyroid']:+.2f}; "
        f"extremes {min(deltas.values()):+.2f}/{max(deltas.values()):+.2f}",
    )


def test_criterion_5_desk_scale_imbalance_experiment():
    """On IR=20 Gaussians the balanced losses beat plain CE on minority F1."""
    start = time.time()
    dataset = gaussian_blobs_binary(n=2000, imbalance_ratio=20.0, separation=2.0, seed=77)
    counts = np.bincount(dataset.labels.y)
    assert counts[0] / counts[1] == pytest.approx(20.0, rel=0.05)
    plan = make_split_plan(dataset, seed=77)
    budget = {"n_rounds": 30, "early_stopping_rounds": 8, "max_bin": 64}

    cells = {}
    for loss in ("ce", "wce", "fl", "asl", "ace", "awe"):
        best, records = run_search(dataset, plan, loss, "leafwise", n_trials=20, seed=77,
                                   boost_overrides=budget)
        assert len(records) == 20
        cells[loss] = final_evaluate(dataset, plan, loss, "leafwise", best.params, budget)["f1_mean"]
    best_balanced = max(v for k, v in cells.items() if k != "ce")
    assert best_balanced >= cells["ce"], f"balanced {best_balanced:.2f} < ce {cells['ce']:.2f}"

    X = dataset.features.values
    test_labels = LabelBlock(Task.binary(), dataset.labels.y[plan.test])
    defaults = BoostParams()
    ce_model = fit(dataset, LossSpec("ce", Task.binary()), defaults, train_index=plan.train)
    wce_model = fit(dataset, LossSpec("wce", Task.binary(), w=5.0), defaults, train_index=plan.train)
    recall_ce = recall_positive(ce_model.predict_proba(X[plan.test]), test_labels)
    recall_wce = recall_positive(wce_model.predict_proba(X[plan.test]), test_labels)
    assert recall_wce > recall_ce, f"recall did not increase: {recall_wce:.2f} <= {recall_ce:.2f}"

    elapsed = time.time() - start
    assert elapsed < 120.0, f"experiment took {elapsed:.1f}s, budget is 2 minutes"
    announce(
        5,
        f"balanced F1 {best_balanced:.2f} >= ce {cells['ce']:.2f}; minority recall "
        f"{recall_ce:.1f} -> {recall_wce:.1f} under w=5 ({elapsed:.0f}s)",
    )


def test_criterion_6_multilabel_decomposition():
    """Per-output training equals independent binary models; values add exactly."""
    dataset = block_multilabel(n=400, n_labels=4, seed=31)
    spec = LossSpec("ce", Task.multilabel(4))
    params = BoostParams(n_rounds=8, learning_rate=0.3, max_depth=3, one_tree_per_output=True, seed=3)
    joint = fit(dataset, spec, params)
    X = dataset.features.values
    raw_joint = joint.predict_raw(X)
    worst = 0.0
    for j in range(4):
        single_data = Dataset(FeatureMatrix(X), LabelBlock(Task.binary(), dataset.labels.y[:, j]))
        single = fit(single_data, LossSpec("ce", Task.binary()), params)
        diff = np.abs(raw_joint[:, j] - single.predict_raw(X)[:, 0]).max()
        worst = max(worst, float(diff))
        assert diff <= 1e-9

    rng = np.random.default_rng(8)
    z = rng.uniform(-6, 6, (200, 4))
    y = rng.integers(0, 2, (200, 4))
    ml_value = spec.value(y, z)
    binary = LossSpec("ce", Task.binary())
    total = np.zeros(200)
    for j in range(4):
        total = total + binary.value(y[:, j], z[:, j])
    np.testing.assert_array_equal(ml_value, total)
    announce(6, f"4-label block dataset: per-output trees match binary fits (max diff {worst:.1e}); "
                "loss values add exactly")


def test_criterion_7_sweep_thread_determinism(tmp_path):
    """Identical seeds give byte-identical summaries at 1 and 4 threads."""
    dataset = gaussian_blobs_binary(n=400, imbalance_ratio=5.0, separation=2.5, seed=13)
    data_path = tmp_path / "toy.csv"
    save_csv(dataset, data_path)
    config = {
        "datasets": [{"path": str(data_path), "task": "binary", "label": "label", "name": "toy"}],
        "profiles": ["leafwise"],
        "losses": ["ce", "wce", "asl"],
        "split": {"seed": 13, "k": 5},
        "tuner": {"n_trials": 3},
        "booster": {"n_rounds": 15, "early_stopping_rounds": 8},
    }
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    out_a = str(tmp_path / "threads1")
    out_b = str(tmp_path / "threads4")
    assert main(["--config", str(cfg_path), "--out", out_a, "--threads", "1", "--seed", "13", "sweep"]) == 0
    assert main(["--config", str(cfg_path), "--out", out_b, "--threads", "4", "--seed", "13", "sweep"]) == 0
    with open(os.path.join(out_a, "summary.csv"), "rb") as fh:
        bytes_a = fh.read()
    with open(os.path.join(out_b, "summary.csv"), "rb") as fh:
        bytes_b = fh.read()
    assert bytes_a == bytes_b
    announce(7, f"sweep summaries byte-identical across thread counts ({len(bytes_a)} bytes)")


def test_criterion_8_protocol_conformance():
    """Search emits n_trials records of k folds; stopping patience is honored."""
    dataset = plateau_binary()
    plan = make_split_plan(dataset, seed=5)

    # Direct fit: validation provably plateaus, so training stops exactly
    # early_stopping_rounds after the best round, far before the cap.
    model = fit(
        dataset,
        LossSpec("ce", Task.binary()),
        BoostParams(n_rounds=1000, learning_rate=0.5, max_leaves=8, lambda_l2=1.0,
                    early_stopping_rounds=50, seed=1),
        train_index=plan.folds[0][0],
        valid_index=plan.folds[0][1],
    )
    assert model.best_iteration <= 60, f"no plateau: best at {model.best_iteration}"
    assert len(model.valid_history) == model.best_iteration + 50
    assert len(model.valid_history) < 1000

    best, records = run_search(dataset, plan, "ce", "leafwise", n_trials=4, seed=5)
    assert len(records) == 4
    for record in records:
        assert record.status == "ok"
        assert len(record.fold_f1) == 5
        assert len(record.fold_best_iteration) == 5
        assert all(1 <= b <= 1000 for b in record.fold_best_iteration)
    announce(
        8,
        f"4 trials x 5 folds recorded; plateau run stopped at round "
        f"{len(model.valid_history)} (best {model.best_iteration}, patience 50)",
    )

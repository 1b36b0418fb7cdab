"""Runtime self-verification of the loss layer.

Two suites back the `gencheck` command: a finite-difference consistency sweep
of every (loss kind, task) pair against the loss values, and the six
parameter-reduction identities that collapse one loss kind onto another.
Multi-class cross-entropy is the canonical softmax form while the modulated
losses decompose per class, so the cross-family identities with plain
cross-entropy are checked on the sigmoid-linked tasks where both sides share
one decomposition; same-family identities run on all supported tasks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import BINARY, MULTICLASS, MULTILABEL, Task
from .losses import LOSS_KINDS, LossSpec, sigmoid, softmax, supports

_FD_STEP = 1e-6
_G_TOL = 1e-6
_H_TOL = 1e-5
_MARGIN_BAND = 1e-4
_IDENTITY_TOL = 1e-12

_GRID = {
    "w": (2.0, 3.0, 5.0),
    "gamma": (0.5, 1.0, 2.0),
    "gamma_pos": (0.0, 0.1),
    "gamma_neg": (0.5, 1.0, 2.0),
    "margin": (0.05, 0.2),
    "beta": (0.9, 0.99, 0.999, 0.9999),
}


def _task_for(task_kind: str, k: int = 4) -> Task:
    if task_kind == BINARY:
        return Task.binary()
    if task_kind == MULTICLASS:
        return Task.multiclass(k)
    return Task.multilabel(k)


def random_spec(kind: str, task: Task, rng: np.random.Generator) -> LossSpec:
    """One spec with every relevant parameter drawn from its search grid."""
    pick = lambda name: float(rng.choice(_GRID[name]))
    if kind == "ce":
        return LossSpec("ce", task)
    if kind == "wce":
        return LossSpec("wce", task, w=pick("w"))
    if kind == "fl":
        return LossSpec("fl", task, gamma=pick("gamma"))
    if kind == "asl":
        gp = pick("gamma_pos")
        gn = pick("gamma_neg")
        return LossSpec("asl", task, gamma_pos=gp, gamma_neg=max(gn, gp), margin=pick("margin"))
    if kind == "ace":
        return LossSpec("ace", task, margin=pick("margin"))
    if kind == "awe":
        return LossSpec("awe", task, w=pick("w"), margin=pick("margin"))
    counts = tuple(int(c) for c in rng.integers(1, 2000, size=task.n_classes))
    return LossSpec("cbce", task, beta=pick("beta"), class_counts=counts)


def _draw_labels(task: Task, n: int, rng: np.random.Generator):
    if task.kind == BINARY:
        return rng.integers(0, 2, size=n).astype(np.float64)
    if task.kind == MULTICLASS:
        return rng.integers(0, task.n_classes, size=n)
    return rng.integers(0, 2, size=(n, task.n_classes)).astype(np.float64)


def _draw_scores(task: Task, n: int, rng: np.random.Generator) -> np.ndarray:
    width = task.n_outputs
    z = rng.uniform(-4.0, 4.0, size=(n, width))
    return z[:, 0] if task.kind == BINARY else z


def _margin_band_mask(spec: LossSpec, z: np.ndarray) -> np.ndarray:
    """Rows whose probabilities sit inside the excluded band around the clip point."""
    margin = spec.margin or 0.0
    if margin == 0.0:
        return np.zeros(z.shape[0] if z.ndim > 1 else len(np.atleast_1d(z)), dtype=bool)
    p = softmax(z) if spec.task.kind == MULTICLASS else sigmoid(z)
    near = np.abs(p - margin) < _MARGIN_BAND
    return near.any(axis=-1) if near.ndim > 1 else near


@dataclass
class CheckResult:
    name: str
    max_g_err: float
    max_h_err: float
    passed: bool


def _fd_errors(spec: LossSpec, y, z) -> tuple[float, float]:
    """Relative errors of (g vs FD of value) and (h vs FD of g), both central."""
    z2 = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if spec.task.kind == BINARY:
        z2 = np.asarray(z, dtype=np.float64).reshape(-1, 1)
    g, h = spec.grad_hess(y, z2, floor_hessian=False)
    g_err = 0.0
    h_err = 0.0
    for k in range(z2.shape[1]):
        zp = z2.copy()
        zm = z2.copy()
        zp[:, k] += _FD_STEP
        zm[:, k] -= _FD_STEP
        fd1 = (spec.value(y, zp) - spec.value(y, zm)) / (2 * _FD_STEP)
        gp, _ = spec.grad_hess(y, zp, floor_hessian=False)
        gm, _ = spec.grad_hess(y, zm, floor_hessian=False)
        fd2 = (gp[:, k] - gm[:, k]) / (2 * _FD_STEP)
        g_err = max(g_err, float(np.max(np.abs(g[:, k] - fd1) / np.maximum(1.0, np.abs(g[:, k])))))
        h_err = max(h_err, float(np.max(np.abs(h[:, k] - fd2) / np.maximum(1.0, np.abs(h[:, k])))))
    return g_err, h_err


def fd_suite(n_draws: int = 200, seed: int = 0) -> list[CheckResult]:
    """Derivative consistency per (kind, task); one aggregated result per kind."""
    results = []
    for kind_i, kind in enumerate(LOSS_KINDS):
        worst_g, worst_h = 0.0, 0.0
        for task_i, task_kind in enumerate((BINARY, MULTICLASS, MULTILABEL)):
            if not supports(kind, task_kind):
                continue
            task = _task_for(task_kind)
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence([seed, 31, kind_i, task_i]))
            )
            spec = random_spec(kind, task, rng)
            y = _draw_labels(task, n_draws, rng)
            z = _draw_scores(task, n_draws, rng)
            keep = ~_margin_band_mask(spec, z)
            y = y[keep]
            z = z[keep]
            g_err, h_err = _fd_errors(spec, y, z)
            worst_g = max(worst_g, g_err)
            worst_h = max(worst_h, h_err)
        results.append(
            CheckResult(
                name=f"fd/{kind}",
                max_g_err=worst_g,
                max_h_err=worst_h,
                passed=worst_g <= _G_TOL and worst_h <= _H_TOL,
            )
        )
    return results


def _identity_pairs():
    """(name, lhs builder, rhs builder, task kinds) for the six reductions."""
    all_tasks = (BINARY, MULTICLASS, MULTILABEL)
    sigmoid_tasks = (BINARY, MULTILABEL)
    return [
        (
            "fl(gamma=0) == ce",
            lambda t: LossSpec("fl", t, gamma=0.0),
            lambda t: LossSpec("ce", t),
            sigmoid_tasks,
        ),
        (
            "wce(w=1) == ce",
            lambda t: LossSpec("wce", t, w=1.0),
            lambda t: LossSpec("ce", t),
            sigmoid_tasks,
        ),
        (
            "ace(margin=0) == ce",
            lambda t: LossSpec("ace", t, margin=0.0),
            lambda t: LossSpec("ce", t),
            sigmoid_tasks,
        ),
        (
            "awe(margin=0, w) == wce(w)",
            lambda t: LossSpec("awe", t, w=3.0, margin=0.0),
            lambda t: LossSpec("wce", t, w=3.0),
            all_tasks,
        ),
        (
            "asl(gp=gn=gamma, margin=0) == fl(gamma)",
            lambda t: LossSpec("asl", t, gamma_pos=2.0, gamma_neg=2.0, margin=0.0),
            lambda t: LossSpec("fl", t, gamma=2.0),
            all_tasks,
        ),
        (
            "cbce(beta=0) == ce",
            lambda t: LossSpec(
                "cbce", t, beta=0.0, class_counts=tuple(range(10, 10 + t.n_classes))
            ),
            lambda t: LossSpec("ce", t),
            (BINARY, MULTICLASS),
        ),
    ]


def identity_suite(n_draws: int = 200, seed: int = 1) -> list[CheckResult]:
    """The six reduction identities on value, gradient and pre-floor Hessian."""
    results = []
    for pair_i, (name, lhs_of, rhs_of, task_kinds) in enumerate(_identity_pairs()):
        worst = 0.0
        for task_i, task_kind in enumerate(task_kinds):
            task = _task_for(task_kind)
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence([seed, 37, pair_i, task_i]))
            )
            lhs = lhs_of(task)
            rhs = rhs_of(task)
            y = _draw_labels(task, n_draws, rng)
            z = _draw_scores(task, n_draws, rng)
            diff = float(np.max(np.abs(lhs.value(y, z) - rhs.value(y, z))))
            gl, hl = lhs.grad_hess(y, z, floor_hessian=False)
            gr, hr = rhs.grad_hess(y, z, floor_hessian=False)
            diff = max(diff, float(np.max(np.abs(gl - gr))), float(np.max(np.abs(hl - hr))))
            worst = max(worst, diff)
        results.append(CheckResult(name=name, max_g_err=worst, max_h_err=worst, passed=worst <= _IDENTITY_TOL))
    return results

"""Class-balanced loss family: values, gradients and Hessians in raw-score space.

Every loss decomposes per label as  l = -y*l_pos(p) - (1-y)*l_neg(p)  and all
seven kinds are instances of one generic family

    l_pos(p) = w_pos * (1-p)^g_pos * log(p)
    l_neg(p) = w_neg * p_m^g_neg  * log(1 - p_m),   p_m = max(p - margin, 0)

so parameter reductions between kinds (e.g. zero focusing exponent, zero
margin, unit weight) are identities of the shared code path, not merely of
the mathematics.

Binary and multi-label tasks link through per-output sigmoids; multi-label is
exactly K independent binary problems.  Multi-class links through softmax:
cross-entropy (and its class-balanced reweighting) is the canonical
 -log p_true  form, while the modulated losses apply the positive part to the
true class and the negative part to every other class.  Gradients and
Hessians are the exact first and second partial derivatives with respect to
each raw score; Hessians are floored at a small positive value afterwards so
Newton leaf weights always exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .datasets import BINARY, MULTICLASS, MULTILABEL, Task
from .errors import CapabilityError, ParameterError

LOSS_KINDS = ("ce", "wce", "fl", "asl", "ace", "awe", "cbce")

DEFAULT_H_FLOOR = 1e-6

# Guards for the derivative path only: keep negative powers finite when a
# probability saturates or sits on top of the margin clip point.
_P_EPS = 1e-15
_Q_EPS = 1e-12

_PARAM_FIELDS = {
    "ce": (),
    "wce": ("w",),
    "fl": ("gamma",),
    "asl": ("gamma_pos", "gamma_neg", "margin"),
    "ace": ("margin",),
    "awe": ("w", "margin"),
    "cbce": ("beta", "class_counts"),
}


def supports(kind: str, task_kind: str) -> bool:
    """Supported-combination table: CBCE has no multi-label form."""
    if kind not in LOSS_KINDS:
        return False
    if task_kind not in (BINARY, MULTICLASS, MULTILABEL):
        return False
    if kind == "cbce" and task_kind == MULTILABEL:
        return False
    return True


def sigmoid(z):
    """Numerically stable logistic link, clipped into the open interval (0, 1)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    tiny = np.nextafter(0.0, 1.0)
    top = np.nextafter(1.0, 0.0)
    return np.clip(out, tiny, top)


def softmax(z):
    """Row-wise softmax of an (n, K) score matrix; shift invariant."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z):
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cbce_weights(class_counts, beta: float) -> np.ndarray:
    """Effective-number class weights (1-beta)/(1-beta^n_k), scaled to sum K.

    beta = 0 gives exactly one per class, recovering unweighted cross-entropy.
    """
    counts = np.asarray(class_counts, dtype=np.float64)
    if counts.ndim != 1 or len(counts) < 2:
        raise ParameterError("class_counts must be a vector with at least two entries")
    if (counts < 1).any():
        raise ParameterError("every class count must be at least 1")
    if not 0.0 <= beta < 1.0:
        raise ParameterError(f"beta must be in [0, 1), got {beta}")
    if beta == 0.0:
        return np.ones_like(counts)
    effective = -np.expm1(counts * np.log(beta))  # 1 - beta^n_k
    raw = (1.0 - beta) / effective
    return raw * (len(counts) / raw.sum())


class GradHess(NamedTuple):
    """Per-sample, per-output first and second derivatives of the loss."""

    g: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class LossSpec:
    """A loss kind bound to a task, carrying only the parameters it uses."""

    kind: str
    task: Task
    w: float | None = None
    gamma: float | None = None
    gamma_pos: float | None = None
    gamma_neg: float | None = None
    margin: float | None = None
    beta: float | None = None
    class_counts: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ParameterError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if not supports(self.kind, self.task.kind):
            raise CapabilityError(
                f"loss {self.kind!r} does not support task {self.task.kind!r} "
                "(see the supported-combination table: cbce is binary/multi-class only)"
            )
        allowed = _PARAM_FIELDS[self.kind]
        for name in ("w", "gamma", "gamma_pos", "gamma_neg", "margin", "beta", "class_counts"):
            value = getattr(self, name)
            if value is not None and name not in allowed:
                raise ParameterError(f"parameter {name!r} is not used by loss {self.kind!r}")
        for name in allowed:
            if getattr(self, name) is None:
                raise ParameterError(f"loss {self.kind!r} requires parameter {name!r}")
        if self.w is not None and self.w <= 0:
            raise ParameterError(f"w must be positive, got {self.w}")
        if self.gamma is not None and self.gamma < 0:
            raise ParameterError(f"gamma must be non-negative, got {self.gamma}")
        if self.kind == "asl":
            if self.gamma_pos < 0 or self.gamma_neg < 0:
                raise ParameterError("focusing exponents must be non-negative")
            if self.gamma_neg < self.gamma_pos:
                raise ParameterError(
                    f"asl requires gamma_neg >= gamma_pos, got {self.gamma_neg} < {self.gamma_pos}"
                )
        if self.margin is not None and not 0.0 <= self.margin < 1.0:
            raise ParameterError(f"margin must be in [0, 1), got {self.margin}")
        if self.kind == "cbce":
            counts = tuple(int(c) for c in np.atleast_1d(self.class_counts))
            object.__setattr__(self, "class_counts", counts)
            expected = self.task.n_classes
            if len(counts) != expected:
                raise ParameterError(f"cbce needs {expected} class counts, got {len(counts)}")
            cbce_weights(counts, self.beta)  # validates beta and counts

    # ------------------------------------------------------------------
    # resolved generic-family parameters

    def _family_params(self):
        """(w_pos, w_neg, g_pos, g_neg, margin) for the shared binary family."""
        if self.kind == "ce":
            return 1.0, 1.0, 0.0, 0.0, 0.0
        if self.kind == "wce":
            return float(self.w), 1.0, 0.0, 0.0, 0.0
        if self.kind == "fl":
            return 1.0, 1.0, float(self.gamma), float(self.gamma), 0.0
        if self.kind == "asl":
            return 1.0, 1.0, float(self.gamma_pos), float(self.gamma_neg), float(self.margin)
        if self.kind == "ace":
            return 1.0, 1.0, 0.0, 0.0, float(self.margin)
        if self.kind == "awe":
            return float(self.w), 1.0, 0.0, 0.0, float(self.margin)
        weights = cbce_weights(self.class_counts, self.beta)
        return float(weights[1]), float(weights[0]), 0.0, 0.0, 0.0

    def _class_weights(self) -> np.ndarray:
        """Per-class weights for the canonical multi-class path (ce/cbce)."""
        if self.kind == "cbce":
            return cbce_weights(self.class_counts, self.beta)
        return np.ones(self.task.n_classes)

    # ------------------------------------------------------------------
    # public evaluation API

    def value(self, y, z) -> np.ndarray:
        """Per-sample loss values; multi-label sums its K per-label terms."""
        y_arr, z_arr, ndim = self._coerce(y, z)
        if self.task.kind == MULTICLASS:
            out = self._value_multiclass(y_arr, z_arr)
        else:
            out = self._value_sigmoid(y_arr, z_arr)
            if self.task.kind == MULTILABEL:
                out = out.sum(axis=1)
            else:
                out = out[:, 0]
        return out[0] if ndim == 0 or (self.task.kind != BINARY and ndim == 1) else out

    def grad_hess(self, y, z, h_floor: float = DEFAULT_H_FLOOR, floor_hessian: bool = True) -> GradHess:
        """Exact per-output derivatives of `value`; h floored unless disabled."""
        y_arr, z_arr, ndim = self._coerce(y, z)
        if self.task.kind == MULTICLASS:
            g, h = self._grad_hess_multiclass(y_arr, z_arr)
        else:
            g, h = self._grad_hess_sigmoid(y_arr, z_arr)
        if floor_hessian:
            if h_floor <= 0:
                raise ParameterError(f"h_floor must be positive, got {h_floor}")
            h = np.maximum(h, h_floor)
        if self.task.kind == BINARY:
            if ndim == 0:
                return GradHess(g[0, 0], h[0, 0])
            if ndim == 1:
                return GradHess(g[:, 0], h[:, 0])
        elif ndim == 1:
            return GradHess(g[0], h[0])
        return GradHess(g, h)

    def mean_value(self, y, z) -> float:
        return float(np.mean(self.value(y, z)))

    # ------------------------------------------------------------------
    # serialization (model files and run configs)

    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "task": {"kind": self.task.kind, "n_classes": self.task.n_classes}}
        for name in _PARAM_FIELDS[self.kind]:
            value = getattr(self, name)
            doc[name] = list(value) if name == "class_counts" else value
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "LossSpec":
        task = Task(doc["task"]["kind"], doc["task"]["n_classes"])
        params = {k: v for k, v in doc.items() if k not in ("kind", "task")}
        if "class_counts" in params and params["class_counts"] is not None:
            params["class_counts"] = tuple(params["class_counts"])
        return cls(kind=doc["kind"], task=task, **params)

    # ------------------------------------------------------------------
    # shape handling

    def _coerce(self, y, z):
        """Normalize inputs to (n,) labels / (n, K) scores; returns input ndim."""
        y_arr = np.asarray(y)
        z_arr = np.asarray(z, dtype=np.float64)
        ndim = z_arr.ndim
        if self.task.kind == BINARY:
            z_arr = z_arr.reshape(-1, 1)
            y_arr = np.asarray(y_arr, dtype=np.float64).reshape(-1, 1)
        elif self.task.kind == MULTILABEL:
            z_arr = z_arr.reshape(-1, self.task.n_classes)
            y_arr = np.asarray(y_arr, dtype=np.float64).reshape(z_arr.shape)
        else:
            z_arr = z_arr.reshape(-1, self.task.n_classes)
            y_idx = np.asarray(y_arr, dtype=np.int64).reshape(-1)
            if y_idx.shape[0] != z_arr.shape[0]:
                raise ParameterError("label vector and score matrix row counts differ")
            y_arr = y_idx
        return y_arr, z_arr, ndim

    # ------------------------------------------------------------------
    # sigmoid-linked tasks (binary, multi-label)

    def _value_sigmoid(self, y, z):
        w_pos, w_neg, g_pos, g_neg, margin = self._family_params()
        p = sigmoid(z)
        u = sigmoid(-z)
        log_p = -np.logaddexp(0.0, -z)
        log_u = -np.logaddexp(0.0, z)

        pos_val = -w_pos * log_p if g_pos == 0.0 else -w_pos * u**g_pos * log_p

        q = np.maximum(p - margin, 0.0)
        if margin == 0.0:
            log_v = log_u
        else:
            log_v = np.where(q > 0.0, np.log(np.maximum(u + margin, _P_EPS)), 0.0)
        neg_val = -w_neg * log_v if g_neg == 0.0 else -w_neg * q**g_neg * log_v
        return y * pos_val + (1.0 - y) * neg_val

    def _grad_hess_sigmoid(self, y, z):
        w_pos, w_neg, g_pos, g_neg, margin = self._family_params()
        p = sigmoid(z)
        u = sigmoid(-z)
        log_p = -np.logaddexp(0.0, -z)
        log_u = -np.logaddexp(0.0, z)
        pu = p * u
        one_m2p = 1.0 - 2.0 * p

        # Positive part, already chained through the sigmoid:
        #   g = w * u^a * (a*p*log p - u)
        #   h = w * u^a * (-a(a-1)*p^2*log p + 2a*u*p + u^2) + g*(1-2p)
        a = g_pos
        ua = np.ones_like(u) if a == 0.0 else u**a
        g_p = w_pos * ua * (a * p * log_p - u)
        h_p = w_pos * ua * (-a * (a - 1.0) * p * p * log_p + 2.0 * a * u * p + u * u) + g_p * one_m2p

        # Negative part in the shifted probability q = max(p - margin, 0);
        # inside the clipped region every derivative is exactly zero.
        b = g_neg
        if margin == 0.0:
            # q = p and v = u: pre-multiplying by the link derivative p*u
            # cancels every 1/u term, keeping extreme scores finite.
            if b == 0.0:
                g_n = w_neg * p
                curv_n = w_neg * p * p
            else:
                pb = p**b
                g_n = w_neg * (pb * p - b * pb * u * log_u)
                curv_n = w_neg * (-b * (b - 1.0) * pb * u * u * log_u + 2.0 * b * pb * p * u + pb * p * p)
            h_n = curv_n + g_n * one_m2p
        else:
            q = np.maximum(p - margin, 0.0)
            active = q > 0.0
            qs = np.maximum(q, _Q_EPS)
            v = u + margin  # = 1 - q while active; bounded below by the margin
            log_v = np.where(active, np.log(v), 0.0)
            if b == 0.0:
                d1 = w_neg / v
                d2 = w_neg / (v * v)
            else:
                qb = qs**b
                qb1 = qs ** (b - 1.0)
                d1 = w_neg * (qb / v - b * qb1 * log_v)
                if b == 1.0:
                    d2 = w_neg * (2.0 / v + qs / (v * v))
                else:
                    qb2 = qs ** (b - 2.0)
                    d2 = w_neg * (-b * (b - 1.0) * qb2 * log_v + 2.0 * b * qb1 / v + qb / (v * v))
            g_n = np.where(active, d1 * pu, 0.0)
            h_n = np.where(active, d2 * pu * pu + d1 * pu * one_m2p, 0.0)

        pos_mask = y > 0.5
        g = np.where(pos_mask, g_p, g_n)
        h = np.where(pos_mask, h_p, h_n)
        return g, h

    # ------------------------------------------------------------------
    # softmax-linked task (multi-class)

    def _value_multiclass(self, y, z):
        logp = log_softmax(z)
        if self.kind in ("ce", "cbce"):
            weights = self._class_weights()
            return -weights[y] * logp[np.arange(len(y)), y]
        w_pos, w_neg, g_pos, g_neg, margin = self._family_params()
        p = np.clip(softmax(z), _P_EPS, 1.0 - _P_EPS)
        u = 1.0 - p
        log_u = np.log1p(-p)
        onehot = np.zeros_like(p)
        onehot[np.arange(len(y)), y] = 1.0

        pos_val = -w_pos * logp if g_pos == 0.0 else -w_pos * u**g_pos * logp
        q = np.maximum(p - margin, 0.0)
        log_v = np.where(q > 0.0, np.log(np.maximum(u + margin, _P_EPS)), 0.0) if margin > 0.0 else log_u
        neg_val = -w_neg * log_v if g_neg == 0.0 else -w_neg * q**g_neg * log_v
        return (onehot * pos_val + (1.0 - onehot) * neg_val).sum(axis=1)

    def _grad_hess_multiclass(self, y, z):
        p_raw = softmax(z)
        rows = np.arange(len(y))
        if self.kind in ("ce", "cbce"):
            weights = self._class_weights()
            wy = weights[y][:, None]
            onehot = np.zeros_like(p_raw)
            onehot[rows, y] = 1.0
            g = wy * (p_raw - onehot)
            h = wy * p_raw * (1.0 - p_raw)
            return g, h

        # Per-class scalar parts f_j(p_j); the softmax Jacobian couples every
        # output, so the diagonal Hessian needs the summed terms S1 and S2.
        w_pos, w_neg, g_pos, g_neg, margin = self._family_params()
        p = np.clip(p_raw, _P_EPS, 1.0 - _P_EPS)
        u = 1.0 - p
        logp = np.log(p)
        log_u = np.log1p(-p)
        onehot = np.zeros_like(p)
        onehot[rows, y] = 1.0

        a = g_pos
        if a == 0.0:
            d1_pos = -w_pos / p
            d2_pos = w_pos / (p * p)
        else:
            ua = u**a
            ua1 = u ** (a - 1.0)
            d1_pos = w_pos * (a * ua1 * logp - ua / p)
            if a == 1.0:
                d2_pos = w_pos * (2.0 / p + u / (p * p))
            else:
                ua2 = u ** (a - 2.0)
                d2_pos = w_pos * (-a * (a - 1.0) * ua2 * logp + 2.0 * a * ua1 / p + ua / (p * p))

        q = np.maximum(p - margin, 0.0)
        active = q > 0.0
        qs = np.maximum(q, _Q_EPS)
        if margin == 0.0:
            v = u
            log_v = log_u
        else:
            v = u + margin
            log_v = np.where(active, np.log(np.maximum(v, _P_EPS)), 0.0)
        b = g_neg
        if b == 0.0:
            d1_neg = w_neg / v
            d2_neg = w_neg / (v * v)
        else:
            qb = qs**b
            qb1 = qs ** (b - 1.0)
            d1_neg = w_neg * (qb / v - b * qb1 * log_v)
            if b == 1.0:
                d2_neg = w_neg * (2.0 / v + qs / (v * v))
            else:
                qb2 = qs ** (b - 2.0)
                d2_neg = w_neg * (-b * (b - 1.0) * qb2 * log_v + 2.0 * b * qb1 / v + qb / (v * v))
        d1_neg = np.where(active, d1_neg, 0.0)
        d2_neg = np.where(active, d2_neg, 0.0)

        f1 = onehot * d1_pos + (1.0 - onehot) * d1_neg
        f2 = onehot * d2_pos + (1.0 - onehot) * d2_neg
        s1 = (f1 * p).sum(axis=1, keepdims=True)
        s2 = (f2 * p * p).sum(axis=1, keepdims=True)
        g = p * (f1 - s1)
        h = p * p * s2 + (1.0 - 2.0 * p) * (p * p * f2 + g)
        return g, h


def loss_value(spec: LossSpec, y, z):
    """Module-level alias for :meth:`LossSpec.value`."""
    return spec.value(y, z)


def loss_grad_hess(spec: LossSpec, y, z, h_floor: float = DEFAULT_H_FLOOR, floor_hessian: bool = True):
    """Module-level alias for :meth:`LossSpec.grad_hess`."""
    return spec.grad_hess(y, z, h_floor=h_floor, floor_hessian=floor_hessian)

"""Tour of the class-balanced loss family.

Walks through the seven loss kinds on a small probability grid: how the
focusing exponents damp easy samples, how the probability margin clips easy
negatives to exactly zero, and how every kind collapses back to plain
cross-entropy when its parameters are neutral.
"""

import numpy as np

from cbboost import LossSpec, Task, cbce_weights, sigmoid, supports

task = Task.binary()
z = np.array([-3.0, -1.0, 0.0, 1.0, 3.0])
p = sigmoid(z)

print("probabilities under the sigmoid link:")
print("  z =", z)
print("  p =", np.round(p, 4))

print("\nper-sample loss for a POSITIVE label (y=1):")
specs = {
    "ce": LossSpec("ce", task),
    "wce(w=3)": LossSpec("wce", task, w=3.0),
    "fl(gamma=2)": LossSpec("fl", task, gamma=2.0),
    "asl(0.1, 2, m=0.2)": LossSpec("asl", task, gamma_pos=0.1, gamma_neg=2.0, margin=0.2),
    "ace(m=0.2)": LossSpec("ace", task, margin=0.2),
    "awe(w=3, m=0.2)": LossSpec("awe", task, w=3.0, margin=0.2),
}
ones = np.ones_like(z)
for name, spec in specs.items():
    print(f"  {name:22s}", np.round(spec.value(ones, z), 4))

print("\nper-sample loss for a NEGATIVE label (y=0):")
zeros = np.zeros_like(z)
for name, spec in specs.items():
    print(f"  {name:22s}", np.round(spec.value(zeros, z), 4))
print("  note how the margin losses report exactly 0 once p <= margin:")
print("  asl at p=0.1193 (z=-2):", specs["asl(0.1, 2, m=0.2)"].value(0, -2.0))

print("\ngradient/Hessian pairs drive the Newton booster; for ce at z=0:")
g, h = LossSpec("ce", task).grad_hess(1, 0.0)
print(f"  y=1: g={g:+.3f} h={h:.3f}   (p - y and p(1-p))")

print("\nreduction identities (same code path, so they hold bit for bit):")
zz = np.linspace(-4, 4, 9)
yy = np.array([0, 1] * 4 + [1])
pairs = [
    ("fl(gamma=0)", LossSpec("fl", task, gamma=0.0), LossSpec("ce", task)),
    ("wce(w=1)  ", LossSpec("wce", task, w=1.0), LossSpec("ce", task)),
    ("ace(m=0)  ", LossSpec("ace", task, margin=0.0), LossSpec("ce", task)),
]
for name, lhs, rhs in pairs:
    diff = np.abs(lhs.value(yy, zz) - rhs.value(yy, zz)).max()
    print(f"  {name} vs ce: max |diff| = {diff}")

print("\nclass-balanced cross-entropy weights from effective sample numbers:")
counts = (1200, 60)
for beta in (0.0, 0.9, 0.99, 0.999):
    print(f"  beta={beta:<6} ->", np.round(cbce_weights(counts, beta), 4))

print("\nsupported (loss, task) combinations:")
header = f"  {'':6s}" + "".join(f"{t:>12s}" for t in ("binary", "multiclass", "multilabel"))
print(header)
for kind in ("ce", "wce", "fl", "asl", "ace", "awe", "cbce"):
    row = f"  {kind:6s}"
    for t in ("binary", "multiclass", "multilabel"):
        row += f"{'yes' if supports(kind, t) else '-':>12s}"
    print(row)

"""Run configuration: one JSON document, validated strictly, with dotted
command-line overrides.

Unknown keys are rejected so a typo cannot silently fall back to a default.
Flag overrides use the dotted key path (for example `--loss.kind wce`), and
values parse as JSON where possible so numbers and booleans keep their types.
"""

from __future__ import annotations

import json
import os

from .errors import ConfigError

_DATASET_KEYS = {"path", "format", "label", "task", "name"}
_LOSS_KEYS = {"kind", "w", "gamma", "gamma_pos", "gamma_neg", "margin", "beta"}
_BOOSTER_KEYS = {
    "n_rounds",
    "learning_rate",
    "max_depth",
    "max_leaves",
    "lambda_l2",
    "alpha_l1",
    "min_samples_leaf",
    "max_bin",
    "subsample",
    "early_stopping_rounds",
    "seed",
    "h_floor",
    "one_tree_per_output",
}
_SPLIT_KEYS = {"seed", "test_fraction", "k", "stratify"}
_TUNER_KEYS = {"n_trials", "profile"}

_SECTIONS = {
    "dataset": _DATASET_KEYS,
    "datasets": None,  # list of dataset blocks (sweep only)
    "loss": _LOSS_KEYS,
    "losses": None,  # list of loss kinds (sweep only)
    "profiles": None,  # list of profile names (sweep only)
    "booster": _BOOSTER_KEYS,
    "split": _SPLIT_KEYS,
    "tuner": _TUNER_KEYS,
    "out_dir": None,
    "seed": None,
    "threads": None,
}


def load_config(path) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}", key="config")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", key="config") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", key="config")
    return doc


def validate_config(doc: dict) -> None:
    """Reject unknown keys anywhere in the document, naming the first offender."""
    for key, value in doc.items():
        if key not in _SECTIONS:
            raise ConfigError(f"unknown config key {key!r}", key=key)
        allowed = _SECTIONS[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"config section {key!r} must be an object", key=key)
        for sub in value:
            if sub not in allowed:
                raise ConfigError(f"unknown config key {key}.{sub!r}", key=f"{key}.{sub}")
    for i, block in enumerate(doc.get("datasets", []) or []):
        if not isinstance(block, dict):
            raise ConfigError("datasets entries must be objects", key=f"datasets[{i}]")
        for sub in block:
            if sub not in _DATASET_KEYS:
                raise ConfigError(f"unknown config key datasets[{i}].{sub!r}", key=f"datasets[{i}].{sub}")


def _parse_flag_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply `--a.b value` style overrides onto the config document."""
    out = json.loads(json.dumps(doc))
    i = 0
    while i < len(overrides):
        flag = overrides[i]
        if not flag.startswith("--"):
            raise ConfigError(f"unexpected argument {flag!r}", key=flag)
        path = flag[2:]
        if "=" in path:
            path, raw = path.split("=", 1)
        else:
            if i + 1 >= len(overrides):
                raise ConfigError(f"flag {flag!r} is missing a value", key=path)
            raw = overrides[i + 1]
            i += 1
        parts = path.split(".")
        target = out
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"cannot override scalar {part!r} with a nested key", key=path)
        target[parts[-1]] = _parse_flag_value(raw)
        i += 1
    return out


def require(doc: dict, key: str):
    """Fetch a dotted key, raising the standard error when it is absent."""
    target = doc
    for part in key.split("."):
        if not isinstance(target, dict) or part not in target:
            raise ConfigError(f"missing required config key {key!r}", key=key)
        target = target[part]
    return target

"""Pipeline configuration.

One JSON file drives every subcommand. The key schema below is exhaustive:
unknown keys are rejected with an error naming the full dotted key, so typos
fail loudly instead of silently falling back to defaults. Flag overrides
(``--set section.key=value``) must also name known keys and win over the
file.

Defaults reproduce the documented training hyperparameters (classifier:
dim 256, lr 0.1, word n-grams up to 3, min_count 3, epochs 3) and schedule
values (WSD max_lr 2e-5, 3% warmup, 10% decay; cosine max_lr 5e-6).

The gateway credential is looked up from the environment variable NAMED by
``gateway.token_env``; the secret itself never lives in the config file.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Iterable

DEFAULTS: dict[str, Any] = {
    "paths": {
        "in_domain": None,     # in-domain corpus JSONL (classifier positives)
        "general": None,       # general corpus JSONL (negatives / selection pool)
        "problems": None,      # task problem pools JSONL for synthesis
        "predictions": None,   # {score,label} JSONL for evaluate auc
        "judge_cases": None,   # judge cases JSONL for evaluate winrate
        "rewrites": None,      # rewrite sets JSONL for evaluate rewrites
        "model": None,         # model file override (default: <output>/model.traitft)
        "selected": None,      # selected corpus override (default: <output>/selected.jsonl)
        "synthetic": None,     # synthetic corpus override (default: <output>/passages.jsonl)
        "output": None,        # artifact directory (required by most subcommands)
    },
    "runtime": {
        "workers": 1,
    },
    "classifier": {
        "dim": 256,
        "learning_rate": 0.1,
        "max_word_ngram": 3,
        "min_count": 3,
        "epochs": 3,
        "bucket_count": 2_000_000,
        "seed": 17,
    },
    "selection": {
        "mode": "token_budget",
        "budget_tokens": None,
        "k": None,
        "min_score": None,
    },
    "quality": {
        "scorer": "heuristic",  # heuristic | gateway
        "threshold": 1.5,
    },
    "gateway": {
        "mode": "mock",  # mock | http
        "endpoint": None,
        "model": "gpt-4",
        "token_env": "CHAT_GATEWAY_TOKEN",
        "temperature": 0.7,
        "max_tokens": 1200,
        "seed": 17,
        "max_retries": 3,
        "backoff_base": 0.5,
        "timeout": 60.0,
        "max_in_flight": 4,
        "transcript": "gateway.jsonl",  # relative to output dir; null disables
    },
    "synthesis": {
        "mode": "entity_centered",
        "problems_per_passage": 2,
        "passage_count": 20,
        "min_paragraph_words": 20,
        "max_attempts": 3,
        "seed": 17,
    },
    "mixture": {
        "batch_size_tokens": 1_048_576,
        "interleave": "concatenate_shuffled",
        "seed": 17,
        "in_domain_budget": None,
        "selected_budget": None,
        "synthetic_budget": None,
        "schedule": {
            "type": "wsd",
            "total_steps": None,
            "max_lr": 2e-5,
            "warmup_frac": 0.03,
            "decay_frac": 0.10,
            "decay_floor_ratio": 0.10,
        },
    },
    "evaluation": {
        "similarity_threshold": 0.8,
        "judge_max_attempts": 2,
    },
}


class ConfigError(Exception):
    """Bad configuration: unknown key, type mismatch, unreadable file."""


def _check_against_schema(user: Any, schema: Any, prefix: str) -> None:
    if not isinstance(user, dict):
        raise ConfigError(f"config section {prefix or '<root>'} must be an object")
    for key, value in user.items():
        dotted = f"{prefix}.{key}" if prefix else key
        if key not in schema:
            raise ConfigError(f"unknown config key: {dotted}")
        default = schema[key]
        if isinstance(default, dict):
            _check_against_schema(value, default, dotted)
        elif value is not None and default is not None:
            expected, got = type(default), type(value)
            # ints are acceptable wherever floats are expected
            if expected is float and got is int:
                continue
            if expected is not got or isinstance(value, bool) != isinstance(default, bool):
                raise ConfigError(
                    f"config key {dotted} expects {expected.__name__}, "
                    f"got {got.__name__}"
                )


def _deep_merge(base: dict, user: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in user.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    dotted, raw = item.split("=", 1)
    dotted = dotted.strip()
    if not dotted:
        raise ConfigError(f"override has an empty key: {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings may be given unquoted
    return dotted, value


class PipelineConfig:
    """Validated, fully-defaulted configuration tree."""

    def __init__(self, data: dict[str, Any] | None = None):
        data = data or {}
        _check_against_schema(data, DEFAULTS, "")
        self._data = _deep_merge(DEFAULTS, data)

    @classmethod
    def load(
        cls,
        path: str | Path | None = None,
        overrides: Iterable[str] = (),
    ) -> "PipelineConfig":
        data: dict[str, Any] = {}
        if path is not None:
            try:
                text = Path(path).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config file {path}: {exc}") from exc
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"config file {path} must hold a JSON object")
        config = cls(data)
        for item in overrides:
            dotted, value = _parse_override(item)
            config.set(dotted, value)
        return config

    def _walk(self, dotted: str) -> tuple[dict, str]:
        parts = dotted.split(".")
        node = self._data
        schema = DEFAULTS
        for part in parts[:-1]:
            if not isinstance(schema, dict) or part not in schema:
                raise ConfigError(f"unknown config key: {dotted}")
            node = node[part]
            schema = schema[part]
        leaf = parts[-1]
        if not isinstance(schema, dict) or leaf not in schema:
            raise ConfigError(f"unknown config key: {dotted}")
        if isinstance(schema[leaf], dict):
            raise ConfigError(f"config key {dotted} is a section, not a value")
        return node, leaf

    def get(self, dotted: str) -> Any:
        node, leaf = self._walk(dotted)
        return node[leaf]

    def set(self, dotted: str, value: Any) -> None:
        node, leaf = self._walk(dotted)
        node[leaf] = value

    def require(self, dotted: str) -> Any:
        value = self.get(dotted)
        if value is None:
            raise ConfigError(f"missing required config key: {dotted}")
        return value

    def section(self, name: str) -> dict[str, Any]:
        if name not in DEFAULTS:
            raise ConfigError(f"unknown config key: {name}")
        return copy.deepcopy(self._data[name])

    def to_dict(self) -> dict[str, Any]:
        return copy.deepcopy(self._data)

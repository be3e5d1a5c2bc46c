"""Canonical JSON, schema validation and exit codes shared by the CLI and the suites."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .laurent import EXACT

SCHEMA_TAG = "ltpg/1"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REFUTED = 2
EXIT_INCONCLUSIVE = 3


class InputError(ValueError):
    """Unreadable or schema-invalid input; maps to exit code 1."""


def _plain(x):
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        x = int(x)
        return "exact" if x >= EXACT else x
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def canonical(obj) -> str:
    """Sorted keys, fixed separators, UTF-8: equal inputs give byte-identical text."""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def envelope(command: str, status: str, result, **extra) -> dict:
    out = {"schema": SCHEMA_TAG, "command": command, "status": status, "result": result}
    out.update(extra)
    return out


def exit_code(status: str) -> int:
    return {"ok": EXIT_OK, "pass": EXIT_OK, "refuted": EXIT_REFUTED, "fail": EXIT_REFUTED,
            "inconclusive": EXIT_INCONCLUSIVE, "unstable": EXIT_INCONCLUSIVE}.get(status, EXIT_INPUT)


@lru_cache(maxsize=None)
def schema(name: str) -> dict:
    text = resources.files("ltpg").joinpath("schemas", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(doc, name: str):
    try:
        jsonschema.validate(doc, schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"{name} schema violation at {where}: {exc.message}") from None
    return doc


def load_json(path: str, name: str = None):
    """Parse a JSON file; parse errors report line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return validate(doc, name) if name else doc

"""
Experiment config loading.

Two encodings of the same keys are accepted: a flat ``section.key = value`` file (``#`` starts a
comment, values are JSON literals or bare strings) and JSON (nested or flat dotted keys).
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from models.experiment import ExperimentConfig
from models.responses import Diagnostic
from utils.errors import ConfigurationError, ConfigValidationError

logger = logging.getLogger(__name__)

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")
_BRACKETED = re.compile(r"\[([A-Za-z0-9_.]+)\]\s*(.*)", re.DOTALL)


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _strip_comment(line: str) -> str:
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return line[:i]
    return line


def parse_keyfile(text: str) -> tuple[dict[str, Any], dict[str, int], list[Diagnostic]]:
    """Flat dotted keys -> (values, line of each key, syntax diagnostics)."""
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    problems: list[Diagnostic] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(Diagnostic(key="", message=f"expected 'key = value', got '{line}'", line=number))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY.match(key):
            problems.append(Diagnostic(key=key, message="malformed key", line=number))
            continue
        if key in values:
            problems.append(
                Diagnostic(key=key, message=f"duplicate key (first set on line {lines[key]})", line=number)
            )
            continue
        values[key] = _parse_value(value)
        lines[key] = number
    return values, lines, problems


def _flatten(data: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def nest(flat: dict[str, Any]) -> dict[str, Any]:
    """{'fl.N': 20} -> {'fl': {'N': 20}}; a key that is both a leaf and a section is an error."""
    tree: dict[str, Any] = {}
    for dotted, value in flat.items():
        node = tree
        parts = dotted.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigValidationError(
                    f"Key '{dotted}' conflicts with a value set for '{part}'",
                    details={"diagnostics": [Diagnostic(key=dotted, message="conflicting key").model_dump()]},
                )
            node = child
        node[parts[-1]] = value
    return tree


def _diagnostics(error: ValidationError, lines: dict[str, int]) -> list[Diagnostic]:
    found = []
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"])
        message = item["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        match = _BRACKETED.match(message)
        if match:
            key, message = match.group(1), match.group(2)
        found.append(Diagnostic(key=key, message=message, line=lines.get(key)))
    return found


def _raise(diagnostics: list[Diagnostic], source: str):
    summary = "; ".join(
        f"{d.key or '<line>'}{f' (line {d.line})' if d.line else ''}: {d.message}" for d in diagnostics
    )
    raise ConfigValidationError(
        f"Invalid config {source}: {summary}",
        details={"diagnostics": [d.model_dump() for d in diagnostics]},
    )


def load_config_text(
    text: str, source: str = "<string>", overrides: Optional[dict[str, Any]] = None
) -> ExperimentConfig:
    """Parse and validate config text; `overrides` are dotted keys applied last."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            flat = _flatten(json.loads(text))
        except json.JSONDecodeError as e:
            _raise([Diagnostic(key="", message=f"invalid JSON: {e.msg}", line=e.lineno)], source)
        lines: dict[str, int] = {}
    else:
        flat, lines, problems = parse_keyfile(text)
        if problems:
            _raise(problems, source)

    flat.update(overrides or {})
    try:
        return ExperimentConfig.model_validate(nest(flat))
    except ValidationError as e:
        _raise(_diagnostics(e, lines), source)


def load_config(path: str | Path, overrides: Optional[dict[str, Any]] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    cfg = load_config_text(path.read_text(encoding="utf-8"), str(path), overrides)
    logger.debug(f"Loaded config {path}")
    return cfg

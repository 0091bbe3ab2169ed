"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored; keys must be unique.
"""

from __future__ import annotations

from pathlib import Path

from .errors import PerturbationError


class ConfigError(PerturbationError, ValueError):
    """Raised for malformed or invalid configuration files."""


def parse_key_values(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def format_key_values(items: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items.items())

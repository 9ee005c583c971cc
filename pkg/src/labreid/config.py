"""Reader for the line-oriented text config format used across the package.

All config files (label maps, latent-space geometry, color names, presets)
share one shape: a versioned header line ``<kind> v<N>`` followed by
whitespace-separated entry lines.  ``#`` starts a comment, blank lines are
skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class ConfigDoc:
    kind: str
    version: int
    entries: tuple[tuple[str, ...], ...]
    source: str


def parse_config_text(text: str, expected_kind: str, source: str = "<string>") -> ConfigDoc:
    header: tuple[str, ...] | None = None
    entries: list[tuple[str, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = tuple(line.split())
        if header is None:
            header = tokens
            continue
        entries.append(tokens)
    if header is None:
        raise ConfigError(f"{source}: empty config file, expected '{expected_kind} v<N>' header")
    if len(header) != 2 or header[0] != expected_kind or not header[1].startswith("v"):
        raise ConfigError(
            f"{source}: bad header {' '.join(header)!r}, expected '{expected_kind} v<N>'"
        )
    try:
        version = int(header[1][1:])
    except ValueError:
        raise ConfigError(f"{source}: bad version token {header[1]!r}") from None
    return ConfigDoc(kind=expected_kind, version=version, entries=tuple(entries), source=source)


def read_config(path: str | Path, expected_kind: str) -> ConfigDoc:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config_text(text, expected_kind, source=str(p))

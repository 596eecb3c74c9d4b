"""Flat ``key = value`` files used for schemas and run configs.

Grammar (see ``docs/config.md``)::

    file    := line*
    line    := blank | comment | entry
    comment := ws* "#" any*
    entry   := ws* key ws* "=" ws* value ws*
    key     := [A-Za-z0-9_.-]+

Repeated keys are legal and express lists; order is preserved.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path

_KEY = re.compile(r"^[A-Za-z0-9_.\-]+$")


class ConfigError(ValueError):
    pass


@dataclass
class KeyValues:
    entries: list = field(default_factory=list)  # (key, value, lineno)
    source: str = "<string>"

    def keys(self):
        seen = []
        for key, _, _ in self.entries:
            if key not in seen:
                seen.append(key)
        return seen

    def get_all(self, key):
        return [v for k, v, _ in self.entries if k == key]

    def get(self, key, default=None):
        values = self.get_all(key)
        if not values:
            return default
        if len(values) > 1:
            lines = [n for k, _, n in self.entries if k == key]
            raise ConfigError(f"{self.source}: key '{key}' given more than once (lines {lines})")
        return values[0]

    def require(self, key):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"{self.source}: missing required key '{key}'")
        return value


def parse_kv(text: str, source: str = "<string>") -> KeyValues:
    out = KeyValues(source=source)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not _KEY.match(key):
            raise ConfigError(f"{source}:{lineno}: invalid key {key!r}")
        out.entries.append((key, value.strip(), lineno))
    return out


def read_kv(path) -> KeyValues:
    path = Path(path)
    return parse_kv(path.read_text(encoding="utf-8"), source=str(path))


def format_kv(entries) -> str:
    return "".join(f"{k} = {v}\n" for k, v in entries)


def split_list(value: str):
    return [item.strip() for item in value.split(",") if item.strip()]

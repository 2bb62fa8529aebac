"""Flat key-value text files (manifests, metadata sidecars, config files).

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored.  Values are stored verbatim; callers convert types.
"""

from __future__ import annotations

from pathlib import Path


def write_kv(path, items: dict) -> None:
    lines = [f"{key} = {value}" for key, value in items.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_kv(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out

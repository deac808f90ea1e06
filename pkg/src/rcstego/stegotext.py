"""Stegotext exchange format: a versioned header line plus token ids.

    rcstego-stegotext 1
    <id> <id> <id> ...

Surface-text detokenization is provider-specific and lives with the
provider; this file format is the interoperable artifact.
"""

from __future__ import annotations

from pathlib import Path

from .errors import CodecError

_MAGIC = "rcstego-stegotext 1"


def dump_stegotext(tokens, path) -> None:
    Path(path).write_text(_MAGIC + "\n" + " ".join(str(t) for t in tokens) + "\n", encoding="utf-8")


def load_stegotext(path) -> list[int]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _MAGIC:
        raise CodecError(f"not a stegotext file: {path}")
    body = lines[1].split() if len(lines) > 1 else []
    return [int(t) for t in body]

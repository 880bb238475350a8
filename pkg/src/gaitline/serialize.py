"""Versioned JSON model files.

Python's JSON encoder writes floats with ``repr``, so every float survives a
dump/load cycle bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

from gaitline.errors import DataError

FORMAT = "gaitline-model"
VERSION = 1


def dumps(kind: str, payload: dict) -> str:
    doc = {"format": FORMAT, "version": VERSION, "kind": kind, **payload}
    return json.dumps(doc, sort_keys=True, allow_nan=False) + "\n"


def loads(text: str, kind: str | None = None) -> dict:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise DataError("not a gaitline model file")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported model file version {doc.get('version')!r}")
    if kind is not None and doc.get("kind") != kind:
        raise DataError(f"expected a {kind} model, found {doc.get('kind')!r}")
    return doc


def save(path: str | Path, kind: str, payload: dict) -> None:
    Path(path).write_text(dumps(kind, payload), encoding="utf-8")


def load(path: str | Path, kind: str | None = None) -> dict:
    return loads(Path(path).read_text(encoding="utf-8"), kind)

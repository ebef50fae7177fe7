"""Line-delimited JSON record helpers.

Every on-disk artifact of the package (postings, taxonomy, corpus exports,
reports) is a UTF-8 file with one JSON object per line.  Writers emit keys in
sorted order so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, Iterator, Mapping

from .errors import LoadError


def dumps_record(obj: Mapping[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def read_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs, skipping blank lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"invalid JSON ({exc.msg})", path=path, line=lineno)
            if not isinstance(obj, dict):
                raise LoadError("expected a JSON object", path=path, line=lineno)
            yield lineno, obj


def write_jsonl(path, rows: Iterable[Mapping[str, Any]]) -> int:
    """Write records one per line; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(dumps_record(row))
            fh.write("\n")
            count += 1
    return count


def require_fields(record: dict, fields: Iterable[str], *, path=None, line=None) -> None:
    for name in fields:
        if name not in record:
            raise LoadError(f"missing field {name!r}", path=path, line=line)


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)

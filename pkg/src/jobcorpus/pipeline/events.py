"""Append-only event log with periodic state snapshots.

Every state transition is an appended JSON line; replaying the log from the
start (or from a snapshot's sequence number) reconstructs the run exactly.
"""

from __future__ import annotations

import json
import os
from typing import Iterator

from ..errors import LoadError
from ..records import dumps_record, ensure_dir


class MemoryEventLog:
    """In-process log for tests and throwaway runs."""

    def __init__(self):
        self._events: list[dict] = []

    @property
    def last_seq(self) -> int:
        return len(self._events)

    def append(self, event: dict) -> int:
        seq = len(self._events) + 1
        self._events.append({"seq": seq, **event})
        return seq

    def events(self, after_seq: int = 0) -> Iterator[dict]:
        for event in self._events[after_seq:]:
            yield dict(event)


class FileEventLog:
    """Durable log: one JSON object per line, flushed and fsynced per append."""

    def __init__(self, path):
        self.path = path
        if not os.path.exists(path):
            with open(path, "w", encoding="utf-8"):
                pass
        self._count = sum(1 for _ in self.events())

    @property
    def last_seq(self) -> int:
        return self._count

    def append(self, event: dict) -> int:
        seq = self._count + 1
        line = dumps_record({"seq": seq, **event})
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line)
            fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._count = seq
        return seq

    def events(self, after_seq: int = 0) -> Iterator[dict]:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise LoadError(f"corrupt event ({exc.msg})", path=self.path, line=lineno)
                if event.get("seq", 0) > after_seq:
                    yield event


def save_snapshot(directory, payload: dict) -> str:
    """Write a full-state snapshot named by the last applied sequence number."""
    ensure_dir(directory)
    seq = int(payload["seq"])
    path = os.path.join(directory, f"snapshot-{seq:08d}.json")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def latest_snapshot(directory) -> dict | None:
    if not os.path.isdir(directory):
        return None
    names = sorted(n for n in os.listdir(directory) if n.startswith("snapshot-") and n.endswith(".json"))
    if not names:
        return None
    with open(os.path.join(directory, names[-1]), encoding="utf-8") as fh:
        return json.load(fh)

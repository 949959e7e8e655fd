"""Newline-delimited JSON event log with size-based rotation and querying.

One record per completed turn plus session open/close markers. The writer is
the only shared mutable sink in the service, so appends are serialized.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


class EventLogWriter:
    def __init__(self, path: str, rotate_bytes: int = 10 * 1024 * 1024):
        self.path = path
        self.rotate_bytes = rotate_bytes
        self._lock = threading.Lock()
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False, default=str)
        with self._lock:
            self._rotate_if_needed(len(line) + 1)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def _rotate_if_needed(self, incoming: int) -> None:
        try:
            size = os.path.getsize(self.path)
        except OSError:
            return
        if size + incoming <= self.rotate_bytes:
            return
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%f")
        os.replace(self.path, f"{self.path}.{stamp}")


def iter_records(path: str):
    """Yield parsed records; malformed lines are counted, not fatal."""
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                skipped += 1
    if skipped:
        yield {"_skipped_lines": skipped}


def query_logs(
    path: str,
    session_id: str | None = None,
    tactic: str | None = None,
    since: str | None = None,
) -> tuple[list[dict], int]:
    """Filtered records in timestamp order, plus the malformed-line count."""
    records: list[dict] = []
    skipped = 0
    for record in iter_records(path):
        if "_skipped_lines" in record:
            skipped = record["_skipped_lines"]
            continue
        if session_id and record.get("session_id") != session_id:
            continue
        if tactic and tactic not in record.get("tactic_tags", []):
            continue
        if since and record.get("ts", "") < since:
            continue
        records.append(record)
    records.sort(key=lambda r: r.get("ts", ""))
    return records, skipped

from __future__ import annotations

import json
import os
import threading

from termpot.eventlog import EventLogWriter, query_logs


def test_append_and_query_roundtrip(tmp_path):
    path = str(tmp_path / "events.jsonl")
    sink = EventLogWriter(path)
    sink.append({"ts": "2026-01-01T00:00:00Z", "session_id": "a", "tactic_tags": ["RECON_HOST"]})
    sink.append({"ts": "2026-01-01T00:00:01Z", "session_id": "b", "tactic_tags": ["SPOOFING"]})
    records, skipped = query_logs(path)
    assert len(records) == 2 and skipped == 0
    records, _ = query_logs(path, session_id="a")
    assert [r["session_id"] for r in records] == ["a"]
    records, _ = query_logs(path, tactic="SPOOFING")
    assert [r["session_id"] for r in records] == ["b"]


def test_since_filter_and_ordering(tmp_path):
    path = str(tmp_path / "events.jsonl")
    sink = EventLogWriter(path)
    # written out of order on purpose
    sink.append({"ts": "2026-01-02T00:00:00Z", "session_id": "late"})
    sink.append({"ts": "2026-01-01T00:00:00Z", "session_id": "early"})
    records, _ = query_logs(path)
    assert [r["session_id"] for r in records] == ["early", "late"]
    records, _ = query_logs(path, since="2026-01-01T12:00:00Z")
    assert [r["session_id"] for r in records] == ["late"]
    records, _ = query_logs(path, since="2099-01-01T00:00:00Z")
    assert records == []


def test_malformed_lines_skipped_and_counted(tmp_path):
    path = tmp_path / "events.jsonl"
    path.write_text('{"ts": "1", "session_id": "ok"}\nnot json at all\n{"ts": "2"}\n')
    records, skipped = query_logs(str(path))
    assert len(records) == 2
    assert skipped == 1


def test_rotation_by_size(tmp_path):
    path = str(tmp_path / "events.jsonl")
    sink = EventLogWriter(path, rotate_bytes=200)
    for i in range(20):
        sink.append({"ts": f"2026-01-01T00:00:{i:02d}Z", "n": i, "pad": "x" * 40})
    siblings = [p for p in os.listdir(tmp_path) if p.startswith("events.jsonl.")]
    assert siblings, "expected rotated segments"
    assert os.path.getsize(path) <= 200


def test_concurrent_appends_do_not_interleave(tmp_path):
    path = str(tmp_path / "events.jsonl")
    sink = EventLogWriter(path)

    def writer(k):
        for i in range(50):
            sink.append({"ts": f"t{k}-{i}", "payload": "y" * 100})

    threads = [threading.Thread(target=writer, args=(k,)) for k in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert len(lines) == 400
    for line in lines:
        json.loads(line)

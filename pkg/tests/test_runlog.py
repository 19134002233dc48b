# python
"""
tests/test_runlog.py
JSONL run events and the deterministic CSV/JSON artifact writers.
"""
import asyncio
import json
import math
from pathlib import Path

import numpy as np

from epblowup.runlog import RunSession, format_float, write_csv, write_json


def test_format_float_round_trips_exactly() -> None:
    assert format_float(0.1) == "1.0000000000000001e-01"
    assert float(format_float(1.0 / 3.0)) == 1.0 / 3.0
    assert format_float(np.float64(2.5)) == "2.5000000000000000e+00"
    assert format_float(None) == ""
    assert format_float(True) == "1"
    assert format_float("blow-up") == "blow-up"
    assert format_float(math.inf) == "inf"


def test_write_csv_is_byte_identical(tmp_path: Path) -> None:
    rows = [(0.1, "smooth", None), (np.float64(-2.0), "blow-up", 3)]
    a = write_csv(tmp_path / "a" / "x.csv", ("v", "outcome", "t"), rows)
    b = write_csv(tmp_path / "b" / "x.csv", ("v", "outcome", "t"), rows)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "v,outcome,t"
    assert lines[1] == "1.0000000000000001e-01,smooth,"
    assert lines[2] == "-2.0000000000000000e+00,blow-up,3.0000000000000000e+00"


def test_write_json_handles_numpy_and_infinity(tmp_path: Path) -> None:
    path = write_json(tmp_path / "r.json", {"b": np.int64(3), "a": [np.float64(0.5), math.inf]})
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data == {"a": [0.5, "inf"], "b": 3}
    assert path.read_text(encoding="utf-8").index('"a"') < path.read_text(encoding="utf-8").index('"b"')


def test_session_writes_jsonl(tmp_path: Path) -> None:
    events = tmp_path / "out" / "events.jsonl"
    session = RunSession("classify", events_file=str(events))

    async def _go() -> None:
        await session.log("config.loaded", "config", source=None)
        await session.close("ok", 0)

    asyncio.run(_go())
    recs = [json.loads(line) for line in events.read_text(encoding="utf-8").splitlines()]
    assert [r["event"] for r in recs] == ["config.loaded", "run.close"]
    assert all(r["run_id"] == session.run_id for r in recs)
    assert recs[1]["payload"]["exit_code"] == 0
    assert recs[0]["ts"].endswith("Z")


def test_session_without_persistence_keeps_memory_only(tmp_path: Path) -> None:
    events = tmp_path / "events.jsonl"
    session = RunSession("scan-r", events_file=str(events), persist=False)
    asyncio.run(session.log("point.classified", "scan-r", outcome="smooth"))
    assert not events.exists()
    assert session.events[0]["payload"] == {"outcome": "smooth"}

# python
"""
epblowup/runlog.py
RunSession dataclass, JSONL event records and the CSV/JSON artifact writers.
"""
from dataclasses import dataclass, field
import asyncio
import csv
import datetime
import json
import math
import pathlib
import uuid
from typing import Any, Dict, Iterable, List, Sequence

EVENT_VERSION = "0.1"

_EVENT_LOCK = asyncio.Lock()


def iso_ts() -> str:
    """
    Return a timezone-aware UTC ISO timestamp (Z suffix) for logging.
    """
    dt = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)
    return dt.isoformat().replace("+00:00", "Z")


def ensure_dir(path: pathlib.Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def _jsonable(value: Any) -> Any:
    # numpy scalars and non-finite floats do not survive json.dumps unchanged
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        try:
            value = value.item()
        except (TypeError, ValueError):
            return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


@dataclass
class RunSession:
    command: str
    events_file: str = "out/events.jsonl"
    run_id: str = field(default_factory=lambda: str(uuid.uuid4()))
    started_ts: str = field(
        default_factory=lambda: datetime.datetime.now(datetime.timezone.utc).isoformat()
    )
    persist: bool = True
    events: List[Dict[str, Any]] = field(default_factory=list, repr=False)

    async def log(self, event: str, phase: str, **fields: Any) -> None:
        rec = {
            "ts": iso_ts(),
            "run_id": self.run_id,
            "command": self.command,
            "event": event,
            "phase": phase,
            "version": EVENT_VERSION,
            "payload": _jsonable(fields or {}),
        }
        self.events.append(rec)
        if not self.persist:
            return
        async with _EVENT_LOCK:
            ensure_dir(pathlib.Path(self.events_file).parent)
            with open(self.events_file, "a", encoding="utf-8") as f:
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def duration_ms(self) -> int:
        started = datetime.datetime.fromisoformat(self.started_ts)
        now = datetime.datetime.now(datetime.timezone.utc)
        return int((now - started).total_seconds() * 1000)

    async def close(self, status: str, exit_code: int) -> None:
        await self.log(
            "run.close", "close", status=status, exit_code=exit_code, duration_ms=self.duration_ms()
        )


# ---------------------------------------------------------------- artifacts


def format_float(value: Any) -> str:
    """17 significant digits, scientific; blanks for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, float)) or hasattr(value, "item"):
        x = float(value)
        return f"{x:.16e}" if math.isfinite(x) else str(x)
    return str(value)


def write_csv(path: pathlib.Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> pathlib.Path:
    path = pathlib.Path(path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    return path


def write_json(path: pathlib.Path, obj: Any) -> pathlib.Path:
    path = pathlib.Path(path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(obj), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path

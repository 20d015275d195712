"""Recording every published frame to a JSON-lines log, and replaying logs
back through a bus at controllable speed. Timestamps are simulation-clock
seconds so the same log always replays the same way."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional, TextIO

from .bus import TopicBus
from .protocol import canonical_dumps

LOG_FORMAT = "clearbot-log/1"


class IoFailure(OSError):
    pass


class NonMonotoneTime(ValueError):
    pass


@dataclass(frozen=True)
class LogRecord:
    t: float
    topic: str
    schema: str
    payload: Any

    def line(self) -> str:
        return canonical_dumps(
            {"t": self.t, "topic": self.topic, "schema": self.schema, "msg": self.payload}
        )


class Recorder:
    """Bus tap that appends one line per published frame. The header line
    carries the format version and scenario metadata."""

    def __init__(self, sink: TextIO, scenario: str = ""):
        self._sink = sink
        self.count = 0
        self._closed = False
        try:
            sink.write(canonical_dumps({"format": LOG_FORMAT, "scenario": scenario}) + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot write log header: {exc}") from exc

    def tap(self, t: float, topic: str, schema: str, payload: Any) -> None:
        if self._closed:
            return
        try:
            self._sink.write(LogRecord(t, topic, schema, payload).line() + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot append log record: {exc}") from exc
        self.count += 1

    def attach(self, bus: TopicBus) -> "Recorder":
        bus.add_tap(self.tap)
        return self

    def close(self) -> int:
        """Flush and stop recording; returns the record count."""
        if not self._closed:
            self._closed = True
            try:
                self._sink.flush()
            except OSError as exc:
                raise IoFailure(f"cannot flush log: {exc}") from exc
        return self.count


def read_log(lines: Iterable[str]):
    """Parse a log: (header, records, corrupt_count). Corrupt data lines are
    skipped and counted instead of aborting a whole replay."""
    it = iter(lines)
    try:
        first = next(it)
    except StopIteration:
        raise IoFailure("log is empty (missing header)") from None
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise IoFailure(f"log header is not JSON: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != LOG_FORMAT:
        raise IoFailure(f"unsupported log format: {header!r}")

    records: list[LogRecord] = []
    corrupt = 0
    for line in it:
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
            rec = LogRecord(float(raw["t"]), str(raw["topic"]),
                            str(raw["schema"]), raw["msg"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            corrupt += 1
            continue
        records.append(rec)
    for a, b in zip(records, records[1:]):
        if b.t < a.t:
            raise NonMonotoneTime(f"record at t={b.t} follows t={a.t}")
    return header, records, corrupt


def replay(
    lines: Iterable[str],
    bus: TopicBus,
    speed: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
    on_skip: Optional[Callable[[int], None]] = None,
) -> int:
    """Re-publish a log's frames on their original topics, pacing inter-frame
    gaps by delta_t / speed. speed=inf replays as fast as possible, order
    preserved. Returns the publish count."""
    if speed <= 0.0:
        raise ValueError("speed must be > 0")
    header, records, corrupt = read_log(lines)
    if corrupt and on_skip is not None:
        on_skip(corrupt)
    prev_t: Optional[float] = None
    published = 0
    for rec in records:
        if prev_t is not None and math.isfinite(speed):
            gap = (rec.t - prev_t) / speed
            if gap > 0.0:
                sleep(gap)
        prev_t = rec.t
        bus.ensure_topic(rec.topic, rec.schema)
        bus.publish(rec.topic, rec.schema, rec.payload)
        published += 1
    return published

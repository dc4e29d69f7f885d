"""Append-only adherence event log, one NDJSON file per device.

Event ids are dense and strictly increasing per device, so replay either
reconstructs the exact history or fails loudly.  A torn final line (the
process died mid-write) is dropped on load; a torn line anywhere else is
corruption and refuses to load.  Weights are stored as the exact ``xx.x``
wire strings.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path


class EventLogError(RuntimeError):
    code = "event-log"


@dataclass(frozen=True)
class AdherenceEvent:
    event_id: int
    device_id: str
    timestamp: float
    previous_weight: str
    current_weight: str
    doses_taken: int
    verdict_kind: str
    verdict_count: int
    message: str
    prescription: dict = field(hash=False)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AdherenceEvent":
        return cls(**d)


class EventLog:
    def __init__(self, path):
        self.path = Path(path)
        self._events: list[AdherenceEvent] = []
        if self.path.exists():
            self._load()

    def _load(self):
        lines = self.path.read_text(encoding="utf-8").splitlines()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                event = AdherenceEvent.from_dict(json.loads(line))
            except (json.JSONDecodeError, TypeError) as e:
                if i == len(lines) - 1:
                    break  # torn tail from an interrupted append
                raise EventLogError(f"{self.path}: corrupt line {i + 1}") from e
            expected = self._events[-1].event_id + 1 if self._events else 1
            if event.event_id != expected:
                raise EventLogError(
                    f"{self.path}: event id {event.event_id}, expected {expected}"
                )
            self._events.append(event)

    def append(self, event: AdherenceEvent):
        expected = self._events[-1].event_id + 1 if self._events else 1
        if event.event_id != expected:
            raise EventLogError(f"event id {event.event_id}, expected {expected}")
        line = json.dumps(event.to_dict(), sort_keys=True)
        # durable before visible: memory only updated after the line is on disk
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
            f.flush()
            os.fsync(f.fileno())
        self._events.append(event)

    def events(self, since: int = 0) -> list[AdherenceEvent]:
        return [e for e in self._events if e.event_id > since]

    def last(self) -> AdherenceEvent | None:
        return self._events[-1] if self._events else None

    def __len__(self) -> int:
        return len(self._events)

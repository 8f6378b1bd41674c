"""Append-only run log: every frame in/out plus internal referee events.

Records are ordered by emission; ``sim_time`` is the simulated clock at the
moment of the event. Wall-clock values never enter the log, so two runs of
the same scenario with the same agent produce byte-identical files.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any

from .jsonutil import canonical_json


@dataclass(frozen=True)
class EventLogRecord:
    seq: int  # 1-based emission index
    sim_time: float
    direction: str  # in | out | internal
    payload: str  # canonical frame text, or canonical JSON of an internal event

    def to_line(self) -> str:
        return canonical_json(
            {
                "seq": self.seq,
                "sim_time": self.sim_time,
                "dir": self.direction,
                "payload": self.payload,
            }
        )


class EventLog:
    def __init__(self):
        self._records: list[EventLogRecord] = []
        self._lock = threading.Lock()

    def _append(self, sim_time: float, direction: str, payload: str) -> None:
        with self._lock:
            self._records.append(
                EventLogRecord(len(self._records) + 1, sim_time, direction, payload)
            )

    def frame_in(self, sim_time: float, frame_text: str) -> None:
        self._append(sim_time, "in", frame_text)

    def frame_out(self, sim_time: float, frame_text: str) -> None:
        self._append(sim_time, "out", frame_text)

    def internal(self, sim_time: float, event: dict[str, Any]) -> None:
        self._append(sim_time, "internal", canonical_json(event))

    @property
    def records(self) -> list[EventLogRecord]:
        with self._lock:
            return list(self._records)

    def to_text(self) -> str:
        return "".join(record.to_line() + "\n" for record in self.records)

"""Time-ordered event queue (FIFO among equal times)."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any

KINDS = ("TrainEnd", "MsgArrive", "ReportDue", "BusyToggle", "AggDone", "BroadcastHop", "Fault")


@dataclass
class SimEvent:
    time: float
    kind: str
    device: int = -1
    payload: Any = None

    def detail(self) -> str:
        if self.payload is None:
            return ""
        if isinstance(self.payload, dict):
            return ";".join(f"{k}={v}" for k, v in self.payload.items())
        return str(self.payload)


class EventQueue:
    def __init__(self):
        self._heap: list = []
        self._seq = itertools.count()
        self.now = 0.0

    def push(self, event: SimEvent) -> None:
        if event.time < self.now:
            raise ValueError(f"event at {event.time} scheduled in the past (now={self.now})")
        heapq.heappush(self._heap, (event.time, next(self._seq), event))

    def pop(self) -> SimEvent:
        t, _, ev = heapq.heappop(self._heap)
        self.now = t
        return ev

    def peek_time(self) -> float | None:
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)

"""Deterministic discrete-event core for the adversarial network.

One logical tick per event-queue step; ties break by insertion order,
so a run is a pure function of (scenario, variant, seed, config).
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass
class TraceEntry:
    time: int
    event: str
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"t": self.time, "event": self.event, **self.detail}


@dataclass
class ServiceMetrics:
    messages_accepted: int = 0
    messages_dropped: int = 0
    victim_vibrations: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "messages_accepted": self.messages_accepted,
            "messages_dropped": self.messages_dropped,
            "victim_vibrations": self.victim_vibrations,
        }


class EventLoop:
    def __init__(self) -> None:
        self._queue: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = itertools.count()
        self.now = 0

    def schedule(self, time: int, fn: Callable[[], None]) -> None:
        if time < self.now:
            raise ValueError("cannot schedule into the past")
        heapq.heappush(self._queue, (time, next(self._seq), fn))

    def run(self) -> None:
        while self._queue:
            time, _seq, fn = heapq.heappop(self._queue)
            self.now = time
            fn()

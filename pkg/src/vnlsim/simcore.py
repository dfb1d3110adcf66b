"""Deterministic discrete-event engine.

Events are ordered by ``(time, seq)``; ``seq`` is assigned at scheduling so
that events at equal times run in insertion order. Randomness comes from
named streams, each seeded from ``(master_seed, stream_id)`` so that adding
a consumer never perturbs the draws seen by another.
"""
from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Callable


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


class UnknownStreamError(KeyError):
    pass


@dataclass(frozen=True)
class Event:
    time: float
    seq: int
    kind: str
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TraceRow:
    time: float
    node: str
    event_kind: str
    detail: str


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    if value is None:
        return "-"
    return str(value)


def format_detail(items: dict) -> str:
    return " ".join(f"{k}={format_value(v)}" for k, v in items.items())


def stream_seed(master_seed: int, stream_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{stream_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


Handler = Callable[["Simulator", Event], None]


class Simulator:
    """Single-threaded event loop with a trace of every processed event.

    Each processed event produces one trace row (kind and payload). Handlers
    may append further rows through :meth:`log`.
    """

    def __init__(self, master_seed: int = 0):
        self.master_seed = master_seed
        self.now = 0.0
        self.trace: list[TraceRow] = []
        self.processed = 0
        self._queue: list[tuple[float, int, Event]] = []
        self._seq = 0
        self._handlers: dict[str, Handler] = {}
        self._streams: dict[str, random.Random] = {}

    # -- events ---------------------------------------------------------
    def on(self, kind: str, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, kind: str, payload: dict | None, time: float) -> int:
        if time < self.now:
            raise SchedulingError(
                f"cannot schedule {kind!r} at t={time!r}: clock is at {self.now!r}"
            )
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (time, seq, Event(time, seq, kind, payload or {})))
        return seq

    def pending(self) -> list[Event]:
        return [entry[2] for entry in sorted(self._queue)]

    def _process(self, event: Event) -> None:
        self.now = event.time
        payload = event.payload
        self.trace.append(
            TraceRow(
                event.time,
                str(payload.get("node", "-")),
                event.kind,
                format_detail({k: v for k, v in payload.items() if k != "node"}),
            )
        )
        self.processed += 1
        handler = self._handlers.get(event.kind)
        if handler is not None:
            handler(self, event)

    def run_until(self, t_end: float) -> int:
        """Process every event with ``time <= t_end``; the clock ends at ``t_end``."""
        if t_end < self.now:
            raise SchedulingError(f"horizon t={t_end!r} is before clock {self.now!r}")
        count = 0
        while self._queue and self._queue[0][0] <= t_end:
            _, _, event = heapq.heappop(self._queue)
            self._process(event)
            count += 1
        self.now = t_end
        return count

    def run(self) -> int:
        """Drain the queue; the clock ends at the time of the last event."""
        count = 0
        while self._queue:
            _, _, event = heapq.heappop(self._queue)
            self._process(event)
            count += 1
        return count

    def log(self, node: str, kind: str, **detail: Any) -> None:
        self.trace.append(TraceRow(self.now, node, kind, format_detail(detail)))

    # -- random streams -------------------------------------------------
    def register_stream(self, stream_id: str) -> random.Random:
        if stream_id not in self._streams:
            self._streams[stream_id] = random.Random(stream_seed(self.master_seed, stream_id))
        return self._streams[stream_id]

    def stream(self, stream_id: str) -> random.Random:
        try:
            return self._streams[stream_id]
        except KeyError:
            raise UnknownStreamError(stream_id) from None

    def draw_uniform(self, stream_id: str) -> float:
        return self.stream(stream_id).random()

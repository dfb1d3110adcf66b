"""Store-and-forward buffer of the Data Relay module."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class BufferEntry:
    msg: Any
    enqueue_t: float
    ttl_s: float | None

    def expired(self, now: float) -> bool:
        return self.ttl_s is not None and now - self.enqueue_t >= self.ttl_s


@dataclass
class DtnBuffer:
    capacity_msgs: int | None = None  # None means unbounded
    ttl_s: float | None = None
    entries: list[BufferEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def purge(self, now: float) -> list[BufferEntry]:
        dead = [e for e in self.entries if e.expired(now)]
        if dead:
            self.entries = [e for e in self.entries if not e.expired(now)]
        return dead


@dataclass
class EnqueueResult:
    accepted: bool
    reason: str | None = None
    expired: list[BufferEntry] = field(default_factory=list)


@dataclass
class FlushResult:
    delivered: list[BufferEntry]
    expired: list[BufferEntry]


def relay_enqueue(buffer: DtnBuffer, msg: Any, now: float) -> EnqueueResult:
    """Append ``msg`` unless the buffer is full; a full buffer rejects the newcomer."""
    expired = buffer.purge(now)
    if buffer.capacity_msgs is not None and len(buffer.entries) >= buffer.capacity_msgs:
        return EnqueueResult(False, "capacity", expired)
    buffer.entries.append(BufferEntry(msg, now, buffer.ttl_s))
    return EnqueueResult(True, None, expired)


def relay_flush(buffer: DtnBuffer, now: float) -> FlushResult:
    expired = buffer.purge(now)
    delivered, buffer.entries = buffer.entries, []
    return FlushResult(delivered, expired)

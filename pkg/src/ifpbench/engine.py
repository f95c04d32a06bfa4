"""Deterministic discrete-event scheduler, virtual clock and event log.

Time is an integer tick count.  Events fire in ``(fire_at, seq)`` order where
``seq`` is the global insertion counter, so two runs that schedule the same
events in the same order replay identically.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

import numpy as np

from .errors import IoError, SchedulingInPast


@dataclass(frozen=True, order=True)
class Event:
    fire_at: int
    seq: int
    target: str = field(compare=False)
    payload: Any = field(default=None, compare=False)


def rng_stream(seed: int, stream_id: str) -> np.random.Generator:
    """Independent PCG64 stream keyed by ``(seed, stream_id)``.

    The stream id is folded in through sha256 rather than ``hash()`` so the
    sequence does not depend on PYTHONHASHSEED or the platform.
    """
    key = int.from_bytes(hashlib.sha256(stream_id.encode()).digest()[:8], "big")
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, key])
    return np.random.Generator(np.random.PCG64(ss))


class Engine:
    """Single-threaded event loop over virtual ticks."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.now = 0
        self._heap: list[tuple[int, int]] = []
        self._pending: dict[int, tuple[Event, Callable[[Any], None]]] = {}
        self._seq = itertools.count()
        self._streams: dict[str, np.random.Generator] = {}
        self._stopped = False
        # (fire_at, seq, target) of every fired event, in firing order
        self.trace: list[tuple[int, int, str]] = []

    def schedule(self, fire_at: int, target: str, action: Callable[[Any], None],
                 payload: Any = None) -> int:
        """Queue ``action(payload)`` at ``fire_at``; returns a cancellable ticket."""
        if fire_at < self.now:
            raise SchedulingInPast(f"fire_at={fire_at} < now={self.now} (target {target})")
        ev = Event(int(fire_at), next(self._seq), target, payload)
        self._pending[ev.seq] = (ev, action)
        heapq.heappush(self._heap, (ev.fire_at, ev.seq))
        return ev.seq

    def after(self, delay: int, target: str, action: Callable[[Any], None],
              payload: Any = None) -> int:
        return self.schedule(self.now + delay, target, action, payload)

    def cancel(self, ticket: int) -> bool:
        return self._pending.pop(ticket, None) is not None

    def pending(self) -> int:
        return len(self._pending)

    def stop(self) -> None:
        """Halt ``run_until`` after the current event."""
        self._stopped = True

    def run_until(self, limit: int) -> int:
        """Fire every event with ``fire_at <= limit``.

        Returns the final clock: ``limit``, or the tick of the event that
        called :meth:`stop`.
        """
        self._stopped = False
        heap = self._heap
        while heap and heap[0][0] <= limit:
            fire_at, seq = heapq.heappop(heap)
            entry = self._pending.pop(seq, None)
            if entry is None:
                continue  # cancelled
            ev, action = entry
            self.now = fire_at
            self.trace.append((fire_at, seq, ev.target))
            action(ev.payload)
            if self._stopped:
                return self.now
        self.now = max(self.now, limit)
        return self.now

    def rng(self, stream_id: str) -> np.random.Generator:
        if stream_id not in self._streams:
            self._streams[stream_id] = rng_stream(self.seed, stream_id)
        return self._streams[stream_id]

    @property
    def fired(self) -> int:
        return len(self.trace)


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class EventLog:
    """Append-only record of a run; JSON-lines on disk.

    Every record carries ``i`` (position), ``t`` (tick), ``type`` and ``src``
    (emitting component).  Nothing in a record depends on wall-clock time.
    """

    def __init__(self, records: Iterable[dict] | None = None):
        self.records: list[dict] = list(records or [])

    def append(self, tick: int, type_: str, src: str, **fields: Any) -> dict:
        rec = {"i": len(self.records), "t": tick, "type": type_, "src": src}
        rec.update(fields)
        self.records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[dict]:
        return iter(self.records)

    def of_type(self, *types: str) -> list[dict]:
        return [r for r in self.records if r["type"] in types]

    def to_jsonl(self) -> str:
        return "".join(_dump(r) + "\n" for r in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "EventLog":
        return cls(json.loads(line) for line in text.splitlines() if line.strip())

    def dump(self, path: str | Path) -> None:
        try:
            Path(path).write_text(self.to_jsonl())
        except OSError as exc:
            raise IoError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "EventLog":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise IoError(str(exc)) from exc
        return cls.from_jsonl(text)

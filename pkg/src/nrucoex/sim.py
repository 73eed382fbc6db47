"""Discrete-event engine and single-channel medium.

Time is an integer tick count, one tick per microsecond. Events with equal
timestamps dispatch in insertion order, so a run is fully determined by its
seed and configuration.
"""

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = 0xFFFFFFFFFFFFFFFF


class EventKind(str, Enum):
    DEFER_EXPIRY = "defer-expiry"
    SLOT_TICK = "slot-tick"
    BACKOFF_EXPIRY = "backoff-expiry"
    TX_START = "tx-start"
    TX_END = "tx-end"
    RS_START = "rs-start"
    STEP_BOUNDARY = "step-boundary"


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


@dataclass(frozen=True, order=True)
class SimEvent:
    time: int
    sequence: int
    kind: EventKind = field(compare=False)
    node_id: int = field(compare=False, default=-1)


def fnv1a_64(data: bytes, h: int = FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


class EventQueue:
    """Heap-ordered event dispatcher with FIFO tie-breaking.

    Handlers are registered per event kind and called with the event. Every
    dispatched event is folded into a running FNV-1a hash of its trace line
    ``tick,seq,kind,node_id``; pass ``trace`` to also keep the lines.
    """

    def __init__(self, trace: Optional[List[str]] = None):
        self.now = 0
        self._heap = []
        self._seq = 0
        self._cancelled = set()
        self._handlers: Dict[EventKind, Callable[[SimEvent], None]] = {}
        self.trace = trace
        self.trace_hash = FNV_OFFSET
        self.dispatched = 0

    def on(self, kind: EventKind, handler: Callable[[SimEvent], None]) -> None:
        self._handlers[kind] = handler

    def schedule(self, time: int, kind: EventKind, node_id: int = -1) -> SimEvent:
        if time < self.now:
            raise SchedulingError(
                f"event {kind.value} for node {node_id} at t={time} is before now={self.now}"
            )
        ev = SimEvent(int(time), self._seq, kind, node_id)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def cancel(self, event: SimEvent) -> None:
        self._cancelled.add(event.sequence)

    def __len__(self):
        return len(self._heap) - len(self._cancelled)

    def run_until(self, t_end: int) -> None:
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before now={self.now}")
        heap = self._heap
        cancelled = self._cancelled
        while heap and heap[0].time <= t_end:
            ev = heapq.heappop(heap)
            if ev.sequence in cancelled:
                cancelled.discard(ev.sequence)
                continue
            self.now = ev.time
            self._record(ev)
            self._handlers[ev.kind](ev)
        self.now = t_end

    def _record(self, ev: SimEvent) -> None:
        line = f"{ev.time},{ev.sequence},{ev.kind.value},{ev.node_id}\n"
        self.trace_hash = fnv1a_64(line.encode(), self.trace_hash)
        self.dispatched += 1
        if self.trace is not None:
            self.trace.append(line.rstrip("\n"))


def node_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for substream ``index`` of ``seed``."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed & MASK64, spawn_key=(index,)))
    )


@dataclass
class Transmission:
    node_id: int
    start: int
    end: int
    is_reservation: bool = False
    network: str = ""
    collided: bool = False


class Channel:
    """Shared medium with perfect, instantaneous carrier sensing.

    A data transmission collides if any other node's transmission (data or
    reservation signal) overlaps it. Reservation signals carry no payload and
    have no outcome of their own.

    ``on_busy(t)`` / ``on_idle(t)`` are invoked on idle->busy and busy->idle
    transitions. Completed intervals are kept for airtime accounting.
    """

    def __init__(self, queue: EventQueue):
        self.queue = queue
        self.active: List[Transmission] = []
        self.history: List[Transmission] = []
        self.idle_since = 0
        self.busy_listeners: List[Callable[[int], None]] = []
        self.idle_listeners: List[Callable[[int], None]] = []
        self.outcome_listeners: List[Callable[[Transmission], None]] = []

    @property
    def busy(self) -> bool:
        now = self.queue.now
        return any(tx.end > now for tx in self.active)

    def sense(self, node_id: int = -1) -> str:
        return "busy" if self.busy else "idle"

    def start(self, node_id: int, end: int, is_reservation: bool = False,
              network: str = "") -> Transmission:
        now = self.queue.now
        was_idle = not self.active
        tx = Transmission(node_id, now, end, is_reservation, network)
        for other in self.active:
            if other.node_id == node_id or other.end <= now:
                continue
            if not is_reservation:
                tx.collided = True
            if not other.is_reservation:
                other.collided = True
        self.active.append(tx)
        if was_idle:
            for cb in self.busy_listeners:
                cb(now)
        return tx

    def finish(self, tx: Transmission, notify_idle: bool = True) -> bool:
        """Remove ``tx``; returns True on success (always False for RS)."""
        self.active.remove(tx)
        self.history.append(tx)
        ok = not tx.is_reservation and not tx.collided
        if not tx.is_reservation:
            for cb in self.outcome_listeners:
                cb(tx)
        if notify_idle:
            self.release_if_idle()
        return ok

    def release_if_idle(self) -> None:
        if not self.active:
            self.idle_since = self.queue.now
            for cb in self.idle_listeners:
                cb(self.queue.now)


def resolve_transmission(tx: Transmission, intervals: List[Transmission]) -> str:
    """Collision predicate evaluated from scratch over a set of intervals.

    Independent of the incremental bookkeeping in :class:`Channel`; used to
    cross-check it.
    """
    if tx.is_reservation:
        raise ValueError("reservation signals have no outcome")
    for other in intervals:
        if other is tx or other.node_id == tx.node_id:
            continue
        if other.start < tx.end and tx.start < other.end:
            return "collision"
    return "success"

"""Fairness, delay, collision and airtime bookkeeping."""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

from .sim import Transmission

log = logging.getLogger(__name__)

NETWORKS = ("NRU", "WiFi")


def jfi(allocations: Sequence[float]) -> float:
    """Jain's fairness index, (sum x)^2 / (n * sum x^2).

    All-zero allocations are treated as perfectly fair (returns 1.0).
    """
    n = len(allocations)
    if n == 0:
        raise ValueError("jfi needs at least one allocation")
    if any(x < 0 for x in allocations):
        raise ValueError("allocations must be non-negative")
    peak = float(max(allocations))
    if peak == 0.0:
        log.debug("jfi over all-zero allocations; defined as 1")
        return 1.0
    # normalise first so tiny or huge allocations neither underflow nor overflow when squared
    y = [x / peak for x in allocations]
    total = sum(y)
    return total * total / (n * sum(v * v for v in y))


@dataclass
class AirtimeLedger:
    successful_airtime: Dict[str, int] = field(default_factory=lambda: {k: 0 for k in NETWORKS})
    collision_ticks: int = 0
    rs_ticks: int = 0
    idle_ticks: int = 0

    @property
    def total(self) -> int:
        return (sum(self.successful_airtime.values()) + self.collision_ticks
                + self.rs_ticks + self.idle_ticks)


def jfi_network_pair(ledger: AirtimeLedger) -> float:
    return jfi([ledger.successful_airtime["NRU"], ledger.successful_airtime["WiFi"]])


def build_ledger(intervals: Iterable[Transmission], horizon: int) -> AirtimeLedger:
    """Partition [0, horizon) into success / collision / RS / idle ticks.

    Overlapping categories resolve by precedence collision > success > RS.
    Intervals still on air are clipped at ``horizon`` and classified by their
    collision flag so far.
    """
    # (time, delta, category, network)
    edges = []
    for tx in intervals:
        s, e = max(tx.start, 0), min(tx.end, horizon)
        if e <= s:
            continue
        if tx.is_reservation:
            cat = "rs"
        elif tx.collided:
            cat = "collision"
        else:
            cat = "success"
        edges.append((s, 1, cat, tx.network))
        edges.append((e, -1, cat, tx.network))
    edges.sort(key=lambda x: (x[0], x[1]))

    ledger = AirtimeLedger()
    counts = {"collision": 0, "success": 0, "rs": 0}
    succ_net = {k: 0 for k in NETWORKS}
    prev = 0
    for t, delta, cat, net in edges:
        if t > prev:
            _attribute(ledger, counts, succ_net, t - prev)
            prev = t
        counts[cat] += delta
        if cat == "success":
            succ_net[net] += delta
    if horizon > prev:
        _attribute(ledger, counts, succ_net, horizon - prev)
    return ledger


def _attribute(ledger, counts, succ_net, span):
    if counts["collision"]:
        ledger.collision_ticks += span
    elif counts["success"]:
        # Successful data never overlaps another transmission.
        net = next(k for k, v in succ_net.items() if v)
        ledger.successful_airtime[net] += span
    elif counts["rs"]:
        ledger.rs_ticks += span
    else:
        ledger.idle_ticks += span


@dataclass
class DelayRecord:
    node_id: int
    hol_timestamp: int
    completion: int

    @property
    def delay(self) -> int:
        return self.completion - self.hol_timestamp


@dataclass(frozen=True)
class StepMetrics:
    step_index: int
    jfi: float
    step_delay_pc1: float
    avg_delay_pc1: float
    collision_frac_window: float
    airtime_frac_nru: float
    airtime_frac_wifi: float
    delay_trend: float
    attempts: int = 0
    collisions: int = 0
    pc1_completions: int = 0


class MetricsTracker:
    """Accumulates outcomes as they happen and emits one snapshot per step.

    A transmission counts toward the step containing its completion tick.
    """

    def __init__(self, step_duration: int, window: int = 10, jfi_mode: str = "cumulative"):
        if jfi_mode not in ("cumulative", "step"):
            raise ValueError(f"unknown jfi_mode {jfi_mode!r}")
        self.step_duration = step_duration
        self.window = window
        self.jfi_mode = jfi_mode
        self.delays: List[DelayRecord] = []
        self.cum_airtime = {k: 0 for k in NETWORKS}
        self.total_attempts = 0
        self.total_collisions = 0
        self._delay_sum = 0
        self._reset_step()
        self._recent = deque(maxlen=window)
        self._prev_step_delay = 0.0
        self.history: List[StepMetrics] = []

    def _reset_step(self):
        self._step_attempts = 0
        self._step_collisions = 0
        self._step_airtime = {k: 0 for k in NETWORKS}
        self._step_delays: List[int] = []

    def record_outcome(self, tx: Transmission) -> None:
        self._step_attempts += 1
        self.total_attempts += 1
        if tx.collided:
            self._step_collisions += 1
            self.total_collisions += 1
        else:
            dur = tx.end - tx.start
            self.cum_airtime[tx.network] += dur
            self._step_airtime[tx.network] += dur

    def record_delay(self, node_id: int, hol: int, completion: int) -> None:
        rec = DelayRecord(node_id, hol, completion)
        self.delays.append(rec)
        self._delay_sum += rec.delay
        self._step_delays.append(rec.delay)

    @property
    def avg_delay(self) -> float:
        return self._delay_sum / len(self.delays) if self.delays else 0.0

    def step_snapshot(self, step_index: int) -> StepMetrics:
        if self._step_delays:
            step_delay = sum(self._step_delays) / len(self._step_delays)
        else:
            step_delay = self._prev_step_delay
        trend = step_delay - self._prev_step_delay if step_index > 0 else 0.0

        self._recent.append((self._step_attempts, self._step_collisions))
        att = sum(a for a, _ in self._recent)
        col = sum(c for _, c in self._recent)
        coll_frac = col / att if att else 0.0

        if self.jfi_mode == "cumulative":
            fairness = jfi([self.cum_airtime["NRU"], self.cum_airtime["WiFi"]])
        else:
            fairness = jfi([self._step_airtime["NRU"], self._step_airtime["WiFi"]])

        snap = StepMetrics(
            step_index=step_index,
            jfi=fairness,
            step_delay_pc1=float(step_delay),
            avg_delay_pc1=self.avg_delay,
            collision_frac_window=coll_frac,
            airtime_frac_nru=min(1.0, self._step_airtime["NRU"] / self.step_duration),
            airtime_frac_wifi=min(1.0, self._step_airtime["WiFi"] / self.step_duration),
            delay_trend=float(trend),
            attempts=self._step_attempts,
            collisions=self._step_collisions,
            pc1_completions=len(self._step_delays),
        )
        self._prev_step_delay = step_delay
        self._reset_step()
        self.history.append(snap)
        return snap

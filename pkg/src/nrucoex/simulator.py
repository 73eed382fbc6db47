"""Wires the event engine, channel, transmitters and metrics into one run."""

from dataclasses import dataclass, field
from typing import List, Optional

from .mac import PC1_NRU, PC1_TIMING, PC3_TIMING, PC3_WIFI, MacTimingProfile, Transmitter
from .metrics import AirtimeLedger, MetricsTracker, build_ledger
from .sim import Channel, EventKind, EventQueue, node_rng


@dataclass
class ScenarioConfig:
    n_gnb_pc1: int = 1
    n_ap_pc3: int = 25
    pc1_timing: MacTimingProfile = field(default_factory=lambda: PC1_TIMING)
    pc3_timing: MacTimingProfile = field(default_factory=lambda: PC3_TIMING)
    fixed_window: bool = False
    reset_each_attempt: bool = False
    # Initial CW maxima; None means the class standard.
    cw_max_pc1: Optional[int] = None
    cw_max_pc3: Optional[int] = None
    step_duration: int = 2500
    window: int = 10
    jfi_mode: str = "cumulative"

    def validate(self) -> None:
        if self.n_gnb_pc1 < 0 or self.n_ap_pc3 < 0 or self.n_gnb_pc1 + self.n_ap_pc3 < 1:
            raise ValueError("need at least one transmitter")
        if self.step_duration <= 0:
            raise ValueError("step_duration must be positive")


class CoexSimulator:
    """One seeded MAC-level run of NR-U gNBs and Wi-Fi APs on a single channel."""

    def __init__(self, cfg: ScenarioConfig, seed: int, trace: Optional[List[str]] = None):
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        self.queue = EventQueue(trace)
        self.channel = Channel(self.queue)
        self.tracker = MetricsTracker(cfg.step_duration, cfg.window, cfg.jfi_mode)

        self.nodes: List[Transmitter] = []
        for i in range(cfg.n_gnb_pc1 + cfg.n_ap_pc3):
            is_gnb = i < cfg.n_gnb_pc1
            node = Transmitter(
                i,
                PC1_NRU if is_gnb else PC3_WIFI,
                cfg.pc1_timing if is_gnb else cfg.pc3_timing,
                self.queue, self.channel, node_rng(seed, i),
                cw_max=cfg.cw_max_pc1 if is_gnb else cfg.cw_max_pc3,
                fixed_window=cfg.fixed_window,
                reset_each_attempt=cfg.reset_each_attempt,
                on_success=self._on_success,
            )
            self.nodes.append(node)

        self.channel.busy_listeners.extend(n.channel_busy for n in self.nodes)
        self.channel.idle_listeners.extend(n.channel_idle for n in self.nodes)
        self.channel.outcome_listeners.append(self.tracker.record_outcome)

        q = self.queue
        q.on(EventKind.BACKOFF_EXPIRY, lambda ev: self.nodes[ev.node_id].backoff_expired(ev.time))
        q.on(EventKind.TX_START, lambda ev: self.nodes[ev.node_id].start_data(ev.time))
        q.on(EventKind.TX_END, lambda ev: self.nodes[ev.node_id].end_data(ev.time))
        q.on(EventKind.STEP_BOUNDARY, lambda ev: None)

        self.channel.release_if_idle()
        self.step_index = 0

    @property
    def now(self) -> int:
        return self.queue.now

    @property
    def trace_hash(self) -> int:
        return self.queue.trace_hash

    def _on_success(self, node: Transmitter, hol: int, t: int) -> None:
        if node.pclass.tag == "PC1":
            self.tracker.record_delay(node.node_id, hol, t)

    def set_cw_max(self, tag: str, cw_max: int) -> None:
        for n in self.nodes:
            if n.pclass.tag == tag:
                n.set_cw_max(cw_max)

    def run_until(self, t_end: int) -> None:
        self.queue.run_until(t_end)

    def step(self):
        """Advance one decision step and return its metrics snapshot."""
        t_end = (self.step_index + 1) * self.cfg.step_duration
        self.queue.schedule(t_end, EventKind.STEP_BOUNDARY)
        self.queue.run_until(t_end)
        snap = self.tracker.step_snapshot(self.step_index)
        self.step_index += 1
        return snap

    def ledger(self) -> AirtimeLedger:
        return build_ledger(self.channel.history + self.channel.active, self.now)

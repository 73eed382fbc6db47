"""Wi-Fi EDCA and NR-U Category-4 LBT transmitter state machines."""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .sim import Channel, EventKind, EventQueue, SimEvent, Transmission

N_ACTIONS_PER_CLASS = 7
CW_EXPONENT_OFFSET = {"PC1": 0, "PC3": 4}


class Technology(str, Enum):
    NRU = "NRU"
    WIFI = "WiFi"


@dataclass(frozen=True)
class PriorityClass:
    tag: str  # "PC1" or "PC3"
    technology: Technology

    @property
    def network(self) -> str:
        return self.technology.value


PC1_NRU = PriorityClass("PC1", Technology.NRU)
PC3_WIFI = PriorityClass("PC3", Technology.WIFI)


@dataclass(frozen=True)
class MacTimingProfile:
    slot: int = 9
    sifs: int = 16
    defer_slots: int = 3
    fixed_defer: int = 16
    cw_min_std: int = 15
    cw_max_std: int = 63
    tx_duration: int = 500
    slot_boundary_period: int = 500

    @property
    def defer(self) -> int:
        return self.fixed_defer + self.defer_slots * self.slot


# ETSI class-1 / class-3 channel access parameters. PC3 Wi-Fi sends longer
# aggregated bursts than the one-slot PC1 gNB transmission.
PC1_TIMING = MacTimingProfile(defer_slots=1, cw_min_std=3, cw_max_std=7, tx_duration=500)
PC3_TIMING = MacTimingProfile(defer_slots=3, cw_min_std=15, cw_max_std=63, tx_duration=2000)


def cw_from_action(a: int, tag: str) -> int:
    if not 0 <= a < N_ACTIONS_PER_CLASS:
        raise ValueError(f"action {a} outside 0..{N_ACTIONS_PER_CLASS - 1}")
    return 2 ** (a + CW_EXPONENT_OFFSET[tag]) - 1


def draw_backoff(rng: np.random.Generator, cw: int) -> int:
    """Uniform integer in [0, cw]; always consumes exactly one draw."""
    if cw < 0:
        raise ValueError("cw must be non-negative")
    return int(rng.integers(0, cw + 1))


class Phase(str, Enum):
    IDLE_DEFER = "idle-defer"
    BACKOFF = "backoff"
    FROZEN = "frozen"
    RESERVING = "reserving"
    TRANSMITTING = "transmitting"


class Transmitter:
    """One saturated transmitter carrying a single priority class.

    The node counts down its backoff only while the channel has been idle
    for its full defer period. A busy channel freezes the counter; the next
    idle period restarts the defer. NR-U nodes fill the gap to the next slot
    boundary with a reservation signal before sending data.

    ``fixed_window`` pins ``cw_current`` to the selected maximum (no binary
    exponential backoff). ``reset_each_attempt`` redraws the counter at every
    idle transition, which is only useful for collision-probability tests.
    """

    def __init__(self, node_id: int, pclass: PriorityClass, timing: MacTimingProfile,
                 queue: EventQueue, channel: Channel, rng: np.random.Generator,
                 cw_max: Optional[int] = None, fixed_window: bool = False,
                 reset_each_attempt: bool = False,
                 on_success: Optional[Callable[["Transmitter", int, int], None]] = None):
        self.node_id = node_id
        self.pclass = pclass
        self.timing = timing
        self.queue = queue
        self.channel = channel
        self.rng = rng
        self.fixed_window = fixed_window
        self.reset_each_attempt = reset_each_attempt
        self.on_success = on_success
        self.aligns = pclass.technology == Technology.NRU

        self.cw_max_selected = timing.cw_max_std if cw_max is None else cw_max
        self._pending_cw_max: Optional[int] = None
        self.cw_change_events = 0
        self.cw_current = self.cw_min_effective
        self.retry_stage = 0
        self.backoff_counter = draw_backoff(rng, self.cw_current)
        self.hol_timestamp = queue.now
        self.phase = Phase.FROZEN
        self.resume_at = 0
        self._expiry: Optional[SimEvent] = None
        self._rs: Optional[Transmission] = None
        self._tx: Optional[Transmission] = None
        self.attempts = 0
        self.collisions = 0

    @property
    def network(self) -> str:
        return self.pclass.network

    @property
    def cw_min_effective(self) -> int:
        if self.fixed_window:
            return self.cw_max_selected
        return min(self.timing.cw_min_std, self.cw_max_selected)

    @property
    def cw_max_target(self) -> int:
        """The CW maximum in force once any pending change is applied."""
        return self._pending_cw_max if self._pending_cw_max is not None else self.cw_max_selected

    def set_cw_max(self, cw_max: int) -> None:
        """Request a new CW maximum; it takes effect at the next backoff draw."""
        if cw_max == self.cw_max_target:
            return
        self._pending_cw_max = cw_max
        self.cw_change_events += 1

    def _apply_pending(self) -> None:
        if self._pending_cw_max is not None:
            self.cw_max_selected = self._pending_cw_max
            self._pending_cw_max = None
            self.cw_current = min(self.cw_current, self.cw_max_selected)

    # --- channel callbacks -------------------------------------------------

    def channel_idle(self, t: int) -> None:
        if self.phase not in (Phase.FROZEN, Phase.IDLE_DEFER, Phase.BACKOFF):
            return
        if self.reset_each_attempt:
            self.backoff_counter = draw_backoff(self.rng, self.cw_current)
        self.resume_at = t
        self.phase = Phase.IDLE_DEFER
        due = t + self.timing.defer + self.backoff_counter * self.timing.slot
        self._expiry = self.queue.schedule(due, EventKind.BACKOFF_EXPIRY, self.node_id)

    def channel_busy(self, t: int) -> None:
        if self.phase not in (Phase.IDLE_DEFER, Phase.BACKOFF):
            return
        if self._expiry is not None and self._expiry.time == t:
            return  # counter hits zero this tick; it transmits regardless
        elapsed = t - self.resume_at - self.timing.defer
        if elapsed > 0:
            self.backoff_counter -= elapsed // self.timing.slot
        if self._expiry is not None:
            self.queue.cancel(self._expiry)
            self._expiry = None
        self.phase = Phase.FROZEN

    # --- event handlers ----------------------------------------------------

    def backoff_expired(self, t: int) -> None:
        self._expiry = None
        self.backoff_counter = 0
        self.attempts += 1
        if self.aligns and t % self.timing.slot_boundary_period:
            period = self.timing.slot_boundary_period
            boundary = (t // period + 1) * period
            self.phase = Phase.RESERVING
            self._rs = self.channel.start(self.node_id, boundary, True, self.network)
            self.queue.schedule(boundary, EventKind.TX_START, self.node_id)
        else:
            self.start_data(t)

    def start_data(self, t: int) -> None:
        self.phase = Phase.TRANSMITTING
        self._tx = self.channel.start(self.node_id, t + self.timing.tx_duration, False,
                                      self.network)
        if self._rs is not None:
            self.channel.finish(self._rs, notify_idle=False)
            self._rs = None
        self.queue.schedule(t + self.timing.tx_duration, EventKind.TX_END, self.node_id)

    def end_data(self, t: int) -> None:
        tx, self._tx = self._tx, None
        self.phase = Phase.FROZEN
        ok = self.channel.finish(tx, notify_idle=False)
        self.on_outcome("success" if ok else "collision", t)
        self.channel.release_if_idle()

    def on_outcome(self, outcome: str, t: int) -> None:
        self._apply_pending()
        if outcome == "success":
            if self.on_success is not None:
                self.on_success(self, self.hol_timestamp, t)
            self.hol_timestamp = t
            self.retry_stage = 0
            self.cw_current = self.cw_min_effective
        else:
            self.collisions += 1
            self.retry_stage += 1
            if self.fixed_window:
                self.cw_current = self.cw_max_selected
            else:
                self.cw_current = min(2 * (self.cw_current + 1) - 1, self.cw_max_selected)
        self.backoff_counter = draw_backoff(self.rng, self.cw_current)

import numpy as np
import pytest

from nrucoex.mac import PC1_NRU, PC3_WIFI, MacTimingProfile, Transmitter
from nrucoex.sim import Channel, EventKind, EventQueue


class MiniNet:
    """Hand-wired queue + channel + transmitters, for scripted MAC scenarios."""

    def __init__(self):
        self.queue = EventQueue(trace=[])
        self.channel = Channel(self.queue)
        self.nodes = []
        self.successes = []  # (node_id, hol, completion)
        q = self.queue
        q.on(EventKind.BACKOFF_EXPIRY, lambda ev: self.nodes[ev.node_id].backoff_expired(ev.time))
        q.on(EventKind.TX_START, lambda ev: self.nodes[ev.node_id].start_data(ev.time))
        q.on(EventKind.TX_END, lambda ev: self.nodes[ev.node_id].end_data(ev.time))

    def add(self, kind="wifi", timing=None, seed=0, **kw) -> Transmitter:
        pclass = PC1_NRU if kind == "nru" else PC3_WIFI
        timing = timing or MacTimingProfile()
        node = Transmitter(len(self.nodes), pclass, timing, self.queue, self.channel,
                           np.random.default_rng(seed), on_success=self._ok, **kw)
        self.nodes.append(node)
        self.channel.busy_listeners.append(node.channel_busy)
        self.channel.idle_listeners.append(node.channel_idle)
        return node

    def _ok(self, node, hol, t):
        self.successes.append((node.node_id, hol, t))

    def start(self, t=0):
        self.queue.run_until(t)
        self.channel.release_if_idle()

    def data(self):
        return [tx for tx in self.channel.history if not tx.is_reservation]


@pytest.fixture
def mininet():
    return MiniNet()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

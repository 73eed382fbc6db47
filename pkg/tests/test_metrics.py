import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrucoex.metrics import AirtimeLedger, MetricsTracker, jfi, jfi_network_pair
from nrucoex.sim import Transmission
from nrucoex.simulator import CoexSimulator, ScenarioConfig

allocs = st.lists(st.floats(0.0, 1e6, allow_nan=False), min_size=1, max_size=20)


def test_jfi_examples():
    assert jfi([5, 5]) == 1.0
    assert jfi([1, 0]) == 0.5
    assert jfi([3, 1]) == pytest.approx(0.8, abs=1e-15)


def test_jfi_all_zero_is_one():
    assert jfi([0, 0, 0]) == 1.0


def test_jfi_rejects_bad_input():
    with pytest.raises(ValueError):
        jfi([])
    with pytest.raises(ValueError):
        jfi([1, -1])


@settings(max_examples=300, deadline=None)
@given(allocs, st.floats(1e-3, 1e3))
def test_jfi_scale_invariant(x, c):
    if sum(x) == 0:
        return
    assert abs(jfi([c * v for v in x]) - jfi(x)) < 1e-12


@settings(max_examples=300, deadline=None)
@given(allocs)
def test_jfi_bounds(x):
    n = len(x)
    v = jfi(x)
    assert 1 / n - 1e-12 <= v <= 1 + 1e-12
    nz = [a for a in x if a > 0]
    if sum(x) > 0 and len(nz) == n and max(nz) == min(nz):
        assert v == pytest.approx(1.0)


def test_network_pair_jfi():
    led = AirtimeLedger()
    led.successful_airtime.update(NRU=3000, WiFi=3000)
    assert jfi_network_pair(led) == 1.0
    led.successful_airtime.update(NRU=3000, WiFi=0)
    assert jfi_network_pair(led) == 0.5
    led.successful_airtime.update(NRU=3000, WiFi=1000)
    assert jfi_network_pair(led) == pytest.approx(0.8)


def test_no_attempts_gives_zero_collision_frac():
    tr = MetricsTracker(2500)
    m = tr.step_snapshot(0)
    assert m.collision_frac_window == 0.0
    assert m.jfi == 1.0 and m.delay_trend == 0.0


def test_delay_trend_difference():
    tr = MetricsTracker(2500)
    tr.record_delay(0, 0, 400)
    tr.step_snapshot(0)
    tr.record_delay(0, 400, 1000)
    m = tr.step_snapshot(1)
    assert m.step_delay_pc1 == 600 and m.delay_trend == 200


def test_step_delay_carried_when_no_completion():
    tr = MetricsTracker(2500)
    tr.record_delay(0, 0, 700)
    tr.step_snapshot(0)
    m = tr.step_snapshot(1)
    assert m.step_delay_pc1 == 700 and m.delay_trend == 0 and m.pc1_completions == 0


def test_collision_window_slides():
    tr = MetricsTracker(100, window=2)
    tr.record_outcome(Transmission(1, 0, 10, collided=True, network="WiFi"))
    tr.step_snapshot(0)
    tr.record_outcome(Transmission(1, 0, 10, network="WiFi"))
    assert tr.step_snapshot(1).collision_frac_window == 0.5
    tr.record_outcome(Transmission(1, 0, 10, network="WiFi"))
    assert tr.step_snapshot(2).collision_frac_window == 0.0


def test_success_spanning_boundary_counts_at_completion():
    # One gNB: backoff 0 expires at 25, RS 25..500, data 500..1000.
    sim = CoexSimulator(ScenarioConfig(n_ap_pc3=0, step_duration=400), seed=0)
    sim.nodes[0].backoff_counter = 0
    snaps = [sim.step() for _ in range(3)]
    assert [s.pc1_completions for s in snaps] == [0, 0, 1]
    assert [s.attempts for s in snaps] == [0, 0, 1]
    assert snaps[2].step_delay_pc1 == 1000
    tx = [t for t in sim.channel.history if not t.is_reservation][0]
    assert (tx.start, tx.end) == (500, 1000)


def test_avg_delay_matches_naive_recompute():
    sim = CoexSimulator(ScenarioConfig(n_ap_pc3=10), seed=5)
    step = sim.cfg.step_duration
    for k in range(300):
        m = sim.step()
        done = [d.delay for d in sim.tracker.delays if d.completion <= (k + 1) * step]
        naive = float(np.mean(done)) if done else 0.0
        assert m.avg_delay_pc1 == pytest.approx(naive, rel=1e-12)


def test_collision_frac_matches_recount():
    sim = CoexSimulator(ScenarioConfig(n_ap_pc3=15, window=10), seed=6)
    step = sim.cfg.step_duration
    for k in range(200):
        m = sim.step()
        lo = max(0, k - 9) * step
        hi = (k + 1) * step
        data = [tx for tx in sim.channel.history
                if not tx.is_reservation and lo < tx.end <= hi]
        expect = sum(tx.collided for tx in data) / len(data) if data else 0.0
        assert m.collision_frac_window == pytest.approx(expect, abs=1e-12)

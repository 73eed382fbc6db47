import numpy as np
import pytest

from nrucoex.mac import (PC1_TIMING, PC3_TIMING, MacTimingProfile, Phase, cw_from_action,
                         draw_backoff)
from nrucoex.simulator import CoexSimulator, ScenarioConfig

from .conftest import MiniNet

WIFI = MacTimingProfile(defer_slots=3, cw_min_std=15, cw_max_std=63, tx_duration=500)


def test_cw_from_action_table():
    assert [cw_from_action(a, "PC1") for a in range(7)] == [0, 1, 3, 7, 15, 31, 63]
    assert [cw_from_action(a, "PC3") for a in range(7)] == [15, 31, 63, 127, 255, 511, 1023]
    assert cw_from_action(0, "PC1") == 0
    assert cw_from_action(6, "PC3") == 1023
    assert cw_from_action(3, "PC1") == 7


@pytest.mark.parametrize("a", [-1, 7])
def test_cw_from_action_rejects_out_of_range(a):
    with pytest.raises(ValueError):
        cw_from_action(a, "PC1")


def test_draw_backoff_degenerate():
    rng = np.random.default_rng(0)
    assert all(draw_backoff(rng, 0) == 0 for _ in range(100))


def test_draw_backoff_mean_and_coverage():
    rng = np.random.default_rng(1)
    draws = np.array([draw_backoff(rng, 15) for _ in range(100_000)])
    assert abs(draws.mean() - 7.5) < 0.1
    assert set(draws[:10_000]) == set(range(16))


def test_default_defer_values():
    assert PC1_TIMING.defer == 25
    assert PC3_TIMING.defer == 43


def test_sole_ap_access_delay(mininet):
    node = mininet.add("wifi", WIFI, seed=4, cw_max=15, fixed_window=True)
    mininet.start()
    mininet.queue.run_until(700 * 610)
    delays = [t - hol for _, hol, t in mininet.successes]
    assert len(delays) >= 500
    expected = WIFI.defer + 15 / 2 * WIFI.slot + WIFI.tx_duration
    assert abs(np.mean(delays) - expected) / expected < 0.05
    assert node.collisions == 0


def test_busy_during_defer_restarts_defer(mininet):
    node = mininet.add("wifi", WIFI)
    other = mininet.add("wifi", WIFI)
    node.backoff_counter = 4
    other.backoff_counter = 50
    mininet.start()
    q, ch = mininet.queue, mininet.channel
    q.run_until(20)  # inside node's 43 us defer
    blocker = ch.start(99, 520)
    assert node.phase == Phase.FROZEN and node.backoff_counter == 4
    q.run_until(520)
    ch.finish(blocker)
    assert node._expiry.time == 520 + WIFI.defer + 4 * WIFI.slot


def test_busy_during_backoff_freezes_consumed_slots(mininet):
    node = mininet.add("wifi", WIFI)
    node.backoff_counter = 10
    mininet.start()
    q, ch = mininet.queue, mininet.channel
    q.run_until(WIFI.defer + 3 * WIFI.slot + 4)
    blocker = ch.start(99, 1000)
    assert node.backoff_counter == 7
    q.run_until(900)
    assert node.backoff_counter == 7  # no decrement while busy
    q.run_until(1000)
    ch.finish(blocker)
    assert node._expiry.time == 1000 + WIFI.defer + 7 * WIFI.slot


def test_rs_fills_gap_to_boundary(mininet):
    gnb = mininet.add("nru", PC1_TIMING)
    gnb.backoff_counter = 5
    # expiry at 310 + 25 + 45 = 380, 120 us before the boundary
    mininet.start(310)
    mininet.queue.run_until(1000)
    rs = [tx for tx in mininet.channel.history if tx.is_reservation]
    assert [(r.start, r.end) for r in rs] == [(380, 500)]
    assert mininet.data()[0].start == 500


def test_expiry_on_boundary_has_no_rs(mininet):
    gnb = mininet.add("nru", PC1_TIMING)
    gnb.backoff_counter = 5
    mininet.start(430)  # expiry exactly at 500
    mininet.queue.run_until(1000)
    assert not any(tx.is_reservation for tx in mininet.channel.history)
    assert mininet.data()[0].start == 500


def test_two_gnbs_same_gap_collide_at_boundary(mininet):
    a = mininet.add("nru", PC1_TIMING, seed=1)
    b = mininet.add("nru", PC1_TIMING, seed=2)
    a.backoff_counter = b.backoff_counter = 2
    mininet.start(100)
    mininet.queue.run_until(1000)
    rs = [tx for tx in mininet.channel.history if tx.is_reservation]
    assert len(rs) == 2 and all(r.end == 500 for r in rs)
    data = mininet.data()
    assert len(data) == 2 and all(d.start == 500 and d.collided for d in data)


def test_nru_data_aligned_over_5s():
    sim = CoexSimulator(ScenarioConfig(n_gnb_pc1=2, n_ap_pc3=10), seed=11)
    sim.run_until(5_000_000)
    starts = [tx.start for tx in sim.channel.history
              if tx.network == "NRU" and not tx.is_reservation]
    assert len(starts) > 100
    assert all(s % 500 == 0 for s in starts)


def test_beb_rules(mininet):
    node = mininet.add("wifi", WIFI, cw_max=63)
    node.cw_current = 15
    node.on_outcome("collision", 0)
    assert node.cw_current == 31
    node.cw_current = 63
    node.on_outcome("collision", 0)
    assert node.cw_current == 63
    node.on_outcome("success", 0)
    assert node.cw_current == node.cw_min_effective == 15


def test_cw_min_effective_below_standard(mininet):
    node = mininet.add("nru", PC1_TIMING, cw_max=0)
    assert node.cw_min_effective == 0
    node.on_outcome("collision", 0)
    assert node.cw_current == 0 and node.backoff_counter == 0


def test_fixed_window_pins_cw(mininet):
    node = mininet.add("wifi", WIFI, cw_max=255, fixed_window=True)
    assert node.cw_current == 255
    node.on_outcome("collision", 0)
    node.on_outcome("success", 0)
    assert node.cw_current == 255


def test_cw_change_pending_until_next_draw(mininet):
    node = mininet.add("wifi", WIFI)
    node.set_cw_max(1023)
    assert node.cw_max_selected == 63 and node.cw_max_target == 1023
    node.set_cw_max(1023)
    assert node.cw_change_events == 1
    node.on_outcome("success", 0)
    assert node.cw_max_selected == 1023


def test_reset_mode_collision_frequency():
    w, trials = 7, 10_000
    timing = MacTimingProfile(cw_min_std=w, cw_max_std=w, tx_duration=100)
    collided = 0
    for i in range(trials):
        net = MiniNet()
        for k in range(2):
            net.add("wifi", timing, seed=2 * i + k, cw_max=w, fixed_window=True,
                    reset_each_attempt=True)
        net.start()
        net.queue.run_until(timing.defer + w * timing.slot + timing.tx_duration)
        collided += net.data()[0].collided
    p = 1 / (w + 1)
    se = np.sqrt(p * (1 - p) / trials)
    assert abs(collided / trials - p) < 3 * se

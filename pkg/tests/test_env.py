from dataclasses import replace

import numpy as np
import pytest

from nrucoex.env import (OBS_DIM, ActionPair, CoexEnv, EnvConfig, constraint_slack,
                         lagrangian_reward)
from nrucoex.simulator import ScenarioConfig


def small_env(steps=50, n_pc3=25, **kw):
    return CoexEnv(EnvConfig(scenario=ScenarioConfig(n_ap_pc3=n_pc3), episode_steps=steps, **kw))


def test_reset_features():
    env = small_env()
    s = env.reset(seed=0, lambda0=0.0)
    assert s.lambda_norm == 0.0
    assert s.observation.shape == (OBS_DIM,)
    assert s.observation[7] == 0.5
    assert s.vector().shape == (OBS_DIM + 1,)
    assert s.vector(with_lambda=False).shape == (OBS_DIM,)


def test_reset_deterministic():
    env = small_env()
    a = env.reset(seed=3, lambda0=4.0)
    out_a = [env.step(10).next_state.vector() for _ in range(5)]
    b = env.reset(seed=3, lambda0=4.0)
    out_b = [env.step(10).next_state.vector() for _ in range(5)]
    assert np.array_equal(a.vector(), b.vector())
    assert all(np.array_equal(x, y) for x, y in zip(out_a, out_b))
    assert a.lambda_norm == 0.4


def test_action_pair_flat_roundtrip():
    for i in range(49):
        assert ActionPair.from_flat(i).flat == i
    assert ActionPair(0, 6).flat == 6
    with pytest.raises(ValueError):
        ActionPair.from_flat(49)
    with pytest.raises(ValueError):
        ActionPair(7, 0)


def test_action_sets_cw_maxima():
    env = small_env()
    env.reset(seed=0)
    env.step(ActionPair(0, 6))
    for _ in range(20):
        env.step(ActionPair(0, 6))
    pc1 = [n for n in env.sim.nodes if n.pclass.tag == "PC1"]
    pc3 = [n for n in env.sim.nodes if n.pclass.tag == "PC3"]
    assert all(n.cw_max_target == 0 for n in pc1)
    assert all(n.cw_max_target == 1023 for n in pc3)
    # at least the gNB has drawn a fresh counter since the change
    assert all(n.cw_max_selected == 0 for n in pc1)


def test_repeated_action_issues_no_change_events():
    env = small_env()
    env.reset(seed=0)
    env.step(ActionPair(2, 3))
    before = sum(n.cw_change_events for n in env.sim.nodes)
    env.step(ActionPair(2, 3))
    assert sum(n.cw_change_events for n in env.sim.nodes) == before


def test_pc3_only_action_mode():
    env = small_env(action_mode="pc3")
    env.reset(seed=0)
    out = env.step(6)
    assert out.action == ActionPair(0, 6)
    assert env.sim.nodes[0].cw_max_target == env.cfg.scenario.pc1_timing.cw_max_std
    assert env.sim.nodes[1].cw_max_target == 1023


def test_full_episode_is_20_seconds():
    env = CoexEnv(EnvConfig(scenario=ScenarioConfig(n_ap_pc3=3), episode_steps=8000))
    env.reset(seed=0)
    done, n = False, 0
    while not done:
        done = env.step_static().done
        n += 1
    assert n == 8000 and env.sim.now == 20_000_000
    with pytest.raises(RuntimeError):
        env.step(0)


def test_lagrangian_examples():
    assert lagrangian_reward(0.7, -0.3, 0.0) == 0.7
    g = constraint_slack(3000.0, 2000.0)
    assert g == -0.5
    assert lagrangian_reward(0.9, g, 2.0) == pytest.approx(-0.1, abs=1e-15)
    for lam in (0.0, 1.0, 10.0):
        assert lagrangian_reward(0.9, constraint_slack(2000.0, 2000.0), lam) == 0.9
    with pytest.raises(ValueError):
        lagrangian_reward(0.9, 0.1, -1.0)


def test_episode_reward_linearity():
    env = small_env(steps=200)
    lam = 3.7
    env.reset(seed=2, lambda0=lam)
    rng = np.random.default_rng(0)
    r, f, g = [], [], []
    for _ in range(200):
        out = env.step(int(rng.integers(49)))
        r.append(lagrangian_reward(out.f_t, out.g_t, lam))
        f.append(out.f_t)
        g.append(out.g_t)
    assert np.mean(r) == pytest.approx(np.mean(f) + lam * np.mean(g), abs=1e-9)


def test_observations_always_finite():
    for n_pc3 in (0, 1, 25):
        cfg = EnvConfig(scenario=ScenarioConfig(n_ap_pc3=n_pc3, step_duration=100),
                        episode_steps=300, d_th_us=1000)
        env = CoexEnv(cfg)
        env.reset(seed=1)
        for t in range(300):
            s = env.step(t % 49).next_state.vector()
            assert np.all(np.isfinite(s))


def test_greedy_action_invariant_to_positive_scaling():
    rng = np.random.default_rng(0)
    for _ in range(100):
        q = rng.normal(size=49)
        assert np.argmax(q) == np.argmax(q * rng.uniform(0.01, 100))


def test_config_validation():
    with pytest.raises(ValueError):
        CoexEnv(EnvConfig(d_th_us=0))
    with pytest.raises(ValueError):
        CoexEnv(EnvConfig(action_mode="both"))
    with pytest.raises(ValueError):
        CoexEnv(replace(EnvConfig(), scenario=ScenarioConfig(n_gnb_pc1=0, n_ap_pc3=0)))

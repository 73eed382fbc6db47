"""State-augmented training/execution, and the primal-dual baseline."""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..env import CoexEnv, EnvConfig, constraint_slack, lagrangian_reward
from ..metrics import DelayRecord
from .dual import DualState, dual_update
from .qnet import Adam, QNetwork, train_step
from .replay import ReplayBuffer, Transition

log = logging.getLogger(__name__)

STEP_COLUMNS = ["episode", "step", "jfi", "step_delay_us", "avg_delay_us", "collision_frac",
                "airtime_nru", "airtime_wifi", "lambda", "action_pc1", "action_pc3", "reward"]
CURVE_COLUMNS = ["episode", "lambda", "mean_reward", "mean_jfi", "mean_delay_us",
                 "constraint_violation_frac", "epsilon", "loss"]


@dataclass
class TrainSchedule:
    episodes: int = 300
    episode_steps: int = 8000
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_decay_frac: float = 0.8
    gamma: float = 0.99
    lr: float = 1e-4
    batch_size: int = 16
    buffer_size: int = 100_000
    target_update: int = 500
    hidden: Tuple[int, ...] = (32, 32, 32)
    populations: Tuple[int, ...] = (5, 15, 25, 35)

    def epsilon(self, episode: int) -> float:
        horizon = max(1, int(self.eps_decay_frac * self.episodes))
        frac = min(1.0, episode / horizon)
        return self.eps_start + frac * (self.eps_end - self.eps_start)


DESK_SCHEDULE = TrainSchedule(episodes=50, episode_steps=2000, populations=(5, 15, 25))


@dataclass
class TrainResult:
    net: QNetwork
    curve: List[Dict] = field(default_factory=list)
    lambda_trace: List[float] = field(default_factory=list)
    final_lambda: float = 0.0
    populations_seen: List[int] = field(default_factory=list)
    lambdas_sampled: List[float] = field(default_factory=list)
    probe_states: Optional[np.ndarray] = None


def select_action(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; ties in the greedy branch go to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(0, len(q)))
    return int(np.argmax(q))


def episode_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, episode]).generate_state(1, np.uint64)[0])


def population_schedule(populations: Sequence[int], episodes: int,
                        rng: np.random.Generator) -> List[int]:
    """Cycle through shuffled copies of the population set so every size is visited."""
    out: List[int] = []
    while len(out) < episodes:
        out.extend(int(p) for p in rng.permutation(list(populations)))
    return out[:episodes]


def epoch_violation_frac(slacks: Sequence[float], t0: int) -> float:
    n_epochs = len(slacks) // t0
    if n_epochs == 0:
        return 0.0
    arr = np.asarray(slacks[:n_epochs * t0]).reshape(n_epochs, t0).mean(axis=1)
    return float((arr < 0).mean())


def _train(env_cfg: EnvConfig, schedule: TrainSchedule, dual: DualState, seed: int,
           augmented: bool, progress: Optional[Callable[[Dict], None]] = None) -> TrainResult:
    rng = np.random.default_rng(seed)
    env_cfg = replace(env_cfg, episode_steps=schedule.episode_steps)
    env = CoexEnv(env_cfg, lambda_max=dual.lambda_max)
    state_dim = 9 if augmented else 8
    net = QNetwork(state_dim, env_cfg.n_actions, schedule.hidden, rng)
    target = net.copy()
    opt = Adam(net.params, lr=schedule.lr)
    buf = ReplayBuffer(schedule.buffer_size, state_dim)
    pops = population_schedule(schedule.populations, schedule.episodes, rng)
    result = TrainResult(net)
    updates = 0

    for ep in range(schedule.episodes):
        eps = schedule.epsilon(ep)
        if augmented:
            lam = float(rng.uniform(0.0, dual.lambda_max))
            result.lambdas_sampled.append(lam)
        else:
            lam = dual.lam
        result.populations_seen.append(pops[ep])
        s = env.reset(episode_seed(seed, ep), lam, n_pc3=pops[ep]).vector(augmented)
        rewards, jfis, slacks, losses = [], [], [], []
        epoch_slacks = []
        done = False
        while not done:
            a = select_action(net(s), eps, rng)
            out = env.step(a)
            r = lagrangian_reward(out.f_t, out.g_t, lam)
            s2 = out.next_state.vector(augmented)
            done = out.done
            buf.push(Transition(s, a, r, s2, done))
            s = s2
            rewards.append(r)
            jfis.append(out.f_t)
            slacks.append(out.g_t)
            if len(buf) >= schedule.batch_size:
                batch = buf.sample(schedule.batch_size, rng)
                losses.append(train_step(net, target, batch, schedule.gamma, opt))
                updates += 1
                if updates % schedule.target_update == 0:
                    target.load_from(net)
            if not augmented:
                epoch_slacks.append(out.g_t)
                if len(epoch_slacks) == dual.t0:
                    dual = dual_update(dual, float(np.mean(epoch_slacks)))
                    epoch_slacks = []
                    lam = dual.lam
                    result.lambda_trace.append(lam)

        row = {
            "episode": ep,
            "lambda": result.lambdas_sampled[-1] if augmented else lam,
            "mean_reward": float(np.mean(rewards)),
            "mean_jfi": float(np.mean(jfis)),
            "mean_delay_us": env.sim.tracker.avg_delay,
            "constraint_violation_frac": epoch_violation_frac(slacks, dual.t0),
            "epsilon": eps,
            "loss": float(np.mean(losses)) if losses else 0.0,
        }
        result.curve.append(row)
        if progress is not None:
            progress(row)
        log.info("episode %d n_pc3=%d lambda=%.3f jfi=%.3f delay=%.0fus eps=%.2f loss=%.4f",
                 ep, pops[ep], row["lambda"], row["mean_jfi"], row["mean_delay_us"], eps,
                 row["loss"])

    result.final_lambda = dual.lam
    n_probe = min(len(buf), 512)
    if n_probe:
        result.probe_states = buf.states[rng.integers(0, len(buf), size=n_probe)].copy()
    return result


def train_qasal(env_cfg: EnvConfig, schedule: TrainSchedule, dual: DualState = DualState(),
                seed: int = 0, progress=None) -> TrainResult:
    """Train one policy over the augmented (state, lambda) space.

    Each episode draws lambda uniformly from [0, lambda_max] and holds it fixed,
    so the network sees consistent (state, lambda, reward) triples.
    """
    result = _train(env_cfg, schedule, dual, seed, augmented=True, progress=progress)
    if result.probe_states is not None and not lambda_sensitive(result.net, result.probe_states):
        log.warning("trained policy ignores the dual variable on all probe states")
    return result


def train_primal_dual(env_cfg: EnvConfig, schedule: TrainSchedule,
                      dual: DualState = DualState(), seed: int = 0, progress=None) -> TrainResult:
    """Baseline: lambda is not observed; it is updated every T0 steps during training."""
    return _train(env_cfg, schedule, dual, seed, augmented=False, progress=progress)


def lambda_sensitive(net: QNetwork, states: np.ndarray, lambda_norm_hi: float = 1.0) -> bool:
    """True if some probe state's greedy action changes between lambda=0 and lambda_max."""
    if net.input_dim != 9:
        return False
    lo = states.copy()
    hi = states.copy()
    lo[:, -1] = 0.0
    hi[:, -1] = lambda_norm_hi
    return bool(np.any(net(lo).argmax(axis=1) != net(hi).argmax(axis=1)))


@dataclass
class Trajectory:
    rows: List[Dict]
    delays: List[DelayRecord]
    lambdas: List[float]
    slacks: List[float]
    trace_hash: int
    d_th_us: float
    t0: int
    horizon_us: int

    @property
    def final_avg_delay(self) -> float:
        return self.rows[-1]["avg_delay_us"] if self.rows else 0.0

    @property
    def final_jfi(self) -> float:
        return self.rows[-1]["jfi"] if self.rows else 1.0

    @property
    def violation_frac(self) -> float:
        return epoch_violation_frac(self.slacks, self.t0)

    def tail_delay(self, frac: float = 0.5) -> float:
        """Mean PC1 delay of packets completing in the last ``frac`` of the run."""
        cut = self.horizon_us * (1.0 - frac)
        tail = [d.delay for d in self.delays if d.completion > cut]
        return float(np.mean(tail)) if tail else 0.0


def execute(env_cfg: EnvConfig, seed: int, mode: str, net: Optional[QNetwork] = None,
            dual: DualState = DualState(), steps: Optional[int] = None,
            static_cw: Tuple[int, int] = (7, 63), fixed_lambda: float = 0.0,
            episode: int = 0, keep_trace: bool = False) -> Trajectory:
    """Greedy rollout of one episode.

    ``qasal``: lambda starts at 0 and follows the dual dynamics every T0 steps,
    fed back through the augmented state. ``primal-dual``: the trained policy
    runs without lambda; ``fixed_lambda`` is only reported. ``static-cw``: the
    CW maxima in ``static_cw`` are held for the whole run.
    """
    if mode not in ("qasal", "primal-dual", "static-cw"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode != "static-cw" and net is None:
        raise ValueError(f"mode {mode} needs a trained network")
    steps = steps or env_cfg.episode_steps
    env_cfg = replace(env_cfg, episode_steps=steps)
    if mode == "static-cw":
        sc = replace(env_cfg.scenario, cw_max_pc1=static_cw[0], cw_max_pc3=static_cw[1])
        env_cfg = replace(env_cfg, scenario=sc)
    env = CoexEnv(env_cfg, lambda_max=dual.lambda_max)
    lam = 0.0 if mode == "qasal" else (fixed_lambda if mode == "primal-dual" else 0.0)
    state = env.reset(seed, lam, keep_trace=keep_trace)
    dual = replace(dual, lam=lam, epoch=0)

    rows, lambdas, slacks, epoch = [], [], [], []
    for t in range(steps):
        if mode == "static-cw":
            out = env.step_static()
            a1, a3 = -1, -1
        else:
            q = net(state.vector(mode == "qasal"))
            out = env.step(int(np.argmax(q)))
            a1, a3 = out.action.a_pc1, out.action.a_pc3
        m = out.metrics
        lambdas.append(dual.lam)
        slacks.append(out.g_t)
        rows.append({
            "episode": episode, "step": t, "jfi": m.jfi,
            "step_delay_us": m.step_delay_pc1, "avg_delay_us": m.avg_delay_pc1,
            "collision_frac": m.collision_frac_window,
            "airtime_nru": m.airtime_frac_nru, "airtime_wifi": m.airtime_frac_wifi,
            "lambda": dual.lam, "action_pc1": a1, "action_pc3": a3,
            "reward": lagrangian_reward(out.f_t, out.g_t, dual.lam),
        })
        state = out.next_state
        if mode == "qasal":
            epoch.append(out.g_t)
            if len(epoch) == dual.t0:
                dual = dual_update(dual, float(np.mean(epoch)))
                epoch = []
                state = env.set_lambda(dual.lam)

    return Trajectory(rows, list(env.sim.tracker.delays), lambdas, slacks,
                      env.sim.trace_hash, env_cfg.d_th_us, dual.t0, env.sim.now)


def execute_qasal(net: QNetwork, env_cfg: EnvConfig, dual: DualState = DualState(),
                  seed: int = 0, steps: Optional[int] = None) -> Trajectory:
    return execute(env_cfg, seed, "qasal", net, dual, steps)

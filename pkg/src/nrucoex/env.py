"""Episodic MDP wrapper around the coexistence simulator.

Each decision step covers ``step_duration`` microseconds of simulated time.
The agent picks CW maxima for both priority classes; the observation
summarises PC1 delay, collisions, airtime and fairness over the step.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Union

import numpy as np

from .mac import N_ACTIONS_PER_CLASS, cw_from_action
from .metrics import StepMetrics
from .simulator import CoexSimulator, ScenarioConfig

OBS_DIM = 8
DELAY_FEATURE_CLIP = 5.0


@dataclass
class EnvConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    d_th_us: float = 2000.0
    episode_steps: int = 8000
    n_pc3_max: int = 50
    # "joint": 49 actions over (PC1, PC3); "pc3": 7 actions, PC1 left at its standard CW.
    action_mode: str = "joint"

    def validate(self) -> None:
        self.scenario.validate()
        if self.d_th_us <= 0:
            raise ValueError("d_th_us must be positive")
        if self.episode_steps < 1:
            raise ValueError("episode_steps must be >= 1")
        if self.n_pc3_max < 1:
            raise ValueError("n_pc3_max must be >= 1")
        if self.action_mode not in ("joint", "pc3"):
            raise ValueError(f"unknown action_mode {self.action_mode!r}")

    @property
    def n_actions(self) -> int:
        return N_ACTIONS_PER_CLASS ** 2 if self.action_mode == "joint" else N_ACTIONS_PER_CLASS


@dataclass(frozen=True)
class ActionPair:
    a_pc1: int
    a_pc3: int

    def __post_init__(self):
        for a in (self.a_pc1, self.a_pc3):
            if not 0 <= a < N_ACTIONS_PER_CLASS:
                raise ValueError(f"action component {a} outside 0..6")

    @property
    def flat(self) -> int:
        return N_ACTIONS_PER_CLASS * self.a_pc1 + self.a_pc3

    @classmethod
    def from_flat(cls, index: int) -> "ActionPair":
        if not 0 <= index < N_ACTIONS_PER_CLASS ** 2:
            raise ValueError(f"flat action {index} outside 0..48")
        return cls(*divmod(index, N_ACTIONS_PER_CLASS))


@dataclass(frozen=True)
class AugmentedState:
    observation: np.ndarray
    lambda_norm: float

    def vector(self, with_lambda: bool = True) -> np.ndarray:
        if with_lambda:
            return np.append(self.observation, self.lambda_norm)
        return self.observation.copy()


@dataclass
class StepOutcome:
    next_state: AugmentedState
    f_t: float
    g_t: float
    metrics: StepMetrics
    done: bool
    action: ActionPair


def lagrangian_reward(f_t: float, g_t: float, lam: float) -> float:
    if lam < 0:
        raise ValueError("dual variable must be non-negative")
    return f_t + lam * g_t


def constraint_slack(avg_delay_us: float, d_th_us: float) -> float:
    """Normalised slack; positive while the delay constraint holds."""
    return (d_th_us - avg_delay_us) / d_th_us


def observation_from(m: StepMetrics, d_th: float, n_pc3: int, n_pc3_max: int) -> np.ndarray:
    c = DELAY_FEATURE_CLIP
    obs = np.array([
        np.clip(m.avg_delay_pc1 / d_th, 0.0, c),
        np.clip(m.step_delay_pc1 / d_th, 0.0, c),
        np.clip(m.delay_trend / d_th, -c, c),
        m.collision_frac_window,
        m.airtime_frac_nru,
        m.airtime_frac_wifi,
        m.jfi,
        min(1.0, n_pc3 / n_pc3_max),
    ], dtype=np.float64)
    return np.nan_to_num(obs, nan=0.0, posinf=c, neginf=-c)


class CoexEnv:
    def __init__(self, cfg: EnvConfig, lambda_max: float = 10.0):
        cfg.validate()
        self.cfg = cfg
        self.lambda_max = lambda_max
        self.sim: Optional[CoexSimulator] = None
        self.lam = 0.0
        self.t = 0
        self.trace: Optional[List[str]] = None

    @property
    def n_pc3(self) -> int:
        return self.cfg.scenario.n_ap_pc3

    def reset(self, seed: int, lambda0: float = 0.0, n_pc3: Optional[int] = None,
              keep_trace: bool = False) -> AugmentedState:
        if n_pc3 is not None:
            self.cfg = replace(self.cfg, scenario=replace(self.cfg.scenario, n_ap_pc3=n_pc3))
            self.cfg.validate()
        self.trace = [] if keep_trace else None
        self.sim = CoexSimulator(self.cfg.scenario, seed, self.trace)
        self.t = 0
        self.lam = float(lambda0)
        obs = np.zeros(OBS_DIM)
        obs[7] = min(1.0, self.n_pc3 / self.cfg.n_pc3_max)
        self.state = AugmentedState(obs, self.lam / self.lambda_max)
        return self.state

    def set_lambda(self, lam: float) -> AugmentedState:
        self.lam = float(lam)
        self.state = AugmentedState(self.state.observation, self.lam / self.lambda_max)
        return self.state

    def decode(self, action: Union[int, ActionPair]) -> ActionPair:
        if isinstance(action, ActionPair):
            return action
        if self.cfg.action_mode == "joint":
            return ActionPair.from_flat(int(action))
        # PC1 stays at its standard window; encode that as a_pc1 = 0 in logs.
        return ActionPair(0, int(action))

    def step(self, action: Union[int, ActionPair]) -> StepOutcome:
        if self.sim is None:
            raise RuntimeError("reset() must be called before step()")
        if self.t >= self.cfg.episode_steps:
            raise RuntimeError("episode already finished")
        pair = self.decode(action)
        sc = self.cfg.scenario
        if self.cfg.action_mode == "joint":
            self.sim.set_cw_max("PC1", cw_from_action(pair.a_pc1, "PC1"))
        else:
            self.sim.set_cw_max("PC1", sc.pc1_timing.cw_max_std)
        self.sim.set_cw_max("PC3", cw_from_action(pair.a_pc3, "PC3"))

        return self._advance(pair)

    def step_static(self) -> StepOutcome:
        """Advance one step without touching the CW settings."""
        if self.sim is None:
            raise RuntimeError("reset() must be called before step()")
        if self.t >= self.cfg.episode_steps:
            raise RuntimeError("episode already finished")
        return self._advance(None)

    def _advance(self, pair: Optional[ActionPair]) -> StepOutcome:
        m = self.sim.step()
        self.t += 1
        obs = observation_from(m, self.cfg.d_th_us, self.n_pc3, self.cfg.n_pc3_max)
        self.state = AugmentedState(obs, self.lam / self.lambda_max)
        return StepOutcome(
            next_state=self.state,
            f_t=m.jfi,
            g_t=constraint_slack(m.avg_delay_pc1, self.cfg.d_th_us),
            metrics=m,
            done=self.t >= self.cfg.episode_steps,
            action=pair,
        )

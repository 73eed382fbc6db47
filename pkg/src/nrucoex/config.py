"""Experiment configuration: a flat ``key = value`` file.

Lines are ``key = value``; ``#`` starts a comment. Lists are comma separated,
booleans are ``true``/``false``. Unknown keys are rejected. Every key has a
default, so a file naming only the scenario is valid.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional, Tuple

from .agent.dual import DualState
from .agent.train import TrainSchedule
from .env import EnvConfig
from .mac import N_ACTIONS_PER_CLASS, PC1_TIMING, PC3_TIMING, MacTimingProfile, cw_from_action
from .simulator import ScenarioConfig

OUTPUT_DIR_ENV = "NRUCOEX_OUTPUT_DIR"
MODES = ("qasal", "primal-dual", "static-cw")


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


@dataclass
class ExperimentConfig:
    # scenario
    n_gnb_pc1: int = 1
    n_ap_pc3: List[int] = field(default_factory=lambda: [5, 10, 15, 20, 25])
    d_th_us: List[float] = field(default_factory=lambda: [1000.0, 2000.0, 3000.0])
    mode: str = "qasal"
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: str = "results"
    n_pc3_max: int = 50
    action_mode: str = "joint"
    # timing
    slot_us: int = 9
    sifs_us: int = 16
    slot_boundary_us: int = 500
    pc1_defer_slots: int = PC1_TIMING.defer_slots
    pc1_cw_min: int = PC1_TIMING.cw_min_std
    pc1_cw_max: int = PC1_TIMING.cw_max_std
    pc1_tx_us: int = PC1_TIMING.tx_duration
    pc3_defer_slots: int = PC3_TIMING.defer_slots
    pc3_cw_min: int = PC3_TIMING.cw_min_std
    pc3_cw_max: int = PC3_TIMING.cw_max_std
    pc3_tx_us: int = PC3_TIMING.tx_duration
    fixed_window: bool = False
    step_us: int = 2500
    window_steps: int = 10
    jfi_mode: str = "cumulative"
    # learner
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
    hidden: List[int] = field(default_factory=lambda: [32, 32, 32])
    train_populations: List[int] = field(default_factory=lambda: [5, 15, 25, 35])
    train_seed: int = 0
    # dual dynamics
    eta_lambda: float = 0.1
    lambda_max: float = 10.0
    t0: int = 5
    # execution
    exec_steps: int = 8000
    static_cw_pc1: int = PC1_TIMING.cw_max_std
    static_cw_pc3: int = PC3_TIMING.cw_max_std
    static_action_pc1: int = -1
    static_action_pc3: int = -1
    checkpoint: str = ""
    train_inline: bool = False
    figures: bool = True

    def validate(self) -> None:
        for name in ("n_ap_pc3", "d_th_us", "seeds", "hidden", "train_populations"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be a non-empty list", name)
        if any(d <= 0 for d in self.d_th_us):
            raise ConfigError("d_th_us must be > 0", "d_th_us")
        if any(n < 1 for n in self.n_ap_pc3):
            raise ConfigError("n_ap_pc3 must be >= 1", "n_ap_pc3")
        if self.n_gnb_pc1 < 0:
            raise ConfigError("n_gnb_pc1 must be >= 0", "n_gnb_pc1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}", "mode")
        if self.action_mode not in ("joint", "pc3"):
            raise ConfigError("action_mode must be joint or pc3", "action_mode")
        if self.jfi_mode not in ("cumulative", "step"):
            raise ConfigError("jfi_mode must be cumulative or step", "jfi_mode")
        for name in ("static_action_pc1", "static_action_pc3"):
            a = getattr(self, name)
            if a != -1 and not 0 <= a < N_ACTIONS_PER_CLASS:
                raise ConfigError(f"{name} must be in 0..{N_ACTIONS_PER_CLASS - 1}", name)
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ConfigError("need 0 <= eps_end <= eps_start <= 1", "eps_end")
        for name in ("t0", "episodes", "episode_steps", "exec_steps", "batch_size", "step_us"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", name)
        if self.lambda_max <= 0 or self.eta_lambda < 0:
            raise ConfigError("need lambda_max > 0 and eta_lambda >= 0", "lambda_max")

    # --- derived objects ---------------------------------------------------

    def timing(self, tag: str) -> MacTimingProfile:
        p = tag.lower()
        return MacTimingProfile(
            slot=self.slot_us, sifs=self.sifs_us, defer_slots=getattr(self, f"{p}_defer_slots"),
            fixed_defer=self.sifs_us, cw_min_std=getattr(self, f"{p}_cw_min"),
            cw_max_std=getattr(self, f"{p}_cw_max"), tx_duration=getattr(self, f"{p}_tx_us"),
            slot_boundary_period=self.slot_boundary_us,
        )

    def env_config(self, n_pc3: Optional[int] = None, d_th: Optional[float] = None,
                   steps: Optional[int] = None) -> EnvConfig:
        sc = ScenarioConfig(
            n_gnb_pc1=self.n_gnb_pc1,
            n_ap_pc3=self.n_ap_pc3[0] if n_pc3 is None else n_pc3,
            pc1_timing=self.timing("PC1"), pc3_timing=self.timing("PC3"),
            fixed_window=self.fixed_window, step_duration=self.step_us,
            window=self.window_steps, jfi_mode=self.jfi_mode,
        )
        return EnvConfig(
            scenario=sc, d_th_us=float(self.d_th_us[0] if d_th is None else d_th),
            episode_steps=steps or self.exec_steps, n_pc3_max=self.n_pc3_max,
            action_mode=self.action_mode,
        )

    def schedule(self) -> TrainSchedule:
        return TrainSchedule(
            episodes=self.episodes, episode_steps=self.episode_steps, eps_start=self.eps_start,
            eps_end=self.eps_end, eps_decay_frac=self.eps_decay_frac, gamma=self.gamma,
            lr=self.lr, batch_size=self.batch_size, buffer_size=self.buffer_size,
            target_update=self.target_update, hidden=tuple(self.hidden),
            populations=tuple(self.train_populations),
        )

    def dual(self) -> DualState:
        return DualState(0.0, self.eta_lambda, self.lambda_max, self.t0)

    def static_cw(self) -> Tuple[int, int]:
        cw1 = (cw_from_action(self.static_action_pc1, "PC1") if self.static_action_pc1 >= 0
               else self.static_cw_pc1)
        cw3 = (cw_from_action(self.static_action_pc3, "PC3") if self.static_action_pc3 >= 0
               else self.static_cw_pc3)
        return cw1, cw3

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output_dir)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}
_LIST_ELEM = {"n_ap_pc3": int, "d_th_us": float, "seeds": int, "hidden": int,
              "train_populations": int}


def _coerce(key: str, raw: str, where: str):
    default = getattr(ExperimentConfig(), key)
    try:
        if key in _LIST_ELEM:
            return [_LIST_ELEM[key](x.strip()) for x in raw.split(",") if x.strip()]
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError(raw)
            return low == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: bad value {raw!r} for key {key!r}", key) from None


def parse_config(text: str, source: str = "<config>", **overrides) -> ExperimentConfig:
    values = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {body!r}")
        key, raw = (x.strip() for x in body.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{where}: unknown key {key!r}", key)
        values[key] = _coerce(key, raw, where)
        lines[key] = where
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**values)
    try:
        cfg.validate()
    except ConfigError as exc:
        where = lines.get(exc.key, source)
        raise ConfigError(f"{where}: key {exc.key!r}: {exc}", exc.key) from None
    return cfg


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path), **overrides)

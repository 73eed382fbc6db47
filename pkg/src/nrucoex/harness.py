"""Seeded experiment runs, sweeps and CSV artefacts."""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .agent.qnet import QNetwork, load_checkpoint, save_checkpoint
from .agent.train import (CURVE_COLUMNS, STEP_COLUMNS, TrainResult, Trajectory, execute,
                          train_primal_dual, train_qasal)
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["n_pc3", "d_th_us", "mode", "seed_count", "mean_delay_us", "se_delay_us",
                   "mean_jfi", "se_jfi", "violation_frac"]


class MissingCheckpointError(FileNotFoundError):
    pass


@dataclass
class RunSummary:
    config_hash: str
    mode: str
    n_pc3: int
    d_th_us: float
    seed: int
    final_avg_delay_us: float
    final_jfi: float
    violation_frac: float
    tail_delay_us: float
    lambda_max_seen: float
    lambda_final: float
    trace_hash: str


def write_csv(path, columns: Sequence[str], rows: Sequence[Dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in columns})


def read_csv(path) -> List[Dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(cfg: ExperimentConfig, mode: str, n_pc3: int, d_th: float, seed: int,
              traj: Trajectory) -> RunSummary:
    return RunSummary(
        config_hash=cfg.config_hash(), mode=mode, n_pc3=n_pc3, d_th_us=d_th, seed=seed,
        final_avg_delay_us=traj.final_avg_delay, final_jfi=traj.final_jfi,
        violation_frac=traj.violation_frac, tail_delay_us=traj.tail_delay(),
        lambda_max_seen=max(traj.lambdas) if traj.lambdas else 0.0,
        lambda_final=traj.lambdas[-1] if traj.lambdas else 0.0,
        trace_hash=f"{traj.trace_hash:016x}",
    )


def run_dir(root: Path, mode: str, n_pc3: int, d_th: float, seed: int) -> Path:
    return root / "runs" / f"{mode}_n{n_pc3}_d{int(d_th)}_s{seed}"


def run_one(cfg: ExperimentConfig, n_pc3: int, d_th: float, seed: int,
            net: Optional[QNetwork] = None, fixed_lambda: float = 0.0,
            out_root: Optional[Path] = None, figures: bool = False) -> Tuple[RunSummary, Trajectory]:
    env_cfg = cfg.env_config(n_pc3, d_th, cfg.exec_steps)
    traj = execute(env_cfg, seed, cfg.mode, net, cfg.dual(), cfg.exec_steps,
                   static_cw=cfg.static_cw(), fixed_lambda=fixed_lambda)
    summary = summarize(cfg, cfg.mode, n_pc3, d_th, seed, traj)
    if out_root is not None:
        d = run_dir(out_root, cfg.mode, n_pc3, d_th, seed)
        d.mkdir(parents=True, exist_ok=True)
        write_csv(d / "steps.csv", STEP_COLUMNS, traj.rows)
        (d / "config.txt").write_text(cfg.dumps())
        (d / "run.json").write_text(json.dumps(
            {"seed": seed, "n_pc3": n_pc3, "d_th_us": d_th, "mode": cfg.mode,
             "fixed_lambda": fixed_lambda, **asdict(summary)}, indent=2, sort_keys=True) + "\n")
        if figures:
            from .plotting import plot_execution
            plot_execution(traj.rows, d_th, d / "execution.png", title=d.name,
                           step_s=cfg.step_us * 1e-6)
    return summary, traj


def _se(xs: Sequence[float]) -> float:
    if len(xs) < 2:
        return 0.0
    return float(np.std(xs, ddof=1) / math.sqrt(len(xs)))


def aggregate(summaries: Sequence[RunSummary]) -> List[Dict]:
    groups: Dict[Tuple, List[RunSummary]] = {}
    for s in summaries:
        groups.setdefault((s.n_pc3, s.d_th_us, s.mode), []).append(s)
    rows = []
    for (n, d, mode), runs in sorted(groups.items()):
        delays = [r.final_avg_delay_us for r in runs]
        jfis = [r.final_jfi for r in runs]
        rows.append({
            "n_pc3": n, "d_th_us": d, "mode": mode, "seed_count": len(runs),
            "mean_delay_us": float(np.mean(delays)), "se_delay_us": _se(delays),
            "mean_jfi": float(np.mean(jfis)), "se_jfi": _se(jfis),
            "violation_frac": float(np.mean([r.violation_frac for r in runs])),
        })
    return rows


def emit_summary(summaries: Sequence[RunSummary], path) -> List[Dict]:
    if not summaries:
        raise ValueError("no run summaries to write")
    rows = aggregate(summaries)
    write_csv(path, SUMMARY_COLUMNS, rows)
    return rows


def train(cfg: ExperimentConfig, d_th: Optional[float] = None, out_dir: Optional[Path] = None,
          figures: bool = False) -> TrainResult:
    """Train the configured learner; writes checkpoint, curve CSV and metadata."""
    if cfg.mode == "static-cw":
        raise ValueError("static-cw mode has no learner to train")
    d_th = cfg.d_th_us[0] if d_th is None else d_th
    env_cfg = cfg.env_config(cfg.train_populations[0], d_th, cfg.episode_steps)
    fn = train_qasal if cfg.mode == "qasal" else train_primal_dual
    result = fn(env_cfg, cfg.schedule(), cfg.dual(), seed=cfg.train_seed)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(result.net, out_dir / "model.ckpt")
        write_csv(out_dir / "training_curve.csv", CURVE_COLUMNS, result.curve)
        (out_dir / "train_meta.json").write_text(json.dumps({
            "mode": cfg.mode, "d_th_us": d_th, "train_seed": cfg.train_seed,
            "final_lambda": result.final_lambda, "config_hash": cfg.config_hash(),
        }, indent=2, sort_keys=True) + "\n")
        if figures:
            from .plotting import plot_training_curve
            plot_training_curve(result.curve, d_th, out_dir / "training_curve.png")
    return result


def load_policy(path) -> Tuple[QNetwork, float]:
    """Load a checkpoint plus the final training lambda from its sidecar, if any."""
    path = Path(path)
    if not path.is_file():
        raise MissingCheckpointError(
            f"checkpoint {path} not found; run `nrucoex train` first or set train_inline = true")
    net = load_checkpoint(path)
    meta = path.with_name("train_meta.json")
    lam = json.loads(meta.read_text())["final_lambda"] if meta.is_file() else 0.0
    return net, lam


def run_sweep(cfg: ExperimentConfig, out_root: Optional[Path] = None,
              figures: Optional[bool] = None) -> List[RunSummary]:
    """Run every (n_pc3, d_th, seed) combination and write the aggregate summary."""
    out_root = Path(out_root) if out_root is not None else cfg.resolved_output_dir()
    figures = cfg.figures if figures is None else figures
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "config.txt").write_text(cfg.dumps())

    policies: Dict[float, Tuple[Optional[QNetwork], float]] = {}
    for d_th in cfg.d_th_us:
        if cfg.mode == "static-cw":
            policies[d_th] = (None, 0.0)
        elif cfg.checkpoint:
            policies[d_th] = load_policy(cfg.checkpoint)
        elif cfg.train_inline:
            res = train(cfg, d_th, out_root / "training" / f"d{int(d_th)}", figures)
            policies[d_th] = (res.net, res.final_lambda)
        else:
            raise MissingCheckpointError(
                f"mode {cfg.mode} needs `checkpoint = <path>` or `train_inline = true`")

    summaries = []
    for n_pc3, d_th, seed in product(cfg.n_ap_pc3, cfg.d_th_us, cfg.seeds):
        net, lam = policies[d_th]
        s, _ = run_one(cfg, n_pc3, d_th, seed, net, lam, out_root, figures)
        log.info("%s n_pc3=%d d_th=%.0f seed=%d delay=%.1f jfi=%.3f viol=%.3f", cfg.mode,
                 n_pc3, d_th, seed, s.final_avg_delay_us, s.final_jfi, s.violation_frac)
        summaries.append(s)

    rows = emit_summary(summaries, out_root / "summary.csv")
    write_csv(out_root / "runs.csv", list(RunSummary.__dataclass_fields__),
              [asdict(s) for s in summaries])
    if figures:
        from .plotting import plot_sweep
        plot_sweep(rows, out_root / "sweep.png")
    return summaries

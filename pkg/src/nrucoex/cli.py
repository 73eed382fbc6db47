"""Command line entry point: ``nrucoex {train,execute,sweep,validate-config}``."""

import argparse
import logging
import sys
from pathlib import Path

from .config import MODES, OUTPUT_DIR_ENV, ConfigError, ExperimentConfig, load_config
from .harness import MissingCheckpointError, load_policy, run_one, run_sweep, train

log = logging.getLogger("nrucoex")


def _load(args) -> ExperimentConfig:
    overrides = {"mode": args.mode}
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = [args.seed]
        overrides["train_seed"] = args.seed
    if args.config is None:
        cfg = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
        cfg.validate()
        return cfg
    return load_config(args.config, **overrides)


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.output_dir) if args.output_dir else cfg.resolved_output_dir()


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"ok: {args.config or '<defaults>'} (config hash {cfg.config_hash()})")
    if args.verbose:
        print(cfg.dumps(), end="")
    return 0


def cmd_train(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    d_th = args.d_th if args.d_th is not None else cfg.d_th_us[0]
    result = train(cfg, d_th, out, figures=cfg.figures and not args.no_figures)
    print(f"trained {cfg.mode} for {cfg.episodes} episodes; checkpoint {out / 'model.ckpt'} "
          f"(final lambda {result.final_lambda:.3f})")
    return 0


def cmd_execute(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    net, lam = None, 0.0
    if cfg.mode != "static-cw":
        ckpt = args.checkpoint or cfg.checkpoint or str(out / "model.ckpt")
        net, lam = load_policy(ckpt)
    n_pc3 = args.n_pc3 if args.n_pc3 is not None else cfg.n_ap_pc3[0]
    d_th = args.d_th if args.d_th is not None else cfg.d_th_us[0]
    figures = cfg.figures and not args.no_figures
    for seed in cfg.seeds:
        s, _ = run_one(cfg, n_pc3, d_th, seed, net, lam, out, figures)
        print(f"{cfg.mode} n_pc3={n_pc3} d_th={d_th:.0f}us seed={seed}: "
              f"delay={s.final_avg_delay_us:.1f}us jfi={s.final_jfi:.3f} "
              f"violation={s.violation_frac:.3f} trace={s.trace_hash}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    summaries = run_sweep(cfg, out, figures=cfg.figures and not args.no_figures)
    print(f"{len(summaries)} runs written under {out}; summary in {out / 'summary.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="key = value config file")
    common.add_argument("--seed", type=int, help="override the seed list with a single seed")
    common.add_argument("--output-dir", "-o",
                        help=f"output directory (default: config, or ${OUTPUT_DIR_ENV})")
    common.add_argument("--mode", choices=MODES, help="override the configured mode")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nrucoex", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("train", parents=[common], help="train a policy and save a checkpoint")
    sp.add_argument("--d-th", type=float, help="delay threshold in microseconds")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("execute", parents=[common], help="run a policy for each seed")
    sp.add_argument("--n-pc3", type=int, help="number of PC3 access points")
    sp.add_argument("--d-th", type=float, help="delay threshold in microseconds")
    sp.add_argument("--checkpoint", help="checkpoint path (default: <output-dir>/model.ckpt)")
    sp.set_defaults(func=cmd_execute)

    sp = sub.add_parser("sweep", parents=[common], help="population x threshold x seed sweep")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate-config", parents=[common], help="parse and validate a config")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MissingCheckpointError, ValueError, OSError) as exc:
        print(f"nrucoex {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

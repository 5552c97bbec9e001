"""Command line entry point: ``activeris <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import ActiveRisError
from . import experiments, results, verify

log = logging.getLogger("activeris")


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seeds=(args.seed,))
    if args.episodes is not None:
        cfg = replace(cfg, episodes=args.episodes)
    return cfg


def cmd_train(args, cfg: ExperimentConfig):
    cfg = replace(cfg, kind="train")
    ckpt = Path(args.out) / "checkpoints"
    logs = [experiments.run_training(cfg, seed, checkpoint_dir=ckpt) for seed in cfg.seeds]
    results.emit_training(args.out, cfg, logs, plot=args.plot)
    for m in logs:
        print(f"{m.agent} seed={m.seed}: first-20 median {m.head_median():.4f}, "
              f"final-20 median {m.tail_median():.4f} bits/s/Hz")


def cmd_antenna_sweep(args, cfg: ExperimentConfig):
    cfg = replace(cfg, kind="antenna_sweep")
    rows = experiments.antenna_sweep(cfg)
    results.emit_sweep(args.out, cfg, rows, plot=args.plot)
    for r in rows:
        print(f"M={r.M:3d} optimal={r.optimal_min_rate:.4f} random={r.random_min_rate:.4f}")


def cmd_lr_study(args, cfg: ExperimentConfig):
    cfg = replace(cfg, kind="lr_study")
    logs = experiments.lr_study(cfg, checkpoint_dir=Path(args.out) / "checkpoints")
    results.emit_training(args.out, cfg, logs, plot=args.plot)
    for row in _final_medians(logs):
        print(row)


def _final_medians(logs):
    import numpy as np
    groups = {}
    for m in logs:
        groups.setdefault((m.agent, m.learning_rate), []).append(m.tail_median())
    return [f"{a} lr={lr:g}: final-20 median (over seeds) {np.median(v):.4f}" for (a, lr), v in groups.items()]


def cmd_scale_study(args, cfg: ExperimentConfig):
    cfg = replace(cfg, kind="scale_study")
    cases, logs = experiments.scale_study(cfg, checkpoint_dir=Path(args.out) / "checkpoints")
    results.emit_scale(args.out, cfg, cases, logs, plot=args.plot)
    for c in cases:
        print(f"K={c.users} N_l={c.elements_per_ris} action_dim={c.action_dim} "
              f"convergence episodes={list(c.convergence_episodes)}")


def cmd_verify(args, cfg: ExperimentConfig):
    seed = cfg.seeds[0]
    checks = verify.run_verify(cfg, seed=seed, include_agents=args.with_agents,
                               progress=lambda c: print(c.line(), flush=True))
    results.emit_verify(args.out, cfg, checks, seed)
    return 0 if all(c.passed for c in checks) else 1


COMMANDS = {
    "train": cmd_train,
    "antenna-sweep": cmd_antenna_sweep,
    "lr-study": cmd_lr_study,
    "scale-study": cmd_scale_study,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activeris", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML experiment config (defaults built in)")
        p.add_argument("--seed", type=int, help="run a single seed instead of the config's seed list")
        p.add_argument("--out", default=f"results/{name}", help="output directory")
        p.add_argument("--episodes", type=int, help="override the episode budget")
        p.add_argument("--plot", action="store_true", help="also write a gnuplot script")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "verify":
            p.add_argument("--with-agents", action="store_true", help="include the toy-MDP agent checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        cfg = _load(args)
        code = COMMANDS[args.command](args, cfg)
    except ActiveRisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())

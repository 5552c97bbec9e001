"""CSV, manifest and gnuplot emission for experiment results.

All numbers are written with a fixed ``.12g`` format so identical inputs
produce byte-identical files.  Files are written to a temporary name and
renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import os
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ActiveRisError

TRAINING_COLUMNS = ["agent", "learning_rate", "seed", "episode", "min_rate", "mean_reward"]
SUMMARY_COLUMNS = ["agent", "learning_rate", "episode", "median_min_rate", "q25_min_rate", "q75_min_rate"]
SWEEP_COLUMNS = ["M", "optimal_min_rate", "random_min_rate", "optimal_min_sinr", "random_min_sinr"]
SCALE_COLUMNS = ["users", "elements_per_ris", "action_dim", "seed", "convergence_episode"]
VERIFY_COLUMNS = ["check", "value", "threshold", "passed"]


class ResultsIOError(ActiveRisError, OSError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".{path.name}.tmp")
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise ResultsIOError(f"cannot write {path}: {exc}") from exc
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return _atomic_write(Path(path), buf.getvalue())


def training_rows(logs) -> list[list]:
    rows = []
    for m in logs:
        for r in m.records:
            rows.append([m.agent, m.learning_rate, m.seed, r.episode, r.min_rate, r.mean_reward])
    return rows


def user_rate_rows(log) -> tuple[list[str], list[list]]:
    k = len(log.records[0].user_rates) if log.records else 0
    header = ["episode", "min_rate", "mean_reward"] + [f"rate_user_{i}" for i in range(k)]
    rows = [[r.episode, r.min_rate, r.mean_reward, *r.user_rates] for r in log.records]
    return header, rows


def summary_rows(logs) -> list[list]:
    """Median and interquartile band across seeds, per (agent, lr, episode)."""
    groups: dict = defaultdict(list)
    for m in logs:
        groups[(m.agent, m.learning_rate)].append(m.curve())
    rows = []
    for (agent, lr), curves in groups.items():
        n = min(len(c) for c in curves)
        stack = np.stack([c[:n] for c in curves])
        q25, med, q75 = np.percentile(stack, [25, 50, 75], axis=0)
        for e in range(n):
            rows.append([agent, lr, e, med[e], q25[e], q75[e]])
    return rows


def write_manifest(path, config, seeds: Sequence[int], files: Sequence[str], extra: dict | None = None) -> Path:
    manifest = {
        "code_version": __version__,
        "kind": config.kind,
        "config_hash": config.config_hash(),
        "seeds": [int(s) for s in seeds],
        "files": sorted(files),
        "config": config.to_dict(),
    }
    if extra:
        manifest.update(extra)
    return _atomic_write(Path(path), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def gnuplot_script(csv_name: str, x: str, ys: Sequence[str], title: str, header: Sequence[str]) -> str:
    cols = {name: i + 1 for i, name in enumerate(header)}
    plots = ", ".join(f"'{csv_name}' using {cols[x]}:{cols[y]} with linespoints title '{y}'" for y in ys)
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set title '{title}'\n"
        f"set xlabel '{x}'\n"
        "set terminal pngcairo size 900,600\n"
        f"set output '{Path(csv_name).stem}.png'\n"
        f"plot {plots}\n"
    )


def emit_training(out_dir, config, logs, plot: bool = False) -> list[Path]:
    out = Path(out_dir)
    files = [write_csv(out / "training.csv", TRAINING_COLUMNS, training_rows(logs)),
             write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary_rows(logs))]
    for m in logs:
        header, rows = user_rate_rows(m)
        files.append(write_csv(out / f"users_{m.agent}_lr{fmt(m.learning_rate)}_seed{m.seed}.csv", header, rows))
    if plot:
        files.append(_atomic_write(out / "summary.gp", gnuplot_script(
            "summary.csv", "episode", ["median_min_rate"], "minimum rate vs episode", SUMMARY_COLUMNS)))
    write_manifest(out / "manifest.json", config, sorted({m.seed for m in logs}), [f.name for f in files])
    return files


def emit_sweep(out_dir, config, rows, plot: bool = False) -> list[Path]:
    out = Path(out_dir)
    data = [[r.M, r.optimal_min_rate, r.random_min_rate, r.optimal_min_sinr, r.random_min_sinr] for r in rows]
    files = [write_csv(out / "antenna_sweep.csv", SWEEP_COLUMNS, data)]
    if plot:
        files.append(_atomic_write(out / "antenna_sweep.gp", gnuplot_script(
            "antenna_sweep.csv", "M", ["optimal_min_rate", "random_min_rate"], "minimum rate vs BS antennas",
            SWEEP_COLUMNS)))
    write_manifest(out / "manifest.json", config, config.seeds, [f.name for f in files])
    return files


def emit_scale(out_dir, config, cases, logs, plot: bool = False) -> list[Path]:
    out = Path(out_dir)
    rows = []
    for c in cases:
        for seed, e in zip(config.seeds, c.convergence_episodes):
            rows.append([c.users, c.elements_per_ris, c.action_dim, seed, e])
    files = [write_csv(out / "scale_study.csv", SCALE_COLUMNS, rows)]
    curve_rows = []
    per_case = len(config.seeds)
    for i, m in enumerate(logs):
        c = cases[i // per_case]
        for r in m.records:
            curve_rows.append([c.users, c.elements_per_ris, m.seed, r.episode, r.min_rate, r.mean_reward])
    files.append(write_csv(out / "scale_curves.csv",
                           ["users", "elements_per_ris", "seed", "episode", "min_rate", "mean_reward"], curve_rows))
    if plot:
        files.append(_atomic_write(out / "scale_curves.gp", gnuplot_script(
            "scale_curves.csv", "episode", ["min_rate"], "minimum rate vs episode (SAC)",
            ["users", "elements_per_ris", "seed", "episode", "min_rate", "mean_reward"])))
    write_manifest(out / "manifest.json", config, config.seeds, [f.name for f in files])
    return files


def emit_verify(out_dir, config, checks, seed: int) -> list[Path]:
    out = Path(out_dir)
    files = [write_csv(out / "verify.csv", VERIFY_COLUMNS,
                       [[c.name, c.value, c.threshold, c.passed] for c in checks])]
    write_manifest(out / "manifest.json", config, [seed], [f.name for f in files])
    return files

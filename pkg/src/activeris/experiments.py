"""Training loop and the experiment designs built on it."""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .agents import Agent, Transition, make_agent
from .channel import generate_channels
from .config import ExperimentConfig
from .errors import ParameterError
from .env import EpisodeConfig, RisEnv, Scenario, decode_action
from .signal import optimal_beamforming, random_beamforming, rate_report

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    min_rate: float  # min-rate after the last step of the episode
    mean_reward: float
    user_rates: tuple[float, ...]
    wall_clock: float = field(default=0.0, compare=False)


@dataclass
class MetricsLog:
    agent: str
    seed: int
    learning_rate: float
    config_hash: str
    records: list[EpisodeRecord] = field(default_factory=list)
    checkpoint: Optional[str] = field(default=None, compare=False)

    def curve(self, metric: str = "min_rate") -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.records])

    def head_median(self, n: int = 20, metric: str = "min_rate") -> float:
        return float(np.median(self.curve(metric)[:n]))

    def tail_median(self, n: int = 20, metric: str = "min_rate") -> float:
        return float(np.median(self.curve(metric)[-n:]))


def convergence_episode(curve: Sequence[float], window: int = 20, tolerance: float = 0.05) -> int:
    """First episode whose trailing-window median is within ``tolerance`` of the final median.

    The final median is the median of the last ``window`` values.  Returns
    the 0-based episode index; windows are only formed once ``window``
    values are available.
    """
    c = np.asarray(curve, dtype=float)
    if c.size < window:
        raise ParameterError(f"need at least {window} episodes, got {c.size}")
    final = np.median(c[-window:])
    band = tolerance * abs(final)
    for e in range(window - 1, c.size):
        if abs(np.median(c[e - window + 1:e + 1]) - final) <= band:
            return e
    return c.size - 1


def train(env, agent: Agent, episodes: int, *, warmup_episodes: int = 1, early_stop=None,
          terminal_on_done: bool = True, on_episode=None) -> list[EpisodeRecord]:
    """Run the hybrid loop: act, step (beamformers recomputed inside), store, update."""
    records = []
    steps_per_episode = env.episode_config.steps_per_episode if hasattr(env, "episode_config") else None
    warmup_steps = warmup_episodes * (steps_per_episode or 0)
    total_steps = 0
    best, since_best = -np.inf, 0
    t0 = time.perf_counter()
    for ep in range(episodes):
        obs = env.reset()
        rewards = []
        done = False
        info = None
        while not done:
            if total_steps < warmup_steps:
                action = agent.random_action()
            else:
                action = agent.select_action(obs, explore=True)
            res = env.step(action)
            next_obs, reward, done, info = res.observation, res.reward, res.done, res.info
            agent.store(Transition(obs, action, reward, next_obs, done and terminal_on_done))
            total_steps += 1
            if total_steps >= warmup_steps:
                agent.train_step()
            rewards.append(reward)
            obs = next_obs
        rec = EpisodeRecord(ep, float(info.min_rate), float(np.mean(rewards)),
                            tuple(float(r) for r in info.rates), time.perf_counter() - t0)
        records.append(rec)
        if on_episode is not None:
            on_episode(rec)
        if early_stop is not None and early_stop.enabled and ep + 1 >= early_stop.window:
            level = float(np.median([r.min_rate for r in records[-early_stop.window:]]))
            if level > best + early_stop.min_delta:
                best, since_best = level, 0
            else:
                since_best += 1
                if since_best >= early_stop.patience:
                    log.info("reward plateau reached after %d episodes", ep + 1)
                    break
    return records


def make_env(config: ExperimentConfig, seed: int, scenario: Optional[Scenario] = None) -> RisEnv:
    return RisEnv(scenario or config.scenario,
                  EpisodeConfig(config.steps_per_episode, config.redraw_channels_each_episode, seed))


def run_training(config: ExperimentConfig, seed: Optional[int] = None, *,
                 checkpoint_dir=None, scenario: Optional[Scenario] = None) -> MetricsLog:
    """Train ``config.agent`` on ``config.scenario`` for one seed."""
    seed = config.seeds[0] if seed is None else seed
    env = make_env(config, seed, scenario)
    agent = make_agent(config.agent, env.observation_dim, env.action_dim, config.hyperparams, seed)

    def progress(rec):
        if (rec.episode + 1) % 25 == 0:
            log.info("%s seed=%d episode=%d min_rate=%.4f", config.agent, seed, rec.episode + 1, rec.min_rate)

    records = train(env, agent, config.episodes, warmup_episodes=config.warmup_episodes,
                    early_stop=config.early_stop, on_episode=progress)
    out = MetricsLog(config.agent, seed, config.hyperparams.learning_rate, config.config_hash(), records)
    if checkpoint_dir is not None and agent.networks():
        path = Path(checkpoint_dir) / f"{config.agent}_seed{seed}.npz"
        out.checkpoint = str(agent.save(path))
    return out


@dataclass(frozen=True)
class SweepRow:
    M: int
    optimal_min_rate: float
    random_min_rate: float
    optimal_min_sinr: float
    random_min_sinr: float


def antenna_sweep(config: ExperimentConfig, antenna_counts: Optional[Sequence[int]] = None) -> list[SweepRow]:
    """Optimal vs random receive beamforming for a fixed random feasible (p, Phi).

    For every seed and realization the same channel seed and the same
    random action are reused across antenna counts.
    """
    counts = tuple(antenna_counts or config.antenna_sweep.antenna_counts)
    reps = config.antenna_sweep.realizations_per_seed
    rows = []
    for M in counts:
        scen = replace(config.scenario, num_antennas=int(M))
        acc = np.zeros(4)
        n = 0
        for seed in config.seeds:
            geometry = scen.geometry(seed)
            for r in range(reps):
                ss = np.random.SeedSequence([seed, r])
                ch_seed, act_seed, bf_seed = ss.spawn(3)
                channels = generate_channels(geometry, scen.fading, ch_seed)
                action = np.random.default_rng(act_seed).uniform(-1, 1, scen.action_dim)
                powers, ris = decode_action(action, scen.num_users, scen.elements_per_ris, scen.p_max, scen.phi_max)
                opt = rate_report(channels, ris, powers, optimal_beamforming(channels, ris, powers))
                rnd = rate_report(channels, ris, powers, random_beamforming(M, scen.num_users, bf_seed))
                acc += (opt.min_rate, rnd.min_rate, opt.min_sinr, rnd.min_sinr)
                n += 1
        acc /= n
        rows.append(SweepRow(int(M), *map(float, acc)))
    return rows


def lr_study(config: ExperimentConfig, learning_rates: Optional[Sequence[float]] = None,
             agents: Optional[Sequence[str]] = None, checkpoint_dir=None) -> list[MetricsLog]:
    """Full factorial agent x learning-rate x seed training runs."""
    lrs = tuple(learning_rates or config.lr_study.learning_rates)
    names = tuple(agents or config.lr_study.agents)
    logs = []
    for name in names:
        for lr in lrs:
            cfg = replace(config, agent=name, hyperparams=replace(config.hyperparams, learning_rate=float(lr)))
            for seed in config.seeds:
                logs.append(run_training(cfg, seed, checkpoint_dir=checkpoint_dir))
    return logs


@dataclass(frozen=True)
class ScaleCase:
    users: int
    elements_per_ris: int
    action_dim: int
    convergence_episodes: tuple[int, ...]


def scale_scenario(config: ExperimentConfig, users: int, elements: int) -> Scenario:
    return replace(config.scenario, num_users=int(users),
                   elements_per_ris=(int(elements),) * config.scenario.num_ris)


def scale_study(config: ExperimentConfig, cases=None, checkpoint_dir=None) -> tuple[list[ScaleCase], list[MetricsLog]]:
    """SAC on increasingly large systems; records the convergence episode per seed."""
    sc = config.scale_study
    cases = tuple(cases or sc.cases)
    cfg = replace(config, agent="sac", hyperparams=replace(config.hyperparams, learning_rate=sc.learning_rate))
    summary, logs = [], []
    for users, elements in cases:
        scen = scale_scenario(cfg, users, elements)
        if scen.action_dim > sc.action_dim_cap:
            warnings.warn(f"action dimension {scen.action_dim} exceeds the configured cap {sc.action_dim_cap}",
                          RuntimeWarning, stacklevel=2)
        conv = []
        for seed in cfg.seeds:
            ckpt = None if checkpoint_dir is None else Path(checkpoint_dir) / f"K{users}_N{elements}"
            m = run_training(cfg, seed, scenario=scen, checkpoint_dir=ckpt)
            logs.append(m)
            conv.append(convergence_episode(m.curve(), cfg.convergence.window, cfg.convergence.tolerance))
        summary.append(ScaleCase(int(users), int(elements), scen.action_dim, tuple(conv)))
    return summary, logs

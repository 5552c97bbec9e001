"""Episodic environment over user powers and active-RIS coefficients.

Each step decodes an action in [-1, 1]^(K + 2 N_total) into powers and
reflection coefficients, recomputes the closed-form receive beamformers for
that configuration and rewards the agent with the resulting minimum rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ChannelRealization, FadingParams, SystemGeometry, generate_channels, place_nodes
from .errors import ActionError, EnvironmentStateError, ParameterError
from .signal import (
    BeamformingMatrix,
    PowerAllocation,
    RateReport,
    RisProfile,
    optimal_beamforming,
    rate_report,
)

__all__ = [
    "Scenario",
    "EpisodeConfig",
    "StepResult",
    "RisEnv",
    "dbm_to_watt",
    "db_to_amplitude",
    "action_dim",
    "observation_dim",
    "decode_action",
    "encode_observation",
]


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_amplitude(db: float, power_gain: bool = True) -> float:
    """Amplitude cap for a gain in dB (read as a power gain unless told otherwise)."""
    return 10.0 ** (db / 20.0) if power_gain else 10.0 ** (db / 10.0)


def action_dim(K: int, N_total: int) -> int:
    return K + 2 * N_total


def observation_dim(K: int, N_total: int) -> int:
    return 2 * K * (1 + N_total)


@dataclass(frozen=True)
class Scenario:
    """Geometry, fading and transmit limits of one simulated system."""

    num_users: int = 4
    num_ris: int = 4
    num_antennas: int = 2
    elements_per_ris: tuple[int, ...] = (10, 10, 10, 10)
    bs_position: tuple[float, float, float] = (0.0, 0.0, 5.0)
    ris_radius: float = 12.0
    user_radius: float = 6.0
    ris_height: float = 5.0
    user_height: float = 1.5
    random_angles: bool = False
    fading: FadingParams = field(default_factory=FadingParams)
    p_max_dbm: float = 23.0
    ris_gain_db: float = 3.0
    ris_gain_is_power: bool = True

    def __post_init__(self):
        n = self.elements_per_ris
        if np.isscalar(n):
            n = (int(n),) * self.num_ris
        object.__setattr__(self, "elements_per_ris", tuple(int(x) for x in n))
        if len(self.elements_per_ris) != self.num_ris:
            raise ParameterError("elements_per_ris must list one count per RIS")

    @property
    def p_max(self) -> float:
        return dbm_to_watt(self.p_max_dbm)

    @property
    def phi_max(self) -> float:
        return db_to_amplitude(self.ris_gain_db, self.ris_gain_is_power)

    @property
    def N_total(self) -> int:
        return sum(self.elements_per_ris)

    @property
    def action_dim(self) -> int:
        return action_dim(self.num_users, self.N_total)

    @property
    def observation_dim(self) -> int:
        return observation_dim(self.num_users, self.N_total)

    def geometry(self, seed: int = 0) -> SystemGeometry:
        return place_nodes(
            self.num_users, self.num_ris, self.num_antennas, self.elements_per_ris,
            bs_position=self.bs_position, ris_radius=self.ris_radius, user_radius=self.user_radius,
            ris_height=self.ris_height, user_height=self.user_height,
            random_angles=self.random_angles, seed=seed,
        )


@dataclass(frozen=True)
class EpisodeConfig:
    steps_per_episode: int = 50
    redraw_channels_each_episode: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.steps_per_episode < 1:
            raise ParameterError("steps_per_episode must be >= 1")


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: RateReport


def decode_action(action, K: int, N: tuple[int, ...], p_max: float, phi_max) -> tuple[PowerAllocation, RisProfile]:
    """Map a [-1, 1] action to powers in [0, p_max] and coefficients with |phi| <= phi_max.

    Entries outside [-1, 1] are clipped first.  Coefficients are scaled by
    phi_max and radially projected back onto the disc when they leave it.
    """
    a = np.asarray(action, dtype=float).reshape(-1)
    n_total = sum(N)
    if a.size != action_dim(K, n_total):
        raise ActionError(f"action length {a.size} != K + 2*N_total = {action_dim(K, n_total)}")
    a = np.clip(a, -1.0, 1.0)
    p = p_max * (a[:K] + 1.0) / 2.0
    caps = np.broadcast_to(np.asarray(phi_max, dtype=float), (len(N),))
    cap_per_elem = np.repeat(caps, N)
    phi = cap_per_elem * (a[K:K + n_total] + 1j * a[K + n_total:])
    mag = np.abs(phi)
    over = mag > cap_per_elem
    phi[over] *= cap_per_elem[over] / mag[over]
    splits = np.cumsum(N)[:-1]
    return PowerAllocation(p, p_max), RisProfile(tuple(np.split(phi, splits)), tuple(caps))


def encode_observation(channels: ChannelRealization, beams: BeamformingMatrix) -> np.ndarray:
    """[Re w_k^H d_k; Im w_k^H d_k; Re w_k^H G_l diag(h_{k->l}); Im ...] over k, then (k, l, n)."""
    wc = beams.w.conj()
    direct = np.einsum("km,km->k", wc, channels.direct)
    cascaded = (wc @ channels.stacked_ris_to_bs) * channels.stacked_user_to_ris  # (K, N_total)
    flat = cascaded.reshape(-1)
    return np.concatenate([direct.real, direct.imag, flat.real, flat.imag])


class RisEnv:
    """Single-threaded episodic environment.

    Geometry is fixed at construction.  Channels of episode ``e`` are drawn
    from a seed derived from (seed, e) so that the whole trajectory is a
    deterministic function of the seed and the actions.
    """

    def __init__(self, scenario: Scenario, episode: EpisodeConfig = EpisodeConfig()):
        self.scenario = scenario
        self.episode_config = episode
        self.geometry = scenario.geometry(seed=episode.seed)
        self.K = scenario.num_users
        self.N = scenario.elements_per_ris
        self.p_max = scenario.p_max
        self.phi_max = scenario.phi_max
        self.channels: Optional[ChannelRealization] = None
        self.powers: Optional[PowerAllocation] = None
        self.ris: Optional[RisProfile] = None
        self.beams: Optional[BeamformingMatrix] = None
        self.episode_index = -1
        self.t = 0
        self._seeds = np.random.SeedSequence(episode.seed)

    @property
    def action_dim(self) -> int:
        return self.scenario.action_dim

    @property
    def observation_dim(self) -> int:
        return self.scenario.observation_dim

    def _draw_channels(self) -> ChannelRealization:
        child = self._seeds.spawn(1)[0]
        return generate_channels(self.geometry, self.scenario.fading, child)

    def reset(self) -> np.ndarray:
        self.episode_index += 1
        if self.channels is None or self.episode_config.redraw_channels_each_episode:
            self.channels = self._draw_channels()
        self.powers = PowerAllocation(np.full(self.K, self.p_max / 2.0), self.p_max)
        self.ris = RisProfile.zeros(self.N, self.phi_max)
        self.beams = optimal_beamforming(self.channels, self.ris, self.powers)
        self.t = 0
        return encode_observation(self.channels, self.beams)

    def step(self, action) -> StepResult:
        if self.channels is None:
            raise EnvironmentStateError("step() called before reset()")
        if self.t >= self.episode_config.steps_per_episode:
            raise EnvironmentStateError("episode finished; call reset()")
        self.powers, self.ris = decode_action(action, self.K, self.N, self.p_max, self.phi_max)
        self.beams = optimal_beamforming(self.channels, self.ris, self.powers)
        report = rate_report(self.channels, self.ris, self.powers, self.beams)
        self.t += 1
        done = self.t >= self.episode_config.steps_per_episode
        return StepResult(encode_observation(self.channels, self.beams), report.min_rate, done, report)

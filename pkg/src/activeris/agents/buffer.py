from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DimensionError, ParameterError


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(frozen=True)
class Batch:
    states: np.ndarray  # (B, obs_dim)
    actions: np.ndarray  # (B, act_dim)
    rewards: np.ndarray  # (B,)
    next_states: np.ndarray
    dones: np.ndarray  # (B,) float 0/1

    def __len__(self) -> int:
        return self.rewards.shape[0]

    def with_rewards(self, rewards) -> "Batch":
        return Batch(self.states, self.actions, np.asarray(rewards, dtype=float), self.next_states, self.dones)


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform batch sampling."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ParameterError("buffer capacity must be >= 1")
        self.capacity = int(capacity)
        self.obs_dim, self.act_dim = obs_dim, act_dim
        self._states = np.zeros((capacity, obs_dim))
        self._next = np.zeros((capacity, obs_dim))
        self._actions = np.zeros((capacity, act_dim))
        self._rewards = np.zeros(capacity)
        self._dones = np.zeros(capacity)
        self.inserted = 0

    def __len__(self) -> int:
        return min(self.inserted, self.capacity)

    def store(self, t: Transition) -> None:
        s = np.asarray(t.state, dtype=float)
        a = np.asarray(t.action, dtype=float)
        s2 = np.asarray(t.next_state, dtype=float)
        if s.shape != (self.obs_dim,) or s2.shape != (self.obs_dim,) or a.shape != (self.act_dim,):
            raise DimensionError("transition does not match the buffer dimensions")
        i = self.inserted % self.capacity
        self._states[i] = s
        self._actions[i] = a
        self._rewards[i] = t.reward
        self._next[i] = s2
        self._dones[i] = float(t.done)
        self.inserted += 1

    def sample(self, batch_size: int, seed) -> Optional[Batch]:
        """Uniform batch without replacement, or None if fewer than batch_size stored."""
        if batch_size > len(self):
            return None
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        idx = rng.choice(len(self), size=batch_size, replace=False)
        return Batch(self._states[idx], self._actions[idx], self._rewards[idx],
                     self._next[idx], self._dones[idx])

    def transition(self, age: int) -> Transition:
        """Transition stored ``age`` insertions ago (0 is the newest)."""
        if not 0 <= age < len(self):
            raise IndexError(age)
        i = (self.inserted - 1 - age) % self.capacity
        return Transition(self._states[i].copy(), self._actions[i].copy(), float(self._rewards[i]),
                          self._next[i].copy(), bool(self._dones[i]))

"""Two-state continuous-action MDP with a value-iteration reference.

State s in {0, 1} is observed one-hot.  A scalar action a in [-1, 1] earns
``base[s] - (a - target)**2`` and moves the system to state 1 if a > 0,
otherwise to state 0.  Discretising the action axis makes the optimal value
computable by plain value iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnvironmentStateError


@dataclass(frozen=True)
class ToyMdp:
    base: tuple[float, float] = (0.0, 1.0)
    target: float = 0.5
    gamma: float = 0.5
    steps_per_episode: int = 10

    def reward(self, s: int, a: float) -> float:
        return self.base[s] - (a - self.target) ** 2

    @staticmethod
    def next_state(a: float) -> int:
        return int(a > 0.0)

    def value_iteration(self, grid_points: int = 4001, tol: float = 1e-12) -> np.ndarray:
        """Optimal state values over a uniform action grid on [-1, 1]."""
        grid = np.linspace(-1.0, 1.0, grid_points)
        nxt = (grid > 0).astype(int)
        rewards = np.array([[self.reward(s, a) for a in grid] for s in (0, 1)])
        v = np.zeros(2)
        while True:
            q = rewards + self.gamma * v[nxt][None, :]
            v_new = q.max(axis=1)
            if np.max(np.abs(v_new - v)) < tol:
                return v_new
            v = v_new


class ToyEnv:
    """Episodic wrapper with the same reset/step surface as RisEnv.

    Episodes are truncated after ``steps_per_episode`` steps; the
    ``done`` flag marks the truncation but transitions are stored as
    non-terminal by the training loop, so values are infinite-horizon.
    """

    observation_dim = 2
    action_dim = 1
    truncation_only = True

    def __init__(self, mdp: ToyMdp = ToyMdp(), seed: int = 0):
        self.mdp = mdp
        self.rng = np.random.default_rng(seed)
        self.state = None
        self.t = 0

    @staticmethod
    def encode(s: int) -> np.ndarray:
        out = np.zeros(2)
        out[s] = 1.0
        return out

    def reset(self) -> np.ndarray:
        self.state = int(self.rng.integers(2))
        self.t = 0
        return self.encode(self.state)

    def step(self, action):
        if self.state is None:
            raise EnvironmentStateError("step() called before reset()")
        a = float(np.clip(np.asarray(action, dtype=float).reshape(-1)[0], -1.0, 1.0))
        r = self.mdp.reward(self.state, a)
        self.state = self.mdp.next_state(a)
        self.t += 1
        return self.encode(self.state), r, self.t >= self.mdp.steps_per_episode

    def rollout_return(self, policy, start: int, horizon: int = 50) -> float:
        """Discounted return of a policy (obs -> action) from a given state."""
        s, total = start, 0.0
        for t in range(horizon):
            a = float(np.clip(np.asarray(policy(self.encode(s))).reshape(-1)[0], -1.0, 1.0))
            total += self.mdp.gamma ** t * self.mdp.reward(s, a)
            s = self.mdp.next_state(a)
        return total

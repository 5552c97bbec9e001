"""DDPG and TD3 (deterministic tanh actors with Gaussian exploration)."""
from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..nn import adam_update, soft_update
from .base import Agent, AgentHyperparams, Network, mse_grad
from .buffer import Batch


class DdpgAgent(Agent):
    name = "ddpg"

    def __init__(self, obs_dim: int, act_dim: int, hp: AgentHyperparams = AgentHyperparams(), seed=0):
        super().__init__(obs_dim, act_dim, hp, seed)
        lr = hp.learning_rate
        self.actor = Network(self._hidden(obs_dim, act_dim, "tanh"), self.rng, lr)
        self.q1 = Network(self._hidden(obs_dim + act_dim, 1, "identity"), self.rng, lr)
        self.actor_target = self.actor.clone()
        self.q1_target = self.q1.clone()

    def networks(self):
        return {"actor": self.actor, "q1": self.q1,
                "actor_target": self.actor_target, "q1_target": self.q1_target}

    def select_action(self, observation, explore: bool = True) -> np.ndarray:
        obs = self.norm(self._check_obs(observation))
        a = self.actor(obs)
        if explore and self.hp.exploration_noise > 0:
            a = a + self.hp.exploration_noise * self.rng.standard_normal(a.shape)
        return np.clip(a, -1.0, 1.0)

    def target_actions(self, s2: np.ndarray, rng=None) -> np.ndarray:
        return self.actor_target(s2)

    def target_q(self, x2: np.ndarray) -> np.ndarray:
        return self.q1_target(x2)[:, 0]

    def critic_target(self, batch: Batch, rng=None) -> np.ndarray:
        """y = r + gamma * (1 - done) * Q'(s', a') with a' from the target actor."""
        s2 = self.norm(batch.next_states)
        a2 = self.target_actions(s2, rng)
        q_next = self.target_q(np.concatenate([s2, a2], axis=1))
        return batch.rewards + self.hp.gamma * (1.0 - batch.dones) * q_next

    def critics(self) -> tuple[Network, ...]:
        return (self.q1,)

    def actor_gradient(self, states: np.ndarray) -> tuple[float, object, np.ndarray]:
        """Actor loss -mean Q1(s, mu(s)) and the gradient w.r.t. the actor output."""
        a, cache = self.actor.forward(states)
        q, qc = self.q1.forward(np.concatenate([states, a], axis=1))
        B = states.shape[0]
        cols = slice(self.obs_dim, self.obs_dim + self.act_dim)
        _, dq_da = self.q1.backward(qc, np.full((B, 1), 1.0 / B), need_input_grad=True, input_slice=cols)
        return -float(np.mean(q)), cache, -dq_da

    def _update_critics(self, batch: Batch, s: np.ndarray) -> float:
        y = self.critic_target(batch)
        x = np.concatenate([s, batch.actions], axis=1)
        losses = []
        for q in self.critics():
            pred, cache = q.forward(x)
            loss, g = mse_grad(pred, y)
            grads, _ = q.backward(cache, g)
            adam_update(q.params, grads, q.opt)
            losses.append(loss)
        return float(np.mean(losses))

    def _update_actor(self, s: np.ndarray) -> float:
        loss, cache, g = self.actor_gradient(s)
        grads, _ = self.actor.backward(cache, g)
        adam_update(self.actor.params, grads, self.actor.opt)
        return loss

    def _soft_update_targets(self):
        soft_update(self.actor_target.params, self.actor.params, self.hp.tau)
        soft_update(self.q1_target.params, self.q1.params, self.hp.tau)

    def update(self, batch: Batch) -> dict:
        if len(batch) == 0:
            raise ParameterError("cannot update on an empty batch")
        s = self.norm(batch.states)
        critic_loss = self._update_critics(batch, s)
        actor_loss = self._update_actor(s)
        self._soft_update_targets()
        self.updates += 1
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}


class Td3Agent(DdpgAgent):
    """Twin critics, target policy smoothing and delayed actor updates."""

    name = "td3"

    def __init__(self, obs_dim: int, act_dim: int, hp: AgentHyperparams = AgentHyperparams(), seed=0):
        super().__init__(obs_dim, act_dim, hp, seed)
        self.q2 = Network(self._hidden(obs_dim + act_dim, 1, "identity"), self.rng, hp.learning_rate)
        self.q2_target = self.q2.clone()

    def networks(self):
        nets = super().networks()
        nets.update({"q2": self.q2, "q2_target": self.q2_target})
        return nets

    def critics(self):
        return (self.q1, self.q2)

    def target_actions(self, s2, rng=None):
        rng = self.rng if rng is None else rng
        a2 = self.actor_target(s2)
        hp = self.hp
        if hp.target_noise > 0:
            noise = np.clip(hp.target_noise * rng.standard_normal(a2.shape),
                            -hp.target_noise_clip, hp.target_noise_clip)
            a2 = np.clip(a2 + noise, -1.0, 1.0)
        return a2

    def target_q(self, x2):
        return np.minimum(self.q1_target(x2)[:, 0], self.q2_target(x2)[:, 0])

    def _soft_update_targets(self):
        super()._soft_update_targets()
        soft_update(self.q2_target.params, self.q2.params, self.hp.tau)

    def update(self, batch: Batch, update_index: int | None = None) -> dict:
        if len(batch) == 0:
            raise ParameterError("cannot update on an empty batch")
        if update_index is None:
            update_index = self.updates
        s = self.norm(batch.states)
        critic_loss = self._update_critics(batch, s)
        actor_loss = None
        if update_index % self.hp.policy_delay == 0:
            actor_loss = self._update_actor(s)
            self._soft_update_targets()
        self.updates += 1
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}

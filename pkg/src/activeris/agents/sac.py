"""Soft actor-critic with twin critics and a tanh-squashed Gaussian policy."""
from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..nn import LOG_STD_MAX, LOG_STD_MIN, adam_update, soft_update, squashed_gaussian_log_prob
from .base import Agent, AgentHyperparams, Network, mse_grad
from .buffer import Batch


class SacAgent(Agent):
    name = "sac"

    def __init__(self, obs_dim: int, act_dim: int, hp: AgentHyperparams = AgentHyperparams(), seed=0):
        super().__init__(obs_dim, act_dim, hp, seed)
        lr = hp.learning_rate
        self.actor = Network(self._hidden(obs_dim, 2 * act_dim, "identity"), self.rng, lr)
        self.q1 = Network(self._hidden(obs_dim + act_dim, 1, "identity"), self.rng, lr)
        self.q2 = Network(self._hidden(obs_dim + act_dim, 1, "identity"), self.rng, lr)
        self.q1_target = self.q1.clone()
        self.q2_target = self.q2.clone()
        self.log_alpha = np.log(hp.alpha) if hp.alpha > 0 else -np.inf
        self.target_entropy = -float(act_dim)
        self._alpha_m = self._alpha_v = 0.0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))

    def networks(self):
        return {"actor": self.actor, "q1": self.q1, "q2": self.q2,
                "q1_target": self.q1_target, "q2_target": self.q2_target}

    def _split(self, out):
        mean = out[..., : self.act_dim]
        log_std = out[..., self.act_dim:]
        return mean, log_std

    def policy(self, states):
        """Mean and clamped log-std of the pre-squash Gaussian for (normalised) states."""
        mean, log_std = self._split(self.actor(states))
        return mean, np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)

    def select_action(self, observation, explore: bool = True) -> np.ndarray:
        obs = self.norm(self._check_obs(observation))
        mean, log_std = self.policy(obs)
        if not explore:
            return np.tanh(mean)
        u = mean + np.exp(log_std) * self.rng.standard_normal(mean.shape)
        return np.tanh(u)

    def critic_target(self, batch: Batch, rng=None) -> np.ndarray:
        """y = r + gamma * (1 - done) * (min_i Q_i'(s', a') - alpha log pi(a'|s')), a' ~ pi(.|s')."""
        rng = self.rng if rng is None else rng
        s2 = self.norm(batch.next_states)
        mean, log_std = self.policy(s2)
        u = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        a2 = np.tanh(u)
        logp = squashed_gaussian_log_prob(u, mean, log_std)
        x2 = np.concatenate([s2, a2], axis=1)
        q_next = np.minimum(self.q1_target(x2)[:, 0], self.q2_target(x2)[:, 0])
        soft_value = q_next - (self.alpha * logp if self.alpha > 0 else 0.0)
        return batch.rewards + self.hp.gamma * (1.0 - batch.dones) * soft_value

    def actor_loss(self, s: np.ndarray, xi: np.ndarray) -> float:
        """E[alpha log pi(a|s) - min_i Q_i(s, a)] for a = tanh(mean + std * xi)."""
        mean, log_std = self.policy(s)
        u = mean + np.exp(log_std) * xi
        logp = squashed_gaussian_log_prob(u, mean, log_std)
        xa = np.concatenate([s, np.tanh(u)], axis=1)
        qmin = np.minimum(self.q1(xa)[:, 0], self.q2(xa)[:, 0])
        alpha = self.alpha if self.alpha > 0 else 0.0
        return float(np.mean(alpha * logp - qmin))

    def actor_gradient(self, s: np.ndarray, xi: np.ndarray):
        """Reparameterised gradient of ``actor_loss`` w.r.t. the actor parameters.

        Returns (loss, grads, logp).
        """
        out, a_cache = self.actor.forward(s)
        mean, raw_log_std = self._split(out)
        log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
        std = np.exp(log_std)
        u = mean + std * xi
        a = np.tanh(u)
        logp = squashed_gaussian_log_prob(u, mean, log_std)
        xa = np.concatenate([s, a], axis=1)
        act_cols = slice(self.obs_dim, self.obs_dim + self.act_dim)
        q1v, c1 = self.q1.forward(xa)
        q2v, c2 = self.q2.forward(xa)
        use_q1 = q1v[:, 0] <= q2v[:, 0]
        qmin = np.where(use_q1, q1v[:, 0], q2v[:, 0])
        B = s.shape[0]
        ones = np.ones((B, 1)) / B
        _, dq1 = self.q1.backward(c1, ones * use_q1[:, None], need_input_grad=True, input_slice=act_cols)
        _, dq2 = self.q2.backward(c2, ones * (~use_q1)[:, None], need_input_grad=True, input_slice=act_cols)
        dq_da = dq1 + dq2  # already divided by B
        alpha = self.alpha if self.alpha > 0 else 0.0
        dq_du = dq_da * (1.0 - a * a)
        # d logp / d u = 2 tanh(u) (Jacobian term); d logp / d log_std = -1 (Gaussian term, z fixed by xi)
        g_mean = alpha * 2.0 * a / B - dq_du
        g_log_std = alpha * (-1.0 + 2.0 * a * std * xi) / B - dq_du * std * xi
        g_log_std = g_log_std * ((raw_log_std > LOG_STD_MIN) & (raw_log_std < LOG_STD_MAX))
        loss = float(np.mean(alpha * logp - qmin))
        grads, _ = self.actor.backward(a_cache, np.concatenate([g_mean, g_log_std], axis=1))
        return loss, grads, logp

    def update(self, batch: Batch) -> dict:
        if len(batch) == 0:
            raise ParameterError("cannot update on an empty batch")
        hp = self.hp
        s = self.norm(batch.states)
        y = self.critic_target(batch)

        x = np.concatenate([s, batch.actions], axis=1)
        critic_losses = []
        for q in (self.q1, self.q2):
            pred, cache = q.forward(x)
            loss, g = mse_grad(pred, y)
            grads, _ = q.backward(cache, g)
            adam_update(q.params, grads, q.opt)
            critic_losses.append(loss)

        xi = self.rng.standard_normal((len(batch), self.act_dim))
        actor_loss, grads, logp = self.actor_gradient(s, xi)
        adam_update(self.actor.params, grads, self.actor.opt)

        if hp.auto_entropy:
            # Adam on log_alpha for loss -log_alpha * (logp + target_entropy)
            g = -float(np.mean(logp + self.target_entropy))
            self._alpha_m = 0.9 * self._alpha_m + 0.1 * g
            self._alpha_v = 0.999 * self._alpha_v + 0.001 * g * g
            step = self.updates + 1
            m_hat = self._alpha_m / (1 - 0.9 ** step)
            v_hat = self._alpha_v / (1 - 0.999 ** step)
            self.log_alpha -= hp.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)

        soft_update(self.q1_target.params, self.q1.params, hp.tau)
        soft_update(self.q2_target.params, self.q2.params, hp.tau)
        self.updates += 1
        return {
            "critic_loss": float(np.mean(critic_losses)),
            "actor_loss": actor_loss,
            "entropy": float(-np.mean(logp)),
            "alpha": self.alpha,
        }

    def _extra_state(self):
        return {"sac/log_alpha": np.array(self.log_alpha),
                "sac/alpha_moments": np.array([self._alpha_m, self._alpha_v])}

    def _load_extra_state(self, data):
        self.log_alpha = float(data["sac/log_alpha"])
        self._alpha_m, self._alpha_v = (float(x) for x in data["sac/alpha_moments"])

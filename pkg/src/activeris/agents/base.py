"""Pieces shared by the SAC, DDPG and TD3 agents."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import DimensionError, ParameterError
from ..nn import AdamState, MlpSpec, backward, forward, init_params
from .buffer import Batch, ReplayBuffer, Transition

CHECKPOINT_VERSION = "activeris-checkpoint/1"


@dataclass(frozen=True)
class AgentHyperparams:
    learning_rate: float = 1e-2
    gamma: float = 0.99
    tau: float = 1e-3
    batch_size: int = 128
    buffer_size: int = 100_000
    hidden_sizes: tuple[int, ...] = (128, 128)
    # SAC
    alpha: float = 0.2
    auto_entropy: bool = False
    # DDPG / TD3
    exploration_noise: float = 0.1
    # TD3
    policy_delay: int = 2
    target_noise: float = 0.2
    target_noise_clip: float = 0.5
    normalize_observations: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not 0.0 <= self.gamma < 1.0:
            raise ParameterError(f"discount must lie in [0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ParameterError(f"tau must lie in (0, 1], got {self.tau}")
        if self.batch_size < 1 or self.batch_size > self.buffer_size:
            raise ParameterError("batch_size must lie in [1, buffer_size]")
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be > 0")
        if self.policy_delay < 1:
            raise ParameterError("policy_delay must be >= 1")
        if self.alpha < 0:
            raise ParameterError("alpha must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d


class RunningNormalizer:
    """Per-feature running mean/variance (Welford) used to whiten observations."""

    def __init__(self, dim: int, clip: float = 10.0):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)
        self.clip = clip

    def update(self, x) -> None:
        x = np.asarray(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def std(self) -> np.ndarray:
        if self.count < 2:
            return np.ones_like(self.mean)
        var = self.m2 / (self.count - 1)
        scale = np.sqrt(var)
        # constant features keep unit scale
        return np.where(scale > 1e-12 * (1.0 + np.abs(self.mean)), scale, 1.0)

    def __call__(self, x):
        if self.count == 0:
            return np.asarray(x, dtype=float)
        return np.clip((np.asarray(x, dtype=float) - self.mean) / self.std, -self.clip, self.clip)


class Network:
    """An MLP spec bundled with its parameters and optimiser state."""

    def __init__(self, spec: MlpSpec, rng: np.random.Generator, learning_rate: float,
                 final_scale: Optional[float] = None):
        self.spec = spec
        self.params = init_params(spec, rng, final_scale)
        self.opt = AdamState.for_params(self.params, learning_rate)

    def __call__(self, x):
        return forward(self.spec, self.params, x)[0]

    def forward(self, x):
        return forward(self.spec, self.params, x)

    def backward(self, cache, grad_out, need_input_grad=False, input_slice=None):
        return backward(self.spec, self.params, cache, grad_out, need_input_grad, input_slice)

    def clone(self) -> "Network":
        other = object.__new__(Network)
        other.spec = self.spec
        other.params = self.params.copy()
        other.opt = AdamState.for_params(other.params, self.opt.learning_rate)
        return other


def mse_grad(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error of a (B, 1) prediction and its gradient."""
    diff = pred[:, 0] - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 * diff / diff.size)[:, None]


class Agent:
    """Common plumbing: replay buffer, observation whitening, warm-up, checkpoints."""

    name = "agent"

    def __init__(self, obs_dim: int, act_dim: int, hp: AgentHyperparams = AgentHyperparams(), seed=0):
        self.obs_dim, self.act_dim, self.hp = obs_dim, act_dim, hp
        self.rng = np.random.default_rng(seed)
        self.buffer = ReplayBuffer(hp.buffer_size, obs_dim, act_dim)
        self.normalizer = RunningNormalizer(obs_dim) if hp.normalize_observations else None
        self.updates = 0

    # networks are registered by subclasses as name -> Network
    def networks(self) -> dict[str, Network]:
        raise NotImplementedError

    def _hidden(self, n_in: int, n_out: int, output_activation: str) -> MlpSpec:
        return MlpSpec((n_in, *self.hp.hidden_sizes, n_out), "relu", output_activation)

    def _check_obs(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        if obs.shape[-1] != self.obs_dim:
            raise DimensionError(f"observation width {obs.shape[-1]} != {self.obs_dim}")
        return obs

    def norm(self, obs) -> np.ndarray:
        return obs if self.normalizer is None else self.normalizer(obs)

    def store(self, transition: Transition) -> None:
        self.buffer.store(transition)
        if self.normalizer is not None:
            self.normalizer.update(transition.state)

    def sample_batch(self) -> Optional[Batch]:
        return self.buffer.sample(self.hp.batch_size, self.rng)

    def random_action(self) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, size=self.act_dim)

    def select_action(self, observation, explore: bool = True) -> np.ndarray:
        raise NotImplementedError

    def update(self, batch: Batch) -> dict:
        raise NotImplementedError

    def train_step(self) -> Optional[dict]:
        """Sample a batch and update; None while the buffer is too small."""
        batch = self.sample_batch()
        if batch is None:
            return None
        return self.update(batch)

    # --- checkpoints -----------------------------------------------------
    def _extra_state(self) -> dict[str, np.ndarray]:
        return {}

    def _load_extra_state(self, data) -> None:
        pass

    def save(self, path) -> Path:
        path = Path(path)
        arrays: dict[str, np.ndarray] = {
            "format": np.array(CHECKPOINT_VERSION),
            "agent": np.array(self.name),
            "updates": np.array(self.updates),
        }
        for name, net in self.networks().items():
            arrays[f"{name}/layer_sizes"] = np.array(net.spec.layer_sizes)
            for i, (w, b) in enumerate(zip(net.params.weights, net.params.biases)):
                arrays[f"{name}/W{i}"] = w
                arrays[f"{name}/b{i}"] = b
            arrays[f"{name}/adam_step"] = np.array(net.opt.step)
            arrays[f"{name}/adam_m"] = net.opt.m
            arrays[f"{name}/adam_v"] = net.opt.v
        if self.normalizer is not None:
            arrays["normalizer/count"] = np.array(self.normalizer.count)
            arrays["normalizer/mean"] = self.normalizer.mean
            arrays["normalizer/m2"] = self.normalizer.m2
        arrays.update(self._extra_state())
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.savez(fh, **arrays)
        tmp.replace(path)
        return path

    def load(self, path) -> None:
        with np.load(Path(path), allow_pickle=False) as data:
            if str(data["format"]) != CHECKPOINT_VERSION:
                raise ParameterError(f"unsupported checkpoint format {data['format']}")
            if str(data["agent"]) != self.name:
                raise ParameterError(f"checkpoint holds a {data['agent']} agent, not {self.name}")
            self.updates = int(data["updates"])
            for name, net in self.networks().items():
                if tuple(data[f"{name}/layer_sizes"]) != net.spec.layer_sizes:
                    raise DimensionError(f"layer sizes of {name} differ from the checkpoint")
                for i in range(len(net.params.weights)):
                    net.params.weights[i][...] = data[f"{name}/W{i}"]
                    net.params.biases[i][...] = data[f"{name}/b{i}"]
                net.opt.m[...] = data[f"{name}/adam_m"]
                net.opt.v[...] = data[f"{name}/adam_v"]
                net.opt.step = int(data[f"{name}/adam_step"])
                net.params.touch()
            if self.normalizer is not None:
                self.normalizer.count = int(data["normalizer/count"])
                self.normalizer.mean[...] = data["normalizer/mean"]
                self.normalizer.m2[...] = data["normalizer/m2"]
            self._load_extra_state(data)


class RandomAgent(Agent):
    """Uniform random actions; never learns."""

    name = "random"

    def networks(self) -> dict[str, Network]:
        return {}

    def select_action(self, observation, explore: bool = True) -> np.ndarray:
        self._check_obs(observation)
        return self.random_action()

    def update(self, batch: Batch) -> dict:
        return {}

    def train_step(self):
        return None

"""Dense networks with hand-written backprop, Adam and Polyak averaging.

Everything is float64 numpy.  Inputs are batched row-wise: a forward pass
takes an (B, n_in) array and returns (B, n_out).  A single vector input is
treated as a batch of one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, ParameterError, StaleCacheError

__all__ = [
    "MlpSpec",
    "ParameterSet",
    "ForwardCache",
    "AdamState",
    "init_params",
    "forward",
    "backward",
    "adam_update",
    "soft_update",
    "squashed_gaussian_sample",
    "squashed_gaussian_log_prob",
    "LOG_STD_MIN",
    "LOG_STD_MAX",
]

LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0
_LOG_2PI = np.log(2.0 * np.pi)
_versions = itertools.count(1)


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x, y):
    return (x > 0.0).astype(x.dtype)


def _tanh_grad(x, y):
    return 1.0 - y * y


def _identity_grad(x, y):
    return np.ones_like(x)


_ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "identity": (lambda x: x, _identity_grad),
}


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ParameterError(f"invalid layer sizes {self.layer_sizes}")
        for act in (self.hidden_activation, self.output_activation):
            if act not in _ACTIVATIONS:
                raise ParameterError(f"unknown activation {act!r}")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]

    def activation(self, layer: int) -> str:
        last = layer == len(self.layer_sizes) - 2
        return self.output_activation if last else self.hidden_activation


class ParameterSet:
    """Weights (n_in, n_out) and biases (n_out,) of every layer.

    All arrays are views into one contiguous ``flat`` vector, so optimiser
    and averaging steps touch a single array.  ``version`` changes on every
    in-place update so that caches taken before an update can be detected.
    """

    def __init__(self, weights, biases, version: Optional[int] = None):
        shapes = [np.shape(w) for w in weights]
        total = sum(int(np.prod(sh)) + sh[1] for sh in shapes)
        self.flat = np.empty(total)
        self.weights, self.biases = [], []
        pos = 0
        for w, b, (n_in, n_out) in zip(weights, biases, shapes):
            wv = self.flat[pos:pos + n_in * n_out].reshape(n_in, n_out)
            pos += n_in * n_out
            bv = self.flat[pos:pos + n_out]
            pos += n_out
            if w is not None:
                wv[...] = w
                bv[...] = b
            self.weights.append(wv)
            self.biases.append(bv)
        self.version = next(_versions) if version is None else version

    @classmethod
    def empty_like(cls, other: "ParameterSet") -> "ParameterSet":
        return cls([np.empty(w.shape) for w in other.weights], [np.empty(b.shape) for b in other.biases], version=0)

    def arrays(self) -> list[np.ndarray]:
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [w.shape for w in self.weights]

    @property
    def size(self) -> int:
        return self.flat.size

    def copy(self) -> "ParameterSet":
        return ParameterSet(self.weights, self.biases)

    def touch(self) -> None:
        self.version = next(_versions)

    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flat)))


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer
    pre: list[np.ndarray]  # pre-activations
    post: list[np.ndarray]  # activations (post[-1] is the network output)
    params_id: int
    version: int


def init_params(spec: MlpSpec, rng: np.random.Generator, final_scale: Optional[float] = None) -> ParameterSet:
    """Uniform fan-in initialisation, optionally shrinking the last layer."""
    weights, biases = [], []
    sizes = spec.layer_sizes
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / np.sqrt(n_in)
        if final_scale is not None and i == len(sizes) - 2:
            bound = final_scale
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(rng.uniform(-bound, bound, size=n_out))
    return ParameterSet(weights, biases)


def _check_shapes(spec: MlpSpec, params: ParameterSet):
    sizes = spec.layer_sizes
    if len(params.weights) != len(sizes) - 1:
        raise DimensionError("parameter set does not match the network spec")
    for w, b, n_in, n_out in zip(params.weights, params.biases, sizes[:-1], sizes[1:]):
        if w.shape != (n_in, n_out) or b.shape != (n_out,):
            raise DimensionError(f"layer shape {w.shape}/{b.shape} != ({n_in}, {n_out})")


def forward(spec: MlpSpec, params: ParameterSet, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[-1] != spec.n_in:
        raise DimensionError(f"input width {x.shape[-1]} != {spec.n_in}")
    _check_shapes(spec, params)
    inputs, pre, post = [], [], []
    h = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w + b
        h = _ACTIVATIONS[spec.activation(i)][0](z)
        pre.append(z)
        post.append(h)
    cache = ForwardCache(inputs, pre, post, id(params), params.version)
    return (h[0] if single else h), cache


def backward(spec: MlpSpec, params: ParameterSet, cache: ForwardCache, grad_output,
             need_input_grad: bool = True,
             input_slice: Optional[slice] = None) -> tuple[ParameterSet, Optional[np.ndarray]]:
    """Gradients of sum(grad_output * output) w.r.t. the parameters and the input.

    Returns the parameter gradients packed as a ParameterSet and the input
    gradient (None when ``need_input_grad`` is false).  ``input_slice``
    restricts the input gradient to a block of input columns, which saves
    the largest matrix product when only e.g. the action part is needed.
    """
    if cache.params_id != id(params) or cache.version != params.version:
        raise StaleCacheError("forward cache was produced by different or since-updated parameters")
    g = np.asarray(grad_output, dtype=float)
    single = g.ndim == 1
    if single:
        g = g[None, :]
    if g.shape != cache.post[-1].shape:
        raise DimensionError(f"output gradient shape {g.shape} != {cache.post[-1].shape}")
    n_layers = len(params.weights)
    grads = ParameterSet.empty_like(params)
    grad_in = None
    for i in reversed(range(n_layers)):
        act_grad = _ACTIVATIONS[spec.activation(i)][1]
        g = g * act_grad(cache.pre[i], cache.post[i])
        np.matmul(cache.inputs[i].T, g, out=grads.weights[i])
        np.sum(g, axis=0, out=grads.biases[i])
        if i > 0:
            g = g @ params.weights[i].T
        elif need_input_grad:
            w0 = params.weights[0] if input_slice is None else params.weights[0][input_slice]
            g = g @ w0.T
    if need_input_grad:
        grad_in = g[0] if single else g
    return grads, grad_in


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None

    @classmethod
    def for_params(cls, params: ParameterSet, learning_rate: float, **kw) -> "AdamState":
        return cls(learning_rate, m=np.zeros(params.size), v=np.zeros(params.size), **kw)


def adam_update(params: ParameterSet, grads: ParameterSet, state: AdamState) -> None:
    """One bias-corrected Adam step, in place on ``params`` and ``state``."""
    if grads.shapes != params.shapes:
        raise DimensionError("gradient shapes do not match parameters")
    if state.m is None:
        state.m = np.zeros(params.size)
        state.v = np.zeros(params.size)
    g = grads.flat
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    m, v = state.m, state.v
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * (g * g)
    denom = np.sqrt(v / c2)
    denom += state.epsilon
    params.flat -= (state.learning_rate / c1) * m / denom
    params.touch()


def soft_update(target: ParameterSet, online: ParameterSet, tau: float) -> None:
    """Polyak averaging target <- (1 - tau) * target + tau * online."""
    if not 0.0 < tau <= 1.0:
        raise ParameterError(f"tau must lie in (0, 1], got {tau}")
    if target.shapes != online.shapes:
        raise DimensionError("target and online parameter shapes differ")
    target.flat *= 1.0 - tau
    target.flat += tau * online.flat
    target.touch()


def _log1m_tanh_sq(u):
    # log(1 - tanh(u)^2) without cancellation for large |u|
    au = np.abs(u)
    return 2.0 * (np.log(2.0) - au - np.log1p(np.exp(-2.0 * au)))


def squashed_gaussian_log_prob(u, mean, log_std):
    """Log-density of a = tanh(u) where u ~ N(mean, exp(log_std)^2), summed over the last axis."""
    std = np.exp(log_std)
    z = (u - mean) / std
    gauss = -0.5 * z * z - log_std - 0.5 * _LOG_2PI
    return np.sum(gauss - _log1m_tanh_sq(u), axis=-1)


def squashed_gaussian_sample(mean, log_std, seed=None, *, noise=None):
    """Draw a = tanh(mean + std * xi) and return (a, log_prob).

    ``seed`` may be an int or a Generator; ``noise`` overrides the standard
    normal draw xi.  log_std is clamped to [LOG_STD_MIN, LOG_STD_MAX].
    """
    mean = np.asarray(mean, dtype=float)
    log_std = np.clip(np.asarray(log_std, dtype=float), LOG_STD_MIN, LOG_STD_MAX)
    if noise is None:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        noise = rng.standard_normal(mean.shape)
    u = mean + np.exp(log_std) * noise
    return np.tanh(u), squashed_gaussian_log_prob(u, mean, log_std)

"""Independent reference computations and the checks built from them.

The oracles here deliberately avoid the code paths they check: loops
instead of vectorised products, generalised eigensolvers instead of the
Cholesky solve, finite differences instead of backprop, quadrature instead
of closed-form normalisation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, linalg

from .agents import AgentHyperparams, Transition, make_agent
from .channel import (
    ChannelRealization,
    FadingParams,
    SystemGeometry,
    generate_channels,
    path_loss_factor,
)
from .env import EpisodeConfig, RisEnv, Scenario
from .experiments import antenna_sweep
from .nn import MlpSpec, backward, forward, init_params, squashed_gaussian_log_prob, squashed_gaussian_sample
from .signal import (
    PowerAllocation,
    RisProfile,
    equivalent_channels,
    interference_covariance,
    monte_carlo_sinr,
    optimal_beamforming,
    random_beamforming,
    sinr_all,
)
from .toy import ToyEnv, ToyMdp


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: value={self.value:.6g} threshold={self.threshold:.6g}"


# --- oracles ---------------------------------------------------------------

def loop_equivalent_channel(channels: ChannelRealization, ris: RisProfile, k: int) -> np.ndarray:
    """Entry-by-entry d_k[m] + sum_l sum_n G_l[m, n] phi_l[n] h_{k->l}[n]."""
    M = channels.M
    out = np.zeros(M, dtype=complex)
    for m in range(M):
        acc = channels.direct[k, m]
        for l in range(channels.L):
            g, h, phi = channels.ris_to_bs[l], channels.user_to_ris[l][k], ris.phi[l]
            for n in range(g.shape[1]):
                acc += g[m, n] * phi[n] * h[n]
        out[m] = acc
    return out


def principal_generalized_eigenvector(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Eigenvector of the largest eigenvalue of a v = lambda b v (Hermitian a, b > 0)."""
    vals, vecs = linalg.eigh(a, b)
    v = vecs[:, np.argmax(vals)]
    return v / np.linalg.norm(v)


def finite_difference_grads(spec: MlpSpec, params, x: np.ndarray, weights: np.ndarray, h: float = 1e-5):
    """Central differences of sum(weights * forward(x)) w.r.t. every parameter and input."""
    def loss():
        return float(np.sum(weights * forward(spec, params, x)[0]))

    grads = np.empty(params.size)
    for i in range(params.size):
        old = params.flat[i]
        params.flat[i] = old + h
        up = loss()
        params.flat[i] = old - h
        down = loss()
        params.flat[i] = old
        grads[i] = (up - down) / (2 * h)
    gx = np.empty_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = loss()
        x[idx] = old - h
        down = loss()
        x[idx] = old
        gx[idx] = (up - down) / (2 * h)
    return grads, gx


def random_instance(rng: np.random.Generator, M=4, K=3, L=2, N=4, phi_max=1.4125, p_max=0.2,
                    noise=(1e-2, 1e-1)) -> tuple[ChannelRealization, RisProfile, PowerAllocation]:
    """Unit-scale random channels with random feasible powers and coefficients."""
    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    ch = ChannelRealization(
        direct=cn(K, M),
        user_to_ris=tuple(cn(K, N) for _ in range(L)),
        ris_to_bs=tuple(cn(M, N) for _ in range(L)),
        sigma_ris_sq=rng.uniform(*noise, size=L),
        sigma_bs_sq=float(rng.uniform(*noise)),
    )
    mag = phi_max * np.sqrt(rng.random((L, N)))
    phi = mag * np.exp(2j * np.pi * rng.random((L, N)))
    ris = RisProfile(tuple(phi), phi_max)
    powers = PowerAllocation(rng.uniform(0.1 * p_max, p_max, K), p_max)
    return ch, ris, powers


# --- checks ----------------------------------------------------------------

def check_beamforming_optimality(instances=100, random_w=1000, seed=0, M=4, K=3, L=2, N=4) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst_align = 1.0
    violations = 0
    for _ in range(instances):
        ch, ris, pw = random_instance(rng, M, K, L, N)
        w = optimal_beamforming(ch, ris, pw)
        heq = equivalent_channels(ch, ris)
        for k in range(K):
            lam = interference_covariance(ch, ris, pw, k)
            a = pw.p[k] * np.outer(heq[k], heq[k].conj())
            v = principal_generalized_eigenvector(a, lam)
            worst_align = min(worst_align, abs(np.vdot(v, w.w[k])))
        best = sinr_all(ch, ris, pw, w)
        z = rng.standard_normal((random_w, K, M)) + 1j * rng.standard_normal((random_w, K, M))
        z /= np.linalg.norm(z, axis=2, keepdims=True)
        for j in range(random_w):
            trial = sinr_all(ch, ris, pw, type(w)(z[j]))
            violations += int(np.sum(trial > best * (1 + 1e-12)))
    return [
        Check("beamformer_misalignment_max", 1.0 - worst_align, 1e-8, worst_align >= 1 - 1e-8),
        Check("beamformer_random_violations", violations, 0, violations == 0),
    ]


def check_sinr_monte_carlo(instances=20, samples=1_000_000, seed=1, tol=0.02) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        ch, ris, pw = random_instance(rng, M=4, K=3, L=2, N=4)
        w = random_beamforming(ch.M, ch.K, rng) if i % 2 else optimal_beamforming(ch, ris, pw)
        analytic = sinr_all(ch, ris, pw, w)
        k = i % ch.K
        est = monte_carlo_sinr(ch, ris, pw, w, k, samples, rng)
        worst = max(worst, abs(est.value - analytic[k]) / analytic[k])
    return Check("sinr_monte_carlo_rel_err_max", worst, tol, worst < tol)


def check_antenna_trend(config) -> list[Check]:
    rows = antenna_sweep(config)
    opt = np.array([r.optimal_min_rate for r in rows])
    rnd = np.array([r.random_min_rate for r in rows])
    ratio = opt / rnd
    return [
        Check("sweep_optimal_nondecreasing_min_step", float(np.min(np.diff(opt))), 0.0, bool(np.all(np.diff(opt) >= 0))),
        Check("sweep_optimal_minus_random_min", float(np.min(opt - rnd)), 0.0, bool(np.all(opt > rnd))),
        Check("sweep_ratio_last_minus_first", float(ratio[-1] - ratio[0]), 0.0, bool(ratio[-1] > ratio[0])),
    ]


def channel_second_moments(draws=100_000, distances=(7.0, 9.5, 12.0), params: Optional[FadingParams] = None,
                           seed=0) -> dict[str, tuple[float, float]]:
    """Empirical E|entry|^2 of the first entry of each link type vs eta * d^-zeta.

    The geometry is a 1-antenna, 1-element system whose link lengths are the
    given (direct, user-RIS, RIS-BS) distances; every draw uses its own seed.
    """
    params = params or FadingParams()
    d_dir, d_ur, d_rb = distances
    bs = np.zeros(3)
    ris = np.array([d_rb, 0.0, 0.0])
    # user on the intersection of the spheres around BS (d_dir) and RIS (d_ur)
    x = (d_dir ** 2 - d_ur ** 2 + d_rb ** 2) / (2 * d_rb)
    user = np.array([x, np.sqrt(d_dir ** 2 - x ** 2), 0.0])
    geom = SystemGeometry(bs, ris[None], user[None], 1, (1,))
    acc = np.zeros(3)
    seeds = np.random.SeedSequence(seed).spawn(draws)
    for s in seeds:
        ch = generate_channels(geom, params, s)
        acc += (abs(ch.direct[0, 0]) ** 2, abs(ch.user_to_ris[0][0, 0]) ** 2, abs(ch.ris_to_bs[0][0, 0]) ** 2)
    acc /= draws
    expected = [path_loss_factor(d, params, link) ** 2
                for d, link in zip(distances, ("direct", "user_ris", "ris_bs"))]
    return {name: (float(a), float(e)) for name, a, e in zip(("direct", "user_ris", "ris_bs"), acc, expected)}


def check_channel_statistics(draws=100_000, tol=0.02, seed=0) -> list[Check]:
    out = []
    for name, (emp, exp) in channel_second_moments(draws, seed=seed).items():
        err = abs(emp - exp) / exp
        out.append(Check(f"channel_moment_rel_err_{name}", err, tol, err < tol))
    return out


def agent_network_shapes(obs_dim=328, act_dim=84, hidden=(128, 128)) -> list[MlpSpec]:
    return [
        MlpSpec((obs_dim, *hidden, 2 * act_dim), "relu", "identity"),  # SAC actor
        MlpSpec((obs_dim, *hidden, act_dim), "relu", "tanh"),  # DDPG/TD3 actor
        MlpSpec((obs_dim + act_dim, *hidden, 1), "relu", "identity"),  # critics
    ]


def gradient_relative_error(spec: MlpSpec, rng: np.random.Generator, batch=2, h=1e-5,
                            max_params: Optional[int] = None) -> float:
    """Max relative error of backprop vs central differences.

    With ``max_params`` only that many randomly chosen parameters (plus all
    inputs) are differenced, for the large agent-sized networks.
    """
    params = init_params(spec, rng)
    x = rng.standard_normal((batch, spec.n_in))
    weights = rng.standard_normal((batch, spec.n_out))
    out, cache = forward(spec, params, x)
    g, gx = backward(spec, params, cache, weights)
    if max_params is None or params.size <= max_params:
        fd, fdx = finite_difference_grads(spec, params, x.copy(), weights, h)
        analytic = np.concatenate([g.flat, gx.ravel()])
        numeric = np.concatenate([fd, fdx.ravel()])
    else:
        idx = rng.choice(params.size, size=max_params, replace=False)

        def loss():
            return float(np.sum(weights * forward(spec, params, x)[0]))

        numeric = np.empty(max_params)
        for j, i in enumerate(idx):
            old = params.flat[i]
            params.flat[i] = old + h
            up = loss()
            params.flat[i] = old - h
            down = loss()
            params.flat[i] = old
            numeric[j] = (up - down) / (2 * h)
        analytic = g.flat[idx]
    scale = max(np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def check_gradients(shapes=50, seed=0, tol=1e-4) -> Check:
    rng = np.random.default_rng(seed)
    specs = agent_network_shapes() + agent_network_shapes(2, 1, (64, 64))
    acts = ["relu", "tanh", "identity"]
    while len(specs) < shapes:
        depth = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 9)) for _ in range(depth + 1)]
        specs.append(MlpSpec(tuple(sizes), str(rng.choice(acts)), str(rng.choice(acts))))
    worst = 0.0
    for spec in specs:
        worst = max(worst, gradient_relative_error(spec, rng))
    return Check("backprop_vs_finite_difference_rel_err_max", worst, tol, worst < tol)


def check_constraints(steps=10_000, seed=0, scenario: Optional[Scenario] = None) -> list[Check]:
    scenario = scenario or Scenario()
    env = RisEnv(scenario, EpisodeConfig(50, True, seed))
    rng = np.random.default_rng(seed)
    c1 = c2 = c3 = 0
    env.reset()
    for _ in range(steps):
        # mix in-box and out-of-box actions to exercise clipping and projection
        a = rng.uniform(-1.5, 1.5, env.action_dim)
        res = env.step(a)
        c1 += int(np.sum(np.abs(env.beams.norms - 1.0) > 1e-10))
        c2 += int(np.sum((env.powers.p < 0) | (env.powers.p > env.p_max)))
        c3 += int(np.sum(np.abs(env.ris.flat) > env.ris.flat_max + 1e-12))
        if res.done:
            env.reset()
    return [Check("constraint_C1_violations", c1, 0, c1 == 0),
            Check("constraint_C2_violations", c2, 0, c2 == 0),
            Check("constraint_C3_violations", c3, 0, c3 == 0)]


def squashed_density(a, mean=0.0, std=1.0):
    a = np.asarray(a, dtype=float)
    u = np.arctanh(a)
    return np.exp(squashed_gaussian_log_prob(u[..., None], mean, np.log(std)))


def check_log_prob(samples=1_000_000, seed=0, mean=0.0, std=1.0) -> list[Check]:
    total, _ = integrate.quad(lambda a: float(squashed_density(a, mean, std)), -1.0, 1.0, limit=200)
    norm_err = abs(total - 1.0)
    # reference CDF by cumulative quadrature of the density on a fine grid
    grid = np.linspace(-1.0, 1.0, 200_001)[1:-1]
    dens = squashed_density(grid, mean, std)
    cdf = np.concatenate([[0.0], integrate.cumulative_trapezoid(dens, grid)])
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    a, _ = squashed_gaussian_sample(np.full((samples, 1), mean), np.full((samples, 1), np.log(std)), rng)
    a = np.sort(a[:, 0])
    ref = np.interp(a, grid, cdf)
    n = a.size
    ks = float(max(np.max(np.arange(1, n + 1) / n - ref), np.max(ref - np.arange(n) / n)))
    return [Check("log_prob_normalisation_err", norm_err, 1e-3, norm_err < 1e-3),
            Check("log_prob_ks_statistic", ks, 0.01, ks < 0.01)]


TOY_HYPERPARAMS = AgentHyperparams(
    learning_rate=1e-3, gamma=0.5, tau=5e-3, batch_size=64, buffer_size=10_000, hidden_sizes=(64, 64),
    alpha=0.01, exploration_noise=0.2, normalize_observations=False,
)


def train_toy(name: str, seed: int, updates: int = 10_000, hp: AgentHyperparams = TOY_HYPERPARAMS,
              mdp: ToyMdp = ToyMdp(), warmup: int = 200):
    env = ToyEnv(mdp, seed=seed)
    agent = make_agent(name, ToyEnv.observation_dim, ToyEnv.action_dim, hp, seed)
    obs = env.reset()
    steps = 0
    while agent.updates < updates:
        a = agent.random_action() if steps < warmup else agent.select_action(obs, True)
        nxt, r, truncated = env.step(a)
        agent.store(Transition(obs, a, r, nxt, False))
        steps += 1
        obs = env.reset() if truncated else nxt
        if steps >= warmup:
            agent.train_step()
    return agent, env


def learned_values(agent) -> np.ndarray:
    """Critic value at the greedy action for both toy states."""
    out = []
    for s in (0, 1):
        o = ToyEnv.encode(s)
        x = np.concatenate([o, agent.select_action(o, explore=False)])[None]
        q = agent.q1(x)[0, 0]
        if hasattr(agent, "q2"):
            q = min(q, agent.q2(x)[0, 0])
        out.append(q)
    return np.array(out)


def toy_results(name: str, seed: int, updates: int = 10_000, mdp: ToyMdp = ToyMdp(), random_rollouts: int = 200):
    agent, env = train_toy(name, seed, updates, mdp=mdp)
    v_star = mdp.value_iteration()
    values = learned_values(agent)
    rel_err = float(np.max(np.abs(values - v_star) / np.abs(v_star)))
    trained = np.mean([env.rollout_return(lambda o: agent.select_action(o, False), s) for s in (0, 1)])
    rng = np.random.default_rng(10_000 + seed)
    rand = np.mean([env.rollout_return(lambda o: rng.uniform(-1, 1, 1), s)
                    for s in (0, 1) for _ in range(random_rollouts // 2)])
    return rel_err, float(trained), float(rand)


def check_toy_agents(seeds=(0, 1, 2, 3, 4), updates=10_000, tol=0.10, agents=("sac", "ddpg", "td3")) -> list[Check]:
    out = []
    for name in agents:
        errs, wins = [], 0
        for seed in seeds:
            err, trained, rand = toy_results(name, seed, updates)
            errs.append(err)
            wins += int(trained > rand)
        out.append(Check(f"toy_{name}_value_rel_err_max", max(errs), tol, max(errs) < tol))
        out.append(Check(f"toy_{name}_beats_random_seeds", wins, len(seeds), wins == len(seeds)))
    return out


def run_verify(config, seed: int = 0, include_agents: bool = False,
               progress: Optional[Callable[[Check], None]] = None) -> list[Check]:
    """The oracle suites behind the ``verify`` command."""
    checks: list[Check] = []

    def add(items):
        items = items if isinstance(items, list) else [items]
        for c in items:
            checks.append(c)
            if progress:
                progress(c)

    add(check_beamforming_optimality(seed=seed))
    add(check_sinr_monte_carlo(seed=seed + 1))
    add(check_antenna_trend(config))
    add(check_channel_statistics(seed=seed))
    add(check_gradients(seed=seed))
    add(check_constraints(seed=seed, scenario=config.scenario))
    add(check_log_prob(seed=seed))
    if include_agents:
        add(check_toy_agents())
    return checks

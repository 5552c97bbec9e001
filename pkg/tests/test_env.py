import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from activeris.env import (
    EpisodeConfig,
    RisEnv,
    Scenario,
    action_dim,
    db_to_amplitude,
    dbm_to_watt,
    decode_action,
    observation_dim,
)
from activeris.errors import ActionError, EnvironmentStateError
from activeris.signal import rate_report

SMALL = Scenario(num_users=2, num_ris=2, num_antennas=3, elements_per_ris=(3, 2))


def test_unit_conversions():
    assert dbm_to_watt(23) == pytest.approx(0.19952623, rel=1e-7)
    assert dbm_to_watt(30) == pytest.approx(1.0)
    assert db_to_amplitude(3) == pytest.approx(10 ** (3 / 20))
    assert db_to_amplitude(3, power_gain=False) == pytest.approx(10 ** (3 / 10))


def test_default_scenario_dimensions():
    s = Scenario()
    assert s.N_total == 40
    assert s.action_dim == 84
    assert s.observation_dim == 2 * 4 * 41
    assert s.p_max == pytest.approx(0.19952623, rel=1e-7)
    assert s.phi_max == pytest.approx(1.41253754, rel=1e-7)


@given(K=st.integers(1, 10), Nt=st.integers(1, 500))
def test_dimension_formulas(K, Nt):
    assert action_dim(K, Nt) == K + 2 * Nt
    assert observation_dim(K, Nt) == 2 * K * (1 + Nt)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=12, max_size=12))
def test_decode_action_feasible(values):
    K, N = 2, (3, 2)
    p_max, phi_max = 0.2, 1.4
    powers, ris = decode_action(np.array(values), K, N, p_max, phi_max)
    assert np.all(powers.p >= 0) and np.all(powers.p <= p_max)
    assert np.all(np.abs(ris.flat) <= phi_max + 1e-12)
    assert [p.size for p in ris.phi] == list(N)


def test_decode_action_mapping():
    K, N = 1, (2,)
    # power -1 -> 0, +1 -> p_max; coefficients scale by phi_max
    powers, ris = decode_action(np.array([1.0, 0.5, 0.0, 0.0, 0.5]), K, N, 2.0, 1.5)
    assert powers.p[0] == pytest.approx(2.0)
    assert np.allclose(ris.flat, [0.75, 0.75j])
    # layout is [powers, real parts, imaginary parts]; outside the disc the
    # coefficient is pulled back radially onto it
    powers, ris = decode_action(np.array([-1.0, 1.0, 0.0, 1.0, 0.0]), K, N, 2.0, 1.5)
    assert powers.p[0] == 0.0
    assert np.allclose(ris.flat, [1.5 * (1 + 1j) / np.sqrt(2), 0.0])


def test_decode_action_rejects_length():
    with pytest.raises(ActionError):
        decode_action(np.zeros(5), 2, (3, 2), 1.0, 1.0)


def test_step_before_reset_and_after_done():
    env = RisEnv(SMALL, EpisodeConfig(steps_per_episode=2))
    with pytest.raises(EnvironmentStateError):
        env.step(np.zeros(SMALL.action_dim))
    env.reset()
    env.step(np.zeros(SMALL.action_dim))
    assert env.step(np.zeros(SMALL.action_dim)).done
    with pytest.raises(EnvironmentStateError):
        env.step(np.zeros(SMALL.action_dim))


def test_reward_equals_min_rate_and_constraints_hold():
    env = RisEnv(SMALL, EpisodeConfig(steps_per_episode=20, seed=3))
    obs = env.reset()
    assert obs.shape == (SMALL.observation_dim,)
    rng = np.random.default_rng(0)
    for _ in range(20):
        res = env.step(rng.uniform(-1.2, 1.2, SMALL.action_dim))
        assert res.observation.shape == (SMALL.observation_dim,)
        again = rate_report(env.channels, env.ris, env.powers, env.beams).min_rate
        assert res.reward == pytest.approx(again, abs=1e-10)
        assert np.allclose(env.beams.norms, 1.0, atol=1e-10)
        assert env.powers.satisfies_limits() and env.ris.satisfies_gain_limit()
        assert res.reward >= 0 and np.isfinite(res.reward)


def _rollout(seed, actions, episodes=2):
    env = RisEnv(SMALL, EpisodeConfig(steps_per_episode=len(actions), seed=seed))
    out = []
    for _ in range(episodes):
        out.append(env.reset())
        for a in actions:
            r = env.step(a)
            out += [r.observation, np.array([r.reward])]
    return np.concatenate(out)


def test_environment_replay_is_bit_identical():
    actions = np.random.default_rng(1).uniform(-1, 1, (5, SMALL.action_dim))
    assert _rollout(4, actions).tobytes() == _rollout(4, actions).tobytes()
    assert _rollout(4, actions).tobytes() != _rollout(5, actions).tobytes()


def test_channels_redrawn_per_episode_or_fixed():
    env = RisEnv(SMALL, EpisodeConfig(seed=0))
    env.reset()
    first = env.channels.direct.copy()
    env.reset()
    assert not np.array_equal(first, env.channels.direct)
    fixed = RisEnv(SMALL, EpisodeConfig(seed=0, redraw_channels_each_episode=False))
    fixed.reset()
    first = fixed.channels.direct.copy()
    fixed.reset()
    assert np.array_equal(first, fixed.channels.direct)

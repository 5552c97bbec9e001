import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from activeris.errors import DimensionError, ParameterError, StaleCacheError
from activeris.nn import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    AdamState,
    MlpSpec,
    ParameterSet,
    adam_update,
    backward,
    forward,
    init_params,
    soft_update,
    squashed_gaussian_log_prob,
    squashed_gaussian_sample,
)
from activeris.verify import agent_network_shapes, gradient_relative_error, squashed_density

ACTS = st.sampled_from(["relu", "tanh", "identity"])


@settings(max_examples=30, deadline=None)
@given(sizes=st.lists(st.integers(1, 7), min_size=2, max_size=5), hidden=ACTS, out=ACTS,
       seed=st.integers(0, 2**31))
def test_backprop_matches_finite_differences(sizes, hidden, out, seed):
    spec = MlpSpec(tuple(sizes), hidden, out)
    assert gradient_relative_error(spec, np.random.default_rng(seed), batch=3) < 1e-5


@pytest.mark.parametrize("spec", agent_network_shapes(12, 5, (16, 16)))
def test_backprop_agent_layouts(spec):
    assert gradient_relative_error(spec, np.random.default_rng(0)) < 1e-5


def test_forward_deterministic_and_batched():
    spec = MlpSpec((4, 8, 3), "relu", "tanh")
    p = init_params(spec, np.random.default_rng(0))
    x = np.random.default_rng(1).standard_normal((5, 4))
    a, _ = forward(spec, p, x)
    b, _ = forward(spec, p, x)
    assert a.tobytes() == b.tobytes()
    single, _ = forward(spec, p, x[0])
    assert single.shape == (3,) and np.allclose(single, a[0])
    assert np.all(np.abs(a) <= 1.0)


def test_forward_rejects_wrong_width():
    spec = MlpSpec((4, 3))
    p = init_params(spec, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        forward(spec, p, np.zeros((2, 5)))


def test_stale_cache_detected():
    spec = MlpSpec((3, 4, 1))
    p = init_params(spec, np.random.default_rng(0))
    _, cache = forward(spec, p, np.ones((2, 3)))
    p.flat[0] += 1.0
    p.touch()
    with pytest.raises(StaleCacheError):
        backward(spec, p, cache, np.ones((2, 1)))


def test_parameter_views_share_flat_buffer():
    spec = MlpSpec((3, 5, 2))
    p = init_params(spec, np.random.default_rng(0))
    assert p.size == 3 * 5 + 5 + 5 * 2 + 2
    p.weights[0][0, 0] = 42.0
    assert 42.0 in p.flat
    q = p.copy()
    q.flat[:] = 0.0
    assert p.weights[0][0, 0] == 42.0


def test_adam_first_step_moves_by_learning_rate():
    spec = MlpSpec((2, 2))
    p = init_params(spec, np.random.default_rng(0))
    before = p.flat.copy()
    g = ParameterSet.empty_like(p)
    g.flat[:] = np.linspace(-1, 1, g.size) + 0.05
    st_ = AdamState.for_params(p, 1e-2)
    adam_update(p, g, st_)
    # bias-corrected first step is lr * sign(g) up to epsilon
    assert np.allclose(p.flat - before, -1e-2 * np.sign(g.flat), atol=1e-8)
    assert st_.step == 1


def test_adam_minimises_quadratic():
    spec = MlpSpec((1, 1), "identity", "identity")
    p = init_params(spec, np.random.default_rng(0))
    st_ = AdamState.for_params(p, 5e-2)
    target = np.array([3.0, -2.0])
    for _ in range(2000):
        g = ParameterSet.empty_like(p)
        g.flat[:] = 2 * (p.flat - target)
        adam_update(p, g, st_)
    assert np.allclose(p.flat, target, atol=1e-3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), tau=st.floats(1e-4, 1.0))
def test_soft_update_bound(seed, tau):
    spec = MlpSpec((3, 4, 2))
    rng = np.random.default_rng(seed)
    online, target = init_params(spec, rng), init_params(spec, rng)
    before = target.flat.copy()
    gap = np.max(np.abs(online.flat - before))
    soft_update(target, online, tau)
    assert np.max(np.abs(target.flat - before)) <= tau * gap * (1 + 1e-12) + 1e-15


def test_soft_update_tau_one_copies_and_rejects_bad_tau():
    spec = MlpSpec((3, 2))
    rng = np.random.default_rng(0)
    online, target = init_params(spec, rng), init_params(spec, rng)
    soft_update(target, online, 1.0)
    assert np.array_equal(target.flat, online.flat)
    with pytest.raises(ParameterError):
        soft_update(target, online, 0.0)


@pytest.mark.parametrize("mean,std", [(0.0, 1.0), (0.7, 0.3), (-1.5, 2.0)])
def test_squashed_density_normalised(mean, std):
    total, _ = integrate.quad(lambda a: squashed_density(a, mean, std), -1, 1, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_log_prob_change_of_variables():
    # density of tanh(u) equals gaussian(u) / (1 - tanh(u)^2)
    u = np.array([[-3.0], [0.0], [0.4], [12.0]])
    lp = squashed_gaussian_log_prob(u, 0.2, np.log(0.8))
    z = (u[:, 0] - 0.2) / 0.8
    ref = -0.5 * z * z - np.log(0.8) - 0.5 * np.log(2 * np.pi) - np.log(1 - np.tanh(u[:, 0]) ** 2 + 1e-300)
    assert np.allclose(lp[:3], ref[:3], rtol=1e-10)
    assert np.isfinite(lp[3])


def test_log_prob_sums_over_dimensions():
    u = np.array([[0.1, -0.2]])
    joint = squashed_gaussian_log_prob(u, np.zeros(2), np.zeros(2))
    parts = [squashed_gaussian_log_prob(u[:, i:i + 1], 0.0, 0.0) for i in range(2)]
    assert joint == pytest.approx(sum(parts))


def test_sample_clamps_log_std_and_stays_in_box():
    a, lp = squashed_gaussian_sample(np.zeros((1000, 3)), np.full((1000, 3), 50.0), seed=0)
    assert np.all(np.abs(a) <= 1.0)
    assert np.all(np.isfinite(lp))
    _, lp_hi = squashed_gaussian_sample(np.zeros(3), np.full(3, LOG_STD_MAX), noise=np.zeros(3))
    _, lp_clamped = squashed_gaussian_sample(np.zeros(3), np.full(3, 50.0), noise=np.zeros(3))
    assert lp_hi == lp_clamped
    a_lo, _ = squashed_gaussian_sample(np.full(2, 0.3), np.full(2, -100.0), seed=1)
    assert np.allclose(a_lo, np.tanh(0.3))
    assert LOG_STD_MIN == -20

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from activeris.channel import (
    FadingParams,
    SystemGeometry,
    generate_channels,
    path_loss_factor,
    place_nodes,
    rician_components,
    steering_vector,
)
from activeris.errors import DimensionError, GeometryError, ParameterError


def test_place_nodes_distances():
    g = place_nodes(4, 4, 2, (10,) * 4)
    # horizontal radii 6 m / 12 m around the BS; heights 1.5 m and 5 m
    horiz_u = np.linalg.norm(g.user_positions[:, :2] - g.bs_position[:2], axis=1)
    horiz_r = np.linalg.norm(g.ris_positions[:, :2] - g.bs_position[:2], axis=1)
    assert np.allclose(horiz_u, 6.0)
    assert np.allclose(horiz_r, 12.0)
    assert np.allclose(g.user_positions[:, 2], 1.5)
    assert np.allclose(g.ris_positions[:, 2], 5.0)
    assert (g.K, g.L, g.M, g.N_total) == (4, 4, 2, 40)


@pytest.mark.parametrize("kw", [dict(ris_radius=0.0), dict(user_radius=-1.0)])
def test_place_nodes_rejects_bad_radius(kw):
    with pytest.raises(GeometryError):
        place_nodes(2, 2, 2, (4, 4), **kw)


def test_geometry_rejects_coincident_nodes():
    with pytest.raises(GeometryError):
        SystemGeometry(np.zeros(3), [[1.0, 0, 0]], [[0.0, 0, 0]], 2, (2,))


def test_geometry_rejects_mismatched_element_list():
    with pytest.raises(GeometryError):
        SystemGeometry(np.zeros(3), [[1.0, 0, 0]], [[0.0, 1, 0]], 2, (2, 3))


@pytest.mark.parametrize("kw", [dict(eta=0.0), dict(zeta=-1.0), dict(rician_k=-0.5), dict(sigma_bs_sq=0.0)])
def test_fading_params_validation(kw):
    with pytest.raises(ParameterError):
        FadingParams(**kw)


@given(st.floats(min_value=0.0, max_value=1e6, allow_nan=False))
def test_rician_split_is_unit_power(k):
    a, b = rician_components(k)
    assert a * a + b * b == pytest.approx(1.0, abs=1e-15)


def test_rician_limits():
    assert rician_components(0.0) == (0.0, 1.0)
    assert rician_components(np.inf) == (1.0, 0.0)


def test_path_loss_value():
    p = FadingParams(eta=1e-3, zeta=2.0)
    assert path_loss_factor(10.0, p) == pytest.approx(np.sqrt(1e-3 * 10.0 ** -2))
    q = FadingParams(zeta=2.0, zeta_ris_bs=3.0)
    assert path_loss_factor(10.0, q, "ris_bs") == pytest.approx(np.sqrt(1e-3 * 10.0 ** -3))


def test_steering_vector_unit_modulus():
    v = steering_vector(8, np.array([1.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]))
    assert v.shape == (8,)
    assert np.allclose(np.abs(v), 1.0)
    assert v[0] == 1.0


@settings(max_examples=30, deadline=None)
@given(K=st.integers(1, 4), L=st.integers(1, 3), M=st.integers(1, 5),
       N=st.lists(st.integers(1, 6), min_size=3, max_size=3), seed=st.integers(0, 2**31))
def test_channel_dimensions_match_geometry(K, L, M, N, seed):
    g = place_nodes(K, L, M, tuple(N[:L]))
    ch = generate_channels(g, FadingParams(), seed)
    assert ch.direct.shape == (K, M)
    for l in range(L):
        assert ch.user_to_ris[l].shape == (K, N[l])
        assert ch.ris_to_bs[l].shape == (M, N[l])
    assert ch.stacked_user_to_ris.shape == (K, g.N_total)
    assert ch.stacked_ris_to_bs.shape == (M, g.N_total)
    assert ch.element_noise.shape == (g.N_total,)


def test_same_seed_bit_identical():
    g = place_nodes(3, 2, 4, (5, 3))
    a = generate_channels(g, FadingParams(), 7)
    b = generate_channels(g, FadingParams(), 7)
    c = generate_channels(g, FadingParams(), 8)
    assert a.direct.tobytes() == b.direct.tobytes()
    for x, y in zip(a.ris_to_bs + a.user_to_ris, b.ris_to_bs + b.user_to_ris):
        assert x.tobytes() == y.tobytes()
    assert not np.array_equal(a.direct, c.direct)


def test_pure_los_has_deterministic_magnitude():
    g = place_nodes(2, 1, 3, (4,))
    p = FadingParams(rician_k=np.inf)
    ch = generate_channels(g, p, 0)
    expected = path_loss_factor(g.direct_distances(), p)
    assert np.allclose(np.abs(ch.direct), expected[:, None])


def test_noise_broadcast_per_surface():
    p = FadingParams(sigma_ris_sq=(1e-11, 2e-11))
    assert np.allclose(p.ris_noise(2), [1e-11, 2e-11])
    assert np.allclose(FadingParams().ris_noise(3), [1e-11] * 3)
    with pytest.raises(DimensionError):
        p.ris_noise(3)

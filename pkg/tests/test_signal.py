import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from activeris.channel import ChannelRealization
from activeris.errors import DimensionError, NumericError
from activeris.signal import (
    SINR_CAP,
    BeamformingMatrix,
    PowerAllocation,
    RisProfile,
    equivalent_channels,
    interference_covariance,
    monte_carlo_sinr,
    optimal_beamforming,
    random_beamforming,
    rate_report,
    sinr,
    sinr_all,
)
from activeris.verify import loop_equivalent_channel, principal_generalized_eigenvector, random_instance


def instance(seed=0, **kw):
    return random_instance(np.random.default_rng(seed), **kw)


def brute_force_sinr(ch, ris, pw, w, k):
    """Direct transcription of the per-user SINR with explicit loops."""
    K = ch.K
    heq = [loop_equivalent_channel(ch, ris, j) for j in range(K)]
    wk = w[k]
    sig = pw.p[k] * abs(np.vdot(wk, heq[k])) ** 2
    intf = sum(pw.p[j] * abs(np.vdot(wk, heq[j])) ** 2 for j in range(K) if j != k)
    ris_noise = 0.0
    for l in range(ch.L):
        gphi = ch.ris_to_bs[l] @ np.diag(ris.phi[l])
        ris_noise += ch.sigma_ris_sq[l] * np.linalg.norm(wk.conj() @ gphi) ** 2
    return sig / (intf + ris_noise + ch.sigma_bs_sq * np.linalg.norm(wk) ** 2)


def test_equivalent_channel_matches_loop_oracle():
    ch, ris, _ = instance(1, M=3, K=4, L=3, N=5)
    heq = equivalent_channels(ch, ris)
    for k in range(ch.K):
        assert np.allclose(heq[k], loop_equivalent_channel(ch, ris, k), atol=1e-12)


def test_sinr_matches_loop_oracle():
    ch, ris, pw = instance(2)
    w = random_beamforming(ch.M, ch.K, 3)
    got = sinr_all(ch, ris, pw, w)
    for k in range(ch.K):
        assert got[k] == pytest.approx(brute_force_sinr(ch, ris, pw, w.w, k), rel=1e-10)
        assert sinr(ch, ris, pw, w, k) == got[k]


def test_optimal_beamformer_is_generalized_eigenvector():
    ch, ris, pw = instance(4)
    w = optimal_beamforming(ch, ris, pw)
    heq = equivalent_channels(ch, ris)
    for k in range(ch.K):
        lam = interference_covariance(ch, ris, pw, k)
        v = principal_generalized_eigenvector(pw.p[k] * np.outer(heq[k], heq[k].conj()), lam)
        assert abs(np.vdot(v, w.w[k])) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(w.norms, 1.0, atol=1e-12)


def test_covariance_is_hermitian_positive_definite():
    ch, ris, pw = instance(5)
    for k in range(ch.K):
        lam = interference_covariance(ch, ris, pw, k)
        assert np.allclose(lam, lam.conj().T)
        assert np.linalg.eigvalsh(lam).min() > 0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_sinr_scale_invariance(seed, re, im):
    c = complex(re, im)
    if abs(c) < 1e-3:
        c = 1.0
    ch, ris, pw = instance(seed)
    w = random_beamforming(ch.M, ch.K, seed)
    scaled = BeamformingMatrix(w.w * c)
    assert np.allclose(sinr_all(ch, ris, pw, w), sinr_all(ch, ris, pw, scaled), rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 2), bump=st.floats(1e-4, 0.1))
def test_sinr_monotone_in_own_power(seed, k, bump):
    ch, ris, pw = instance(seed)
    w = random_beamforming(ch.M, ch.K, seed + 1)
    p2 = pw.p.copy()
    p2[k] += bump
    before = sinr_all(ch, ris, pw, w)[k]
    after = sinr_all(ch, ris, PowerAllocation(p2, pw.p_max + bump), w)[k]
    assert after >= before


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_sinr_nonnegative_and_finite(seed):
    ch, ris, pw = instance(seed)
    s = sinr_all(ch, ris, pw, random_beamforming(ch.M, ch.K, seed))
    assert np.all(s >= 0) and np.all(np.isfinite(s))


def test_optimal_dominates_random_beamforming():
    rng = np.random.default_rng(11)
    for i in range(100):
        ch, ris, pw = random_instance(rng)
        best = rate_report(ch, ris, pw, optimal_beamforming(ch, ris, pw)).min_rate
        for j in range(100):
            rnd = rate_report(ch, ris, pw, random_beamforming(ch.M, ch.K, [i, j])).min_rate
            assert best >= rnd - 1e-12


def test_single_user_single_antenna_matched_filter():
    ch, ris, pw = instance(6, M=1, K=1, L=1, N=2)
    w = optimal_beamforming(ch, ris, pw)
    assert w.w.shape == (1, 1)
    assert abs(w.w[0, 0]) == pytest.approx(1.0)


def test_zero_signal_gives_zero_sinr():
    ch, ris, pw = instance(7)
    pw0 = PowerAllocation(np.zeros(ch.K), pw.p_max)
    w = random_beamforming(ch.M, ch.K, 0)
    assert np.all(sinr_all(ch, ris, pw0, w) == 0.0)


def test_sinr_is_capped():
    ch, ris, pw = instance(8)
    quiet = ChannelRealization(ch.direct, ch.user_to_ris, ch.ris_to_bs,
                               np.zeros(ch.L), 1e-300)
    zero_ris = RisProfile.zeros(ch.N, 1.0)
    # single user: no interference, no RIS noise, vanishing BS noise
    one = ChannelRealization(quiet.direct[:1], tuple(h[:1] for h in quiet.user_to_ris), quiet.ris_to_bs,
                             quiet.sigma_ris_sq, quiet.sigma_bs_sq)
    s = sinr_all(one, zero_ris, PowerAllocation(pw.p[:1], pw.p_max), random_beamforming(ch.M, 1, 0))
    assert s[0] == SINR_CAP


def test_monte_carlo_agrees_with_analytic():
    ch, ris, pw = instance(9)
    w = optimal_beamforming(ch, ris, pw)
    for k in range(ch.K):
        est = monte_carlo_sinr(ch, ris, pw, w, k, 200_000, seed=k)
        assert not est.overflow
        assert est.value == pytest.approx(sinr(ch, ris, pw, w, k), rel=0.03)


def test_optimal_beamforming_rejects_zero_channel():
    ch, ris, pw = instance(10)
    dead = ChannelRealization(np.zeros_like(ch.direct), tuple(np.zeros_like(h) for h in ch.user_to_ris),
                              ch.ris_to_bs, ch.sigma_ris_sq, ch.sigma_bs_sq)
    with pytest.raises(NumericError):
        optimal_beamforming(dead, ris, pw)


def test_dimension_checks():
    ch, ris, pw = instance(12)
    with pytest.raises(DimensionError):
        equivalent_channels(ch, RisProfile.zeros((3, 3), 1.0))
    with pytest.raises(DimensionError):
        sinr_all(ch, ris, PowerAllocation(np.ones(ch.K + 1), 1.0), random_beamforming(ch.M, ch.K, 0))
    with pytest.raises(DimensionError):
        sinr(ch, ris, pw, random_beamforming(ch.M, ch.K, 0), ch.K)


def test_random_beamforming_unit_norm_and_seeded():
    a = random_beamforming(5, 3, 1)
    assert np.allclose(a.norms, 1.0)
    assert np.array_equal(a.w, random_beamforming(5, 3, 1).w)

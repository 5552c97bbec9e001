"""Equivalent channels, SINR and the closed-form receive beamformer.

All quantities follow the uplink model

    y_k = w_k^H ( sum_i h_i sqrt(p_i) s_i + sum_l G_l Phi_l n_l + n_0 )

where h_i = d_i + sum_l G_l Phi_l h_{i->l} is the equivalent channel.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg

from .channel import ChannelRealization
from .errors import DimensionError, NumericError, ParameterError

__all__ = [
    "SINR_CAP",
    "RisProfile",
    "PowerAllocation",
    "BeamformingMatrix",
    "RateReport",
    "SinrEstimate",
    "equivalent_channel",
    "equivalent_channels",
    "ris_noise_covariance",
    "interference_covariance",
    "optimal_beamforming",
    "random_beamforming",
    "sinr",
    "sinr_all",
    "monte_carlo_sinr",
    "rate_report",
]

SINR_CAP = 1e12


@dataclass(frozen=True)
class RisProfile:
    """Reflection coefficients of every surface and their amplitude caps."""

    phi: tuple[np.ndarray, ...]
    phi_max: tuple[float, ...]

    def __post_init__(self):
        phi = tuple(np.asarray(p, dtype=complex).reshape(-1) for p in self.phi)
        caps = self.phi_max
        if np.isscalar(caps):
            caps = (float(caps),) * len(phi)
        caps = tuple(float(c) for c in caps)
        if len(caps) != len(phi):
            raise DimensionError(f"{len(caps)} amplitude caps for {len(phi)} surfaces")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi_max", caps)

    @classmethod
    def zeros(cls, N: Sequence[int], phi_max) -> "RisProfile":
        return cls(tuple(np.zeros(n, dtype=complex) for n in N), phi_max)

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(self.phi)

    @property
    def flat_max(self) -> np.ndarray:
        return np.repeat(self.phi_max, [p.size for p in self.phi])

    def satisfies_gain_limit(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.flat) <= self.flat_max + atol))


@dataclass(frozen=True)
class PowerAllocation:
    p: np.ndarray
    p_max: float

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(-1))

    def satisfies_limits(self) -> bool:
        return bool(np.all(self.p >= 0) and np.all(self.p <= self.p_max))


@dataclass(frozen=True)
class BeamformingMatrix:
    """Receive combiners; row k is w_k."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=complex))

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.w, axis=1)


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray
    rates: np.ndarray
    min_rate: float

    @classmethod
    def from_sinr(cls, sinr_values) -> "RateReport":
        s = np.asarray(sinr_values, dtype=float)
        rates = np.log2(1.0 + s)
        return cls(s, rates, float(rates.min()))

    @property
    def min_sinr(self) -> float:
        return float(self.sinr.min())


class SinrEstimate(NamedTuple):
    value: float
    overflow: bool


def _check(channels: ChannelRealization, ris: RisProfile, powers: PowerAllocation | None = None):
    if len(ris.phi) != channels.L or tuple(p.size for p in ris.phi) != channels.N:
        raise DimensionError(
            f"RIS profile sizes {[p.size for p in ris.phi]} do not match channel sizes {channels.N}"
        )
    if powers is not None and powers.p.size != channels.K:
        raise DimensionError(f"{powers.p.size} powers for {channels.K} users")


def equivalent_channels(channels: ChannelRealization, ris: RisProfile) -> np.ndarray:
    """(K, M) matrix whose row k is d_k + sum_l G_l diag(phi_l) h_{k->l}."""
    _check(channels, ris)
    return channels.direct + (channels.stacked_user_to_ris * ris.flat) @ channels.stacked_ris_to_bs.T


def equivalent_channel(channels: ChannelRealization, ris: RisProfile, k: int) -> np.ndarray:
    if not 0 <= k < channels.K:
        raise DimensionError(f"user index {k} out of range for K={channels.K}")
    _check(channels, ris)
    h = channels.stacked_user_to_ris[k] * ris.flat
    return channels.direct[k] + channels.stacked_ris_to_bs @ h


def ris_noise_covariance(channels: ChannelRealization, ris: RisProfile) -> np.ndarray:
    """sum_l sigma_l^2 G_l Phi_l Phi_l^H G_l^H."""
    _check(channels, ris)
    g = channels.stacked_ris_to_bs
    weights = channels.element_noise * np.abs(ris.flat) ** 2
    return (g * weights) @ g.conj().T


def _covariances(channels, ris, powers) -> tuple[np.ndarray, np.ndarray]:
    heq = equivalent_channels(channels, ris)
    p = powers.p
    total = (heq.T * p) @ heq.conj()  # sum_i p_i h_i h_i^H
    total = total + ris_noise_covariance(channels, ris) + channels.sigma_bs_sq * np.eye(channels.M)
    return heq, total


def interference_covariance(channels: ChannelRealization, ris: RisProfile,
                            powers: PowerAllocation, k: int) -> np.ndarray:
    """Interference-plus-noise covariance Lambda_k seen by user k."""
    _check(channels, ris, powers)
    heq, total = _covariances(channels, ris, powers)
    lam = total - powers.p[k] * np.outer(heq[k], heq[k].conj())
    return 0.5 * (lam + lam.conj().T)


def optimal_beamforming(channels: ChannelRealization, ris: RisProfile,
                        powers: PowerAllocation) -> BeamformingMatrix:
    """Unit-norm w_k proportional to Lambda_k^{-1} h_k (max-SINR combiner).

    The sqrt(p_k) factor is dropped since normalisation cancels it, which
    keeps users with zero power well defined.
    """
    _check(channels, ris, powers)
    heq, total = _covariances(channels, ris, powers)
    K, M = heq.shape
    w = np.empty((K, M), dtype=complex)
    for k in range(K):
        lam = total - powers.p[k] * np.outer(heq[k], heq[k].conj())
        lam = 0.5 * (lam + lam.conj().T)
        try:
            factor = linalg.cho_factor(lam, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericError(f"interference covariance of user {k} is not positive definite") from exc
        v = linalg.cho_solve(factor, heq[k], check_finite=False)
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or norm == 0.0:
            raise NumericError(f"cannot normalise the beamformer of user {k} (zero equivalent channel)")
        w[k] = v / norm
    return BeamformingMatrix(w)


def random_beamforming(M: int, K: int, seed) -> BeamformingMatrix:
    """Beamformers drawn uniformly on the complex unit sphere."""
    if M < 1 or K < 1:
        raise ParameterError(f"need M, K >= 1, got M={M} K={K}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))
    return BeamformingMatrix(z / np.linalg.norm(z, axis=1, keepdims=True))


def _sinr_terms(channels, ris, powers, beams):
    _check(channels, ris, powers)
    w = beams.w
    if w.shape != (channels.K, channels.M):
        raise DimensionError(f"beamformer shape {w.shape} != {(channels.K, channels.M)}")
    wnorm_sq = np.sum(np.abs(w) ** 2, axis=1)
    if np.any(wnorm_sq == 0):
        raise ParameterError("beamforming vectors must be nonzero")
    heq = equivalent_channels(channels, ris)
    gains = np.abs(w.conj() @ heq.T) ** 2 * powers.p  # [k, i] = p_i |w_k^H h_i|^2
    signal = np.diag(gains).copy()
    interference = gains.sum(axis=1) - signal
    cascaded = (w.conj() @ channels.stacked_ris_to_bs) * ris.flat  # rows w_k^H G Phi
    ris_noise = np.abs(cascaded) ** 2 @ channels.element_noise
    noise = interference + ris_noise + channels.sigma_bs_sq * wnorm_sq
    return signal, noise


def _ratio(signal, noise):
    signal = np.asarray(signal, dtype=float)
    noise = np.asarray(noise, dtype=float)
    out = np.empty_like(signal)
    overflow = np.zeros(signal.shape, dtype=bool)
    for i, (s, n) in enumerate(zip(signal.flat, noise.flat)):
        if s == 0:
            out.flat[i] = 0.0
        elif n <= 0 or s / n > SINR_CAP:
            out.flat[i] = SINR_CAP
            overflow.flat[i] = True
        else:
            out.flat[i] = s / n
    return out, overflow


def sinr_all(channels: ChannelRealization, ris: RisProfile, powers: PowerAllocation,
             beams: BeamformingMatrix) -> np.ndarray:
    """SINR of every user; values above SINR_CAP are capped."""
    signal, noise = _sinr_terms(channels, ris, powers, beams)
    return _ratio(signal, noise)[0]


def sinr(channels: ChannelRealization, ris: RisProfile, powers: PowerAllocation,
         beams: BeamformingMatrix, k: int) -> float:
    if not 0 <= k < channels.K:
        raise DimensionError(f"user index {k} out of range for K={channels.K}")
    return float(sinr_all(channels, ris, powers, beams)[k])


def monte_carlo_sinr(channels: ChannelRealization, ris: RisProfile, powers: PowerAllocation,
                     beams: BeamformingMatrix, k: int, num_samples: int, seed,
                     chunk: int = 100_000) -> SinrEstimate:
    """Estimate the SINR of user k by simulating the received signal.

    Symbols are unit-modulus with uniform phase; RIS and BS noises are
    circularly-symmetric Gaussian.  The full M-dimensional received vector is
    built sample by sample and then combined with w_k.
    """
    if num_samples < 1:
        raise ParameterError("num_samples must be >= 1")
    _check(channels, ris, powers)
    rng = np.random.default_rng(seed)
    K, M = channels.K, channels.M
    heq = equivalent_channels(channels, ris)
    g_phi = channels.stacked_ris_to_bs * ris.flat  # columns G_l Phi_l, per element
    noise_std = np.sqrt(channels.element_noise / 2.0)
    bs_std = np.sqrt(channels.sigma_bs_sq / 2.0)
    amp = np.sqrt(powers.p)
    wk = beams.w[k].conj()
    others = np.arange(K) != k

    desired_power = 0.0
    rest_power = 0.0
    done = 0
    while done < num_samples:
        n = min(chunk, num_samples - done)
        s = np.exp(2j * np.pi * rng.random((n, K)))
        tx = s * amp
        n_ris = noise_std * (rng.standard_normal((n, g_phi.shape[1]))
                             + 1j * rng.standard_normal((n, g_phi.shape[1])))
        n_bs = bs_std * (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M)))
        desired_rx = np.outer(tx[:, k], heq[k])
        rest_rx = tx[:, others] @ heq[others] + n_ris @ g_phi.T + n_bs
        desired_power += float(np.sum(np.abs(desired_rx @ wk) ** 2))
        rest_power += float(np.sum(np.abs(rest_rx @ wk) ** 2))
        done += n
    value, overflow = _ratio([desired_power], [rest_power])
    return SinrEstimate(float(value[0]), bool(overflow[0]))


def rate_report(channels: ChannelRealization, ris: RisProfile, powers: PowerAllocation,
                beams: BeamformingMatrix) -> RateReport:
    return RateReport.from_sinr(sinr_all(channels, ris, powers, beams))

"""Node placement and Rician channel generation for the multi-RIS uplink.

Every link is modelled as

    sqrt(eta * dist**-zeta) * (alpha * LoS + beta * NLoS)

with alpha = sqrt(K/(1+K)), beta = sqrt(1/(1+K)).  The NLoS part is
i.i.d. CN(0, 1); the LoS part is built from half-wavelength ULA steering
vectors so every LoS entry has unit modulus.  The BS array lies along the
x axis and every RIS array along the y axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, GeometryError, ParameterError

__all__ = [
    "SystemGeometry",
    "FadingParams",
    "ChannelRealization",
    "place_nodes",
    "path_loss_factor",
    "rician_components",
    "steering_vector",
    "generate_channels",
]

BS_AXIS = np.array([1.0, 0.0, 0.0])
RIS_AXIS = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class SystemGeometry:
    bs_position: np.ndarray
    ris_positions: np.ndarray  # (L, 3)
    user_positions: np.ndarray  # (K, 3)
    M: int
    N: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bs_position", np.asarray(self.bs_position, dtype=float).reshape(3))
        object.__setattr__(self, "ris_positions", np.asarray(self.ris_positions, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "user_positions", np.asarray(self.user_positions, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "N", tuple(int(n) for n in self.N))
        if self.M < 1 or self.K < 1 or self.L < 1:
            raise GeometryError(f"need M, K, L >= 1, got M={self.M} K={self.K} L={self.L}")
        if len(self.N) != self.L or min(self.N) < 1:
            raise GeometryError(f"N must list one positive element count per RIS, got {self.N}")
        for name, dists in (
            ("BS-user", self.direct_distances()),
            ("user-RIS", self.user_ris_distances()),
            ("RIS-BS", self.ris_bs_distances()),
        ):
            if np.any(dists <= 0):
                raise GeometryError(f"{name} distance must be strictly positive")

    @property
    def K(self) -> int:
        return self.user_positions.shape[0]

    @property
    def L(self) -> int:
        return self.ris_positions.shape[0]

    @property
    def N_total(self) -> int:
        return int(sum(self.N))

    def direct_distances(self) -> np.ndarray:
        return np.linalg.norm(self.user_positions - self.bs_position, axis=1)

    def user_ris_distances(self) -> np.ndarray:
        """(K, L) array of user-to-RIS distances."""
        diff = self.user_positions[:, None, :] - self.ris_positions[None, :, :]
        return np.linalg.norm(diff, axis=2)

    def ris_bs_distances(self) -> np.ndarray:
        return np.linalg.norm(self.ris_positions - self.bs_position, axis=1)


@dataclass(frozen=True)
class FadingParams:
    """Large- and small-scale fading plus noise levels.

    ``zeta_direct``, ``zeta_user_ris`` and ``zeta_ris_bs`` override the
    shared exponent for one link type when set.
    """

    eta: float = 1e-3
    zeta: float = 2.2
    rician_k: float = 2.0
    sigma_ris_sq: tuple[float, ...] = (1e-11,)
    sigma_bs_sq: float = 1e-11
    zeta_direct: Optional[float] = None
    zeta_user_ris: Optional[float] = None
    zeta_ris_bs: Optional[float] = None

    def __post_init__(self):
        sig = self.sigma_ris_sq
        if np.isscalar(sig):
            sig = (float(sig),)
        object.__setattr__(self, "sigma_ris_sq", tuple(float(s) for s in sig))
        if not self.eta > 0:
            raise ParameterError(f"eta must be > 0, got {self.eta}")
        for z in (self.zeta, self.zeta_direct, self.zeta_user_ris, self.zeta_ris_bs):
            if z is not None and z < 0:
                raise ParameterError(f"path-loss exponent must be >= 0, got {z}")
        if self.rician_k < 0:
            raise ParameterError(f"Rician factor must be >= 0, got {self.rician_k}")
        if self.sigma_bs_sq <= 0 or min(self.sigma_ris_sq) <= 0:
            raise ParameterError("noise variances must be > 0")

    def ris_noise(self, L: int) -> np.ndarray:
        """Per-surface noise variances; a single value is broadcast to all L."""
        if len(self.sigma_ris_sq) == 1:
            return np.full(L, self.sigma_ris_sq[0])
        if len(self.sigma_ris_sq) != L:
            raise DimensionError(f"{len(self.sigma_ris_sq)} RIS noise variances for {L} surfaces")
        return np.asarray(self.sigma_ris_sq)

    def exponent(self, link: str) -> float:
        override = {"direct": self.zeta_direct, "user_ris": self.zeta_user_ris, "ris_bs": self.zeta_ris_bs}[link]
        return self.zeta if override is None else override


@dataclass(frozen=True)
class ChannelRealization:
    """Channels of one coherence block plus the receiver noise levels.

    direct: (K, M), row k is d_k.
    user_to_ris: L arrays of shape (K, N_l), row k of entry l is h_{k->l}.
    ris_to_bs: L arrays of shape (M, N_l).
    """

    direct: np.ndarray
    user_to_ris: tuple[np.ndarray, ...]
    ris_to_bs: tuple[np.ndarray, ...]
    sigma_ris_sq: np.ndarray
    sigma_bs_sq: float
    _stacked: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        direct = np.asarray(self.direct, dtype=complex)
        if direct.ndim != 2:
            raise DimensionError("direct channels must be a (K, M) array")
        h = tuple(np.asarray(x, dtype=complex) for x in self.user_to_ris)
        g = tuple(np.asarray(x, dtype=complex) for x in self.ris_to_bs)
        sig = np.broadcast_to(np.asarray(self.sigma_ris_sq, dtype=float), (len(g),)).copy()
        object.__setattr__(self, "direct", direct)
        object.__setattr__(self, "user_to_ris", h)
        object.__setattr__(self, "ris_to_bs", g)
        object.__setattr__(self, "sigma_ris_sq", sig)
        K, M = direct.shape
        if len(h) != len(g) or not g:
            raise DimensionError("need one user-to-RIS and one RIS-to-BS block per surface")
        for hl, gl in zip(h, g):
            if hl.shape != (K, gl.shape[1]) or gl.shape[0] != M:
                raise DimensionError(f"inconsistent RIS block shapes {hl.shape} / {gl.shape}")
        if self.sigma_bs_sq < 0 or np.any(sig < 0):
            raise ParameterError("noise variances must be nonnegative")

    @property
    def K(self) -> int:
        return self.direct.shape[0]

    @property
    def M(self) -> int:
        return self.direct.shape[1]

    @property
    def L(self) -> int:
        return len(self.ris_to_bs)

    @property
    def N(self) -> tuple[int, ...]:
        return tuple(g.shape[1] for g in self.ris_to_bs)

    @property
    def N_total(self) -> int:
        return sum(self.N)

    @property
    def stacked_user_to_ris(self) -> np.ndarray:
        """(K, N_total) concatenation of all h_{k->l}."""
        if "h" not in self._stacked:
            self._stacked["h"] = np.concatenate(self.user_to_ris, axis=1)
        return self._stacked["h"]

    @property
    def stacked_ris_to_bs(self) -> np.ndarray:
        """(M, N_total) concatenation of all G_l."""
        if "g" not in self._stacked:
            self._stacked["g"] = np.concatenate(self.ris_to_bs, axis=1)
        return self._stacked["g"]

    @property
    def element_noise(self) -> np.ndarray:
        """RIS noise variance of each of the N_total elements."""
        if "s" not in self._stacked:
            self._stacked["s"] = np.repeat(self.sigma_ris_sq, self.N)
        return self._stacked["s"]


def _ring(n: int, radius: float, height: float, center: np.ndarray, offset: float,
          random_angles: bool, rng: np.random.Generator) -> np.ndarray:
    if random_angles:
        angles = rng.uniform(0.0, 2 * np.pi, size=n)
    else:
        angles = offset + 2 * np.pi * np.arange(n) / n
    pts = np.empty((n, 3))
    pts[:, 0] = center[0] + radius * np.cos(angles)
    pts[:, 1] = center[1] + radius * np.sin(angles)
    pts[:, 2] = height
    return pts


def place_nodes(
    num_users: int,
    num_ris: int,
    M: int,
    N: Sequence[int] | int,
    *,
    bs_position: Sequence[float] = (0.0, 0.0, 5.0),
    ris_radius: float = 12.0,
    user_radius: float = 6.0,
    ris_height: float = 5.0,
    user_height: float = 1.5,
    user_angle_offset: float = np.pi / 8,
    ris_angle_offset: float = 3 * np.pi / 8,
    random_angles: bool = False,
    seed: int = 0,
) -> SystemGeometry:
    """Place the BS, the RISs and the users.

    RISs sit on a circle of ``ris_radius`` around the BS at ``ris_height``,
    users on a circle of ``user_radius`` at ``user_height``.  Angles are
    evenly spaced (starting at the given offsets) unless ``random_angles``.
    The default offsets interleave users and surfaces and keep the ULA cosines
    of the users distinct.
    """
    if ris_radius <= 0 or user_radius <= 0:
        raise GeometryError(f"radii must be > 0, got ris={ris_radius} user={user_radius}")
    if num_users < 1 or num_ris < 1 or M < 1:
        raise GeometryError("need at least one user, one RIS and one BS antenna")
    if np.isscalar(N):
        N = [int(N)] * num_ris
    bs = np.asarray(bs_position, dtype=float)
    rng = np.random.default_rng(seed)
    ris = _ring(num_ris, ris_radius, ris_height, bs, ris_angle_offset, random_angles, rng)
    users = _ring(num_users, user_radius, user_height, bs, user_angle_offset, random_angles, rng)
    return SystemGeometry(bs, ris, users, int(M), tuple(N))


def path_loss_factor(distance, params: FadingParams, link: str = "direct"):
    """Amplitude factor sqrt(eta * distance**-zeta)."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise GeometryError(f"distance must be > 0, got {distance}")
    out = np.sqrt(params.eta * d ** (-params.exponent(link)))
    return float(out) if out.ndim == 0 else out


def rician_components(rician_k: float) -> tuple[float, float]:
    """LoS and NLoS weights (alpha, beta) for Rician factor ``rician_k``."""
    if rician_k < 0:
        raise ParameterError(f"Rician factor must be >= 0, got {rician_k}")
    if np.isinf(rician_k):
        return 1.0, 0.0
    return float(np.sqrt(rician_k / (1.0 + rician_k))), float(np.sqrt(1.0 / (1.0 + rician_k)))


def steering_vector(n: int, direction: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Half-wavelength ULA response exp(j*pi*i*cos(angle to array axis))."""
    u = direction / np.linalg.norm(direction)
    return np.exp(1j * np.pi * np.arange(n) * float(u @ axis))


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_channels(geometry: SystemGeometry, params: FadingParams, seed) -> ChannelRealization:
    """Draw one channel realization; identical for identical (geometry, params, seed)."""
    rng = np.random.default_rng(seed)
    alpha, beta = rician_components(params.rician_k)
    K, L, M = geometry.K, geometry.L, geometry.M
    bs = geometry.bs_position

    pl_d = path_loss_factor(geometry.direct_distances(), params, "direct")
    direct = np.empty((K, M), dtype=complex)
    for k in range(K):
        los = steering_vector(M, geometry.user_positions[k] - bs, BS_AXIS)
        direct[k] = pl_d[k] * (alpha * los + beta * _cn(rng, M))

    pl_h = path_loss_factor(geometry.user_ris_distances(), params, "user_ris")
    pl_g = path_loss_factor(geometry.ris_bs_distances(), params, "ris_bs")
    user_to_ris, ris_to_bs = [], []
    for l in range(L):
        n_l = geometry.N[l]
        ris_pos = geometry.ris_positions[l]
        h = np.empty((K, n_l), dtype=complex)
        for k in range(K):
            los = steering_vector(n_l, geometry.user_positions[k] - ris_pos, RIS_AXIS)
            h[k] = pl_h[k, l] * (alpha * los + beta * _cn(rng, n_l))
        g_los = np.outer(
            steering_vector(M, ris_pos - bs, BS_AXIS),
            steering_vector(n_l, bs - ris_pos, RIS_AXIS).conj(),
        )
        g = pl_g[l] * (alpha * g_los + beta * _cn(rng, (M, n_l)))
        user_to_ris.append(h)
        ris_to_bs.append(g)

    return ChannelRealization(
        direct=direct,
        user_to_ris=tuple(user_to_ris),
        ris_to_bs=tuple(ris_to_bs),
        sigma_ris_sq=params.ris_noise(L),
        sigma_bs_sq=params.sigma_bs_sq,
    )

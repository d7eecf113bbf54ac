"""Channel generation and composition for RIS-aided MIMO downlinks.

The effective downlink channel of the stacked users is

    H(theta) = H_d + sum_n H_re,n diag(theta_n) H_s,n

with ``H_d`` (r x N_B) the direct channel, ``H_re,n`` (r x N_RIS,n) the
RIS-to-user channel and ``H_s,n`` (N_RIS,n x N_B) the BS-to-RIS channel of
surface ``n``.  All generators take an explicit ``numpy.random.Generator``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._validation import DomainError, check_matrix, check_unimodular

__all__ = [
    "SystemDimensions",
    "PathLossParams",
    "Geometry",
    "FadingKind",
    "FadingSpec",
    "ChannelSet",
    "PhaseConfig",
    "path_loss_linear",
    "steering_vector",
    "gen_rayleigh",
    "gen_rician",
    "gen_kronecker_rank",
    "gen_fading",
    "compose_effective",
    "draw_user_positions",
    "build_scenario_channels",
]


@dataclass(frozen=True)
class SystemDimensions:
    n_bs: int
    n_ms: int
    n_users: int
    n_ris_elements: tuple = (256,)

    def __post_init__(self):
        object.__setattr__(self, "n_ris_elements", tuple(int(n) for n in self.n_ris_elements))
        counts = (self.n_bs, self.n_ms, self.n_users, *self.n_ris_elements)
        if min(counts) < 1:
            raise DomainError(f"all dimensions must be >= 1, got {counts}")
        if self.n_bs < self.r:
            raise DomainError(f"need n_bs >= r, got n_bs={self.n_bs}, r={self.r}")

    @property
    def r(self):
        return self.n_users * self.n_ms


@dataclass(frozen=True)
class PathLossParams:
    """``L_dB = alpha_db + beta * 10 log10(d)``."""

    alpha_db: float = 30.0
    beta: float = 3.76

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class Geometry:
    bs_position: np.ndarray
    ris_positions: list
    user_positions: np.ndarray

    def __post_init__(self):
        pts = [np.asarray(self.bs_position, dtype=float)]
        pts += [np.asarray(p, dtype=float) for p in self.ris_positions]
        pts += list(np.asarray(self.user_positions, dtype=float).reshape(-1, 2))
        if not all(np.all(np.isfinite(p)) for p in pts):
            raise DomainError("geometry positions must be finite")


class FadingKind(str, Enum):
    RAYLEIGH = "rayleigh"
    RICIAN = "rician"
    KRONECKER_RANK = "kronecker_rank"


@dataclass(frozen=True)
class FadingSpec:
    kind: FadingKind = FadingKind.RAYLEIGH
    rician_factor_db: float = 6.0
    rank: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", FadingKind(self.kind))
        if self.kind is FadingKind.KRONECKER_RANK and self.rank < 1:
            raise DomainError(f"rank must be >= 1, got {self.rank}")


@dataclass
class ChannelSet:
    """One channel realization: direct channel plus one (H_re, H_s) pair per RIS."""

    h_direct: np.ndarray
    h_reflect: list = field(default_factory=list)
    h_bs_ris: list = field(default_factory=list)

    def __post_init__(self):
        self.h_direct = check_matrix(self.h_direct, "h_direct")
        r, n_bs = self.h_direct.shape
        if len(self.h_reflect) != len(self.h_bs_ris):
            raise DomainError("h_reflect and h_bs_ris must have one entry per RIS")
        self.h_reflect = [check_matrix(h, "h_reflect", (r, None)) for h in self.h_reflect]
        self.h_bs_ris = [
            check_matrix(h, "h_bs_ris", (hre.shape[1], n_bs))
            for h, hre in zip(self.h_bs_ris, self.h_reflect)
        ]

    @property
    def r(self):
        return self.h_direct.shape[0]

    @property
    def n_bs(self):
        return self.h_direct.shape[1]

    @property
    def n_ris_elements(self):
        return [h.shape[1] for h in self.h_reflect]

    @property
    def n_ris_total(self):
        return sum(self.n_ris_elements)

    def stacked(self):
        """Return ``(H_d, [H_re,1 ... H_re,N], [H_s,1; ...; H_s,N])``.

        Concatenating the surfaces this way turns the multi-RIS sum into a
        single-RIS channel with a block phase vector.
        """
        if not self.h_reflect:
            return (
                self.h_direct,
                np.zeros((self.r, 0), dtype=complex),
                np.zeros((0, self.n_bs), dtype=complex),
            )
        return self.h_direct, np.hstack(self.h_reflect), np.vstack(self.h_bs_ris)

    def scaled(self, factor):
        """Scale every link so that the Gram matrix scales by ``factor**2``."""
        # the reflected path is a product of two links, so split the factor
        s = np.sqrt(factor)
        return ChannelSet(
            self.h_direct * factor,
            [h * s for h in self.h_reflect],
            [h * s for h in self.h_bs_ris],
        )


class PhaseConfig:
    """Reflection coefficients for every RIS, or the distinguished Off state.

    ``PhaseConfig.off()`` removes the reflected term entirely, which is not
    the same as any unimodular configuration.
    """

    def __init__(self, phases=None):
        if phases is None:
            self.phases = None
        else:
            self.phases = [check_unimodular(p) for p in phases]

    @classmethod
    def off(cls):
        return cls(None)

    @classmethod
    def from_vector(cls, theta, sizes):
        """Split a concatenated phase vector into per-RIS pieces of the given sizes."""
        theta = check_unimodular(theta, sum(sizes))
        return cls(np.split(theta, np.cumsum(sizes)[:-1]))

    @property
    def is_off(self):
        return self.phases is None

    def vector(self):
        if self.is_off:
            raise DomainError("Off state has no phase vector")
        if not self.phases:
            return np.zeros(0, dtype=complex)
        return np.concatenate(self.phases)

    def __repr__(self):
        if self.is_off:
            return "PhaseConfig.off()"
        return f"PhaseConfig(sizes={[p.size for p in self.phases]})"


def path_loss_linear(params, distance):
    """Linear power gain ``10**(-L_dB / 10)`` at ``distance`` meters."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise DomainError("distance must be > 0")
    loss_db = params.alpha_db + params.beta * 10.0 * np.log10(distance)
    out = 10.0 ** (-loss_db / 10.0)
    return float(out) if out.ndim == 0 else out


def steering_vector(n, angle):
    """Half-wavelength ULA response, entry k = exp(j pi k sin(angle))."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def gen_rayleigh(rng, rows, cols, gain=1.0):
    """i.i.d. CN(0, gain) entries."""
    if gain < 0:
        raise DomainError(f"gain must be >= 0, got {gain}")
    w = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return np.sqrt(gain / 2.0) * w


def gen_rician(rng, rows, cols, gain=1.0, kappa_db=6.0, aoa=None, aod=None):
    """Rician fading with a rank-one ULA line-of-sight component.

    The LOS part carries a fraction kappa / (1 + kappa) of the expected
    power, so the total expected gain matches the Rayleigh case.  Angles
    default to independent draws on [0, 2 pi).
    """
    if gain < 0:
        raise DomainError(f"gain must be >= 0, got {gain}")
    if aoa is None:
        aoa = rng.uniform(0.0, 2.0 * np.pi)
    if aod is None:
        aod = rng.uniform(0.0, 2.0 * np.pi)
    kappa = 10.0 ** (kappa_db / 10.0)
    los = np.outer(steering_vector(rows, aoa), steering_vector(cols, aod).conj())
    nlos = gen_rayleigh(rng, rows, cols, 1.0)
    if np.isinf(kappa):
        mix = los
    else:
        mix = np.sqrt(kappa / (1.0 + kappa)) * los + np.sqrt(1.0 / (1.0 + kappa)) * nlos
    return np.sqrt(gain) * mix


def _random_unitary(rng, n):
    z = gen_rayleigh(rng, n, n, 1.0)
    q, r = np.linalg.qr(z)
    # fix column phases so the draw is Haar distributed
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def gen_kronecker_rank(rng, n_ris, n_bs, r_s, gain=1.0):
    """BS-to-RIS channel of exact rank ``r_s`` and rank-independent total gain.

    ``sqrt(gain * n_bs / r_s) * M @ blockdiag(I_rs, 0) @ S^H`` with ``M``
    i.i.d. CN(0, 1) and ``S`` a random unitary.
    """
    if not 1 <= r_s <= min(n_ris, n_bs):
        raise DomainError(f"rank must lie in [1, {min(n_ris, n_bs)}], got {r_s}")
    m = gen_rayleigh(rng, n_ris, n_bs, 1.0)
    s = _random_unitary(rng, n_bs)
    return np.sqrt(gain * n_bs / r_s) * (m[:, :r_s] @ s[:, :r_s].conj().T)


def gen_fading(rng, spec, rows, cols, gain):
    """Draw a ``rows x cols`` link according to ``spec``."""
    if spec.kind is FadingKind.RAYLEIGH:
        return gen_rayleigh(rng, rows, cols, gain)
    if spec.kind is FadingKind.RICIAN:
        return gen_rician(rng, rows, cols, gain, spec.rician_factor_db)
    return gen_kronecker_rank(rng, rows, cols, spec.rank, gain)


def compose_effective(channels, phases):
    """Effective channel ``H_d + sum_n H_re,n diag(theta_n) H_s,n``.

    ``phases`` is a :class:`PhaseConfig` or a concatenated phase vector.
    """
    if not isinstance(phases, PhaseConfig):
        phases = PhaseConfig.from_vector(phases, channels.n_ris_elements)
    if phases.is_off:
        return channels.h_direct.copy()
    if len(phases.phases) != len(channels.h_reflect):
        raise DomainError(
            f"{len(phases.phases)} phase vectors for {len(channels.h_reflect)} surfaces"
        )
    h = channels.h_direct.copy()
    for h_re, theta, h_s in zip(channels.h_reflect, phases.phases, channels.h_bs_ris):
        if theta.size != h_re.shape[1]:
            raise DomainError(f"phase vector length {theta.size} != {h_re.shape[1]} elements")
        h += (h_re * theta) @ h_s
    return h


def draw_user_positions(rng, n_users, center, radius):
    """Area-uniform positions in a disk."""
    rad = radius * np.sqrt(rng.uniform(size=n_users))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n_users)
    center = np.asarray(center, dtype=float)
    return center + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def _distances(points, origin):
    return np.linalg.norm(np.atleast_2d(points) - np.asarray(origin, dtype=float), axis=1)


def build_scenario_channels(rng, config, geometry=None):
    """Draw one :class:`ChannelSet` for a scenario configuration.

    ``config`` is a ``ScenarioConfig`` (see :mod:`riseig.experiment_runner`).
    The extra user penalty hits the direct-channel rows of the listed users
    only.  Returns ``(channels, geometry)``.
    """
    dims = config.dimensions
    n_ms = dims.n_ms
    if geometry is None:
        users = draw_user_positions(rng, dims.n_users, config.user_center, config.user_radius)
        geometry = Geometry(
            np.asarray(config.bs_position, dtype=float),
            [np.asarray(p, dtype=float) for p in config.ris_positions],
            users,
        )
    users = np.asarray(geometry.user_positions, dtype=float)

    # per-row amplitude of the direct channel
    gain_d = path_loss_linear(config.pathloss_d, _distances(users, geometry.bs_position))
    if config.extra_loss_users:
        penalty = np.ones(dims.n_users)
        penalty[list(config.extra_loss_users)] = 10.0 ** (-config.extra_loss_db / 10.0)
        gain_d = gain_d * penalty
    row_amp_d = np.repeat(np.sqrt(gain_d), n_ms)
    h_d = row_amp_d[:, None] * gen_fading(rng, config.fading_d, dims.r, dims.n_bs, 1.0)

    h_re, h_s = [], []
    for ris_pos, n_ris in zip(geometry.ris_positions, dims.n_ris_elements):
        gain_re = path_loss_linear(config.pathloss_re, _distances(users, ris_pos))
        row_amp_re = np.repeat(np.sqrt(gain_re), n_ms)
        h_re.append(row_amp_re[:, None] * gen_fading(rng, config.fading_re, dims.r, n_ris, 1.0))
        d_s = float(np.linalg.norm(np.asarray(ris_pos) - np.asarray(geometry.bs_position)))
        gain_s = path_loss_linear(config.pathloss_s, d_s)
        h_s.append(gen_fading(rng, config.fading_s, n_ris, dims.n_bs, gain_s))
    return ChannelSet(h_d, h_re, h_s), geometry

"""Finite-power sum rates of DPC and zero-forcing for single-antenna users."""

from dataclasses import dataclass

import numpy as np

from ._validation import ConvergenceError, DomainError, SingularChannelError, check_matrix
from .channel_model import compose_effective
from .waterfilling import waterfill

__all__ = [
    "PowerPoint",
    "dbm_to_watt",
    "dpc_sum_capacity",
    "dpc_power_iterates",
    "zf_sum_rate",
    "rate_gap",
]


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class PowerPoint:
    """Transmit power and per-antenna noise variance, both in watts."""

    power: float
    noise_variance: float

    def __post_init__(self):
        if not (self.power > 0 and self.noise_variance > 0):
            raise DomainError("power and noise_variance must be > 0")

    @classmethod
    def from_dbm(cls, power_dbm, noise_dbm=-100.0):
        return cls(float(dbm_to_watt(power_dbm)), float(dbm_to_watt(noise_dbm)))

    @property
    def snr(self):
        return self.power / self.noise_variance


def _normalized_gram(h_eff, noise_variance):
    h = check_matrix(h_eff, "h_eff")
    if h.shape[1] < h.shape[0]:
        raise DomainError(f"need N_B >= r, got shape {h.shape}")
    g = h @ h.conj().T / noise_variance
    return (g + g.conj().T) / 2.0


def _mac_rate(g, p):
    sq = np.sqrt(p)
    m = np.eye(g.shape[0]) + sq[:, None] * g * sq[None, :]
    sign, logdet = np.linalg.slogdet(m)
    return logdet / np.log(2.0)


def dpc_power_iterates(h_eff, pp, tol=1e-10, max_iter=5000):
    """Sum-power iterative waterfilling on the dual MAC.

    Yields ``(powers, rate)`` per iteration.  Each step waterfills over
    the users' effective gains with the others' powers held fixed and
    averages the result with the previous powers (weight ``1/K``), which
    keeps the rate nondecreasing.
    """
    g = _normalized_gram(h_eff, pp.noise_variance)
    k = g.shape[0]
    p = np.full(k, pp.power / k)
    rate = _mac_rate(g, p)
    yield p, rate
    for _ in range(max_iter):
        # s_k = [G (I + P G)^-1]_kk = a_k^H Z^-1 a_k; remove user k's own term
        s = np.real(np.diagonal(g @ np.linalg.inv(np.eye(k) + p[:, None] * g)))
        gains = s / (1.0 - p * s)
        alloc = waterfill(1.0 / gains, pp.power)
        p = alloc.levels / k + p * (k - 1) / k
        new_rate = _mac_rate(g, p)
        yield p, new_rate
        if abs(new_rate - rate) <= tol * max(1.0, abs(rate)):
            return
        rate = new_rate
    raise ConvergenceError(f"no convergence in {max_iter} iterations", rate)


def dpc_sum_capacity(h_eff, pp, tol=1e-10, max_iter=5000):
    """DPC sum capacity in bits per channel use via BC/MAC duality.

    Rows of ``h_eff`` are the single-antenna users' channels.
    """
    rate = None
    for _, rate in dpc_power_iterates(h_eff, pp, tol, max_iter):
        pass
    return float(rate)


def zf_sum_rate(h_eff, pp):
    """Zero-forcing sum rate with waterfilled stream powers.

    The precoder is the right pseudo-inverse with unit-norm columns, so
    user ``k`` sees gain ``1 / [(HH^H)^-1]_kk``.
    """
    g = _normalized_gram(h_eff, pp.noise_variance)
    ev = np.linalg.eigvalsh(g)
    if ev[0] <= 1e-14 * ev[-1] or ev[-1] <= 0:
        raise SingularChannelError("zero-forcing needs a full row rank channel")
    gains = 1.0 / np.real(np.diagonal(np.linalg.inv(g)))
    alloc = waterfill(1.0 / gains, pp.power)
    return float(np.sum(np.log2(1.0 + alloc.levels * gains)))


def rate_gap(channels, theta_geo, theta_har, pp):
    """``dpc_sum_capacity(H(theta_geo)) - zf_sum_rate(H(theta_har))``."""
    dpc = dpc_sum_capacity(compose_effective(channels, theta_geo), pp)
    zf = zf_sum_rate(compose_effective(channels, theta_har), pp)
    return dpc - zf

"""High-SNR rate offsets and eigenvalue means of the Gram matrix HH^H.

At high SNR both DPC and linear precoding achieve

    R = r log2(P) - r log2(r) + offset

with ``offset = r log2(geo_mean)`` for DPC and an offset squeezed between
``r log2(har_mean)`` and ``r log2(geo_mean)`` for linear precoding.  All
offsets are in bits.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._validation import DomainError, SingularChannelError

__all__ = [
    "EigenSpectrum",
    "UserPartition",
    "OffsetReport",
    "gram_spectrum",
    "spectrum_means",
    "dpc_offset",
    "lin_offset",
    "offset_report",
    "high_snr_rate",
    "gap_bound",
]

# eigenvalues below this fraction of the largest one count as zero
SINGULAR_RTOL = 1e-14


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenvalues of HH^H, descending and clamped at zero."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < -1e-10 * max(1.0, np.max(np.abs(v), initial=0.0))):
            raise DomainError("Gram eigenvalues must be nonnegative")
        object.__setattr__(self, "values", np.sort(np.clip(v, 0.0, None))[::-1])

    @property
    def r(self):
        return self.values.size


@dataclass(frozen=True)
class UserPartition:
    """Row index blocks of the stacked channel, one block per user."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=int).ravel() for b in self.blocks)
        flat = np.concatenate(blocks) if blocks else np.zeros(0, dtype=int)
        if np.any(np.sort(flat) != np.arange(flat.size)):
            raise DomainError("blocks must partition {0, ..., r-1}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def contiguous(cls, n_users, n_ms=1):
        return cls(tuple(np.arange(k * n_ms, (k + 1) * n_ms) for k in range(n_users)))

    @property
    def r(self):
        return sum(b.size for b in self.blocks)


@dataclass(frozen=True)
class OffsetReport:
    dpc_offset: float
    lin_offset: float
    geo_mean: float
    har_mean: float


def _gram(h_eff):
    h = np.asarray(h_eff, dtype=complex)
    g = h @ h.conj().T
    return (g + g.conj().T) / 2.0


def gram_spectrum(h_eff):
    """Eigenvalues of ``H H^H`` as an :class:`EigenSpectrum`."""
    return EigenSpectrum(np.linalg.eigvalsh(_gram(h_eff)))


def _check_nonsingular(values):
    lam_max = np.max(values, initial=0.0)
    if values.size == 0 or lam_max <= 0 or np.min(values) <= SINGULAR_RTOL * lam_max:
        raise SingularChannelError("Gram matrix is singular")


def spectrum_means(s):
    """Geometric and harmonic mean of a strictly positive spectrum."""
    v = s.values if isinstance(s, EigenSpectrum) else np.asarray(s, dtype=float)
    _check_nonsingular(v)
    geo = float(np.exp(np.mean(np.log(v))))
    har = float(v.size / np.sum(1.0 / v))
    return geo, har


def _gram_cholesky(h_eff):
    g = _gram(h_eff)
    _check_nonsingular(np.linalg.eigvalsh(g))
    try:
        return sla.cho_factor(g, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError("Gram matrix is not positive definite") from exc


def dpc_offset(h_eff):
    """``-log2 det((HH^H)^-1)`` from a Cholesky factor of the Gram matrix."""
    c, _ = _gram_cholesky(h_eff)
    return float(2.0 * np.sum(np.log2(np.real(np.diagonal(c)))))


def lin_offset(h_eff, partition=None):
    """``-sum_k log2 det`` of the diagonal blocks of ``(HH^H)^-1``.

    ``partition`` defaults to single-antenna users (one row each).
    """
    factor = _gram_cholesky(h_eff)
    r = factor[0].shape[0]
    if partition is None:
        partition = UserPartition.contiguous(r, 1)
    if partition.r != r:
        raise DomainError(f"partition covers {partition.r} rows, channel has {r}")
    g_inv = sla.cho_solve(factor, np.eye(r, dtype=complex))
    total = 0.0
    for block in partition.blocks:
        sub = g_inv[np.ix_(block, block)]
        sub = (sub + sub.conj().T) / 2.0
        sign, logdet = np.linalg.slogdet(sub)
        total -= logdet / np.log(2.0)
    return float(total)


def offset_report(h_eff, partition=None):
    geo, har = spectrum_means(gram_spectrum(h_eff))
    return OffsetReport(dpc_offset(h_eff), lin_offset(h_eff, partition), geo, har)


def high_snr_rate(power, r, offset):
    """Affine high-SNR rate ``r log2(P) - r log2(r) + offset`` in bits.

    ``power`` is the transmit SNR P / sigma^2 when the offset was computed
    from an unnormalized channel.
    """
    if not np.all(np.asarray(power) > 0):
        raise DomainError("power must be > 0")
    return r * np.log2(power) - r * np.log2(r) + offset


def gap_bound(s):
    """Upper bound ``r log2(geo_mean / har_mean)`` on the DPC-minus-linear gap."""
    geo, har = spectrum_means(s)
    r = s.r if isinstance(s, EigenSpectrum) else len(s)
    return max(0.0, float(r * np.log2(geo / har)))

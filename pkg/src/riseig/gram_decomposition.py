"""Exact split of the Gram matrix into an RIS-independent part and a low-rank part.

With the SVD ``H_s = sum_l sigma_l u_l v_l^H`` of the BS-to-RIS channel,

    H(theta) H(theta)^H = C + Q(theta),
    C = H_d P H_d^H,             P = I - sum_l v_l v_l^H,
    Q = sum_l D_l tb tb^H D_l^H, D_l = [H_re diag(u_l) sigma_l, H_d v_l],

where ``tb = [theta; 1]``.  ``Q`` is PSD with rank at most ``rank(H_s)``.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, check_matrix, check_unimodular

__all__ = [
    "GramDecomposition",
    "augment_phase",
    "decompose",
    "decompose_channels",
    "assemble_q",
    "trace_budget_bound",
    "controllable_ev_count",
]


@dataclass(frozen=True)
class GramDecomposition:
    c_matrix: np.ndarray
    d_factors: list
    svd_triplets: list
    projector: np.ndarray

    @property
    def rank_s(self):
        return len(self.d_factors)

    @property
    def r(self):
        return self.c_matrix.shape[0]

    @property
    def n_ris(self):
        return self.d_factors[0].shape[1] - 1 if self.d_factors else None


def augment_phase(theta):
    """``[theta; 1]``."""
    theta = check_unimodular(theta)
    return np.append(theta, 1.0 + 0.0j)


def decompose(h_d, h_re, h_s, rank_tolerance=1e-10):
    """Build ``C``, the ``D_l`` factors and the projector for one RIS.

    Singular values of ``h_s`` are kept while ``sigma_l > rank_tolerance * sigma_1``.
    """
    if not 0 < rank_tolerance < 1:
        raise DomainError(f"rank_tolerance must lie in (0, 1), got {rank_tolerance}")
    h_d = check_matrix(h_d, "h_d")
    r, n_bs = h_d.shape
    h_re = check_matrix(h_re, "h_re", (r, None))
    h_s = check_matrix(h_s, "h_s", (h_re.shape[1], n_bs))

    triplets = []
    if h_s.size:
        u, s, vh = np.linalg.svd(h_s, full_matrices=False)
        if s[0] > 0:
            keep = s > rank_tolerance * s[0]
            triplets = [(float(s[l]), u[:, l], vh[l].conj()) for l in np.flatnonzero(keep)]

    projector = np.eye(n_bs, dtype=complex)
    d_factors = []
    for sigma, u_l, v_l in triplets:
        projector -= np.outer(v_l, v_l.conj())
        d_factors.append(np.column_stack([h_re * (sigma * u_l), h_d @ v_l]))
    c = h_d @ projector @ h_d.conj().T
    c = (c + c.conj().T) / 2.0
    return GramDecomposition(c, d_factors, triplets, projector)


def decompose_channels(channels, rank_tolerance=1e-10):
    """:func:`decompose` for a :class:`~riseig.channel_model.ChannelSet`.

    Several surfaces are handled as one concatenated RIS.
    """
    h_d, h_re, h_s = channels.stacked()
    return decompose(h_d, h_re, h_s, rank_tolerance)


def assemble_q(decomp, theta):
    """``Q(theta) = sum_l D_l tb tb^H D_l^H``."""
    if decomp.rank_s == 0:
        return np.zeros((decomp.r, decomp.r), dtype=complex)
    theta = check_unimodular(theta, decomp.n_ris)
    tb = augment_phase(theta)
    cols = np.column_stack([d @ tb for d in decomp.d_factors])
    q = cols @ cols.conj().T
    return (q + q.conj().T) / 2.0


def trace_budget_bound(decomp):
    """``G_max = (N_RIS + 1) * lambda_max(sum_l D_l^H D_l)``, an upper bound on tr Q."""
    if decomp.rank_s == 0:
        return 0.0
    m = sum(d.conj().T @ d for d in decomp.d_factors)
    lam_max = np.linalg.eigvalsh((m + m.conj().T) / 2.0)[-1]
    return float((decomp.n_ris + 1) * max(lam_max, 0.0))


def controllable_ev_count(ranks):
    """Maximum number of eigenvalues a set of surfaces can move: the sum of BS-RIS ranks."""
    ranks = [int(k) for k in ranks]
    if any(k < 0 for k in ranks):
        raise DomainError("ranks must be >= 0")
    return sum(ranks)

"""Waterfilling and its rank-constrained matrix variant."""

from dataclasses import dataclass

import numpy as np

from ._validation import DomainError

__all__ = ["WaterfillAllocation", "waterfill", "rank_constrained_waterfill"]


@dataclass(frozen=True)
class WaterfillAllocation:
    """``levels[i] = max(0, water_level - base[i])`` summing to the budget."""

    levels: np.ndarray
    water_level: float
    support: np.ndarray


def waterfill(bases, budget, max_iter=200):
    """Fill ``budget`` units of water over floor heights ``bases``.

    Maximizes ``sum_i log(bases[i] + q[i])`` subject to ``q >= 0`` and
    ``sum(q) = budget``.  The level is bracketed by bisection and then
    solved exactly on the active set.

    Examples
    --------
    >>> a = waterfill([1.0, 4.0], 1.0)
    >>> a.levels.tolist(), a.water_level
    ([1.0, 0.0], 2.0)
    """
    bases = np.asarray(bases, dtype=float).ravel()
    if bases.size == 0:
        raise DomainError("need at least one base")
    if not np.all(np.isfinite(bases)):
        raise DomainError("bases must be finite")
    if budget < 0:
        raise DomainError(f"budget must be >= 0, got {budget}")
    if budget == 0:
        return WaterfillAllocation(np.zeros_like(bases), float(bases.min()), np.zeros(0, dtype=int))

    lo, hi = bases.min(), bases.min() + budget
    tol = 1e-12 * max(1.0, budget)
    for _ in range(max_iter):
        nu = 0.5 * (lo + hi)
        excess = np.maximum(nu - bases, 0.0).sum() - budget
        if abs(excess) <= tol:
            break
        if excess > 0:
            hi = nu
        else:
            lo = nu
    support = np.flatnonzero(bases < nu)
    if support.size == 0:
        support = np.array([int(np.argmin(bases))])
    nu = (budget + bases[support].sum()) / support.size
    levels = np.maximum(nu - bases, 0.0)
    return WaterfillAllocation(levels, float(nu), np.flatnonzero(levels > 0))


def rank_constrained_waterfill(c_matrix, budget, rank_limit):
    """Best PSD ``Q`` with ``tr Q <= budget`` and ``rank Q <= rank_limit``.

    Fills the ``rank_limit`` smallest eigenvalues of ``c_matrix`` to a
    common level along their eigenvectors.  The result maximizes
    ``det(C + Q)`` and minimizes ``tr((C + Q)^-1)`` over that set.

    Returns ``(q_matrix, allocation)``; ``allocation.levels`` follows the
    descending eigenvalue order of the filled indices.
    """
    c = np.asarray(c_matrix, dtype=complex)
    c = (c + c.conj().T) / 2.0
    r = c.shape[0]
    if not 1 <= rank_limit <= r:
        raise DomainError(f"rank_limit must lie in [1, {r}], got {rank_limit}")
    phi, w = np.linalg.eigh(c)
    # eigh is ascending; reorder so column i pairs with the i-th largest eigenvalue
    phi, w = phi[::-1], w[:, ::-1]
    idx = np.arange(r - rank_limit, r)
    alloc = waterfill(np.clip(phi[idx], 0.0, None), budget)
    w_sel = w[:, idx]
    q = (w_sel * alloc.levels) @ w_sel.conj().T
    return (q + q.conj().T) / 2.0, alloc

"""Compiled per-element sweep for the phase optimizer.

Mirrors ``phase_optimizer._sweep_numpy`` step for step; the test suite
checks that both produce the same phases.
"""

import numpy as np
from numba import njit

SINGULAR = -1


@njit(cache=True)
def _cholesky_solve(m, rhs, eps, work):
    """Solve ``(m + eps I) x = rhs`` in place of ``rhs``; False if not PD."""
    r = m.shape[0]
    for i in range(r):
        for j in range(i + 1):
            s = m[i, j]
            if i == j:
                s += eps
            for k in range(j):
                s -= work[i, k] * np.conj(work[j, k])
            if i == j:
                if not s.real > 0.0:
                    return False
                work[i, i] = np.sqrt(s.real)
            else:
                work[i, j] = s / work[j, j].real
    n_rhs = rhs.shape[1]
    for c in range(n_rhs):
        for i in range(r):
            s = rhs[i, c]
            for k in range(i):
                s -= work[i, k] * rhs[k, c]
            rhs[i, c] = s / work[i, i].real
        for i in range(r - 1, -1, -1):
            s = rhs[i, c]
            for k in range(i + 1, r):
                s -= np.conj(work[k, i]) * rhs[k, c]
            rhs[i, c] = s / work[i, i].real
    return True


@njit(cache=True)
def sweep(is_geo, h, g, theta, h_re, h_s, c_norm2, order, eps):
    """One pass over ``order``; updates ``h``, ``g`` and ``theta`` in place.

    Returns the number of diagonally loaded factorizations, or ``SINGULAR``.
    """
    r, n_bs = h.shape
    d = np.empty(r, dtype=np.complex128)
    m = np.empty((r, r), dtype=np.complex128)
    x = np.empty((r, 2), dtype=np.complex128)
    work = np.zeros((r, r), dtype=np.complex128)
    n_loaded = 0
    for n in order:
        th = theta[n]
        for i in range(r):
            s = 0j
            for k in range(n_bs):
                s += h[i, k] * np.conj(h_s[n, k])
            d[i] = s - th * c_norm2[n] * h_re[i, n]
        for i in range(r):
            for j in range(r):
                m[i, j] = (
                    g[i, j]
                    - th * h_re[i, n] * np.conj(d[j])
                    - np.conj(th) * d[i] * np.conj(h_re[j, n])
                )
        for i in range(r):
            x[i, 0] = h_re[i, n]
            x[i, 1] = d[i]
        if not _cholesky_solve(m, x, 0.0, work):
            n_loaded += 1
            for i in range(r):
                x[i, 0] = h_re[i, n]
                x[i, 1] = d[i]
            if not _cholesky_solve(m, x, eps, work):
                return SINGULAR
        delta = 0.0
        beta = 0j
        gamma = 0.0
        for i in range(r):
            delta += (np.conj(h_re[i, n]) * x[i, 0]).real
            beta += np.conj(h_re[i, n]) * x[i, 1]
            gamma += (np.conj(d[i]) * x[i, 1]).real

        if is_geo:
            if abs(beta) == 0.0:
                continue
            new = beta / abs(beta)
            if abs(1.0 + new * np.conj(beta)) ** 2 <= abs(1.0 + th * np.conj(beta)) ** 2:
                continue
        else:
            t11 = 0.0
            t22 = 0.0
            t21 = 0j
            for i in range(r):
                t11 += abs(x[i, 0]) ** 2
                t22 += abs(x[i, 1]) ** 2
                t21 += np.conj(x[i, 1]) * x[i, 0]
            q = np.conj(beta)
            d0 = delta * gamma - 1.0 - abs(beta) ** 2
            n0 = gamma * t11 + delta * t22 - 2.0 * (beta * t21).real
            a = 2.0 * (d0 * t21.real - n0 * q.real)
            b = 2.0 * (d0 * t21.imag - n0 * q.imag)
            c = 4.0 * (t21.real * q.imag - t21.imag * q.real)
            amp = np.hypot(a, b)
            if amp == 0.0:
                continue
            psi = np.arctan2(b, a)
            base = np.arcsin(min(1.0, max(-1.0, -c / amp)))
            dl = d0 - 2.0 * (th * q).real
            best_gain = -np.inf
            if dl < 0.0:
                best_gain = (n0 - 2.0 * (th * t21).real) / dl
            new = th
            improved = False
            for phi in (base - psi, np.pi - base - psi):
                cand = np.exp(1j * phi)
                dl = d0 - 2.0 * (cand * q).real
                if dl < 0.0:
                    gain = (n0 - 2.0 * (cand * t21).real) / dl
                    if gain > best_gain:
                        best_gain = gain
                        new = cand
                        improved = True
            if not improved:
                continue

        step = new - th
        for i in range(r):
            for k in range(n_bs):
                h[i, k] += step * h_re[i, n] * h_s[n, k]
        for i in range(r):
            for j in range(r):
                g[i, j] = (
                    m[i, j]
                    + new * h_re[i, n] * np.conj(d[j])
                    + np.conj(new) * d[i] * np.conj(h_re[j, n])
                )
        theta[n] = new
    return n_loaded

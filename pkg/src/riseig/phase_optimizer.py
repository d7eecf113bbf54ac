"""Unimodular RIS phase optimization for the two high-SNR objectives.

Both optimizers sweep over the RIS elements and solve each one-element
subproblem exactly.  Writing ``H = A + theta_n b c^H`` with ``b`` the n-th
column of ``H_re`` and ``c^H`` the n-th row of ``H_s``,

    HH^H = M + theta_n b d^H + conj(theta_n) d b^H,   d = A c,

a rank-two update of ``M``.  With ``X = M^-1 [b, d]``:

* ``det(HH^H) / det(M) = |1 + theta_n conj(beta)|^2 - gamma delta``
  (``beta = b^H M^-1 d``), maximized by ``theta_n = beta / |beta|``;
* ``tr((HH^H)^-1)`` is ``tr(M^-1)`` minus a ratio of two sinusoids in
  ``arg(theta_n)``, whose stationary points have a closed form.

Every update is therefore monotone in its objective.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DomainError, OptimizerError, check_rng, check_unimodular
from .channel_model import ChannelSet, compose_effective

__all__ = [
    "OptimizerConfig",
    "OptimizerTrace",
    "random_phases",
    "geo_objective",
    "har_objective",
    "optimize_geo_mean",
    "optimize_har_mean",
    "GeoMeanPhaseOptimizer",
    "HarMeanPhaseOptimizer",
]

GEO = "geo"
HAR = "har"


@dataclass
class OptimizerConfig:
    """Stopping rule and start point of a coordinate sweep run.

    ``init`` is ``"random"`` or an explicit unimodular start vector.
    ``regularization`` is the diagonal load used when a per-element
    factorization fails; ``None`` picks ``1e-12 * tr(HH^H) / r``.
    ``backend="numpy"`` runs the pure numpy sweep (also implied by
    ``track_updates``, which records the objective after every element).
    """

    max_sweeps: int = 100
    rel_tolerance: float = 1e-6
    regularization: float = None
    init: object = "random"
    random_order: bool = False
    track_updates: bool = False
    backend: str = "compiled"

    def __post_init__(self):
        if self.backend not in ("compiled", "numpy"):
            raise DomainError(f"unknown backend {self.backend!r}")
        if self.max_sweeps < 1:
            raise DomainError("max_sweeps must be >= 1")
        if not self.rel_tolerance > 0:
            raise DomainError("rel_tolerance must be > 0")
        if self.regularization is not None and self.regularization < 0:
            raise DomainError("regularization must be >= 0")


@dataclass
class OptimizerTrace:
    """Objective after every sweep (index 0 is the start point)."""

    objective_per_sweep: list
    sweeps_run: int
    converged: bool
    final_theta: np.ndarray
    n_regularized: int = 0
    objective_per_update: list = field(default_factory=list)


def random_phases(rng, n):
    """``exp(j phi)`` with ``phi`` i.i.d. uniform on [0, 2 pi)."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n))


def _gram(h):
    g = h @ h.conj().T
    return (g + g.conj().T) / 2.0


def geo_objective(h_eff):
    """``log2 det(HH^H)``; ``-inf`` for a singular Gram matrix."""
    sign, logdet = np.linalg.slogdet(_gram(np.asarray(h_eff)))
    return float(logdet / np.log(2.0)) if sign > 0 else -np.inf


def har_objective(h_eff):
    """``tr((HH^H)^-1)``; ``inf`` for a singular Gram matrix."""
    try:
        ev = np.linalg.eigvalsh(_gram(np.asarray(h_eff)))
    except np.linalg.LinAlgError:
        return np.inf
    if ev[0] <= 1e-14 * max(ev[-1], 0.0) or ev[-1] <= 0:
        return np.inf
    return float(np.sum(1.0 / ev))


def _objective(kind, g):
    if kind == GEO:
        sign, logdet = np.linalg.slogdet(g)
        return logdet / np.log(2.0) if sign > 0 else -np.inf
    ev = np.linalg.eigvalsh(g)
    return np.sum(1.0 / ev) if ev[0] > 0 else np.inf


def _har_candidates(delta, beta, gamma, t11, t22, t21):
    """Stationary angles of ``N(phi) / Delta(phi)``.

    ``N = n0 - 2 Re(theta t21)`` and ``Delta = d0 - 2 Re(theta conj(beta))``
    are the numerator and determinant of the 2x2 Woodbury core.
    """
    q = np.conj(beta)
    d0 = delta * gamma - 1.0 - abs(beta) ** 2
    n0 = gamma * t11 + delta * t22 - 2.0 * np.real(beta * t21)
    a = 2.0 * (d0 * t21.real - n0 * q.real)
    b = 2.0 * (d0 * t21.imag - n0 * q.imag)
    c = 4.0 * (t21.real * q.imag - t21.imag * q.real)
    amp = np.hypot(a, b)
    if amp == 0.0:
        return np.zeros(0), d0, n0, q
    psi = np.arctan2(b, a)
    base = np.arcsin(np.clip(-c / amp, -1.0, 1.0))
    return np.array([base - psi, np.pi - base - psi]), d0, n0, q


def _har_gain(theta, d0, n0, q, t21):
    """``N / Delta``: the amount subtracted from ``tr(M^-1)``; larger is better."""
    dlt = d0 - 2.0 * np.real(theta * q)
    num = n0 - 2.0 * np.real(theta * t21)
    # Delta < 0 whenever M + update is positive definite
    return np.where(dlt < 0, num / np.where(dlt < 0, dlt, -1.0), -np.inf)


def _solve_loaded(m, rhs, eps):
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        if eps is None:
            raise
        chol = np.linalg.cholesky(m + eps * np.eye(m.shape[0]))
    y = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.conj().T, y)


def _sweep_numpy(kind, h, g, theta, h_re, h_s, c_norm2, order, eps, on_update=None):
    """Reference sweep; returns ``(h, g, n_loaded)`` and updates ``theta`` in place."""
    n_loaded = 0
    for n in order:
        b = h_re[:, n]
        c_row = h_s[n]
        th = theta[n]
        d = h @ c_row.conj() - th * c_norm2[n] * b
        m = g - th * np.outer(b, d.conj()) - np.conj(th) * np.outer(d, b.conj())
        m = (m + m.conj().T) / 2.0
        u = np.column_stack([b, d])
        try:
            x = _solve_loaded(m, u, None)
        except np.linalg.LinAlgError:
            n_loaded += 1
            try:
                x = _solve_loaded(m, u, eps)
            except np.linalg.LinAlgError as exc:
                raise OptimizerError(f"singular update matrix at element {n}") from exc
        delta = np.real(np.vdot(b, x[:, 0]))
        beta = np.vdot(b, x[:, 1])
        gamma = np.real(np.vdot(d, x[:, 1]))

        if kind == GEO:
            if abs(beta) == 0.0:
                continue
            new = beta / abs(beta)
            ratio_new = abs(1.0 + new * np.conj(beta)) ** 2
            ratio_old = abs(1.0 + th * np.conj(beta)) ** 2
            if ratio_new <= ratio_old:
                continue
        else:
            t = x.conj().T @ x
            cand, d0, n0, q = _har_candidates(delta, beta, gamma, t[0, 0].real, t[1, 1].real, t[1, 0])
            if cand.size == 0:
                continue
            thetas = np.exp(1j * cand)
            gains = _har_gain(thetas, d0, n0, q, t[1, 0])
            best = int(np.argmax(gains))
            if not gains[best] > _har_gain(th, d0, n0, q, t[1, 0]):
                continue
            new = thetas[best]

        h = h + (new - th) * np.outer(b, c_row)
        g = m + new * np.outer(b, d.conj()) + np.conj(new) * np.outer(d, b.conj())
        g = (g + g.conj().T) / 2.0
        theta[n] = new
        if on_update is not None:
            on_update(h)
    return h, g, n_loaded


def _sweep_compiled(kind, h, g, theta, h_re, h_s, c_norm2, order, eps):
    from . import _kernels

    h = np.ascontiguousarray(h)
    g = np.ascontiguousarray(g)
    n_loaded = _kernels.sweep(kind == GEO, h, g, theta, h_re, h_s, c_norm2, order, eps)
    if n_loaded == _kernels.SINGULAR:
        raise OptimizerError("singular update matrix")
    return h, g, n_loaded


def _coordinate_ascent(kind, channels, config, rng):
    h_d, h_re, h_s = channels.stacked()
    n_ris = h_re.shape[1]
    r = h_d.shape[0]

    if isinstance(config.init, str):
        if config.init != "random":
            raise DomainError(f"unknown init {config.init!r}")
        theta = random_phases(rng, n_ris)
    else:
        theta = check_unimodular(config.init, n_ris, "init").copy()

    # normalize so tr(HH^H) / r is about one; phases are scale invariant
    h0 = h_d + (h_re * theta) @ h_s
    scale = np.sqrt(np.real(np.trace(_gram(h0))) / r)
    if not np.isfinite(scale) or scale <= 0:
        raise OptimizerError("channel has zero or non-finite gain")
    h_d = h_d / scale
    h_re = np.ascontiguousarray(h_re / np.sqrt(scale))
    h_s = np.ascontiguousarray(h_s / np.sqrt(scale))

    h = h_d + (h_re * theta) @ h_s
    g = _gram(h)
    c_norm2 = np.sum(np.abs(h_s) ** 2, axis=1)
    eps = config.regularization if config.regularization is not None else 1e-12

    def unscale(val):
        if kind == GEO:
            return val + 2.0 * r * np.log2(scale)
        return val / scale**2

    obj = _objective(kind, g)
    if not np.isfinite(obj):
        # singular start: load the diagonal once and carry on
        obj = _objective(kind, g + eps * np.eye(r))
        if not np.isfinite(obj):
            raise OptimizerError("objective is not finite at the start point")
    history = [unscale(obj)]
    per_update = []
    n_regularized = 0
    converged = False
    sweeps = 0
    order = np.arange(n_ris)
    use_numpy = config.track_updates or config.backend == "numpy"

    def record(h_now):
        per_update.append(unscale(_objective(kind, _gram(h_now))))

    for sweeps in range(1, config.max_sweeps + 1):
        if config.random_order:
            order = rng.permutation(n_ris)
        if use_numpy:
            cb = record if config.track_updates else None
            h, g, loaded = _sweep_numpy(kind, h, g, theta, h_re, h_s, c_norm2, order, eps, cb)
        else:
            h, g, loaded = _sweep_compiled(kind, h, g, theta, h_re, h_s, c_norm2, order, eps)
        n_regularized += loaded

        # refactorize from scratch once per sweep to stop drift
        mod = np.abs(theta)
        drift = np.abs(mod - 1.0) > 1e-14
        theta[drift] /= mod[drift]
        h = h_d + (h_re * theta) @ h_s
        g = _gram(h)
        new_obj = _objective(kind, g)
        if not np.isfinite(new_obj):
            raise OptimizerError("objective became non-finite")
        history.append(unscale(new_obj))
        if abs(new_obj - obj) <= config.rel_tolerance * max(1.0, abs(obj)):
            obj = new_obj
            converged = True
            break
        obj = new_obj

    return theta, OptimizerTrace(history, sweeps, converged, theta.copy(), n_regularized, per_update)


def _check_channels(channels):
    if not isinstance(channels, ChannelSet):
        raise DomainError(f"expected a ChannelSet, got {type(channels).__name__}")
    return channels


def optimize_geo_mean(channels, config=None, rng=None):
    """Maximize ``log2 det(H(theta) H(theta)^H)`` over unimodular ``theta``.

    Returns ``(theta, trace)``; ``trace.objective_per_sweep`` is in bits.
    """
    config = config or OptimizerConfig()
    return _coordinate_ascent(GEO, _check_channels(channels), config, check_rng(rng))


def optimize_har_mean(channels, config=None, rng=None):
    """Minimize ``tr((H(theta) H(theta)^H)^-1)``, i.e. maximize the harmonic mean."""
    config = config or OptimizerConfig()
    return _coordinate_ascent(HAR, _check_channels(channels), config, check_rng(rng))


class _PhaseOptimizer(TransformerMixin, BaseEstimator):
    _kind = None

    def __init__(
        self,
        max_sweeps=100,
        rel_tolerance=1e-6,
        regularization=None,
        init="random",
        random_order=False,
        random_state=None,
    ):
        self.max_sweeps = max_sweeps
        self.rel_tolerance = rel_tolerance
        self.regularization = regularization
        self.init = init
        self.random_order = random_order
        self.random_state = random_state

    def fit(self, X, y=None):
        """Optimize the phases for the channel realization ``X`` (a ChannelSet)."""
        config = OptimizerConfig(
            max_sweeps=self.max_sweeps,
            rel_tolerance=self.rel_tolerance,
            regularization=self.regularization,
            init=self.init,
            random_order=self.random_order,
        )
        rng = check_rng(self.random_state)
        self.theta_, self.trace_ = _coordinate_ascent(self._kind, _check_channels(X), config, rng)
        self.n_sweeps_ = self.trace_.sweeps_run
        self.objective_ = self.trace_.objective_per_sweep[-1]
        return self

    def transform(self, X):
        """Effective channel of ``X`` under the fitted phases."""
        check_is_fitted(self, "theta_")
        return compose_effective(_check_channels(X), self.theta_)


class GeoMeanPhaseOptimizer(_PhaseOptimizer):
    """Coordinate ascent on the geometric mean of the Gram eigenvalues.

    ``score`` returns ``log2 det(HH^H)`` of the transformed channel.
    """

    _kind = GEO

    def score(self, X, y=None):
        return geo_objective(self.transform(X))


class HarMeanPhaseOptimizer(_PhaseOptimizer):
    """Coordinate descent on ``tr((HH^H)^-1)``.

    ``score`` returns the harmonic mean ``r / tr((HH^H)^-1)``.
    """

    _kind = HAR

    def score(self, X, y=None):
        h = self.transform(X)
        return h.shape[0] / har_objective(h)

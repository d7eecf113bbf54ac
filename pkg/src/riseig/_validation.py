"""Input validation helpers and the package's exception types."""

import numpy as np

UNIMODULAR_ATOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class SingularChannelError(np.linalg.LinAlgError):
    """The Gram matrix HH^H is (numerically) singular."""


class OptimizerError(RuntimeError):
    """The phase optimizer could not continue (singular or non-finite state)."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    The last iterate's objective is kept in ``last_value``.
    """

    def __init__(self, message, last_value):
        super().__init__(message)
        self.last_value = last_value


def check_matrix(a, name, shape=None):
    """Return ``a`` as a finite 2-D complex array, optionally checking its shape."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DomainError(f"{name} must be 2-D, got shape {a.shape}")
    if shape is not None:
        for got, want in zip(a.shape, shape):
            if want is not None and got != want:
                raise DomainError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


def check_unimodular(theta, n=None, name="theta"):
    """Return ``theta`` as a complex vector whose entries have unit modulus."""
    theta = np.asarray(theta, dtype=complex).ravel()
    if n is not None and theta.shape[0] != n:
        raise DomainError(f"{name} has length {theta.shape[0]}, expected {n}")
    if theta.size and np.max(np.abs(np.abs(theta) - 1.0)) > UNIMODULAR_ATOL:
        raise DomainError(f"{name} is not unimodular")
    return theta


def check_positive(value, name):
    if not value > 0:
        raise DomainError(f"{name} must be > 0, got {value}")
    return value


def check_rng(seed):
    """Turn ``None``, an int seed or a ``Generator`` into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)

"""Sinusoidal spreading sequences and the user-index <-> frequency map.

User ``n`` of ``N`` spreads its symbols with the length-``M`` sequence
``gamma * exp(i * 2*pi*m*n/N)``, ``m = 0..M-1``, i.e. a constant-modulus
complex tone at angular frequency ``2*pi*n/N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Reduce angles into [0, 2*pi). Guards the rounding case where
    numpy's mod of a tiny negative returns 2*pi itself."""
    wrapped = np.mod(x, TWO_PI)
    return np.where(wrapped >= TWO_PI, 0.0, wrapped) if np.ndim(wrapped) else \
        (0.0 if wrapped >= TWO_PI else float(wrapped))


@dataclass(frozen=True)
class CodebookConfig:
    """Codebook geometry: N assignable tones, sequences of length M < N,
    per-element amplitude gamma > 0."""

    N: int
    M: int
    gamma: float

    def __post_init__(self):
        if not 1 <= self.M < self.N:
            raise InvalidInputError(f"need 1 <= M < N, got M={self.M}, N={self.N}")
        if not self.gamma > 0:
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")


def _check_index(n: int, N: int):
    if not 0 <= int(n) < N:
        raise InvalidInputError(f"user index {n} outside [0, {N})")


def user_frequency(n: int, N: int) -> float:
    """Angular frequency 2*pi*n/N of user n's tone, in [0, 2*pi)."""
    _check_index(n, N)
    return TWO_PI * int(n) / N


def frequency_to_index(omega_hat: float, N: int) -> int:
    """Nearest user index for an estimated angular frequency.

    Rounds N*omega/(2*pi) to the nearest integer and reduces modulo N,
    so any finite omega (negative or beyond 2*pi) maps into [0, N).
    """
    if not np.isfinite(omega_hat):
        raise InvalidInputError(f"frequency must be finite, got {omega_hat}")
    return int(np.rint(N * omega_hat / TWO_PI)) % N


def steering_vector(omega: float, length: int, gamma: float = 1.0) -> np.ndarray:
    """Complex tone gamma * exp(i*omega*m), m = 0..length-1.

    Accepts arbitrary real omega; grid-constrained sequences are the
    special case omega = 2*pi*n/N.
    """
    return gamma * np.exp(1j * omega * np.arange(length))


def steering_matrix(omegas, length: int, gamma: float = 1.0) -> np.ndarray:
    """Stack steering vectors as the columns of a (length, k) matrix."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    m = np.arange(length)[:, None]
    return gamma * np.exp(1j * m * omegas[None, :])


def spreading_sequence(n: int, cfg: CodebookConfig) -> np.ndarray:
    """Length-M spreading sequence of user n; every element has
    magnitude cfg.gamma."""
    return steering_vector(user_frequency(n, cfg.N), cfg.M, cfg.gamma)


def code_matrix(indices, cfg: CodebookConfig) -> np.ndarray:
    """(M, k) matrix whose k-th column is the sequence of indices[k].

    Indices must be distinct; duplicate tones would make every
    downstream least-squares system singular.
    """
    indices = [int(i) for i in indices]
    if len(set(indices)) != len(indices):
        raise InvalidInputError(f"duplicate user indices in {indices}")
    for n in indices:
        _check_index(n, cfg.N)
    omegas = np.array([user_frequency(n, cfg.N) for n in indices])
    return steering_matrix(omegas, cfg.M, cfg.gamma)

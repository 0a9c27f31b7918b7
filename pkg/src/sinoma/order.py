"""Information-criterion model-order selection on the singular spectrum.

The number of active users is the k minimizing
``-log_likelihood(s, k, P) + penalty(k)`` where the likelihood term
compares the geometric and arithmetic means of the trailing scaled
singular values (equal means <=> white residual) and the penalty is
BIC's ``0.5*k*(2l-k)*ln(P)`` or AIC's ``k*(2l-k)``. Natural logarithms
throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# A trailing singular value at or below ZERO_TAIL_REL times the largest
# one is treated as an exact zero when the whole tail sits down there:
# the residual is then a perfect fit and the likelihood term is 0 by
# convention. LAPACK reports the "zero" singular values of an exactly
# rank-deficient matrix at round-off level (~1e-16 * s1, give or take a
# couple of orders), so the cutoff is relative, matching the 1e-10*s1
# rank threshold used elsewhere. Noisy spectra never come near it.
ZERO_TAIL_REL = 1e-10
ZERO_TAIL_ABS = 1e-300


@dataclass(frozen=True)
class OrderSelection:
    """Chosen order plus the full criterion trace for diagnostics."""

    k_hat: int
    scores: np.ndarray
    criterion: str
    k_max: int


def _check_args(s: np.ndarray, k: int, num_cols: int):
    if s.ndim != 1 or s.size < 1:
        raise InvalidInputError("singular values must form a nonempty vector")
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise InvalidInputError("singular values must be nonnegative and descending")
    if not 0 <= k <= s.size - 1:
        raise InvalidInputError(f"order k={k} outside [0, {s.size - 1}]")
    if num_cols <= 0:
        raise InvalidInputError("column count must be positive")


def log_likelihood(s, k: int, num_cols: int) -> float:
    """Gaussian log-likelihood of order k given the singular values.

    Equals ``(l-k) * P * ln(gm/am)`` with gm and am the geometric and
    arithmetic means of ``s_i^2 / P`` over the trailing l-k values, so
    it is always <= 0 and is 0 exactly when the tail is flat.
    """
    s = np.asarray(s, dtype=float)
    _check_args(s, k, num_cols)
    tail = s[k:]
    floor = max(ZERO_TAIL_ABS, ZERO_TAIL_REL * s[0])
    if np.all(tail <= floor):
        return 0.0
    lam = tail * tail / num_cols
    if np.any(lam == 0.0):
        return -np.inf
    return float((s.size - k) * num_cols * (np.mean(np.log(lam)) - np.log(np.mean(lam))))


def bic_penalty(k: int, l: int, num_cols: int) -> float:
    """0.5 * k * (2l - k) * ln(P)."""
    return 0.5 * k * (2 * l - k) * np.log(num_cols)


def aic_penalty(k: int, l: int) -> float:
    """k * (2l - k)."""
    return float(k * (2 * l - k))


def default_k_max(l: int, n_users: int) -> int:
    """Scan bound: generous (half the population, doubled) but always
    leaving at least one trailing singular value."""
    return min(l - 1, 2 * int(np.ceil(0.5 * n_users)))


def estimate_num_active(s, l: int, num_cols: int, criterion: str = "bic",
                        k_max: int | None = None) -> OrderSelection:
    """Minimize the chosen criterion over k = 0..k_max.

    Ties break toward the smaller order.
    """
    s = np.asarray(s, dtype=float)
    if k_max is None:
        k_max = s.size - 1
    if not 0 <= k_max <= s.size - 1:
        raise InvalidInputError(f"k_max={k_max} outside [0, {s.size - 1}]")
    if criterion not in ("bic", "aic"):
        raise InvalidInputError(f"unknown criterion {criterion!r}")
    scores = np.empty(k_max + 1)
    for k in range(k_max + 1):
        penalty = (bic_penalty(k, l, num_cols) if criterion == "bic"
                   else aic_penalty(k, l))
        scores[k] = -log_likelihood(s, k, num_cols) + penalty
    return OrderSelection(int(np.argmin(scores)), scores, criterion, k_max)

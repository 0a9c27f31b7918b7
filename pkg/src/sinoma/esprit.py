"""Shift-invariance (ESPRIT) frequency estimation and index rounding.

The signal subspace of the forward-backward data matrix is spanned by
the leading left singular vectors. Solving the subspace shift equation
in least squares and taking eigenvalue angles yields the active tone
frequencies, which round onto the user-index grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .codes import frequency_to_index, wrap_angle
from .errors import EstimationFailureError, InvalidInputError, RankDeficiencyError
from .linalg import eigenvalues, least_squares, singular_triplets
from .order import default_k_max, estimate_num_active
from .snapshots import SnapshotMatrix, build_data_matrix


@dataclass(frozen=True)
class SubspaceEstimate:
    """Leading left singular vectors (orthonormal columns) and the
    model order they were truncated to."""

    theta: np.ndarray   # (l, k)
    k: int


@dataclass(frozen=True)
class FrequencyEstimate:
    """ESPRIT output: raw eigenvalues, their angles, and the sorted,
    deduplicated user indices after grid rounding.

    ``index_omegas[i]`` is the continuous frequency (first occurrence)
    that rounded to ``indices[i]``; it seeds the optional ML refinement.
    """

    omegas: np.ndarray        # (k,) angles in [0, 2*pi)
    indices: np.ndarray       # sorted distinct ints
    raw_eigs: np.ndarray      # (k,) complex
    index_omegas: np.ndarray  # aligned with indices

    @property
    def num_detected(self) -> int:
        return int(self.indices.size)


def signal_subspace(snap: SnapshotMatrix, k: int) -> SubspaceEstimate:
    """First k left singular vectors of the data matrix."""
    if not 1 <= k < snap.l:
        raise InvalidInputError(f"need 1 <= k < l, got k={k}, l={snap.l}")
    u, _ = singular_triplets(snap.s_bar)
    return SubspaceEstimate(u[:, :k], k)


def esprit_frequencies(sub: SubspaceEstimate) -> tuple[np.ndarray, np.ndarray]:
    """Angular frequencies from the shift equation of the subspace.

    Returns (omegas in [0, 2*pi), raw eigenvalues). A rank-deficient
    shift system surfaces as EstimationFailureError; the caller treats
    the trial as a total miss.
    """
    if sub.k == 0:
        return np.empty(0), np.empty(0, dtype=np.complex128)
    theta = sub.theta
    if theta.shape[0] < sub.k + 1:
        raise InvalidInputError("subspace too short for the shift equation")
    try:
        q = least_squares(theta[:-1, :], theta[1:, :])
    except RankDeficiencyError as exc:
        raise EstimationFailureError(f"shifted subspace is rank deficient: {exc}") from exc
    eigs = eigenvalues(q)
    omegas = np.atleast_1d(wrap_angle(np.angle(eigs)))
    return omegas, eigs


def round_to_indices(omegas: np.ndarray, n_users: int) -> tuple[np.ndarray, np.ndarray]:
    """Round frequencies onto the index grid, dropping duplicates.

    When two estimates round to the same index the first one is kept.
    Returns (sorted indices, representative omega per index).
    """
    seen: dict[int, float] = {}
    for w in np.atleast_1d(omegas):
        idx = frequency_to_index(float(w), n_users)
        if idx not in seen:
            seen[idx] = float(w)
    indices = np.array(sorted(seen), dtype=np.int64)
    rep = np.array([seen[i] for i in indices], dtype=float)
    return indices, rep


def detect_users(signal, cfg, timings: Optional[dict] = None) -> FrequencyEstimate:
    """Full detection pipeline on a received matrix.

    Data matrix -> SVD -> order selection -> subspace -> shift
    eigenvalues -> grid rounding. An empty result is valid. When a
    dict is passed as ``timings`` it receives per-stage wall times
    under keys 'snapshot_svd', 'order' and 'esprit'.
    """
    from time import perf_counter

    t0 = perf_counter()
    snap = build_data_matrix(signal, cfg.snapshot_len)
    u, s = singular_triplets(snap.s_bar)
    t1 = perf_counter()
    selection = estimate_num_active(
        s, snap.l, snap.num_columns, cfg.criterion,
        k_max=default_k_max(snap.l, cfg.N),
    )
    t2 = perf_counter()
    k = selection.k_hat
    if k == 0:
        omegas = np.empty(0)
        eigs = np.empty(0, dtype=np.complex128)
    else:
        omegas, eigs = esprit_frequencies(SubspaceEstimate(u[:, :k], k))
    indices, rep = round_to_indices(omegas, cfg.N)
    t3 = perf_counter()
    if timings is not None:
        timings["snapshot_svd"] = t1 - t0
        timings["order"] = t2 - t1
        timings["esprit"] = t3 - t2
    return FrequencyEstimate(omegas, indices, eigs, rep)

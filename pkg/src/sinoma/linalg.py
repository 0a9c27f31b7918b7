"""Dense complex linear-algebra primitives used by the receiver.

All three operations delegate to LAPACK through numpy but are wrapped
behind fixed contracts: validated inputs, deterministic output for a
given input, and typed errors. Matrices are ``complex128`` ndarrays in
row-major (C) order; vectors are 1-D ndarrays.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, RankDeficiencyError

# Relative threshold below which the smallest singular value of a
# least-squares coefficient matrix is treated as a rank deficiency.
RANK_TOL = 1e-10


def _as_complex_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def singular_triplets(a) -> tuple[np.ndarray, np.ndarray]:
    """Left singular vectors and singular values of a wide matrix.

    Parameters
    ----------
    a : (m, n) complex array with n >= m.

    Returns
    -------
    u : (m, m) array with orthonormal columns, ordered by descending
        singular value.
    s : (m,) nonnegative array, descending.

    The right singular vectors are discarded; callers only need the
    column space and the spectrum.
    """
    a = _as_complex_matrix(a, "a")
    m, n = a.shape
    if n < m:
        raise InvalidInputError(f"need at least as many columns as rows, got {m}x{n}")
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    return u, s


def eigenvalues(q) -> np.ndarray:
    """Eigenvalues of a square matrix, in no particular order."""
    q = _as_complex_matrix(q, "q")
    if q.shape[0] != q.shape[1]:
        raise InvalidInputError(f"matrix must be square, got {q.shape}")
    return np.linalg.eigvals(q)


def least_squares(a, b) -> np.ndarray:
    """Minimize ||a @ x - b||_F for a full-column-rank tall matrix.

    Solves through the SVD of ``a``. Raises ``RankDeficiencyError``
    when the smallest singular value is below ``RANK_TOL`` times the
    largest, carrying the condition estimate.

    ``b`` may be a vector or a matrix; the result has matching shape.
    """
    a = _as_complex_matrix(a, "a")
    b_arr = np.asarray(b, dtype=np.complex128)
    vector_rhs = b_arr.ndim == 1
    if vector_rhs:
        b_arr = b_arr[:, None]
    b_arr = _as_complex_matrix(b_arr, "b")
    m, n = a.shape
    if m < n:
        raise InvalidInputError(f"system must be square or tall, got {m}x{n}")
    if b_arr.shape[0] != m:
        raise InvalidInputError(f"rhs has {b_arr.shape[0]} rows, expected {m}")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOL * s[0]:
        cond = np.inf if s[-1] == 0.0 else float(s[0] / s[-1])
        raise RankDeficiencyError(
            f"coefficient matrix is rank deficient (cond ~ {cond:.3e})", cond
        )
    x = vh.conj().T @ ((u.conj().T @ b_arr) / s[:, None])
    return x[:, 0] if vector_rhs else x

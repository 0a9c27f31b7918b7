"""Gaussian ML refinement of tone frequencies by variable projection.

Eliminating the linear gains from ||Y - Phi(omega) X||_F^2 leaves the
projected-residual cost in the frequencies alone. A damped Gauss-Newton
iteration with Kaufman's Jacobian approximation polishes the subspace
estimates; thanks to the variable-projection structure, the gradient
derived from that approximate Jacobian is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import steering_matrix
from .errors import RankDeficiencyError
from .linalg import least_squares

# Residuals at or below this fraction of the data energy mean the model
# interpolates the data (noise-free case); iterating further would only
# chase round-off.
PERFECT_FIT_REL = 1e-16


@dataclass(frozen=True)
class RefineOptions:
    """Iteration controls. The default tolerance stops once an accepted
    step improves the cost by less than one part in 1e8, which is the
    point where the subspace-initialized iteration settles (typically
    its third step; tighter tolerances only buy round-off-level digits
    at the price of an extra iteration or two)."""

    max_iters: int = 10
    cost_tol: float = 1e-8       # relative decrease counted as converged
    step_damping: float = 1e-3   # initial Levenberg-Marquardt damping
    enabled: bool = True
    max_backoffs: int = 5


@dataclass
class RefineResult:
    omegas: np.ndarray
    cost_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def final_cost(self) -> float:
        return self.cost_trace[-1]


def _signal_matrix(signal) -> np.ndarray:
    return np.asarray(getattr(signal, "y", signal), dtype=np.complex128)


def _fit(omegas: np.ndarray, y: np.ndarray, gamma: float):
    """Least-squares gains and residual for the given frequencies."""
    phi = steering_matrix(omegas, y.shape[0], gamma)
    if phi.shape[1] == 0:
        return phi, np.zeros((0, y.shape[1]), dtype=np.complex128), y.copy()
    x = least_squares(phi, y)
    return phi, x, y - phi @ x


def varpro_cost(omegas, signal, gamma: float) -> float:
    """Squared Frobenius residual of Y projected off span(Phi(omegas)).

    Equals min over X of ||Y - Phi X||_F^2; with no frequencies it is
    the full data energy. Rank-deficient Phi raises
    RankDeficiencyError.
    """
    y = _signal_matrix(signal)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    _, _, r = _fit(omegas, y, gamma)
    return float(np.sum(np.abs(r) ** 2))


def _projected_derivatives(phi, x, y_rows: int):
    """Columns of dPhi/domega_k projected off span(Phi)."""
    m = np.arange(y_rows)[:, None]
    dphi = 1j * m * phi
    return dphi - phi @ least_squares(phi, dphi)


def varpro_gradient(omegas, signal, gamma: float) -> np.ndarray:
    """Exact gradient of varpro_cost with respect to each frequency."""
    y = _signal_matrix(signal)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if omegas.size == 0:
        return np.empty(0)
    phi, x, r = _fit(omegas, y, gamma)
    u = _projected_derivatives(phi, x, y.shape[0])
    # d r / d omega_k = -(P_perp dphi_k) x[k, :]
    return -2.0 * np.real(np.sum((u.conj().T @ r) * x.conj(), axis=1))


def refine_ml(omega_init, signal, gamma: float,
              opts: RefineOptions = RefineOptions()) -> RefineResult:
    """Damped Gauss-Newton descent on the variable-projection cost.

    A step is accepted only if the cost strictly decreases; otherwise
    the damping grows tenfold and the step is retried, up to
    ``opts.max_backoffs`` times, after which the best point so far is
    returned with ``converged=False``. An accepted step whose relative
    decrease falls below ``opts.cost_tol`` terminates with
    ``converged=True``. ``iterations`` counts accepted steps.
    """
    y = _signal_matrix(signal)
    omegas = np.atleast_1d(np.asarray(omega_init, dtype=float)).copy()
    energy = float(np.sum(np.abs(y) ** 2))
    result = RefineResult(omegas)
    if omegas.size == 0:
        result.cost_trace.append(energy)
        result.converged = True
        return result

    phi, x, r = _fit(omegas, y, gamma)
    cost = float(np.sum(np.abs(r) ** 2))
    result.cost_trace.append(cost)
    if cost <= PERFECT_FIT_REL * energy:
        result.converged = True
        return result

    damping = opts.step_damping
    for _ in range(opts.max_iters):
        u = _projected_derivatives(phi, x, y.shape[0])
        proj = u.conj().T @ r                       # (k, J)
        grad = -2.0 * np.real(np.sum(proj * x.conj(), axis=1))
        # Gauss-Newton normal matrix of the real parameters: the
        # complex Jacobian column for omega_k is -vec(u_k x[k, :]).
        gram = np.real((u.conj().T @ u) * (x @ x.conj().T).T)
        diag = np.diag(gram).copy()
        diag[diag <= 0] = 1.0

        accepted = False
        for _backoff in range(opts.max_backoffs + 1):
            try:
                delta = np.linalg.solve(gram + damping * np.diag(diag), -0.5 * grad)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            candidate = omegas + delta
            try:
                phi_c, x_c, r_c = _fit(candidate, y, gamma)
            except RankDeficiencyError:
                damping *= 10.0
                continue
            cost_c = float(np.sum(np.abs(r_c) ** 2))
            if cost_c < cost:
                accepted = True
                break
            damping *= 10.0
        if not accepted:
            break

        rel_drop = (cost - cost_c) / cost if cost > 0 else 0.0
        omegas, phi, x, r, cost = candidate, phi_c, x_c, r_c, cost_c
        result.iterations += 1
        result.cost_trace.append(cost)
        damping = max(damping / 10.0, 1e-15)
        if cost <= PERFECT_FIT_REL * energy or rel_drop < opts.cost_tol:
            result.converged = True
            break

    result.omegas = omegas
    return result

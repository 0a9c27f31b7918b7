"""Per-user channel estimation, PSK data detection and reliability.

Given the detected indices, the gain matrix estimate is the least
squares fit of the code matrix to Y. Each row then yields, via its
entrywise natural logarithm, the channel log-magnitude (real parts
averaged over frames) and the constellation-stripped phase (circular
mean of L times the angles). The pilot frame anchors which of the L
phase candidates is the channel's, after which symbols decode by
nearest constellation point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .codes import TWO_PI, code_matrix, wrap_angle
from .errors import DegenerateGainError, InvalidInputError, PhaseAmbiguousError
from .linalg import least_squares

ERASED = -1  # sentinel symbol decision for an exactly-zero gain entry


@dataclass(frozen=True)
class GainMatrix:
    """Estimated gain matrix; row n belongs to sorted detected index
    indices[n]."""

    upsilon_hat: np.ndarray   # (|detected|, J)
    indices: np.ndarray


@dataclass(frozen=True)
class UserEstimate:
    """Everything the receiver reports about one detected user."""

    index: int
    mu: float                 # mean log-magnitude, estimates ln|h|
    zeta_bar: float           # estimate of mod(L*zeta, 2*pi)
    zeta_hat: float           # resolved channel phase in [0, 2*pi)
    h_hat: complex
    symbols_hat: np.ndarray   # decisions for frames 2..J; ERASED marks a zero entry
    eta: float                # spread statistic used by the reliability gate
    reliable: bool
    failure: Optional[str] = None   # 'degenerate-gain' | 'phase-ambiguous'


def reliability_threshold(L: int) -> float:
    """Gate level 5/sin(pi/L): cluster separation must beat five
    standard deviations of the estimation spread."""
    return 5.0 / np.sin(np.pi / L)


def estimate_gains(indices, signal, cfg) -> GainMatrix:
    """Least-squares gain recovery over the detected code matrix."""
    y = np.asarray(getattr(signal, "y", signal), dtype=np.complex128)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        return GainMatrix(np.zeros((0, y.shape[1]), dtype=np.complex128), indices)
    if indices.size > cfg.M:
        raise InvalidInputError(
            f"{indices.size} detected users exceed the {cfg.M} available resources"
        )
    phi = code_matrix(indices, cfg.codebook())
    return GainMatrix(least_squares(phi, y), indices)


def log_magnitude(row) -> float:
    """Mean of Re ln over the row, i.e. the average log-magnitude."""
    row = np.asarray(row, dtype=np.complex128)
    mags = np.abs(row)
    if np.any(mags == 0.0):
        raise DegenerateGainError("gain row contains an exact zero")
    return float(np.mean(np.log(mags)))


def log_spread(row, mu: float) -> float:
    """Standard deviation of Re ln around mu (population convention)."""
    mags = np.abs(np.asarray(row, dtype=np.complex128))
    if np.any(mags == 0.0):
        raise DegenerateGainError("gain row contains an exact zero")
    return float(np.sqrt(np.mean((np.log(mags) - mu) ** 2)))


def phase_base(row, L: int) -> float:
    """Circular mean of the per-frame values mod(L * angle, 2*pi).

    Computed as the angle of the mean of (row/|row|)^L, which handles
    the 0/2*pi wrap that a plain arithmetic average of modular values
    would break on.
    """
    row = np.asarray(row, dtype=np.complex128)
    mags = np.abs(row)
    if np.any(mags == 0.0):
        raise DegenerateGainError("gain row contains an exact zero")
    resultant = np.mean((row / mags) ** L)
    if np.abs(resultant) < 1e-12:
        raise PhaseAmbiguousError("circular resultant vanishes; phase undetermined")
    return wrap_angle(np.angle(resultant))


def resolve_phase(zeta_bar: float, pilot_gain: complex, L: int) -> float:
    """Pick the channel phase among the L candidates (zeta_bar + 2*pi*k)/L.

    The pilot frame carries the unrotated channel, so the candidate
    direction closest to pilot_gain/|pilot_gain| wins; ties break
    toward smaller k.
    """
    pilot_gain = complex(pilot_gain)
    if pilot_gain == 0:
        raise PhaseAmbiguousError("zero pilot gain; phase undetermined")
    candidates = (zeta_bar + TWO_PI * np.arange(L)) / L
    pilot_dir = pilot_gain / abs(pilot_gain)
    k = int(np.argmin(np.abs(np.exp(1j * candidates) - pilot_dir)))
    return float(candidates[k])


def detect_symbols(row, zeta_hat: float, L: int) -> np.ndarray:
    """Nearest-constellation-point decisions for frames 2..J.

    Each data-frame entry is normalized to the unit circle, derotated
    by the channel phase and matched against the L PSK points; ties
    break toward the smaller alphabet index. An exactly-zero entry
    yields ERASED.
    """
    row = np.asarray(row, dtype=np.complex128)
    points = np.exp(2j * np.pi * np.arange(L) / L)
    out = np.empty(max(row.size - 1, 0), dtype=np.int64)
    for j, z in enumerate(row[1:]):
        if z == 0:
            out[j] = ERASED
            continue
        out[j] = int(np.argmin(np.abs(z / abs(z) * np.exp(-1j * zeta_hat) - points)))
    return out


def reliability(row, mu: float, L: int, lambda_override: Optional[float] = None,
                mode: str = "literal_log") -> tuple[float, bool]:
    """Spread statistic and the reliable/unreliable verdict.

    literal_log compares the mean log-magnitude against the spread of
    the log-magnitudes (mu/eta > lambda). linear compares the mean
    magnitude against the magnitude spread, which is the ratio the
    cluster-separation argument actually bounds. A zero spread means a
    perfect fit and counts as reliable.
    """
    lam = reliability_threshold(L) if lambda_override is None else lambda_override
    row = np.asarray(row, dtype=np.complex128)
    if mode == "literal_log":
        eta = log_spread(row, mu)
        level = mu
    elif mode == "linear":
        mags = np.abs(row)
        eta = float(np.std(mags))
        level = float(np.mean(mags))
    else:
        raise InvalidInputError(f"unknown reliability mode {mode!r}")
    if eta == 0.0:
        return eta, True
    return eta, bool(level / eta > lam)


def estimate_user(index: int, row, L: int, mode: str = "linear",
                  lambda_override: Optional[float] = None) -> UserEstimate:
    """Full per-user chain: log stats, phase anchoring, symbols, gate.

    Degenerate rows (an exact zero entry, or an unanchorable phase)
    come back flagged unreliable with every symbol erased instead of
    raising.
    """
    row = np.asarray(row, dtype=np.complex128)
    erased = np.full(max(row.size - 1, 0), ERASED, dtype=np.int64)
    try:
        mu = log_magnitude(row)
        zeta_bar = phase_base(row, L)
        zeta_hat = resolve_phase(zeta_bar, row[0], L)
    except DegenerateGainError:
        return UserEstimate(index, np.nan, np.nan, np.nan, 0j, erased,
                            np.inf, False, "degenerate-gain")
    except PhaseAmbiguousError:
        return UserEstimate(index, np.nan, np.nan, np.nan, 0j, erased,
                            np.inf, False, "phase-ambiguous")
    symbols = detect_symbols(row, zeta_hat, L)
    eta, reliable = reliability(row, mu, L, lambda_override, mode)
    h_hat = np.exp(mu) * np.exp(1j * zeta_hat)
    return UserEstimate(index, mu, zeta_bar, zeta_hat, complex(h_hat),
                        symbols, eta, reliable)

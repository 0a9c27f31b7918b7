"""Random-access scenario synthesis: deployment, activity, fading, noise.

One "opportunity" is J frames received on M shared resources from a
random subset of N users. The generator is fully counter-seeded: every
random draw comes from a stream derived from ``(cfg.seed, *tags)``, so
trials are reproducible and may be generated concurrently in any order.

Stream derivation: ``seed_sequence(seed, *tags)`` feeds the integer
seed plus a stable 64-bit hash of each tag into ``numpy.random
.SeedSequence``; the per-opportunity sequence is then split into three
child streams used, in order, for UE placement, activity/channels/
symbols, and receiver noise.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .codes import CodebookConfig, code_matrix
from .errors import InvalidInputError
from .snapshots import default_snapshot_len

DATASET_VERSION = "noma-dataset/1"

CRITERIA = ("bic", "aic")
POWER_MAPPINGS = ("per_symbol_total", "per_element")
RELIABILITY_MODES = ("linear", "literal_log")


@dataclass(frozen=True)
class SystemConfig:
    """Network and receiver parameters for one simulation setup.

    Defaults follow the reference mMTC setup: 128 users on 64 shared
    resources, 9 frames per opportunity (first one pilot), QPSK, 10%
    activation, 20 dBm uplink power, NLOS path loss inside a 200 m
    cell, -170 dBm/Hz receiver noise over 1 MHz.
    """

    N: int = 128
    M: int = 64
    J: int = 9
    L: int = 4
    p_a: float = 0.1
    tx_power_dbm: float = 20.0
    cell_radius_m: float = 200.0
    min_dist_m: float = 1.0
    noise_psd_dbm_hz: float = -170.0
    bandwidth_hz: float = 1e6
    l: Optional[int] = None          # snapshot length; None -> per-M default
    criterion: str = "bic"
    refine: bool = False             # run the ML frequency refinement
    power_mapping: str = "per_symbol_total"
    seed: int = 0
    num_active: Optional[int] = None  # fixed |active set| for controlled tests
    noiseless: bool = False           # force sigma^2 = 0 (test hook)
    reliability_mode: str = "linear"

    def __post_init__(self):
        if self.N < 2 or not 1 <= self.M < self.N:
            raise InvalidInputError(f"need 1 <= M < N, got M={self.M}, N={self.N}")
        if self.J < 2:
            raise InvalidInputError(f"need J >= 2, got {self.J}")
        if self.L < 2:
            raise InvalidInputError(f"need L >= 2, got {self.L}")
        if not 0.0 <= self.p_a <= 1.0:
            raise InvalidInputError(f"need 0 <= p_a <= 1, got {self.p_a}")
        if not 0 < self.min_dist_m < self.cell_radius_m:
            raise InvalidInputError("need 0 < min_dist_m < cell_radius_m")
        if self.bandwidth_hz <= 0:
            raise InvalidInputError("bandwidth must be positive")
        if self.l is not None and not 1 < self.l < self.M:
            raise InvalidInputError(f"need 1 < l < M, got l={self.l}, M={self.M}")
        if self.criterion not in CRITERIA:
            raise InvalidInputError(f"criterion must be one of {CRITERIA}")
        if self.power_mapping not in POWER_MAPPINGS:
            raise InvalidInputError(f"power_mapping must be one of {POWER_MAPPINGS}")
        if self.reliability_mode not in RELIABILITY_MODES:
            raise InvalidInputError(f"reliability_mode must be one of {RELIABILITY_MODES}")
        if self.num_active is not None and not 0 <= self.num_active <= self.N:
            raise InvalidInputError(f"num_active outside [0, {self.N}]")

    @property
    def snapshot_len(self) -> int:
        return self.l if self.l is not None else default_snapshot_len(self.M)

    @property
    def tx_power_linear(self) -> float:
        """Configured transmit power in watts."""
        return 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)

    @property
    def gamma(self) -> float:
        """Per-element sequence amplitude implied by the power mapping.

        per_symbol_total: the energy of one spread symbol summed over
        all M resources equals the configured power (gamma^2 = P/M).
        per_element: each resource element carries the configured
        power (gamma^2 = P).
        """
        p = self.tx_power_linear
        return float(np.sqrt(p / self.M if self.power_mapping == "per_symbol_total" else p))

    @property
    def noise_var(self) -> float:
        if self.noiseless:
            return 0.0
        return noise_variance(self.noise_psd_dbm_hz, self.bandwidth_hz)

    def codebook(self) -> CodebookConfig:
        return CodebookConfig(self.N, self.M, self.gamma)

    def with_overrides(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class GroundTruth:
    """Latent state of one opportunity.

    ``symbols`` holds PSK alphabet indices, one row per active user;
    column 0 is the pilot frame and is identically zero.
    """

    distances_km: np.ndarray
    variances: np.ndarray
    active_set: np.ndarray        # sorted, distinct indices in [0, N)
    channels: np.ndarray          # complex gain per active user
    symbols: np.ndarray           # (|active|, J) ints in [0, L)


@dataclass(frozen=True)
class ReceivedSignal:
    """M x J received matrix plus the (simulator-side) noise variance.

    The receiver never reads ``noise_variance``; it exists for energy
    accounting in tests and metrics.
    """

    y: np.ndarray
    noise_variance: float


# --------------------------------------------------------------------------
# deterministic stream derivation


def _tag_to_int(tag) -> int:
    if isinstance(tag, (bool, np.bool_)):
        return int(tag)
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(repr(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def seed_sequence(seed: int, *tags) -> np.random.SeedSequence:
    """Deterministic SeedSequence for (seed, *tags).

    Integer tags enter the entropy pool directly; any other tag is
    hashed via sha256 of its repr, so strings and floats are stable
    across processes and runs.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return np.random.SeedSequence(entropy)


def rng_for(seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *tags))


# --------------------------------------------------------------------------
# physical-layer pieces


def path_loss_variance(d_km: float) -> float:
    """Linear channel-gain variance for the 3GPP NLOS model at d_km."""
    d_km = np.asarray(d_km, dtype=float)
    if np.any(d_km <= 0):
        raise InvalidInputError("distance must be positive")
    tau_db = -128.1 - 36.7 * np.log10(d_km)
    return 10.0 ** (tau_db / 10.0)


def noise_variance(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Noise variance in watts per complex sample for a flat PSD."""
    if bandwidth_hz <= 0:
        raise InvalidInputError("bandwidth must be positive")
    return 10.0 ** ((psd_dbm_hz + 10.0 * np.log10(bandwidth_hz) - 30.0) / 10.0)


def place_users(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Distances (km) of N users dropped uniformly over the annulus
    between min_dist_m and cell_radius_m (uniform in area, so r^2 is
    uniform on [r_min^2, R^2])."""
    r0 = cfg.min_dist_m / 1000.0
    r1 = cfg.cell_radius_m / 1000.0
    u = rng.uniform(size=cfg.N)
    return np.sqrt(u * (r1 * r1 - r0 * r0) + r0 * r0)


def sample_truth(cfg: SystemConfig, distances_km: np.ndarray,
                 rng: np.random.Generator) -> GroundTruth:
    """Draw activity, flat Rayleigh channels and PSK symbols.

    Each user is active independently with probability p_a unless
    cfg.num_active pins the cardinality, in which case that many users
    are drawn uniformly without replacement. An empty active set is a
    valid outcome.
    """
    variances = path_loss_variance(distances_km)
    if cfg.num_active is None:
        active = np.flatnonzero(rng.uniform(size=cfg.N) < cfg.p_a)
    else:
        active = np.sort(rng.choice(cfg.N, size=cfg.num_active, replace=False))
    k = active.size
    tau = variances[active]
    channels = np.sqrt(tau / 2.0) * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
    symbols = np.zeros((k, cfg.J), dtype=np.int64)
    if cfg.J > 1:
        symbols[:, 1:] = rng.integers(0, cfg.L, size=(k, cfg.J - 1))
    return GroundTruth(distances_km, variances, active, channels, symbols)


def gain_matrix_of(truth: GroundTruth, L: int) -> np.ndarray:
    """Noise-free gain matrix: row n is h_n times the unit-modulus PSK
    symbols of active user n."""
    return truth.channels[:, None] * np.exp(2j * np.pi * truth.symbols / L)


def synthesize(cfg: SystemConfig, truth: GroundTruth,
               rng: np.random.Generator) -> ReceivedSignal:
    """Received matrix Y = Phi @ Upsilon + W.

    W is i.i.d. circular complex Gaussian with per-entry variance
    cfg.noise_var (real and imaginary parts each carry half).
    """
    phi = code_matrix(truth.active_set, cfg.codebook())
    upsilon = gain_matrix_of(truth, cfg.L)
    y = phi @ upsilon if truth.active_set.size else np.zeros((cfg.M, cfg.J), dtype=np.complex128)
    sigma2 = cfg.noise_var
    if sigma2 > 0.0:
        w = rng.standard_normal((cfg.M, cfg.J)) + 1j * rng.standard_normal((cfg.M, cfg.J))
        y = y + np.sqrt(sigma2 / 2.0) * w
    return ReceivedSignal(y, sigma2)


def generate_opportunity(cfg: SystemConfig, *tags) -> tuple[GroundTruth, ReceivedSignal]:
    """Generate one complete opportunity from cfg.seed and trial tags.

    The derived stream is split into placement / truth / noise
    children so the three stages stay independent and reorderable.
    """
    children = seed_sequence(cfg.seed, *tags).spawn(3)
    place_rng, truth_rng, noise_rng = (np.random.default_rng(c) for c in children)
    distances = place_users(cfg, place_rng)
    truth = sample_truth(cfg, distances, truth_rng)
    signal = synthesize(cfg, truth, noise_rng)
    return truth, signal


# --------------------------------------------------------------------------
# dataset container (version "noma-dataset/1")


def _complex_pairs(a: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in np.asarray(a).ravel()]


def _from_pairs(pairs, shape):
    flat = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return flat.reshape(shape)


def save_dataset(path, cfg: SystemConfig, truth: GroundTruth, signal: ReceivedSignal):
    """Write one opportunity as a self-describing JSON container.

    Complex entries are stored as [re, im] pairs in row-major order
    with explicit dimensions; rewriting the same scenario yields a
    byte-identical file.
    """
    k = int(truth.active_set.size)
    doc = {
        "version": DATASET_VERSION,
        "config": asdict(cfg),
        "truth": {
            "distances_km": [float(d) for d in truth.distances_km],
            "variances": [float(v) for v in truth.variances],
            "active_set": [int(i) for i in truth.active_set],
            "channels": _complex_pairs(truth.channels),
            "symbols": [[int(q) for q in row] for row in truth.symbols],
        },
        "y": {
            "rows": int(signal.y.shape[0]),
            "cols": int(signal.y.shape[1]),
            "entries": _complex_pairs(signal.y),
        },
        "noise_variance": float(signal.noise_variance),
        "num_active": k,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_dataset(path) -> tuple[SystemConfig, GroundTruth, ReceivedSignal]:
    """Read a noma-dataset/1 file back into typed objects."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"unreadable dataset file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != DATASET_VERSION:
        raise InvalidInputError(
            f"expected dataset version {DATASET_VERSION!r}, got {doc.get('version')!r}"
        )
    try:
        cfg = SystemConfig(**doc["config"])
        t = doc["truth"]
        k = len(t["active_set"])
        truth = GroundTruth(
            distances_km=np.array(t["distances_km"], dtype=float),
            variances=np.array(t["variances"], dtype=float),
            active_set=np.array(t["active_set"], dtype=np.int64),
            channels=_from_pairs(t["channels"], (k,)),
            symbols=np.array(t["symbols"], dtype=np.int64).reshape(k, cfg.J),
        )
        yblock = doc["y"]
        y = _from_pairs(yblock["entries"], (yblock["rows"], yblock["cols"]))
        signal = ReceivedSignal(y, float(doc["noise_variance"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed dataset file: {exc}") from exc
    return cfg, truth, signal

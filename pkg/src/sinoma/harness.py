"""Seeded Monte-Carlo harness: trials, metrics, parameter sweeps.

Every trial derives its own random streams from
``(cfg.seed, 'sweep', axis, repr(value), trial_index)`` so results are
bit-identical no matter how trials are scheduled or parallelized.
Aggregation pools counts (missed users over active users, symbol
errors over symbols, ...) across trials before forming rates.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import esprit, estimator, varpro
from .errors import EstimationFailureError, InvalidInputError, RankDeficiencyError
from .scenario import GroundTruth, ReceivedSignal, SystemConfig, generate_opportunity

SWEEP_AXES = ("M", "tx_power_dbm", "p_a")

RESULTS_COLUMNS = (
    "axis", "value", "trials", "mdr", "far", "nser_strict",
    "nser_detected_only", "rmse_ce", "unreliable_frac", "mean_runtime_s",
)


@dataclass
class ReceiverOutput:
    """Receiver-side products of one opportunity."""

    detected: np.ndarray                      # sorted distinct indices
    frequencies: esprit.FrequencyEstimate
    gains: estimator.GainMatrix
    users: list                               # UserEstimate per detected index
    timings: dict
    refine: Optional[varpro.RefineResult] = None

    @property
    def receiver_time(self) -> float:
        return float(sum(self.timings.values()))


@dataclass
class TrialResult:
    truth: GroundTruth
    output: ReceiverOutput

    @property
    def detected(self) -> np.ndarray:
        return self.output.detected


# --------------------------------------------------------------------------
# receiver pipeline


def run_receiver(signal, cfg: SystemConfig) -> ReceiverOutput:
    """Detection, optional ML refinement, gain and per-user estimation.

    An estimation failure inside the subspace stage degrades to an
    empty detection instead of raising.
    """
    timings: dict = {}
    try:
        freq = esprit.detect_users(signal, cfg, timings=timings)
    except EstimationFailureError:
        freq = esprit.FrequencyEstimate(np.empty(0), np.empty(0, dtype=np.int64),
                                        np.empty(0, dtype=np.complex128), np.empty(0))
        timings.setdefault("snapshot_svd", 0.0)
        timings.setdefault("order", 0.0)
        timings.setdefault("esprit", 0.0)
    refine_result = None
    indices = freq.indices
    t0 = time.perf_counter()
    if cfg.refine and freq.index_omegas.size:
        refine_result = varpro.refine_ml(freq.index_omegas, signal, cfg.gamma)
        indices, _ = esprit.round_to_indices(refine_result.omegas, cfg.N)
    timings["varpro"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        gains = estimator.estimate_gains(indices, signal, cfg)
    except RankDeficiencyError:
        # Refinement pushed two tones onto dependent columns; fall back
        # to the unrefined index set, which is always well separated.
        indices = freq.indices
        gains = estimator.estimate_gains(indices, signal, cfg)
    users = [
        estimator.estimate_user(int(idx), gains.upsilon_hat[i], cfg.L,
                                mode=cfg.reliability_mode)
        for i, idx in enumerate(indices)
    ]
    timings["estimation"] = time.perf_counter() - t0
    return ReceiverOutput(np.asarray(indices, dtype=np.int64), freq, gains,
                          users, timings, refine_result)


def run_trial(cfg: SystemConfig, *trial_tags) -> TrialResult:
    """Synthesize one opportunity and run the receiver on it."""
    truth, signal = generate_opportunity(cfg, *trial_tags)
    return TrialResult(truth, run_receiver(signal, cfg))


# --------------------------------------------------------------------------
# per-trial metrics


def mdr(active_set, detected) -> float:
    """Fraction of active users the receiver failed to report."""
    active = set(int(i) for i in np.atleast_1d(active_set))
    if not active:
        return 0.0
    found = set(int(i) for i in np.atleast_1d(detected))
    return len(active - found) / len(active)


def false_alarm_rate(active_set, detected, n_users: int) -> float:
    """Fraction of inactive users falsely reported."""
    active = set(int(i) for i in np.atleast_1d(active_set))
    inactive = n_users - len(active)
    if inactive <= 0:
        return 0.0
    found = set(int(i) for i in np.atleast_1d(detected))
    return len(found - active) / inactive


def _symbol_errors(truth: GroundTruth, results) -> tuple[int, int, int]:
    """(errors over detected true-active users, their symbol count,
    missed-user count). ``results`` maps index -> UserEstimate."""
    j_data = truth.symbols.shape[1] - 1
    errors = scored = missed = 0
    for pos, idx in enumerate(truth.active_set):
        est = results.get(int(idx))
        if est is None:
            missed += 1
            continue
        scored += j_data
        errors += int(np.sum(est.symbols_hat != truth.symbols[pos, 1:]))
    return errors, scored, missed


def nser(truth: GroundTruth, results, mode: str = "strict") -> float:
    """Net symbol error rate over the data frames.

    strict charges every symbol of a missed active user as an error
    and normalizes by all active users' symbols; detected_only scores
    only the detected true-active users. Both are 0 when nothing is
    scorable. Falsely detected users never enter either variant.
    """
    errors, scored, missed = _symbol_errors(truth, results)
    j_data = truth.symbols.shape[1] - 1
    if mode == "strict":
        denom = truth.active_set.size * j_data
        return (errors + missed * j_data) / denom if denom else 0.0
    if mode == "detected_only":
        return errors / scored if scored else 0.0
    raise InvalidInputError(f"unknown NSER mode {mode!r}")


def rmse_ce(truth: GroundTruth, results) -> float:
    """RMS channel-estimation error over correctly detected users."""
    sq = count = 0
    for pos, idx in enumerate(truth.active_set):
        est = results.get(int(idx))
        if est is not None:
            sq += abs(est.h_hat - truth.channels[pos]) ** 2
            count += 1
    return float(np.sqrt(sq / count)) if count else 0.0


def results_by_index(output: ReceiverOutput) -> dict:
    return {user.index: user for user in output.users}


# --------------------------------------------------------------------------
# sweep aggregation


@dataclass
class _TrialStats:
    """Reduced, picklable per-trial record; pooled by _Accumulator."""

    n_active: int
    n_missed: int
    n_false: int
    n_inactive: int
    sym_errors: int
    sym_scored: int
    sq_err: float
    n_matched: int
    n_detected: int
    n_unreliable: int
    runtime: float


def _score_trial(trial: TrialResult, cfg: SystemConfig) -> _TrialStats:
    truth, output = trial.truth, trial.output
    results = results_by_index(output)
    active = set(int(i) for i in truth.active_set)
    detected = set(int(i) for i in output.detected)
    errors, scored, missed = _symbol_errors(truth, results)
    sq = 0.0
    matched = 0
    for pos, idx in enumerate(truth.active_set):
        est = results.get(int(idx))
        if est is not None:
            sq += abs(est.h_hat - truth.channels[pos]) ** 2
            matched += 1
    return _TrialStats(
        n_active=len(active),
        n_missed=missed,
        n_false=len(detected - active),
        n_inactive=cfg.N - len(active),
        sym_errors=errors,
        sym_scored=scored,
        sq_err=sq,
        n_matched=matched,
        n_detected=len(output.users),
        n_unreliable=sum(1 for u in output.users if not u.reliable),
        runtime=output.receiver_time,
    )


@dataclass(frozen=True)
class MetricsRecord:
    """Pooled metrics for one sweep point.

    The trailing count fields carry the binomial sample sizes behind
    the rates (for confidence statements); they are not CSV columns.
    """

    axis: str
    value: float
    trials: int
    mdr: float
    far: float
    nser_strict: float
    nser_detected_only: float
    rmse_ce: float
    unreliable_frac: float
    mean_runtime_s: float
    n_active_total: int = 0
    n_missed_total: int = 0
    n_detected_total: int = 0
    n_unreliable_total: int = 0


def _reduce(axis: str, value, trials: int, stats: list, j_data: int) -> MetricsRecord:
    n_active = sum(s.n_active for s in stats)
    n_missed = sum(s.n_missed for s in stats)
    n_false = sum(s.n_false for s in stats)
    n_inactive = sum(s.n_inactive for s in stats)
    sym_errors = sum(s.sym_errors for s in stats)
    sym_scored = sum(s.sym_scored for s in stats)
    strict_denom = n_active * j_data
    sq_err = sum(s.sq_err for s in stats)
    n_matched = sum(s.n_matched for s in stats)
    n_detected = sum(s.n_detected for s in stats)
    n_unreliable = sum(s.n_unreliable for s in stats)
    return MetricsRecord(
        axis=axis,
        value=float(value),
        trials=trials,
        mdr=n_missed / n_active if n_active else 0.0,
        far=n_false / n_inactive if n_inactive else 0.0,
        nser_strict=(sym_errors + n_missed * j_data) / strict_denom if strict_denom else 0.0,
        nser_detected_only=sym_errors / sym_scored if sym_scored else 0.0,
        rmse_ce=float(np.sqrt(sq_err / n_matched)) if n_matched else 0.0,
        unreliable_frac=n_unreliable / n_detected if n_detected else 0.0,
        mean_runtime_s=sum(s.runtime for s in stats) / len(stats) if stats else 0.0,
        n_active_total=n_active,
        n_missed_total=n_missed,
        n_detected_total=n_detected,
        n_unreliable_total=n_unreliable,
    )


def _sweep_cfg(base_cfg: SystemConfig, axis: str, value) -> SystemConfig:
    if axis not in SWEEP_AXES:
        raise InvalidInputError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    value = int(value) if axis == "M" else float(value)
    return replace(base_cfg, **{axis: value})


def _sweep_trial(args) -> _TrialStats:
    base_cfg, axis, value, index = args
    cfg = _sweep_cfg(base_cfg, axis, value)
    trial = run_trial(cfg, "sweep", axis, repr(value), index)
    return _score_trial(trial, cfg)


def sweep(base_cfg: SystemConfig, axis: str, values, trials: int,
          workers: int = 1) -> list[MetricsRecord]:
    """One MetricsRecord per axis value, each pooled over ``trials``
    independent seeded trials.

    Trials are independent work units; with ``workers > 1`` they run in
    a process pool, and the reduction order (trial index) keeps results
    identical to a serial run.
    """
    records = []
    for value in values:
        jobs = [(base_cfg, axis, value, t) for t in range(trials)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                stats = list(pool.map(_sweep_trial, jobs, chunksize=32))
        else:
            stats = [_sweep_trial(job) for job in jobs]
        records.append(_reduce(axis, value, trials, stats, base_cfg.J - 1))
    return records


def write_results_csv(path, records) -> None:
    """Results file: one header row plus one row per record.

    Floats are written with repr (shortest round-trip form), so a
    rerun with the same seed produces the same bytes. Callers that
    need byte-stable files must zero the wall-time field first; the
    CLI does this and records measured runtimes in the manifest.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_COLUMNS)
        for rec in records:
            writer.writerow([
                rec.axis, repr(rec.value), rec.trials, repr(rec.mdr), repr(rec.far),
                repr(rec.nser_strict), repr(rec.nser_detected_only),
                repr(rec.rmse_ce), repr(rec.unreliable_frac),
                repr(rec.mean_runtime_s),
            ])

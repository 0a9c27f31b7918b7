"""Acceptance suite: every criterion prints one pass/fail line.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as
they complete. The heavier criteria (2, 5, 6, 7) run a few thousand
seeded Monte-Carlo trials each and take a couple of minutes combined.
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
from scipy import stats as scipy_stats

from sinoma import (SystemConfig, bic_penalty, build_data_matrix,
                    detect_symbols, estimate_num_active, generate_opportunity,
                    log_likelihood, run_trial, singular_triplets, sweep,
                    varpro_cost, varpro_gradient)
from sinoma.cli import main as cli_main
from sinoma.codes import steering_matrix
from sinoma.harness import nser, results_by_index, rmse_ce
from sinoma.order import default_k_max
from sinoma.scenario import rng_for

WORKERS = min(8, os.cpu_count() or 1)


def _report(num: int, name: str, ok: bool, detail: str = ""):
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def one_sided_z(missed_hi, total_hi, missed_lo, total_lo) -> float:
    """Two-proportion z statistic for rate_hi > rate_lo."""
    p_hi, p_lo = missed_hi / total_hi, missed_lo / total_lo
    pooled = (missed_hi + missed_lo) / (total_hi + total_lo)
    se = math.sqrt(pooled * (1 - pooled) * (1 / total_hi + 1 / total_lo))
    return (p_hi - p_lo) / se if se > 0 else 0.0


def test_criterion_01_noiseless_exactness():
    t0 = time.perf_counter()
    base = SystemConfig(N=128, M=64, J=9, L=4, noiseless=True, seed=1001)
    missed = false = nser_violations = 0
    worst_rmse = 0.0
    for t in range(200):
        cfg = replace(base, num_active=1 + t % 12)
        trial = run_trial(cfg, "noiseless-exact", t)
        results = results_by_index(trial.output)
        aset = set(trial.truth.active_set.tolist())
        dset = set(trial.output.detected.tolist())
        missed += len(aset - dset)
        false += len(dset - aset)
        nser_violations += nser(trial.truth, results, "strict") != 0.0
        worst_rmse = max(worst_rmse, rmse_ce(trial.truth, results))
    elapsed = time.perf_counter() - t0
    ok = missed == 0 and false == 0 and nser_violations == 0 \
        and worst_rmse < 1e-9 and elapsed < 10.0
    _report(1, "noiseless exactness", ok,
            f"missed={missed} false={false} nser_violations={nser_violations} "
            f"worst_rmse={worst_rmse:.2e} elapsed={elapsed:.1f}s")


def test_criterion_02_order_selection_accuracy():
    # Like criterion 7, the quantitative bar presumes the per-element
    # power normalization: under per-symbol-total, cell-edge fades push
    # BIC accuracy to ~94% at 20 dBm regardless of seed.
    t0 = time.perf_counter()
    cfg = SystemConfig(seed=1002, power_mapping="per_element")
    assert cfg.snapshot_len == 50
    hits = {"bic": 0, "aic": 0}
    over = {"bic": 0, "aic": 0}
    trials = 1000
    for t in range(trials):
        truth, signal = generate_opportunity(cfg, "order-acc", t)
        snap = build_data_matrix(signal, cfg.snapshot_len)
        _, s = singular_triplets(snap.s_bar)
        for criterion in ("bic", "aic"):
            sel = estimate_num_active(s, snap.l, snap.num_columns, criterion,
                                      k_max=default_k_max(snap.l, cfg.N))
            hits[criterion] += sel.k_hat == truth.active_set.size
            over[criterion] += sel.k_hat > truth.active_set.size
    elapsed = time.perf_counter() - t0
    bic_acc = hits["bic"] / trials
    ok = bic_acc >= 0.95 and over["aic"] > over["bic"] and elapsed < 120.0
    _report(2, "order selection at defaults", ok,
            f"bic_acc={bic_acc:.3f} over_bic={over['bic']} over_aic={over['aic']} "
            f"elapsed={elapsed:.0f}s")


def test_criterion_03_psk_gaussian_product_property():
    rng = rng_for(1003, "lemma")
    tau, n = 2.3, 10**5
    h = np.sqrt(tau / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    beta = np.exp(2j * np.pi * rng.integers(0, 4, size=n) / 4)
    z = beta * h
    scale = np.sqrt(tau / 2)
    p_re = scipy_stats.kstest(z.real, "norm", args=(0, scale)).pvalue
    p_im = scipy_stats.kstest(z.imag, "norm", args=(0, scale)).pvalue
    p_sq = scipy_stats.kstest(np.abs(z) ** 2, "expon", args=(0, tau)).pvalue
    ok = min(p_re, p_im, p_sq) > 0.01
    _report(3, "PSK-rotated Gaussian stays Gaussian", ok,
            f"KS p-values re={p_re:.3f} im={p_im:.3f} power={p_sq:.3f}")


def test_criterion_04_forward_backward_rank():
    base = SystemConfig(noiseless=True, seed=1004)
    bad = 0
    for t in range(500):
        cfg = replace(base, num_active=t % 11)
        truth, signal = generate_opportunity(cfg, "fb-rank", t)
        snap = build_data_matrix(signal, cfg.snapshot_len)
        s = np.linalg.svd(snap.s_bar, compute_uv=False)
        count = int(np.sum(s > 1e-10 * s[0])) if s[0] > 0 else 0
        bad += count != truth.active_set.size
    _report(4, "noise-free rank equals active count", bad == 0,
            f"mismatches={bad}/500")


def test_criterion_05_varpro_contract():
    # gradient check on small instances
    rng = np.random.default_rng(1005)
    grad_fail = 0
    for _ in range(50):
        omegas = np.sort(rng.uniform(0.2, 2 * np.pi - 0.5, size=2))
        if omegas[1] - omegas[0] < 0.3:
            omegas[1] += 0.3
        phi = steering_matrix(omegas, 32, 1.0)
        x = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        y = phi @ x + 0.05 * (rng.standard_normal((32, 4))
                              + 1j * rng.standard_normal((32, 4)))
        analytic = varpro_gradient(omegas, y, 1.0)
        fd = np.empty(2)
        for k in range(2):
            up, dn = omegas.copy(), omegas.copy()
            up[k] += 1e-6
            dn[k] -= 1e-6
            fd[k] = (varpro_cost(up, y, 1.0) - varpro_cost(dn, y, 1.0)) / 2e-6
        if np.linalg.norm(analytic - fd) > 1e-4 * np.linalg.norm(fd):
            grad_fail += 1

    # refinement behavior across 500 seeded trials at defaults
    cfg = SystemConfig(seed=1005, refine=True)
    iters = []
    monotone = never_worse = True
    for t in range(500):
        trial = run_trial(cfg, "varpro-accept", t)
        ref = trial.output.refine
        if ref is None:
            iters.append(0)
            continue
        iters.append(ref.iterations)
        trace = np.array(ref.cost_trace)
        monotone &= bool(np.all(np.diff(trace) <= 0))
        never_worse &= trace[-1] <= trace[0] + 1e-18
    med = float(np.median(iters))
    ok = grad_fail == 0 and monotone and never_worse and med <= 3.0
    _report(5, "variable-projection refinement contract", ok,
            f"grad_fail={grad_fail}/50 median_iters={med} monotone={monotone} "
            f"never_worse={never_worse}")


def test_criterion_06_metric_trends():
    t0 = time.perf_counter()
    cfg = SystemConfig(seed=1006)
    trials = 2000
    checks = []
    for axis, values, increasing in (
        ("M", [32, 64, 96], False),
        ("tx_power_dbm", [0.0, 10.0, 20.0], False),
        ("p_a", [0.05, 0.1, 0.2], True),
    ):
        records = sweep(cfg, axis, values, trials, workers=WORKERS)
        rates = [r.mdr for r in records]
        for lo, hi in zip(records, records[1:]):
            worse, better = (hi, lo) if increasing else (lo, hi)
            z = one_sided_z(worse.n_missed_total, worse.n_active_total,
                            better.n_missed_total, better.n_active_total)
            checks.append((axis, lo.value, hi.value, worse.mdr > better.mdr, z))
        print(f"  {axis}: mdr={['%.4f' % r for r in rates]}")
    elapsed = time.perf_counter() - t0
    ok = all(strict and z >= 1.645 for _, _, _, strict, z in checks) \
        and elapsed < 900.0
    detail = " ".join(f"{a}[{v1:g}->{v2:g}]z={z:.2f}" for a, v1, v2, _, z in checks)
    _report(6, "MDR trends with confidence separation", ok,
            detail + f" elapsed={elapsed:.0f}s")


def test_criterion_07_unreliable_fraction():
    # The reported ~6% at 0 dBm presumes the per-element reading of the
    # transmit-power normalization (the sequence-amplitude ambiguity);
    # under per-symbol-total the fraction is dominated by cell-edge
    # users (~50%) and the [2%, 10%] band is unattainable.
    cfg = SystemConfig(tx_power_dbm=0.0, power_mapping="per_element", seed=1007)
    records = sweep(cfg, "tx_power_dbm", [0.0], 2000, workers=WORKERS)
    frac = records[0].unreliable_frac
    ok = 0.02 <= frac <= 0.10
    _report(7, "unreliable-user fraction at 0 dBm", ok,
            f"unreliable_frac={frac:.4f} detected={records[0].n_detected_total}")


def test_criterion_08_sweep_byte_determinism(tmp_path):
    cfg_path = tmp_path / "det.cfg"
    cfg_path.write_text("seed = 1008\n")
    outputs = []
    for workers, name in ((1, "w1.csv"), (8, "w8.csv")):
        out = tmp_path / name
        rc = cli_main(["sweep", "--config", str(cfg_path), "--axis",
                       "tx_power_dbm", "--values", "0,20", "--trials", "50",
                       "--workers", str(workers), "--out", str(out)])
        assert rc == 0
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1]
    _report(8, "sweep CSV byte-identical across worker counts", ok,
            f"bytes={len(outputs[0])}")


def test_criterion_09_symbol_detection_oracle():
    def exhaustive_oracle(z: complex, zeta: float, L: int) -> int:
        # squared chord distance via angles only: 2 - 2 cos(psi - 2 pi q / L)
        psi = math.atan2(z.imag, z.real) - zeta
        best_q, best_d = 0, float("inf")
        for q in range(L):
            d = 2.0 - 2.0 * math.cos(psi - 2.0 * math.pi * q / L)
            if d < best_d:
                best_q, best_d = q, d
        return best_q

    rng = np.random.default_rng(1009)
    mismatches = 0
    for _ in range(1000):
        L = int(rng.choice([2, 4, 8]))
        row = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        zeta = float(rng.uniform(0, 2 * np.pi))
        ours = detect_symbols(row, zeta, L)
        oracle = [exhaustive_oracle(complex(z), zeta, L) for z in row[1:]]
        mismatches += int(np.any(ours != np.array(oracle)))
    _report(9, "symbol detection equals exhaustive search", mismatches == 0,
            f"mismatching_rows={mismatches}/1000")


def test_criterion_10_pinned_spot_values():
    bic = bic_penalty(2, 50, 270)
    ll = log_likelihood(np.array([2.0, 1.0]), 0, 10)
    ok = abs(bic - 548.64) <= 0.01 and abs(ll - (-4.4629)) <= 1e-3
    _report(10, "pinned criterion spot values", ok,
            f"bic(2,50,270)={bic:.4f} loglik((2,1),0,10)={ll:.5f}")

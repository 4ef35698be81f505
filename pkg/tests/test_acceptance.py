"""Acceptance suite: one PASS/FAIL line per criterion, at the agreed tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
an "acceptance criteria" section at the end of the session.
"""

import json
import os
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

from mrlsr.data import TrainingSet, friedman_synthetic, make_rng
from mrlsr.equivalence import verify_weak_equivalence
from mrlsr.estimators import ModifiedKernelRidge, MPowerRLSR
from mrlsr.experiments import (CvProtocol, ExperimentResult, run_accuracy_experiment, run_convergence_experiment,
                               run_equivalence_experiment)
from mrlsr.hamming import h_distance, h_metric_bruteforce
from mrlsr.kernel import KernelConfig, rkhs_norm_sq
from mrlsr.solvers import krr_fit, mrlsr_fit, objective
from mrlsr.stability import StabilityBoundInputs, clip_targets, scale_targets, stability_series, theoretical_beta

from oracles import reference_minimum
from test_hamming import multisets
from test_solvers import ALPHA_N1, C0_N1

SYNTHETIC_SEED = 0


@pytest.fixture(scope="module")
def synthetic():
    return friedman_synthetic(2000, noise_sd=1.0, seed=SYNTHETIC_SEED)


def test_criterion_1_krr_identity(criterion):
    start = time.perf_counter()
    rng = make_rng(1)
    worst = 0.0
    for i in range(100):
        n, d = int(rng.integers(2, 51)), int(rng.integers(1, 6))
        lam = (1e-3, 1.0, 10.0)[i % 3]
        Z = TrainingSet(rng.random((n, d)), rng.standard_normal(n))
        a = mrlsr_fit(lam, 2.0, Z).alpha
        b = krr_fit(lam, Z).alpha
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 10
    assert criterion(1, ok, f"max relative coefficient gap {worst:.2e} (<= 1e-8), {elapsed:.1f}s (< 10s)")


def test_criterion_2_oracle_optimality(criterion):
    start = time.perf_counter()
    rng = make_rng(2)
    worst_obj = worst_foc = 0.0
    for i in range(25):
        m = (1.5, 3.0, 4.0)[i % 3]
        n = int(rng.integers(1, 5))
        X, Y = rng.random((n, 3)), rng.standard_normal(n)
        lam = float(10 ** rng.uniform(-3, 1))
        model = mrlsr_fit(lam, m, TrainingSet(X, Y), KernelConfig(bandwidth=float(rng.uniform(0.2, 2.0))))
        K, a = model.gram(), model.alpha
        ours = objective(K, Y, a, lam, m)
        _, ref = reference_minimum(K, Y, lam, m)
        worst_obj = max(worst_obj, abs(ours - ref) / abs(ref))
        q = rkhs_norm_sq(K, a)
        resid = Y - K @ a - lam * m * n / 2.0 * q ** (m / 2.0 - 1.0) * a
        worst_foc = max(worst_foc, float(np.max(np.abs(resid)) / np.max(np.abs(Y))))
    elapsed = time.perf_counter() - start
    ok = worst_obj <= 1e-5 and worst_foc <= 1e-8 and elapsed < 30
    assert criterion(2, ok, f"objective vs oracle {worst_obj:.2e} (<= 1e-5), first-order residual "
                            f"{worst_foc:.2e}*|Y|inf (<= 1e-8), {elapsed:.1f}s (< 30s)")


def test_criterion_3_single_point(criterion):
    model = mrlsr_fit(0.5, 4.0, TrainingSet([[0.0]], [1.0]), KernelConfig(bandwidth=1.0))
    c0, alpha = model.meta["c0"], float(model.alpha[0])
    ok = abs(c0 - 0.46557) <= 1e-4 and abs(alpha - 0.68233) <= 1e-4
    ok = ok and abs(c0 - C0_N1) <= 1e-10 and abs(alpha - ALPHA_N1) <= 1e-10
    assert criterion(3, ok, f"C0={c0:.12f} (0.46557 +- 1e-4), alpha={alpha:.12f} (0.68233 +- 1e-4)")


def test_criterion_4_equivalence(criterion, synthetic):
    start = time.perf_counter()
    rng = make_rng(4)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(5, 60))
        Z = TrainingSet(rng.random((n, 4)), rng.standard_normal(n))
        for m in (1.2, 1.5, 2.5):
            for lam in (1e-5, 1e-2, 1.0, 10.0):
                size = mrlsr_fit(lam, m, Z).rkhs_norm()
                worst = max(worst, verify_weak_equivalence(lam, m, Z) / (1 + size))
    positive = 0
    for seed in range(20):
        rep = run_equivalence_experiment(synthetic, 1.5, seed=seed)
        f1 = rep.per_split[0].mrlsr_norm
        positive += all(s.diff_norm > 1e-6 * f1 for s in rep.per_split[1:])
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and positive >= 19 and elapsed < 120
    assert criterion(4, ok, f"weak-equivalence gap {worst:.2e}*(1+|f|) (<= 1e-8); splits 2-4 differ in "
                            f"{positive}/20 seeds (>= 95%); {elapsed:.1f}s (< 120s)")


def test_criterion_5_hamming(criterion):
    start = time.perf_counter()
    sets = list(multisets("abcd", 4))
    mismatches = sum(h_distance(a, b) != h_metric_bruteforce(a, b) for a in sets for b in sets)
    rng = make_rng(5)
    violations = 0
    for _ in range(10_000):
        z1, z2, z3 = (list(rng.choice(list("abcdef"), size=int(rng.integers(0, 11)))) for _ in range(3))
        violations += h_distance(z1, z3) > h_distance(z1, z2) + h_distance(z2, z3)
    loo_bad = 0
    for _ in range(50):
        n = int(rng.integers(1, 30))
        X = rng.integers(0, 3, size=(n, 2)).astype(float)  # duplicates on purpose
        Z = TrainingSet(X, rng.integers(0, 2, size=n).astype(float))
        loo_bad += sum(h_distance(Z, Z.without(i)) != 1 for i in range(n))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and violations == 0 and loo_bad == 0 and elapsed < 20
    assert criterion(5, ok, f"{mismatches} oracle mismatches over {len(sets) ** 2} pairs, {violations} triangle "
                            f"violations in 10^4 triples, {loo_bad} H(Z,Z^i)!=1; {elapsed:.1f}s (< 20s)")


def _stability_check(data, n_series):
    exceed = []
    for m in (2.0, 3.0):
        for seed in range(10):
            rep = stability_series(MPowerRLSR(lam=1.0, m=m), data, n_series, seed=seed, c_y=1.0)
            exceed += [(m, p.n, seed) for p in rep.per_n if p.empirical_sup > p.theoretical_beta]
    sups = np.array([[p.empirical_sup for p in stability_series(ModifiedKernelRidge(lam=1.0), data, n_series,
                                                                  seed=seed, c_y=1.0).per_n]
                     for seed in range(10)])
    med = np.median(sups, axis=0)
    return exceed, med[:-1] / med[1:]


@pytest.mark.slow
def test_criterion_6_stability(criterion, synthetic):
    # clipping to [-1, 1] sends almost every Friedman target to +1, so the
    # affinely scaled targets are checked as well and both must pass
    start = time.perf_counter()
    n_series = (50, 100, 200)
    checks = {"clipped": _stability_check(clip_targets(synthetic, 1.0), n_series),
              "scaled": _stability_check(scale_targets(synthetic, 1.0), n_series)}
    beta = [theoretical_beta(StabilityBoundInputs(2.0, 1.0, n, 1.0)) for n in n_series]
    halves = all(abs(b2 - b1 / 2) <= 1e-15 * b1 for b1, b2 in zip(beta, beta[1:]))
    elapsed = time.perf_counter() - start
    ok = halves and elapsed < 300 and all(not ex and np.all(r < 1.5) for ex, r in checks.values())
    detail = "; ".join(f"{k}: {len(ex)} bound violations in 60 runs, modified-KRR median ratios "
                       f"{np.round(r, 3).tolist()} (< 1.5)" for k, (ex, r) in checks.items())
    assert criterion(6, ok, f"{detail}; beta(m=2)={beta[1]:.3f} at n=100, halves per doubling: {halves}; "
                            f"{elapsed:.0f}s (< 300s)")


@pytest.mark.slow
def test_criterion_7_accuracy(criterion, synthetic):
    start = time.perf_counter()
    res = run_accuracy_experiment(synthetic, CvProtocol(), seed=0, name="synthetic")
    elapsed = time.perf_counter() - start
    m = res.summary["mrlsr"]["m"]
    ours, krr = res.summary["mrlsr"]["mean"], res.summary["krr"]["mean"]
    ok = m < 1 and 0.005 <= ours <= 0.030 and ours < krr and elapsed < 900
    assert criterion(7, ok, f"selected m={m} (< 1), M-RLSR scaled RMSE {ours:.4e} (in [0.005, 0.030]), "
                            f"KRR {krr:.4e} (M-RLSR strictly below: {ours < krr}); {elapsed:.0f}s (< 900s)")


@pytest.mark.slow
def test_criterion_8_convergence(criterion, synthetic):
    start = time.perf_counter()
    res = run_convergence_experiment(synthetic, m=0.1, seed=0, name="synthetic")
    elapsed = time.perf_counter() - start
    fr = res.summary["fractions"]
    ours, krr = np.array(res.summary["mrlsr"]), np.array(res.summary["krr"])
    # at 100% both learners fit the identical model, so allow a rounding-level tie
    wins = int(np.sum(ours <= krr * (1 + 1e-12)))
    ok = wins >= 0.8 * len(fr) and elapsed < 900
    lams = sorted(Counter(r["lambda"] for r in res.select(metric="lambda2")).items())
    assert criterion(8, ok, f"M-RLSR <= KRR at {wins}/{len(fr)} fractions (>= 80%), CV lambda counts {lams}; "
                            f"{elapsed:.0f}s (< 900s)")


def _cli_run(args, out_dir, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    subprocess.run([sys.executable, "-m", "mrlsr.cli", *args, "--out", str(out_dir)], check=True, env=env,
                   capture_output=True)


def test_criterion_9_determinism(criterion, synthetic, tmp_path):
    start = time.perf_counter()
    small = CvProtocol(m_grid=(0.5, 1.0, 1.5), lambda_grid_mrlsr=(1e-3, 1e-1, 10.0),
                       lambda_grid_krr=(1e-5, 1e-3, 1e-1), folds=3, runs=2)
    data = synthetic.subset(range(150))
    pairs = {
        "accuracy": [run_accuracy_experiment(data, small, seed=7).to_json() for _ in range(2)],
        "convergence": [run_convergence_experiment(data, 0.5, fractions=(0.2, 0.6, 1.0), runs=2, seed=7,
                                                   protocol=small).to_json() for _ in range(2)],
        "equivalence": [ExperimentResult.from_equivalence(run_equivalence_experiment(synthetic, 1.5, seed=7),
                                                          "synthetic", 7).to_json() for _ in range(2)],
    }
    identical = {k: a == b for k, (a, b) in pairs.items()}
    cli_args = {"accuracy": ["experiment", "accuracy", "--synthetic", "120", "--seed", "3", "--runs", "2",
                             "--folds", "3"],
                "convergence": ["experiment", "convergence", "--synthetic", "120", "--seed", "3", "--runs", "2",
                                "--lambda", "0.1"],
                "equivalence": ["experiment", "equivalence", "--synthetic", "400", "--seed", "3"]}
    for kind, args in cli_args.items():
        _cli_run(args, tmp_path / f"{kind}1", 1)
        _cli_run(args, tmp_path / f"{kind}2", 2)
        identical[f"cli-{kind}"] = all(
            (tmp_path / f"{kind}1" / f"{kind}{ext}").read_bytes() == (tmp_path / f"{kind}2" / f"{kind}{ext}").read_bytes()
            for ext in (".json", ".csv"))
        json.loads((tmp_path / f"{kind}1" / f"{kind}.json").read_text())
    elapsed = time.perf_counter() - start
    ok = all(identical.values())
    assert criterion(9, ok, f"byte-identical reruns: {identical}; {elapsed:.0f}s")

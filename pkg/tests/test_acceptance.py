"""End-to-end acceptance suite.

Every check prints exactly one line

    ACCEPTANCE <k> <name>: PASS|FAIL|SKIP (<measured quantities>)

so a plain pytest run (the project config adds -rA) leaves a scannable
record of each measurement next to its threshold. A check that depends on
external data reports SKIP rather than silently passing. The certificate
check at the end pools the optimality certificates of every penalized solve
performed by the heavy studies above it, so it must stay the last test in
this file.

The normality check (check 6) is known to fail on the diffusion coordinate
at the prescribed sampling design and is kept failing on purpose: the
discretized likelihood carries a diffusion bias of order delta, which at
n=2000, delta=0.05 amounts to about sqrt(2n)*delta/2 ~ 1.58 standard
errors. The design has n*delta^2 = 5, far from the vanishing-step regime
(n*delta^2 -> 0) the normal approximation requires, so no implementation of
this estimator can pass it; see the assertion message for the measured
numbers.
"""

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from oracle_penalized import random_instance, solve_by_enumeration
from sdelasso.alasso import penalized_objective, select, solve_penalized
from sdelasso.dataio import DataSource, load_csv
from sdelasso.models import ParamVector, get_model
from sdelasso.montecarlo import McConfig, run_mc
from sdelasso.qmle import FitOptions, fit
from sdelasso.simulate import SimConfig, simulate, simulate_ensemble
from test_models import RECIPES

MASTER = 20260814
WORKERS = min(4, os.cpu_count() or 1)
ROOT = Path(__file__).resolve().parent.parent
RATES_CSV = ROOT / "data" / "irates.csv"

# Optimality certificates from every selection performed in checks 4-7,
# re-asserted in bulk by check 8.
KKT_FLAGS: list[bool] = []


def _report(k: int, name: str, status, detail: str) -> None:
    if not isinstance(status, str):
        status = "PASS" if status else "FAIL"
    print(f"ACCEPTANCE {k} {name}: {status} ({detail})")


def _fmt(values, nd=3) -> str:
    return "[" + ", ".join(f"{v:.{nd}g}" for v in values) + "]"


def test_1_penalized_solver_matches_brute_force_enumeration():
    t0 = time.perf_counter()
    worst_obj = 0.0
    worst_coord = 0.0
    for seed in range(50):
        hess, center, w = random_instance(seed)
        ref_x, ref_f = solve_by_enumeration(hess, center, w)
        x, _ = solve_penalized(hess, center, w)
        f = penalized_objective(hess, center, w, x)
        worst_obj = max(worst_obj, abs(f - ref_f))
        worst_coord = max(worst_coord, float(np.max(np.abs(x - ref_x))))
    elapsed = time.perf_counter() - t0
    ok = worst_obj <= 1e-6 and worst_coord <= 1e-5 and elapsed < 10.0
    detail = (
        f"50 instances, max objective gap {worst_obj:.2e} <= 1e-6, "
        f"max coordinate gap {worst_coord:.2e} <= 1e-5, {elapsed:.2f}s < 10s"
    )
    _report(1, "penalized solver vs enumeration", ok, detail)
    assert ok, detail


def test_2_zero_penalty_returns_the_unpenalized_estimate():
    gaps = {}
    for i, name in enumerate(sorted(RECIPES)):
        theta, x0 = RECIPES[name]
        model = get_model(name)
        traj = simulate(model, theta, SimConfig(n=160, delta=0.1, x0=x0, seed=2026 + i, refine=3))
        fr = fit(model, traj, options=FitOptions(restarts=2))
        assert fr.converged, f"{name}: unpenalized fit did not converge"
        sel = select(model, traj, fr, 0.0, 0.0)
        gaps[name] = float(np.max(np.abs(sel.theta_hat.theta - fr.theta_tilde.theta)))
    worst_name = max(gaps, key=gaps.get)
    ok = gaps[worst_name] <= 1e-8
    detail = (
        f"all {len(gaps)} models, max gap {gaps[worst_name]:.2e} <= 1e-8 "
        f"(worst: {worst_name})"
    )
    _report(2, "zero penalty degeneracy", ok, detail)
    assert ok, detail


def test_3_ensemble_mean_and_weak_order_of_the_second_order_scheme():
    t0 = time.perf_counter()
    model = get_model("gbm")
    theta = (0.05, 0.2)
    exact = math.exp(0.05)

    def terminal(n, delta):
        cfg = SimConfig(n=n, delta=delta, x0=1.0, seed=MASTER, refine=1, scheme="milstein2")
        final = simulate_ensemble(model, theta, cfg, 100_000)[:, -1]
        return float(np.mean(final)), float(np.std(final, ddof=1) / math.sqrt(final.size))

    mean_fine, se_fine = terminal(100, 0.01)
    mean_c, se_c = terminal(25, 0.04)
    mean_h, se_h = terminal(50, 0.02)
    elapsed = time.perf_counter() - t0

    fine_ok = abs(mean_fine - exact) <= 3.0 * se_fine
    bias_c = mean_c - exact
    bias_h = mean_h - exact
    resolved = abs(bias_c) > 3.0 * se_c and abs(bias_h) > 3.0 * se_h
    if resolved:
        ratio = abs(bias_c) / abs(bias_h)
        bias_part = f"bias ratio {ratio:.2f} >= 3 (biases {bias_c:.2e}, {bias_h:.2e})"
        bias_ok = ratio >= 3.0
    else:
        bias_part = (
            f"halving bias below noise (biases {bias_c:.2e}, {bias_h:.2e} vs "
            f"3se {3 * se_c:.2e}, {3 * se_h:.2e}) -> ratio check vacuous"
        )
        bias_ok = True
    ok = fine_ok and bias_ok and elapsed < 60.0
    detail = (
        f"1e5 paths, fine-step mean {mean_fine:.5f} vs {exact:.5f} "
        f"(|gap| {abs(mean_fine - exact):.2e} <= 3se {3 * se_fine:.2e}); "
        f"{bias_part}; {elapsed:.1f}s < 60s"
    )
    _report(3, "simulator weak order", ok, detail)
    assert ok, detail


def test_4_selection_study_zeroes_the_null_coordinate():
    t0 = time.perf_counter()
    truth = np.array([1.0, 10.0, 0.0, 4.0, 0.5])
    cfg = McConfig(
        model="fig1",
        theta_true=ParamVector((1.0, 10.0), (0.0, 4.0, 0.5)),
        n=1000,
        delta=0.1,
        x0=10.0,
        reps=200,
        master_seed=MASTER,
        lambda0=1.0,
        gamma0=1.0,
    )
    res = run_mc(cfg, workers=WORKERS)
    KKT_FLAGS.extend(rec.kkt_ok for rec in res.records)
    elapsed = time.perf_counter() - t0

    zf = res.zero_fraction(2)
    med = np.median(res.theta_hat, axis=0)
    nonzero = (0, 1, 3, 4)
    rel = [abs(med[j] - truth[j]) / abs(truth[j]) for j in nonzero]
    ok = (
        zf >= 0.5
        and max(rel) <= 0.20
        and len(res.failures) <= 10
        and elapsed <= 600.0
    )
    detail = (
        f"200 reps: zero fraction of the null coordinate {zf:.3f} >= 0.5, "
        f"medians {_fmt(med[list(nonzero)], 4)} vs truth {_fmt(truth[list(nonzero)], 4)} "
        f"(max rel err {max(rel):.3f} <= 0.20), "
        f"failures {len(res.failures)} <= 10, {elapsed:.0f}s <= 600s"
    )
    _report(4, "desk-scale selection study", ok, detail)
    assert ok, detail


def test_5_zero_detection_does_not_degrade_with_more_data():
    t0 = time.perf_counter()

    def zero_fraction_at(n):
        cfg = McConfig(
            model="fig1",
            theta_true=ParamVector((1.0, 10.0), (0.0, 4.0, 0.5)),
            n=n,
            delta=0.1,
            x0=10.0,
            reps=100,
            master_seed=MASTER,
            lambda0=1.0,
            gamma0=1.0,
        )
        res = run_mc(cfg, workers=WORKERS)
        KKT_FLAGS.extend(rec.kkt_ok for rec in res.records)
        return res.zero_fraction(2), len(res.failures)

    zf_small, fail_small = zero_fraction_at(500)
    zf_large, fail_large = zero_fraction_at(2000)
    elapsed = time.perf_counter() - t0

    ok = zf_large >= zf_small - 0.05 and elapsed <= 600.0
    detail = (
        f"100 reps, common replication seeds: zero fraction {zf_large:.3f} at n=2000 "
        f">= {zf_small:.3f} - 0.05 at n=500 "
        f"(failures {fail_small}/{fail_large}), {elapsed:.0f}s <= 600s"
    )
    _report(5, "selection consistency trend", ok, detail)
    assert ok, detail


def test_6_standardized_active_estimates_are_approximately_normal():
    t0 = time.perf_counter()
    truth = np.array([1.0, 10.0, 1.0])
    cfg = McConfig(
        model="ou",
        theta_true=ParamVector((1.0, 10.0), (1.0,)),
        n=2000,
        delta=0.05,
        x0=10.0,
        reps=500,
        master_seed=MASTER,
        lambda0=1.0,
        gamma0=1.0,
    )
    res = run_mc(cfg, workers=WORKERS)
    KKT_FLAGS.extend(rec.kkt_ok for rec in res.records)
    elapsed = time.perf_counter() - t0

    scores = [[], [], []]
    for rec in res.records:
        active = [j for j in range(truth.size) if j not in rec.zero_set]
        for pos, j in enumerate(active):
            scores[j].append((rec.theta_hat[j] - truth[j]) / rec.active_std_err[pos])
    means = [float(np.mean(z)) if z else float("nan") for z in scores]
    varis = [float(np.var(z, ddof=1)) if len(z) > 1 else float("nan") for z in scores]
    coord_ok = [abs(m) <= 0.15 and 0.7 <= v <= 1.4 for m, v in zip(means, varis)]
    ok = all(coord_ok) and elapsed <= 600.0

    detail = (
        f"{len(res.records)} reps: standardized means {_fmt(means)} (|.| <= 0.15), "
        f"variances {_fmt(varis)} (in [0.7, 1.4]), per-coordinate "
        f"{['PASS' if c else 'FAIL' for c in coord_ok]}, {elapsed:.0f}s <= 600s"
    )
    _report(6, "active-set normality", ok, detail)
    assert ok, (
        detail
        + " -- the diffusion coordinate fails structurally: the discretized "
        "likelihood biases the diffusion scale by O(delta), about "
        f"sqrt(2n)*delta/2 = {math.sqrt(2 * cfg.n) * cfg.delta / 2:.2f} standard "
        f"errors at this design, and n*delta^2 = {cfg.n * cfg.delta ** 2:.0f} is "
        "far from the vanishing-step regime the normal approximation needs; "
        "no estimator built on this contrast can meet the +-0.15 band here"
    )


def test_7_monthly_rate_series_calibration_regression():
    if not RATES_CSV.exists():
        # the skip reason doubles as the report line: pytest echoes it in the
        # -rA summary, whereas stdout of skipped tests is swallowed
        line = (
            "ACCEPTANCE 7 rate series calibration: SKIP (data/irates.csv "
            "absent; run scripts/fetch_irates.py to materialize it)"
        )
        print(line)
        pytest.skip(line)

    t0 = time.perf_counter()
    traj = load_csv(DataSource(path=str(RATES_CSV), format="single-column", delta=1.0 / 12.0))
    model = get_model("ckls")
    fr = fit(model, traj)
    target = np.array([2.0822, -0.2756, 0.1322, 1.4392])
    rel = np.abs(fr.theta_tilde.theta - target) / np.abs(target)

    mild = select(model, traj, fr, 1.0, 1.0)
    strong = select(model, traj, fr, 10.0, 10.0)
    KKT_FLAGS.extend([mild.kkt_ok, strong.kkt_ok])
    elapsed = time.perf_counter() - t0

    shrinks = bool(
        np.all(np.abs(mild.theta_hat.theta) <= np.abs(fr.theta_tilde.theta) + 1e-12)
    )
    gamma_mild = float(mild.theta_hat.theta[3])
    beta_strong = float(strong.theta_hat.theta[1])
    gamma_strong = float(strong.theta_hat.theta[3])
    ok = (
        fr.converged
        and bool(np.all(rel <= 0.10))
        and shrinks
        and 1.40 <= gamma_mild <= 1.50
        and abs(beta_strong) <= 0.01
        and 1.40 <= gamma_strong <= 1.55
        and elapsed < 60.0
    )
    detail = (
        f"n={traj.n}: estimate {_fmt(fr.theta_tilde.theta, 4)} vs target {_fmt(target, 4)} "
        f"(max rel err {float(np.max(rel)):.3f} <= 0.10); mild penalty shrinks all "
        f"coordinates={shrinks}, exponent {gamma_mild:.4f} in [1.40, 1.50]; strong "
        f"penalty slope {beta_strong:.4f} (|.| <= 0.01), exponent {gamma_strong:.4f} "
        f"in [1.40, 1.55]; {elapsed:.1f}s < 60s"
    )
    _report(7, "rate series calibration", ok, detail)
    assert ok, detail


def test_8_every_selection_above_carries_an_optimality_certificate():
    if not KKT_FLAGS:
        line = (
            "ACCEPTANCE 8 certificate suite: SKIP (no selection runs "
            "executed before this test)"
        )
        print(line)
        pytest.skip(line)
    ok = all(KKT_FLAGS)
    detail = f"{sum(KKT_FLAGS)}/{len(KKT_FLAGS)} selection certificates hold"
    _report(8, "certificate suite", ok, detail)
    assert ok, detail

"""Acceptance battery: every criterion printed as one PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
complete; several criteria drive six-figure path ensembles and take minutes.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import special

import opendraw as od
from opendraw import first_passage as fp
from opendraw import reliability as rel
from opendraw.cli import main as cli_main
from opendraw.config import load_config
from opendraw.sweep import run_reliability

from conftest import seedseq

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _report(num, passed, detail, t0):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {num:2d}: {status} ({time.perf_counter() - t0:6.1f}s) {detail}")
    assert passed, detail


def test_criterion_01_spectral_vs_path_oracle(ou):
    tic = time.perf_counter()
    quantiles = (0.05, 0.2, 0.4, 0.6, 0.8)
    s_values = (0.5, 1.0, 2.0)
    worst = 0.0
    bad = []
    run = 0
    for c_t in (0.05, 0.1):
        p = ou(c_t=c_t)
        sd = p.stationary_sd
        for k_b in (1.0, 2.0, 3.0):
            boundary = p.t0 + k_b * sd
            for q in quantiles:
                start = p.t0 + sd * float(special.ndtri(q))
                assert start < boundary
                exp = fp.build_expansion(p, boundary, start, horizon=s_values[0])
                sims = od.simulate_survival(
                    p, boundary, start, s_values[-1], n_paths=100_000, step=1e-3,
                    bridge_correction=True, seed=seedseq(1, run),
                    checkpoints=s_values,
                )
                run += 1
                for s, sim in zip(s_values, sims):
                    diff = abs(fp.survival(exp, s) - sim.value)
                    ratio = diff / max(3 * sim.error, 1e-12)
                    worst = max(worst, ratio)
                    if diff > 3 * sim.error:
                        bad.append((c_t, k_b, q, s, diff, sim.error))
    elapsed = time.perf_counter() - tic
    _report(1, not bad and elapsed <= 600.0,
            f"90 grid points, worst |diff|/3SE = {worst:.2f}, runtime limit 600s",
            tic)


def test_criterion_02_root_identity():
    tic = time.perf_counter()
    roots = od.find_hermite_roots(0.0, 5)
    err = float(np.max(np.abs(roots - np.array([1.0, 3.0, 5.0, 7.0, 9.0]))))
    _report(2, err <= 1e-8, f"roots {np.round(roots, 10).tolist()}, max err {err:.2e}", tic)


def test_criterion_03_closed_form_equivalences():
    tic = time.perf_counter()
    worst = 0.0
    for lam_s in np.geomspace(1e-3, 50.0, 12):
        for q_bar in (0.0, 0.31, 0.9, 0.999, 1.0):
            term, series = 1.0, 1.0
            j = 0
            while term > 1e-18 * series:
                j += 1
                term *= lam_s * q_bar / j
                series += term
            series *= math.exp(-lam_s)
            closed = rel.r1_poisson(lam_s, 1.0, q_bar).estimate
            worst = max(worst, abs(closed - series) / max(series, 1e-300))
    ok_poisson = worst <= 1e-12

    worst_b = 0.0
    for n in (1, 13, 37, 60):
        for p_s in (0.05, 0.55, 1.0):
            for q_bar in (0.2, 0.93):
                direct = sum(
                    math.comb(n, j) * p_s**j * (1 - p_s) ** (n - j) * q_bar**j
                    for j in range(n + 1)
                )
                closed = rel.r1_binomial(p_s, 2.0 * n, 2.0, q_bar).estimate
                worst_b = max(worst_b, abs(closed - direct))
    ok_binom = worst_b <= 1e-12

    q = rel.QIntegrals(
        q1=rel.ValueWithError(0.991, 1e-5),
        q2=rel.ValueWithError(0.9955, 1e-8),
        q3={2.0: rel.ValueWithError(0.99115, 2e-5)},
        span=1.0,
    )
    m = int(100.0 // 2.0)
    exact = rel.r2_deterministic(2.0, 100.0, q).estimate == rel.qbar_chain(q, [2.0] * (m - 1))

    _report(3, ok_poisson and ok_binom and exact,
            f"poisson rel dev {worst:.2e}, binomial abs dev {worst_b:.2e}, "
            f"chain identity exact: {exact}", tic)


def test_criterion_04_conditional_mc_vs_closed(frac):
    tic = time.perf_counter()
    band = 1000.0
    bad = []
    idx = 0
    for t0 in (200.0, 350.0, 500.0):
        for mean_crack in (0.005, 0.01, 0.015):
            dist = od.CrackLengthDist.from_mean(mean_crack, 0.8)
            q_bar = rel.qbar(t0, dist, frac)
            pois = od.PoissonProcess(3.0 / band)
            mc_p = rel.r1_conditional_mc(pois, t0, dist, frac, band, 10_000,
                                         seedseq(4, idx))
            closed_p = rel.r1_poisson(pois.rate, band, q_bar).estimate
            if abs(mc_p.estimate - closed_p) > 3 * mc_p.std_error + 1e-12:
                bad.append(("poisson", t0, mean_crack))
            latt = od.BinomialLattice(pitch=2.0, p_s=0.9, zone=200.0)
            mc_b = rel.r1_conditional_mc(latt, t0, dist, frac, band, 10_000,
                                         seedseq(5, idx))
            closed_b = rel.r1_binomial(0.9, 200.0, 2.0, q_bar).estimate
            if abs(mc_b.estimate - closed_b) > 3 * mc_b.std_error + 1e-12:
                bad.append(("binomial", t0, mean_crack))
            idx += 1
    elapsed = time.perf_counter() - tic
    _report(4, not bad and elapsed <= 60.0,
            f"3x3 grid, both spacing laws, failures: {bad or 'none'}", tic)


def test_criterion_05_end_to_end_r2(frac, dist15, ou):
    tic = time.perf_counter()
    p = ou()
    band, pitch = 100.0, 2.0
    q = rel.compute_q_integrals(p, dist15, frac, 1.0, [pitch], 100_000, seedseq(6))
    closed = rel.r2_deterministic(pitch, band, q)
    mc = rel.r2_conditional_mc(od.DeterministicSpacing(pitch), p, dist15, frac,
                               band, m_outer=100, n_inner=100_000,
                               seed=seedseq(7), q=q)
    sim = od.simulate_r2(od.DeterministicSpacing(pitch), p, dist15, frac, band,
                         n_paths=100_000, seed=seedseq(8))
    tol_closed = 3 * sim.error + closed.numeric_error_bound
    tol_mc = 3 * math.hypot(sim.error, mc.std_error) + mc.numeric_error_bound
    d_closed = abs(closed.estimate - sim.value)
    d_mc = abs(mc.estimate - sim.value)
    elapsed = time.perf_counter() - tic
    _report(5, d_closed <= tol_closed and d_mc <= tol_mc and elapsed <= 900.0,
            f"chain={closed.estimate:.5f} mc={mc.estimate:.5f} "
            f"oracle={sim.value:.5f}+-{sim.error:.1e}, "
            f"|d|={d_closed:.2e}/{d_mc:.2e} vs tol {tol_closed:.2e}/{tol_mc:.2e}",
            tic)


def test_criterion_06_degeneracies(frac, dist15):
    tic = time.perf_counter()
    p = od.OuParams.from_cv(350.0, 1.0, 1e-6)
    band = 100.0

    q = rel.compute_q_integrals(p, dist15, frac, 1.0, [2.0], 100_000, seedseq(9))
    r2_det = rel.r2_deterministic(2.0, band, q)
    r1_det = rel.r1_deterministic(2.0, band, rel.qbar(350.0, dist15, frac))
    tol_det = 3 * r2_det.numeric_error_bound + 1e-6
    ok_det = abs(r2_det.estimate - r1_det.estimate) <= tol_det

    latt = od.BinomialLattice(pitch=2.0, p_s=0.9, zone=band)
    r2_mc = rel.r2_conditional_mc(latt, p, dist15, frac, band, m_outer=400,
                                  n_inner=50_000, seed=seedseq(10))
    r1_mc = rel.r1_conditional_mc(latt, 350.0, dist15, frac, band, m_outer=400,
                                  seed=seedseq(10))
    tol_mc = 3 * math.hypot(r2_mc.std_error, r1_mc.std_error) + r2_mc.numeric_error_bound
    ok_mc = abs(r2_mc.estimate - r1_mc.estimate) <= tol_mc

    ones = (
        rel.r1_poisson(0.3, 100.0, 1.0).estimate,
        rel.r1_binomial(0.9, 100.0, 2.0, 1.0).estimate,
        rel.r1_deterministic(2.0, 100.0, 1.0).estimate,
    )
    ok_ones = ones == (1.0, 1.0, 1.0)

    _report(6, ok_det and ok_mc and ok_ones,
            f"det |d|={abs(r2_det.estimate - r1_det.estimate):.2e} (tol {tol_det:.1e}), "
            f"lattice |d|={abs(r2_mc.estimate - r1_mc.estimate):.2e} (tol {tol_mc:.1e}), "
            f"qbar=1 forms: {ones}", tic)


def test_criterion_07_critical_tension_round_trips(frac, dist15):
    tic = time.perf_counter()
    rate, band, q = 1e-3, 3.5e5, 0.99

    t_pois = rel.critical_tension_poisson(rate, band, q, dist15, frac)
    rt_pois = rel.r1_poisson(rate, band, rel.qbar(t_pois, dist15, frac)).estimate

    t_bin = rel.critical_tension_binomial(0.9, 5000.0, 2.0, q, dist15, frac)
    rt_bin = rel.r1_binomial(0.9, 5000.0, 2.0, rel.qbar(t_bin, dist15, frac)).estimate

    numeric = rel.critical_tension_numeric(
        od.PoissonProcess(rate), band, q, dist15, frac, (50.0, 2000.0),
        tol_tension=t_pois * 2e-5,
    )
    rel_dev = abs(numeric.tension - t_pois) / t_pois

    ok = (abs(rt_pois - q) <= 1e-6 and abs(rt_bin - q) <= 1e-6 and rel_dev <= 1e-4)
    _report(7, ok,
            f"poisson round trip {rt_pois:.8f}, binomial {rt_bin:.8f}, "
            f"numeric rel dev {rel_dev:.2e}", tic)


def _tolerance(row_a, row_b):
    return (3.0 * math.hypot(row_a["std_error"], row_b["std_error"])
            + row_a["error_bound"] + row_b["error_bound"] + 1e-12)


def test_criterion_08_default_sweep_trends():
    tic = time.perf_counter()
    cfg = load_config(CONFIG_DIR / "default_sweep.ini", "reliability")
    meta, rows = run_reliability(cfg)
    assert len(rows) == 54  # 3 t0 x 3 c_t x 2 crack x 3 pitch

    def key(r):
        return (r["t0"], r["c_T"], r["mean_crack"], r["spacing_param"])

    table = {key(r): r for r in rows}
    t0s, cts, cracks, pitches = (200.0, 350.0, 500.0), (0.0, 0.05, 0.1), \
        (0.005, 0.015), (2500.0, 5000.0, 7500.0)
    violations = []
    for ct in cts:
        for crack in cracks:
            for pitch in pitches:
                for lo, hi in zip(t0s, t0s[1:]):
                    a, b = table[(hi, ct, crack, pitch)], table[(lo, ct, crack, pitch)]
                    if a["estimate"] > b["estimate"] + _tolerance(a, b):
                        violations.append(("t0", ct, crack, pitch))
    for ct in cts:
        for t0 in t0s:
            for pitch in pitches:
                a, b = table[(t0, ct, 0.015, pitch)], table[(t0, ct, 0.005, pitch)]
                if a["estimate"] > b["estimate"] + _tolerance(a, b):
                    violations.append(("crack", ct, t0, pitch))
                for lo, hi in zip(pitches, pitches[1:]):
                    pa, pb = table[(t0, ct, 0.015, lo)], table[(t0, ct, 0.015, hi)]
                    if pb["estimate"] < pa["estimate"] - _tolerance(pa, pb):
                        violations.append(("pitch", ct, t0, lo))
    for ct in (0.05, 0.1):
        for t0 in t0s:
            for crack in cracks:
                for pitch in pitches:
                    r2_row = table[(t0, ct, crack, pitch)]
                    r1_row = table[(t0, 0.0, crack, pitch)]
                    if r2_row["estimate"] > r1_row["estimate"] + _tolerance(r2_row, r1_row):
                        violations.append(("r2<=r1", ct, t0, crack, pitch))
    small_crack_floor = min(
        r["estimate"] for r in rows if r["mean_crack"] == 0.005
    )
    ok = not violations and small_crack_floor >= 0.99
    _report(8, ok,
            f"54 rows, monotonicity violations: {violations or 'none'}, "
            f"0.005 m crack reliability floor {small_crack_floor:.6f}", tic)


def test_criterion_09_error_bound_soundness(frac):
    # The total differential is a first-order bound: its guaranteed slack is
    # one eps_q3 unit (k vs k-1 terms), which dominates the quadratic
    # remainder only while k * delta stays small (delta < ~1/(2 k^2)).  The
    # trial design keeps refinement deltas in that regime of validity; far
    # outside it (k * delta = O(1)) the bound is violable at second order.
    tic = time.perf_counter()
    rng = np.random.default_rng(seedseq(20))
    failures = 0
    worst_margin = math.inf
    for trial in range(100):
        t0 = float(rng.uniform(290.0, 400.0))
        c_t = float(rng.uniform(0.04, 0.12))
        mean_crack = float(rng.uniform(0.008, 0.02))
        gap = float(rng.uniform(1.5, 4.0))
        k = int(rng.integers(2, 11))
        params = od.OuParams.from_cv(t0, 1.0, c_t)
        dist = od.CrackLengthDist.from_mean(mean_crack, 0.8)

        coarse = rel.compute_q_integrals(params, dist, frac, 1.0, [gap], 2000,
                                         seedseq(21, trial))
        fine = rel.compute_q_integrals(params, dist, frac, 1.0, [gap], 8000,
                                       seedseq(22, trial))
        gaps = [gap] * (k - 1)
        shift = abs(rel.qbar_chain(coarse, gaps) - rel.qbar_chain(fine, gaps))
        bound = rel.error_bound(
            abs(coarse.q1.value - fine.q1.value),
            abs(coarse.q2.value - fine.q2.value),
            abs(coarse.q3_for(gap).value - fine.q3_for(gap).value),
            k,
        )
        if shift > bound:
            failures += 1
        if bound > 0:
            worst_margin = min(worst_margin, bound - shift)
    _report(9, failures == 0,
            f"100 refinement trials, bound violations: {failures}, "
            f"smallest slack {worst_margin:.2e}", tic)


def test_criterion_10_reproducibility(tmp_path):
    tic = time.perf_counter()
    cfg_text = (CONFIG_DIR / "default_sweep.ini").read_text()
    cfg_text = cfg_text.replace("t0 = 200, 350, 500", "t0 = 350")
    cfg_text = cfg_text.replace("pitch = 2500, 5000, 7500", "pitch = 2500")
    cfg_text = cfg_text.replace("inner = 20000", "inner = 3000")
    cfg_text = cfg_text.replace("samples = 100", "samples = 30")
    small = tmp_path / "repro.ini"
    small.write_text(cfg_text)

    outs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / f"{name}.csv"
        rc = cli_main(["reliability", "--config", str(small), "--out", str(out),
                       "--threads", threads])
        assert rc == 0
        outs.append(out.read_text())
    ok = outs[0] == outs[1] == outs[2]
    _report(10, ok, "two runs and thread counts {1,4} byte-identical", tic)

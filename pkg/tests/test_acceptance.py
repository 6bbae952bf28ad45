"""Acceptance criteria, one test each.

Each test records a single PASS/FAIL line (printed in the terminal summary)
and fails when its criterion is not met at the stated tolerance.
"""

import math

import numpy as np
import pytest

from covqec import analytics as an
from covqec.encoder import CodeParams, complementary_output, covariance_defect, encode_choi
from covqec.harness import ExperimentConfig, run, run_compare, run_montecarlo, run_scaling
from covqec.metrics import SampleSummary, no_symmetry_baseline
from covqec.qstate import fidelity, purified_distance, trace_norm
from covqec.sectors import hamming_sectors, popcounts, sample_block_haar, trial_seed

from conftest import random_density


def test_criterion_01_scaling_slopes(acceptance):
    targets = {"1": (-0.50, -1.00), "5": (-0.50, -1.00),
               "n/3": (-1.00, -1.00), "n/2": (-1.00, -1.00)}
    parts, ok = [], True
    for alpha, (t_pur, t_one) in targets.items():
        fits = run_scaling(ExperimentConfig("scaling", "20:400:20", k=2, t=2,
                                            alpha_rule=alpha)).fits
        for metric, target in (("error_purified", t_pur), ("error_1norm", t_one)):
            slope = fits[metric].slope
            good = abs(slope - target) <= 0.03
            ok &= good
            tag = "P" if metric == "error_purified" else "1n"
            parts.append(f"a={alpha}:{tag}={slope:.4f}{'' if good else '!'}")
    acceptance(1, ok, "slopes over n in [20,400] (target +-0.03): " + " ".join(parts))


def test_criterion_02_leading_order_saturation(acceptance):
    vals = {n: an.choi_fidelity_closed(n, 1, 1, n // 2)[1] * 2 * n for n in (200, 250, 300, 400)}
    ok = all(0.95 <= v <= 1.05 for v in vals.values())
    acceptance(2, ok, "P*2n at a=1/2, k=t=1: " +
               ", ".join(f"n={n}:{v:.5f}" for n, v in vals.items()))


def test_criterion_03_lower_bound_matching(acceptance):
    ok, parts = True, []
    for k in (1, 2, 4):
        row = run_compare(ExperimentConfig("compare", [400], k=k, t=1, alpha_rule="n/2")).rows[0]
        for key in ("worst_ratio", "worst_ratio_closed"):
            ok &= abs(row[key] - 1) <= 0.02
        parts.append(f"k={k}: worst {row['worst_ratio']:.4f}/{row['worst_ratio_closed']:.5f}")
        if k == 1:
            ok &= abs(row["choi_ratio"] - 1) <= 0.02 and abs(row["choi_ratio_closed"] - 1) <= 0.02
            parts.append(f"choi {row['choi_ratio']:.4f}/{row['choi_ratio_closed']:.5f}")
    acceptance(3, ok, "ratios (leading/closed form) at n=400: " + "; ".join(parts))


def test_criterion_04_constant_alpha_expansion(acceptance):
    ns = np.array([50, 75, 100, 150, 200, 300, 400])
    ok, parts = True, []
    for alpha in (1, 2, 3):
        c = an.choi_kt1_coefficient(alpha)
        resid = np.array([n * (an.choi_fidelity_closed(int(n), 1, 1, alpha)[0] - 1) - c
                          for n in ns])
        slope = np.polyfit(np.log10(ns), np.log10(np.abs(resid)), 1)[0]
        ok &= slope <= -0.9
        parts.append(f"alpha={alpha}: slope {slope:.3f}")
    acceptance(4, ok, "residual n(F-1)-c over n in [50,400] (need <= -0.9): " + ", ".join(parts))


def test_criterion_05_decoupling_concentration(acceptance):
    res = run_montecarlo(ExperimentConfig("montecarlo", "8,10", k=1, t=1, alpha_rule="n/2",
                                          seeds=200, master_seed=2024))
    ok, parts = True, []
    for row in res.rows:
        sigma = row["deviation_sem"]
        mean_ok = row["deviation_mean"] <= row["deviation_bound"] + 3 * sigma
        frac_ok = row["frac_total_gt_2x_bound"] <= 0.10
        ok &= mean_ok and frac_ok
        parts.append(f"n={row['n']}: mean dev {row['deviation_mean']:.4f} <= "
                     f"{row['deviation_bound']:.4f}+3*{sigma:.4f}, "
                     f"frac over 2x {row['frac_total_gt_2x_bound']:.3f}")
    acceptance(5, ok, "; ".join(parts))


def test_criterion_06_worst_case_machinery(acceptance):
    row = run_montecarlo(ExperimentConfig("montecarlo", "8", k=1, t=1, alpha_rule="4",
                                          seeds=200, master_seed=7)).rows[0]
    lb = an.lower_bounds(8, 1)[1]
    bound = 2 ** (-0.5 * an.hmin_xxp(8, 1, 4, 0, 1).lower)
    ok_median = row["worst_upper_median"] >= lb
    ok_off = row["worst_offdiag_mean"] <= bound + 3 * row["worst_offdiag_sem"]
    acceptance(6, ok_median and ok_off,
               f"median upper {row['worst_upper_median']:.4f} >= {lb:.4f}; "
               f"E||rho^xx'||_1 {row['worst_offdiag_mean']:.4f} <= "
               f"{bound:.4f}+3*{row['worst_offdiag_sem']:.4f}")


def test_criterion_07_min_entropy_certificates(acceptance):
    rng = np.random.default_rng(77)
    worst_gap, certs_ok = 0.0, True
    for _ in range(100):
        dp, dq = (int(v) for v in rng.integers(2, 9, size=2))
        v = rng.standard_normal(dp * dq) + 1j * rng.standard_normal(dp * dq)
        v /= np.linalg.norm(v)
        value, cert = an.min_entropy_pure(v, (dp, dq))
        s = np.linalg.svd(v.reshape(dp, dq), compute_uv=False)
        target = -2 * math.log2(s.sum())
        worst_gap = max(worst_gap, abs(-math.log2(cert.primal_value) - target),
                        abs(-math.log2(cert.dual_value) - target))
        certs_ok &= cert.verify(1e-9)
    sandwich_ok = True
    for _ in range(20):
        m = int(rng.integers(2, 5))
        ranks = [int(r) for r in rng.integers(1, 3, size=m)]
        w = rng.dirichlet(np.ones(m))
        blocks = []
        for wi, r in zip(w, ranks):
            b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            blocks.append(b / np.linalg.norm(b) * math.sqrt(wi / r))
        sw = an.block_sandwich(blocks, ranks, (2, 2))
        total = sum(sw.block_values)
        sandwich_ok &= sw.verify(1e-9) and total / m - 1e-9 <= sw.lower <= sw.upper <= total + 1e-9
    ok = certs_ok and worst_gap <= 1e-9 and sandwich_ok
    acceptance(7, ok, f"100 pure states: max value gap {worst_gap:.2e}, certificates "
                      f"{'ok' if certs_ok else 'bad'}; 20 block sandwiches "
                      f"{'ok' if sandwich_ok else 'bad'}")


def test_criterion_08_path_equivalence(acceptance):
    worst = 0.0
    for n in range(2, 11):
        for k in (1, 2):
            if k >= n:
                continue
            for t in (0, 1, 2):
                for alpha in range(n - k + 1):
                    table = an.phi_avg_reduced(n, k, t, alpha)
                    zeta = np.diag(an.betas(n, k, t, alpha)[popcounts(t)])
                    F = fidelity(table.to_matrix(), np.kron(zeta, np.eye(2 ** k) / 2 ** k))
                    worst = max(worst, abs(F - an.choi_fidelity_closed(n, k, t, alpha)[0]))
    dec = hamming_sectors(6)
    tvs = {}
    for k, t, alpha in [(1, 1, 3), (2, 2, 2)]:
        params = CodeParams(6, k, alpha, t)
        acc = sum(complementary_output(encode_choi(sample_block_haar(dec, trial_seed(0, 6, s)),
                                                   params)) for s in range(1000)) / 1000
        tvs[(k, t)] = 0.5 * trace_norm(acc - an.phi_avg_reduced(6, k, t, alpha).to_matrix())
    ok = worst <= 1e-10 and all(v < 0.02 for v in tvs.values())
    acceptance(8, ok, f"closed vs matrix max |dF| {worst:.2e}; Monte Carlo TV at n=6: " +
               ", ".join(f"k={k},t={t}:{v:.4f}" for (k, t), v in tvs.items()))


def test_criterion_09_no_symmetry_contrast(acceptance):
    seeds = 100
    means = {n: no_symmetry_baseline(n, 1, 1, seeds, master_seed=3).summary.mean
             for n in (6, 8, 10)}
    sym = run_montecarlo(ExperimentConfig("montecarlo", "10", k=1, t=1, alpha_rule="n/2",
                                          seeds=seeds, master_seed=3)).rows[0]["total_mean"]
    ok = means[6] > means[8] > means[10] and means[10] < sym
    acceptance(9, ok, "full-Haar means " +
               ", ".join(f"n={n}:{v:.4f}" for n, v in means.items()) +
               f"; symmetric mean at n=10: {sym:.4f}")


def test_criterion_10_property_suite(acceptance):
    rng = np.random.default_rng(10)
    sandwich = triangle = True
    for _ in range(100):
        a, b, c = (random_density(rng, 4, rank=int(rng.integers(1, 5))) for _ in range(3))
        d1, p = trace_norm(a - b), purified_distance(a, b)
        sandwich &= 0.5 * d1 <= p + 1e-9 and p <= math.sqrt(2 * d1) + 1e-9
        triangle &= purified_distance(a, c) <= p + purified_distance(b, c) + 1e-9
    defect = max(covariance_defect(sample_block_haar(hamming_sectors(n), trial_seed(10, n)),
                                   CodeParams(n, 2, 1, 1), np.linspace(0, 6, 5))
                 for n in (4, 6))
    exact = True
    for n in range(2, 31, 4):
        for k in (1, 2):
            for t in (0, 1, min(3, n)):
                for alpha in (0, (n - k) // 2, n - k):
                    table = an.phi_avg_reduced_exact(n, k, t, alpha)
                    exact &= sum(math.comb(k, j) * math.comb(t, i) * table[j][i]
                                 for j in range(k + 1) for i in range(t + 1)) == 1
    cfg = dict(mode="montecarlo", n_range="6", k=1, t=1, alpha_rule="n/2", seeds=5,
               master_seed=1)
    determinism = run(ExperimentConfig(**cfg)).to_csv() == run(ExperimentConfig(**cfg)).to_csv()
    ok = sandwich and triangle and defect <= 1e-10 and exact and determinism
    acceptance(10, ok, f"sandwich {sandwich}, triangle {triangle}, covariance defect "
                       f"{defect:.1e}, exact trace {exact}, deterministic CSV {determinism}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

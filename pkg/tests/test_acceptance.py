"""Acceptance gate: one test per criterion, at the stated tolerances.

Artifacts land in ./results so `make figures` can render the four figures
from this suite's outputs.  Expensive artifacts are session fixtures shared
between criteria.  Every test emits a `criterion NN [PASS/FAIL]` line with
the measured values (printed in the terminal summary and written to
acceptance_report.txt) before asserting.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from sbm3color import coloring, experiments, model, ode
from sbm3color.cli import main as cli_main
from sbm3color.poisson import poisson_pmf
from sbm3color.streams import stream

pytestmark = pytest.mark.acceptance

RESULTS = Path(__file__).resolve().parent.parent / "results"
WORKERS = 2

D, BETA, ALPHA, DELTA = 4.03, 6.0, 15.0, 20

# frozen first-run regression of the d_max(alpha) curve (resolution 1e-3)
DMAX_CURVE = {
    2.0: 3.9363, 4.0: 3.9807, 6.0: 4.0038, 8.0: 4.0164, 10.0: 4.0244,
    12.0: 4.0291, 14.0: 4.0323, 16.0: 4.0347, 18.0: 4.0363, 20.0: 4.0379,
}

# clean-run seeds for criterion 6: every qualifying seed from a deterministic
# scan of seeds 0..2999 (abort-on-first-bad) at n=1e5, d=4.03, beta=6,
# alpha=15; each run is reproduced in full here and re-checked to be clean
CLEAN_RUN_SEEDS = [28, 531, 776, 909, 931, 991, 1242, 1965, 2102, 2132, 2159,
                   2174, 2491, 2999]


def _ok_line(report, num, ok, detail):
    report(f"criterion {num:>2} [{'PASS' if ok else 'FAIL'}] {detail}")


@pytest.fixture(scope="session", autouse=True)
def results_dir():
    RESULTS.mkdir(exist_ok=True)
    return RESULTS


# --- criterion 1: d_max(alpha=14) = 4.03 +- 0.01 via dmax-scan -------------------


@pytest.fixture(scope="session")
def dmax_rows(results_dir):
    return experiments.cmd_dmax_scan(
        sorted(DMAX_CURVE), DELTA, str(results_dir / "dmax_scan.csv"), workers=WORKERS
    )


def test_criterion_01_dmax_alpha14(dmax_rows, criterion_report):
    got = dict(dmax_rows)[14.0]
    ok = abs(got - 4.03) <= 0.01
    _ok_line(criterion_report, 1, ok, f"d_max(14) = {got:.4f} (target 4.03 +- 0.01)")
    assert ok


def test_criterion_01b_dmax_curve_regression(dmax_rows, criterion_report):
    got = dict(dmax_rows)
    worst = max(abs(got[a] - v) for a, v in DMAX_CURVE.items())
    rising = all(
        got[a] <= got[b] + 1e-9 for a, b in zip(sorted(got), sorted(got)[1:])
    )
    ok = worst <= 0.02 and rising
    _ok_line(
        criterion_report, 1, ok,
        f"d_max curve within {worst:.4f} of the frozen regression, monotone={rising}",
    )
    assert ok


# --- criterion 2: reference trajectory subcritical and smooth ---------------------


@pytest.fixture(scope="session")
def reference_run(results_dir):
    traj = experiments.cmd_ode(
        D, ALPHA, DELTA,
        str(results_dir / "ode_reference.csv"),
        report_out=str(results_dir / "assumption_report.json"),
    )
    return traj


def _peak_second_diff(traj):
    j = int(np.nanargmax(traj.lam))
    window = (traj.t >= traj.t[j] - 0.005) & (traj.t <= traj.t[j] + 0.005)
    lam = traj.lam[window]
    return float(np.nanmax(traj.lam)), float(np.abs(np.diff(lam, 2)).max()), lam


def test_criterion_02_lambda_subcritical_and_smooth(reference_run, criterion_report):
    traj = reference_run
    mask = traj.gam > 0
    peak = float(np.nanmax(traj.lam[mask]))
    sub = peak < 1.0
    # a kink keeps O(1) second differences under grid refinement; a smooth
    # peak shrinks them ~(h_fine/h_coarse)^2 = 100x.  Require a 10x margin.
    fine = ode.integrate(D, ALPHA, DELTA, grid_points=10 * ode.GRID_POINTS,
                         with_report=False)
    peak_c, d2_coarse, _ = _peak_second_diff(traj)
    peak_f, d2_fine, lam_window = _peak_second_diff(fine)
    shrink = d2_coarse / max(d2_fine, 1e-300)
    smooth = (
        shrink >= 10.0
        and not np.isnan(lam_window).any()
        and abs(peak_c - peak_f) < 2e-3
        and peak_f < 1.0
    )
    ok = sub and smooth
    _ok_line(
        criterion_report, 2, ok,
        f"peak lambda = {peak:.4f} < 1; second-difference shrink under x10 "
        f"refinement = {shrink:.0f}x (kink would stay ~1x)",
    )
    assert ok


# --- criterion 3: lambda-compare at n = 1e5 ----------------------------------------


@pytest.fixture(scope="session")
def lambda_cmp(results_dir):
    return experiments.cmd_lambda_compare(
        10**5, list(range(5)), D, ALPHA, BETA, DELTA,
        str(results_dir / "lambda_ode.csv"), str(results_dir / "lambda_emp.csv"),
        summary_out=str(results_dir / "lambda_summary.json"), workers=WORKERS,
    )


def test_criterion_03_lambda_compare(lambda_cmp, criterion_report):
    gap = lambda_cmp.max_lambda_gap()
    t_gap = abs(lambda_cmp.t_star_ode - lambda_cmp.t_star_emp)
    t0_gap = abs(lambda_cmp.lam_ode[0] - lambda_cmp.lam_emp[0])
    peak = lambda_cmp.grid[int(np.nanargmax(lambda_cmp.lam_ode))]
    off = np.abs(lambda_cmp.grid - peak) > 0.005
    mask = off & ~np.isnan(lambda_cmp.lam_emp)
    off_gap = float(np.abs(lambda_cmp.lam_ode[mask] - lambda_cmp.lam_emp[mask]).max())
    ok = gap <= 0.03 and t_gap <= 0.02 and t0_gap <= 0.01
    _ok_line(
        criterion_report, 3, ok,
        f"max |lambda_ode - lambda_emp| = {gap:.4f} (<= 0.03; off-peak {off_gap:.4f}), "
        f"|t*_ode - t*_emp| = {t_gap:.4f} (<= 0.02), t=0 gap = {t0_gap:.4f}",
    )
    # The overshoot is confined to the near-critical peak: at n = 1e5 the
    # finite-size critical window n^(-1/3) ~ 0.02 exceeds 1 - peak lambda =
    # 0.0034, so the empirical peak is intrinsically rounded below the ODE
    # curve by ~0.035 regardless of seed count (measured 0.033-0.044 across
    # seed windows, 0.039 with 15 seeds).  See the decisions ledger.
    assert ok


# --- criterion 4: agreement scaling slope -------------------------------------------


@pytest.fixture(scope="session")
def agreement_rows(results_dir):
    return experiments.cmd_agreement_scan(
        [10**3, 10**4, 10**5], 20, D, ALPHA, BETA,
        str(results_dir / "agreement_scan.csv"), workers=WORKERS,
    )


def test_criterion_04_agreement_slope(agreement_rows, criterion_report):
    slope = experiments.agreement_slope(agreement_rows)
    in_range = all(0.0 <= r[2] <= 1.0 for r in agreement_rows)
    ok = abs(slope + 0.5) <= 0.15 and in_range
    _ok_line(
        criterion_report, 4, ok,
        f"log-log agreement slope = {slope:.3f} (target -0.5 +- 0.15)",
    )
    assert ok


# --- criterion 5: bad-vertex statistics ----------------------------------------------


@pytest.fixture(scope="session")
def bad_summaries(results_dir):
    small = experiments.cmd_bad_vertices(
        10**4, 300, D, ALPHA, BETA,
        str(results_dir / "bad_vertices_small.csv"),
        summary_out=str(results_dir / "bad_vertices_small_summary.json"),
        workers=WORKERS,
    )
    large = experiments.cmd_bad_vertices(
        10**5, 120, D, ALPHA, BETA,
        str(results_dir / "bad_vertices.csv"),
        summary_out=str(results_dir / "bad_vertices_summary.json"),
        workers=WORKERS,
    )
    return small, large


def test_criterion_05a_mean_bad_size_stability(bad_summaries, criterion_report):
    small, large = bad_summaries
    ratio = max(small["mean_bad"], large["mean_bad"]) / max(
        1e-9, min(small["mean_bad"], large["mean_bad"])
    )
    ok = ratio <= 2.0
    _ok_line(
        criterion_report, 5, ok,
        f"mean bad: {small['mean_bad']:.2f} (n=1e4) vs {large['mean_bad']:.2f} "
        f"(n=1e5), ratio {ratio:.2f} (<= 2)",
    )
    assert ok


def test_criterion_05b_frac_zero_bad(bad_summaries, criterion_report):
    small, large = bad_summaries
    ok = small["frac_zero_bad"] > 0.1 and large["frac_zero_bad"] > 0.1
    _ok_line(
        criterion_report, 5, ok,
        f"frac_zero_bad = {small['frac_zero_bad']:.3f} (n=1e4), "
        f"{large['frac_zero_bad']:.3f} (n=1e5); criterion requires > 0.1 at both",
    )
    # At d = 4.03 the cascade runs at peak lambda 0.9966 and the expected
    # number of cycle-closing collisions per run is ~3-5, so the zero-bad
    # probability sits at 0.3-3%: the 0.1 constant is not attainable at the
    # pinned parameters.  See the decisions ledger for the full analysis.
    assert ok


# --- criterion 6: ground-truth loss on clean runs --------------------------------------


def test_criterion_06_ground_truth_loss(criterion_report):
    target = model.theoretical_ground_truth_loss(D, BETA)
    losses = []
    for seed in CLEAN_RUN_SEEDS:
        graph = model.generate(model.SbmParams(n=10**5, d=D, beta=BETA), seed)
        colouring_, stats, _ = coloring.run_am(graph, alpha=ALPHA, seed=seed,
                                               sample_every=0)
        assert stats.bad == 0 and stats.mono_edges == 0, f"seed {seed} not clean"
        reference = model.rebalance_on_isolated(graph, colouring_)
        assert model.mono_edge_count(graph, reference) == 0
        sizes = np.bincount(reference, minlength=4)[1:]
        assert sizes.max() - sizes.min() <= 1
        losses.append(model.loss(graph, graph.sigma_star, reference=reference))
    got = float(np.mean(losses))
    rel = abs(got - target) / target
    ok = rel <= 0.05
    _ok_line(
        criterion_report, 6, ok,
        f"loss(ground truth) = {got:.6f} over {len(losses)} clean runs "
        f"(target {target:.6f}, rel gap {rel:.1%}, tol 5%)",
    )
    assert ok


# --- criterion 7: exhaustive MAP oracle --------------------------------------------------


def test_criterion_07_exhaustive_map_oracle(criterion_report):
    worst = 0.0
    for seed in range(20):
        graph = model.generate(model.SbmParams(n=9, d=D, beta=BETA), seed)
        got, _ = model.max_posterior_exhaustive(graph)
        d_in, d_out = model.derive_rates(graph.d, graph.beta)
        best = -math.inf
        for code in range(3**9):
            sigma = [(code // 3**v) % 3 + 1 for v in range(9)]
            m_in = sum(1 for u, v in graph.edges if sigma[u] == sigma[v])
            m_out = graph.m - m_in
            sizes = [sigma.count(c) for c in (1, 2, 3)]
            n_in = sum(k * (k - 1) // 2 for k in sizes)
            n_out = 36 - n_in
            w = (
                m_in * math.log(d_in)
                + m_out * math.log(d_out)
                + (n_in - m_in) * math.log1p(-d_in / 9)
                + (n_out - m_out) * math.log1p(-d_out / 9)
            )
            best = max(best, w)
        worst = max(worst, abs(got - best))
    ok = worst <= 1e-9
    _ok_line(
        criterion_report, 7, ok,
        f"exhaustive argmax weight gap vs brute-force oracle = {worst:.2e} over "
        f"20 instances at n=9 (tol 1e-9)",
    )
    assert ok


# --- criterion 8: verify-theory ------------------------------------------------------------


def test_criterion_08_verify_theory(results_dir, criterion_report):
    checks = experiments.cmd_verify_theory(
        5, [1.0, 2.0, 15.0], [0.0, 2.0, 6.0],
        str(results_dir / "theory_report.json"), mc_trials=10**6,
    )
    failed = [c["check_name"] for c in checks if not c["pass"]]
    ok = not failed
    _ok_line(
        criterion_report, 8, ok,
        f"verify-theory: {len(checks)} checks, failures: {failed or 'none'}",
    )
    assert ok


# --- criterion 9: census at n = 1e6 -----------------------------------------------------------


def test_criterion_09_census(criterion_report):
    n = 10**6
    graph = model.generate(model.SbmParams(n=n, d=D, beta=BETA), 424242)
    cen = model.census(graph, DELTA)
    expected_ns = n / 3 * poisson_pmf(D, DELTA).sum()
    band = 4 * math.sqrt(n) * math.log(n)
    ns_ok = bool(np.all(np.abs(cen.ns - expected_ns) < band))

    rng = stream("acceptance.census-cells", 0)
    cells_checked = 0
    worst_sigma = 0.0
    while cells_checked < 10:
        s = int(rng.integers(1, 4))
        dvec = rng.integers(0, 6, size=3)
        mean = model.expected_cell(n, D, BETA, s, *map(int, dvec))
        if mean < 50:
            continue
        sd = math.sqrt(mean)
        dev = abs(cen.cell(s, *map(int, dvec)) - mean) / sd
        worst_sigma = max(worst_sigma, dev)
        cells_checked += 1
    cells_ok = worst_sigma < 3.0
    ok = ns_ok and cells_ok
    _ok_line(
        criterion_report, 9, ok,
        f"census: |N_s - n/3 P[Po<=Delta]| < 4 sqrt(n) log n = {band:.0f} ({ns_ok}); "
        f"10 cells worst deviation {worst_sigma:.2f} sigma (< 3)",
    )
    assert ok


# --- criterion 10: determinism across worker counts --------------------------------------------


def test_criterion_10_worker_determinism(tmp_path, criterion_report):
    digests = []
    for workers in ("1", "2", "3"):
        agree = tmp_path / f"agree_w{workers}.csv"
        bad = tmp_path / f"bad_w{workers}.csv"
        rc1 = cli_main([
            "agreement-scan", "--n-list", "1000,3000", "--runs", "6", "--d", "4.03",
            "--beta", "6", "--alpha", "15", "--out", str(agree), "--workers", workers,
        ])
        rc2 = cli_main([
            "bad-vertices", "--n", "3000", "--runs", "8", "--d", "4.03", "--beta", "6",
            "--alpha", "15", "--out", str(bad), "--workers", workers,
        ])
        assert rc1 == 0 and rc2 == 0
        digests.append((agree.read_bytes(), bad.read_bytes()))
    ok = all(dig == digests[0] for dig in digests)
    _ok_line(
        criterion_report, 10, ok,
        f"byte-identical CSVs across worker counts 1/2/3: {ok}",
    )
    assert ok


# --- criterion 11 (secondary): figures build from this suite's outputs --------------------------


def test_criterion_11_figures_from_results(
    dmax_rows, reference_run, lambda_cmp, agreement_rows, bad_summaries,
    results_dir, criterion_report,
):
    import subprocess
    import sys

    plots_dir = Path(__file__).resolve().parent.parent / "plots"
    out = results_dir.parent / "figures"
    proc = subprocess.run(
        [sys.executable, str(plots_dir / "make_figures.py"), str(results_dir), str(out)],
        capture_output=True, cwd=plots_dir,
    )
    produced = [
        (out / f"{name}.png").exists() and (out / f"{name}.svg").exists()
        for name in ("fig1_dmax", "fig2_lambda", "fig3_agreement", "fig4_badvertices")
    ]
    ok = proc.returncode == 0 and all(produced)
    _ok_line(
        criterion_report, 11, ok,
        f"make figures from the suite's CSVs: rc={proc.returncode}, "
        f"4 figures present: {all(produced)}",
    )
    assert ok, proc.stderr.decode()

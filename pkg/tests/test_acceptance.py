"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines on the terminal; every tolerance below is pinned, not calibrated.
"""

import math
import time
import numpy as np
import pytest

from cutofflab.cutoff import CutoffAnalyzer, CutoffProblem
from cutofflab.montecarlo import SimConfig, empirical_distance, simulate_paths
from cutofflab.phase import PhaseSystem, barriers, default_horizon, distinguished_trajectory, integrate_phase_summary
from cutofflab.potential import Potential, log_partition
from cutofflab.scaling import ScaledEigenview
from cutofflab.spectrum import Grid, eval_eigenfunction, solve_eigensystem, zero_count
from cutofflab.wkb import build_coeff_table, build_series, catalan_leading, default_truncation, eval_log_growth, sprime_terms


def _report(cid: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {cid}: {detail}"


def test_criterion_01_ou_spectrum():
    start = time.perf_counter()
    es = solve_eigensystem(Potential(1.0), 5)
    elapsed = time.perf_counter() - start
    errors = [abs(es.eigenvalues[k] - k) / k for k in range(1, 6)]
    ok = max(errors) < 1e-6 and elapsed < 30.0
    _report("1 (OU spectrum)", ok, f"max rel err {max(errors):.2e}, {elapsed:.1f}s")


def test_criterion_02_scaling_law():
    worst = 0.0
    for gamma in (0.5, 2.0):
        p = Potential(gamma)
        base = solve_eigensystem(p, 3)
        n_direct = base.grid.n_points * 3 // 4
        if n_direct % 2 == 0:
            n_direct += 1
        rescaled = {}
        for eps in (1.0, 0.5, 0.25):
            ls = eps ** (1.0 / (1.0 + gamma))
            grid = Grid(base.grid.half_width * ls, n_direct)
            direct = solve_eigensystem(p, 3, grid=grid, epsilon=eps)
            rescaled[eps] = direct.eigenvalues[1:4] * eps ** ((1.0 - gamma) / (1.0 + gamma))
        stacked = np.array([rescaled[e] for e in (1.0, 0.5, 0.25)])
        spread = np.max((stacked.max(axis=0) - stacked.min(axis=0)) / stacked.mean(axis=0))
        worst = max(worst, float(spread))
    _report("2 (scaling law)", worst < 1e-4, f"max cross-noise spread {worst:.2e}")


def test_criterion_03_catalan_identity():
    start = time.perf_counter()
    table = build_coeff_table(10)
    ok = True
    for (n, i), poly in table.items():
        if i == n and poly.coeffs != (catalan_leading(n),):
            ok = False
        if poly.degree > n - i:
            ok = False
        if math.copysign(1.0, poly(0.37)) != (-1.0) ** (n - i):
            ok = False
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 1.0
    _report("3 (Catalan identity)", ok, f"table levels <= 10 exact, {elapsed:.3f}s")


def test_criterion_04_closed_form_level_two():
    ok = True
    for gamma in (0.4, 0.5, 0.9):
        lam = 1.21
        series = build_series(Potential(gamma), lam)
        terms = {round(q, 12): c for c, q in sprime_terms(series, 2)}
        ok = ok and terms[round(-(2 * gamma + 1), 12)] == pytest.approx(-gamma * lam, rel=1e-14)
        ok = ok and terms[round(-3 * gamma, 12)] == pytest.approx(lam**2, rel=1e-14)
    resonant = build_series(Potential(1.0 / 3.0), 1.5)
    ok = ok and resonant.resonance == 2
    ok = ok and resonant.log_coefficient == pytest.approx(1.5**2, rel=1e-14)
    _report("4 (closed-form level 2)", ok, "exact coefficients plus resonant log term")


def test_criterion_05_remainder_boundedness(eigensystems):
    worst = 0.0
    ok = True
    for gamma in (0.5, 1.0, 2.0):
        start = time.perf_counter()
        es = eigensystems[gamma]
        p = Potential(gamma)
        for k in (1, 2, 3):
            lam = float(es.eigenvalues[k])
            series = build_series(p, lam, truncation=default_truncation(gamma) + 1)
            lo = series.x_star + 0.5
            hi = 0.9 * es.grid.half_width
            x = es.grid.nodes
            mask = (x >= lo) & (x <= hi)
            log_psi = np.log(np.abs(eval_eigenfunction(es, k, x[mask])))
            osc = float(np.ptp(log_psi - eval_log_growth(series, x[mask])))
            worst = max(worst, osc)
            ok = ok and osc < 0.2
        ok = ok and (time.perf_counter() - start) < 60.0
    _report("5 (remainder boundedness)", ok, f"max oscillation {worst:.3f} < 0.2")


def test_criterion_06_phase_portrait(eigensystems):
    lam1 = float(eigensystems[0.5].eigenvalues[1])
    t0 = 1.05 * (4.0 * lam1) ** (1.0 / (2.0 * 0.5))
    sys_ = PhaseSystem.power_drift(0.5, lam1, t0)
    theta_l, theta_u = barriers(sys_, t0)
    horizon = default_horizon(sys_)
    gaps = []
    for offset in (0.05, 0.3, 0.7):
        end = integrate_phase_summary(sys_, theta_u + offset, horizon).theta_end
        gaps.append(abs(end - math.pi / 2.0))
    inner = distinguished_trajectory(sys_, horizon)
    in_basin = theta_l < inner.theta[0] < theta_u
    inner_gap = abs(inner.theta[-1])
    ok = max(gaps) < 0.01 and in_basin and inner_gap < 0.01
    _report(
        "6 (phase portrait)",
        ok,
        f"upper-basin gaps max {max(gaps):.4f}, in-basin end |theta| {inner_gap:.4f}",
    )


def test_criterion_07_projection_oracle(eigensystems):
    gamma, eps, n = 0.5, 0.5, 3
    es = eigensystems[gamma]
    analyzer = CutoffAnalyzer(es, CutoffProblem(gamma=gamma, x0=2.0, n=n))
    p = Potential(gamma)
    ls = ScaledEigenview(es, eps).length_scale
    x = es.grid.nodes * ls
    trap = np.full(x.size, es.grid.spacing * ls)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    rho_inf = np.exp(log_partition(p, eps).log_c_eps - p.value(x) / eps)
    modes = es.eigenfunctions[1 : n + 1]
    coeffs = [analyzer.fourier_coefficient(eps, k).to_float() for k in range(1, n + 1)]
    rates = [analyzer.rate(eps, k) for k in range(1, n + 1)]
    worst = 0.0
    for t in (0.0, 0.5, 1.0):
        density = rho_inf * (
            1.0 + sum(math.exp(-rates[i] * t) * coeffs[i] * modes[i] for i in range(n))
        )
        oracle = math.sqrt(
            sum(float(np.sum(trap * density * modes[i])) ** 2 for i in range(n))
        )
        spectral = analyzer.distance(eps, t).to_float()
        worst = max(worst, abs(spectral - oracle) / oracle)
    _report("7 (projection oracle)", worst < 1e-6, f"max rel mismatch {worst:.2e}")


def test_criterion_08_regime_table(eigensystems):
    start = time.perf_counter()
    details = []
    ok = True

    window = CutoffAnalyzer(
        eigensystems[0.5], CutoffProblem(gamma=0.5, x0=2.0, n=3)
    ).analyze()
    ok = ok and window.verdict == "window_cutoff"
    details.append(f"g=0.5:{window.verdict}")

    profile_analyzer = CutoffAnalyzer(
        eigensystems[0.25], CutoffProblem(gamma=0.25, x0=2.0, n=3)
    )
    profile = profile_analyzer.analyze(r_grid=np.linspace(-2.0, 2.0, 17))
    lam3 = float(eigensystems[0.25].eigenvalues[3])
    gap = float(
        np.max(
            np.abs(
                np.asarray(profile.records[-1].profile)
                - np.exp(-lam3 * np.asarray(profile.r_grid))
            )
        )
    )
    ok = ok and profile.verdict == "profile_cutoff" and gap < 0.1
    details.append(f"g=0.25:{profile.verdict} gap {gap:.3f}")

    steep_analyzer = CutoffAnalyzer(
        eigensystems[2.0], CutoffProblem(gamma=2.0, x0=1.0, n=2)
    )
    steep = steep_analyzer.analyze()
    bound = steep_analyzer.sup_norm_bound()
    sup_d = max(
        steep_analyzer.distance(rec.epsilon, t).to_float()
        for rec in steep.records
        for t in (0.0, 0.5, 2.0)
    )
    ok = ok and steep.verdict == "no_cutoff" and sup_d <= bound + 1e-6
    details.append(f"g=2:{steep.verdict} sup {sup_d:.2f} <= {bound:.2f}")

    degenerate = CutoffAnalyzer(
        eigensystems[0.5], CutoffProblem(gamma=0.5, x0=0.0, n=1)
    ).analyze()
    ok = ok and degenerate.verdict == "degenerate_zero"
    details.append(f"centered n=1:{degenerate.verdict}")

    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 600.0
    _report("8 (regime table)", ok, "; ".join(details) + f"; {elapsed:.0f}s")


def test_criterion_09_mixing_asymptotics(eigensystems):
    offcenter = CutoffAnalyzer(
        eigensystems[0.5], CutoffProblem(gamma=0.5, x0=2.0, n=3)
    ).mixing_bracket_check()
    centered = CutoffAnalyzer(
        eigensystems[0.5], CutoffProblem(gamma=0.5, x0=0.0, n=2)
    ).mixing_bracket_check()
    ok = (
        offcenter.exponent_rel_error <= 0.15
        and offcenter.limit_gap_rel < 0.02
        and centered.exponent_rel_error <= 0.15
    )
    _report(
        "9 (mixing asymptotics)",
        ok,
        f"offcenter slope {offcenter.fitted_exponent:.3f} (target 1/3), "
        f"limit gap {offcenter.limit_gap_rel:.3%}, "
        f"centered slope {centered.fitted_exponent:.3f} (target 1/6)",
    )


def test_criterion_10_monte_carlo(eigensystems):
    start = time.perf_counter()
    gamma, eps, n = 0.5, 0.5, 2
    es = eigensystems[gamma]
    problem = CutoffProblem(gamma=gamma, x0=2.0, n=n)
    analyzer = CutoffAnalyzer(es, problem)
    cfg = SimConfig(
        gamma=gamma, epsilon=eps, x0=2.0, delta=problem.delta(eps),
        step=5e-4, horizon=2.0, n_paths=100_000, seed=20240817,
    )
    sample = simulate_paths(cfg, [0.5, 1.0, 2.0])
    z_scores = []
    for i, t in enumerate(sample.times):
        stat = empirical_distance(sample.states[i], es, eps, n)
        spectral = analyzer.distance(eps, float(t)).to_float()
        z_scores.append(abs(stat.value - spectral) / stat.std_error)
    small = SimConfig(
        gamma=gamma, epsilon=eps, x0=2.0, delta=problem.delta(eps),
        step=1e-3, horizon=0.5, n_paths=4096, seed=7,
    )
    rerun_equal = np.array_equal(
        simulate_paths(small, [0.5]).states, simulate_paths(small, [0.5]).states
    )
    elapsed = time.perf_counter() - start
    ok = max(z_scores) < 3.0 and rerun_equal and elapsed < 300.0
    _report(
        "10 (Monte Carlo)",
        ok,
        f"max |z| {max(z_scores):.2f} < 3, bitwise rerun {rerun_equal}, {elapsed:.0f}s",
    )


def test_criterion_11_parity_suite(eigensystems):
    ok = True
    for gamma, es in eigensystems.items():
        ok = ok and es.parities == ("even", "odd", "even", "odd", "even", "odd")
        ok = ok and all(zero_count(es, k) == k for k in range(6))
    for gamma in (0.5, 0.25):
        analyzer = CutoffAnalyzer(
            eigensystems[gamma], CutoffProblem(gamma=gamma, x0=0.0, n=5)
        )
        for k in (1, 3, 5):
            ok = ok and analyzer.fourier_coefficient(1e-3, k, backend="asymptotic").is_zero
    _report("11 (parity suite)", ok, "alternation, nodal counts and exact odd zeros")

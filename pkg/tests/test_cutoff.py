import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutofflab.cutoff import (
    CutoffAnalyzer,
    CutoffProblem,
    InitialDatum,
    LogValue,
    default_epsilon_grid,
)
from cutofflab.errors import CapabilityError, DegenerateZeroError, InvalidInput
from cutofflab.potential import Potential, log_partition
from cutofflab.scaling import ScaledEigenview, scaled_eigenvalue


@pytest.fixture(scope="module")
def half_analyzer(es_half):
    return CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=2.0, n=3))


@pytest.fixture(scope="module")
def quarter_analyzer(es_quarter):
    return CutoffAnalyzer(es_quarter, CutoffProblem(gamma=0.25, x0=2.0, n=3))


class TestLogValue:
    def test_roundtrip(self):
        for v in (2.5, -0.003, 1e-200):
            lv = LogValue.from_float(v)
            assert lv.to_float() == pytest.approx(v, rel=1e-15)
        assert LogValue.from_float(0.0).is_zero
        assert LogValue.zero().to_float() == 0.0

    def test_validation(self):
        with pytest.raises(InvalidInput):
            LogValue(2, 0.0)
        with pytest.raises(InvalidInput):
            LogValue(0, 1.0)

    @given(st.floats(-700.0, 700.0))
    def test_log_magnitude(self, log_abs):
        lv = LogValue(1, log_abs)
        assert math.log(lv.to_float()) == pytest.approx(log_abs, abs=1e-12)


class TestProblem:
    def test_datum_normalization(self):
        d = InitialDatum(2.0, 0.5)
        assert d.delta > 0.0
        with pytest.raises(InvalidInput):
            InitialDatum(2.0, 0.0)

    def test_grid_validation(self):
        with pytest.raises(InvalidInput):
            CutoffProblem(gamma=0.5, x0=1.0, n=2, epsilon_grid=(0.5, 0.5))
        with pytest.raises(InvalidInput):
            CutoffProblem(gamma=0.5, x0=1.0, n=2, epsilon_grid=(2.0, 0.5))
        with pytest.raises(InvalidInput):
            CutoffProblem(gamma=0.5, x0=1.0, n=0)

    def test_delta_rule_follows_gamma(self):
        shallow = CutoffProblem(gamma=0.5, x0=1.0, n=2)
        steep = CutoffProblem(gamma=2.0, x0=1.0, n=2)
        assert shallow.delta_rule == "scaling"
        assert steep.delta_rule == "unit"
        eps = 0.01
        assert shallow.delta(eps) == pytest.approx(eps ** (0.5 / 1.5), rel=1e-14)
        assert steep.delta(eps) == 1.0

    def test_default_grid(self):
        grid = default_epsilon_grid()
        assert len(grid) == 17
        assert grid[0] == 1.0 and grid[-1] == pytest.approx(1e-4, rel=1e-12)


class TestCoefficients:
    def test_ou_linear_mode_average(self, es_ou):
        # psi_1 = x, so the coefficient is the midpoint of the ball [1, 3]
        problem = CutoffProblem(gamma=1.0, x0=2.0, n=3, delta_rule="unit")
        an = CutoffAnalyzer(es_ou, problem)
        c = an.fourier_coefficient(1.0, 1, backend="numeric")
        assert c.sign == 1
        assert math.exp(c.log_abs) == pytest.approx(2.0, rel=1e-5)

    def test_centered_odd_modes_exactly_zero(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=0.0, n=3))
        for k in (1, 3):
            assert an.fourier_coefficient(0.2, k, backend="asymptotic").is_zero
            assert an.fourier_coefficient(0.2, k, backend="auto").is_zero

    def test_growth_exponent_moderate_noise(self, half_analyzer, es_half):
        # log c_k tracks lambda_k * eps**(-1/3) * |x0|**(1-g)/(1-g) up to O(1)
        spread = []
        for eps in (0.3, 0.1, 0.046):
            for k in (1, 2, 3):
                lam = float(es_half.eigenvalues[k])
                predicted = lam * eps ** (-1.0 / 3.0) * 2.0 ** 0.5 / 0.5
                diff = half_analyzer.fourier_coefficient(eps, k).log_abs - predicted
                spread.append(diff)
                assert abs(diff) < 4.0
        assert np.ptp(spread) < 3.0

    @pytest.mark.parametrize("fixture_name", ["half_analyzer", "quarter_analyzer"])
    def test_backend_cross_check(self, fixture_name, request):
        # numeric and calibrated asymptotic agree on the overlap window
        an = request.getfixturevalue(fixture_name)
        for k in (1, 2, 3):
            overlap = an._overlap_epsilons(k)
            assert overlap, f"no overlap for mode {k}"
            for eps in overlap:
                num = an.fourier_coefficient(eps, k, backend="numeric")
                asym = an.fourier_coefficient(eps, k, backend="asymptotic")
                assert abs(num.log_abs - asym.log_abs) < 0.3

    def test_capability_error_for_steep_wells(self, es_quartic):
        an = CutoffAnalyzer(es_quartic, CutoffProblem(gamma=2.0, x0=1.0, n=2))
        with pytest.raises(CapabilityError):
            an.fourier_coefficient(1e-4, 1)

    def test_backend_validation(self, half_analyzer):
        with pytest.raises(InvalidInput):
            half_analyzer.fourier_coefficient(0.5, 1, backend="exotic")
        with pytest.raises(InvalidInput):
            half_analyzer.fourier_coefficient(0.5, 99)

    def test_resonant_gamma_backend(self, eigensystems):
        # at gamma = 1/3 the top lattice term integrates to a logarithm;
        # the calibrated backend must still track the quadrature
        es = eigensystems[1.0 / 3.0]
        an = CutoffAnalyzer(es, CutoffProblem(gamma=1.0 / 3.0, x0=2.0, n=2))
        for k in (1, 2):
            for eps in an._overlap_epsilons(k):
                num = an.fourier_coefficient(eps, k, backend="numeric")
                asym = an.fourier_coefficient(eps, k, backend="asymptotic")
                assert abs(num.log_abs - asym.log_abs) < 0.3


class TestDistance:
    def test_single_mode_closed_form(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=2.0, n=1))
        eps, t = 0.4, 0.7
        c1 = an.fourier_coefficient(eps, 1)
        lam = an.rate(eps, 1)
        expected = c1.log_abs - lam * t
        assert an.distance(eps, t).log_abs == pytest.approx(expected, abs=1e-12)

    def test_degenerate_zero_for_all_times(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=0.0, n=1))
        for t in (0.0, 0.5, 5.0):
            assert an.distance(0.3, t).is_zero

    def test_strictly_decreasing(self, half_analyzer):
        ts = np.linspace(0.0, 4.0, 17)
        vals = [half_analyzer.distance(0.2, float(t)).log_abs for t in ts]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_appendix_quadrature_oracle(self, es_half, half_analyzer):
        # synthesize the evolved density and project it mode by mode
        gamma, eps, n = 0.5, 0.5, 3
        p = Potential(gamma)
        view = ScaledEigenview(es_half, eps)
        ls = view.length_scale
        x = es_half.grid.nodes * ls
        trap = np.full(x.size, es_half.grid.spacing * ls)
        trap[0] *= 0.5
        trap[-1] *= 0.5
        rho_inf = np.exp(log_partition(p, eps).log_c_eps - p.value(x) / eps)
        modes = es_half.eigenfunctions[1 : n + 1]  # psi_{k,eps}(x) = psi_k(x/ls)
        coeffs = [half_analyzer.fourier_coefficient(eps, k).to_float() for k in (1, 2, 3)]
        rates = [half_analyzer.rate(eps, k) for k in (1, 2, 3)]
        for t in (0.0, 0.5, 1.0):
            density = rho_inf * (
                1.0
                + sum(
                    math.exp(-rates[i] * t) * coeffs[i] * modes[i] for i in range(n)
                )
            )
            projections = [
                float(np.sum(trap * density * modes[i])) for i in range(n)
            ]
            oracle = math.sqrt(sum(v * v for v in projections))
            spectral = half_analyzer.distance(eps, t).to_float()
            assert abs(spectral - oracle) < 1e-6 * oracle


class TestCutoffTime:
    def test_limit_value(self, half_analyzer):
        t_eps, mode = half_analyzer.cutoff_time(1e-4)
        assert mode == 1
        limit = 2.0 * math.sqrt(2.0)
        assert abs(t_eps - limit) / limit < 0.02

    def test_small_gamma_uses_top_mode(self, quarter_analyzer):
        _, mode = quarter_analyzer.cutoff_time(1e-4)
        assert mode == 3

    def test_centered_uses_largest_even_mode(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=0.0, n=2))
        _, mode = an.cutoff_time(1e-4)
        assert mode == 2

    def test_centered_without_even_mode_degenerates(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=0.0, n=1))
        with pytest.raises(DegenerateZeroError):
            an.cutoff_time(1e-3)


class TestMixingTime:
    def test_zero_when_eta_dominates(self, half_analyzer):
        d0 = half_analyzer.distance(0.5, 0.0)
        eta = 2.0 * math.exp(d0.log_abs)
        assert half_analyzer.mixing_time(0.5, eta) == 0.0

    def test_single_mode_matches_closed_form(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=2.0, n=1))
        eps, eta = 0.3, 0.05
        tau = an.mixing_time(eps, eta)
        closed = (an.fourier_coefficient(eps, 1).log_abs - math.log(eta)) / an.rate(eps, 1)
        assert abs(tau - closed) < 1e-10 * closed

    def test_monotone_in_eta(self, half_analyzer):
        taus = [half_analyzer.mixing_time(0.2, eta) for eta in (0.01, 0.1, 0.5)]
        assert taus[0] > taus[1] > taus[2]

    def test_profile_regime_expansion(self, quarter_analyzer, es_quarter):
        # tau(eta) = t_eps + p^{-1}(eta) * w_eps + o(w_eps) with p(r)=e^{-lam_n r}
        eps = quarter_analyzer.problem.epsilon_grid[-1]
        t_eps, mode = quarter_analyzer.cutoff_time(eps)
        w = quarter_analyzer.problem.window(eps)
        lam = float(es_quarter.eigenvalues[mode])
        for eta in (0.5, 0.1):
            tau = quarter_analyzer.mixing_time(eps, eta)
            predicted = t_eps + (-math.log(eta) / lam) * w
            assert abs(tau - predicted) / w < 0.02

    def test_eta_validation(self, half_analyzer):
        with pytest.raises(InvalidInput):
            half_analyzer.mixing_time(0.5, 0.0)


class TestProfile:
    def test_small_gamma_profile_converges(self, quarter_analyzer, es_quarter):
        r = np.linspace(-2.0, 2.0, 17)
        eps = quarter_analyzer.problem.epsilon_grid[-1]
        curve = quarter_analyzer.profile_curve(eps, r)
        target = np.exp(-float(es_quarter.eigenvalues[3]) * r)
        assert np.max(np.abs(curve - target)) < 0.1

    def test_centered_profile(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=0.0, n=2))
        r = np.linspace(-1.5, 1.5, 13)
        curve = an.profile_curve(1e-4, r)
        target = np.exp(-float(es_half.eigenvalues[2]) * r)
        assert np.max(np.abs(curve - target)) < 0.1

    def test_pinned_value_at_zero(self, quarter_analyzer):
        for eps in (1e-3, 1e-4):
            value = quarter_analyzer.profile_curve(eps, [0.0])[0]
            assert 1.0 - 1e-9 <= value <= math.sqrt(3.0)


class TestVerdicts:
    def test_window_cutoff(self, half_analyzer):
        report = half_analyzer.analyze()
        assert report.verdict == "window_cutoff"
        assert report.mode_used == 1

    def test_threaded_sweep_identical(self, es_half):
        serial = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=2.0, n=2)).analyze()
        threaded = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=2.0, n=2)).analyze(
            threads=4
        )
        assert serial.verdict == threaded.verdict
        for a, b in zip(serial.records, threaded.records):
            assert a == b

    def test_profile_cutoff(self, quarter_analyzer):
        report = quarter_analyzer.analyze()
        assert report.verdict == "profile_cutoff"
        assert report.mode_used == 3

    def test_no_cutoff(self, es_quartic):
        an = CutoffAnalyzer(es_quartic, CutoffProblem(gamma=2.0, x0=1.0, n=2))
        report = an.analyze()
        assert report.verdict == "no_cutoff"
        assert report.sup_norm_bound is not None

    def test_degenerate_zero(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=0.0, n=1))
        report = an.analyze()
        assert report.verdict == "degenerate_zero"

    def test_ou_excluded(self, es_ou):
        an = CutoffAnalyzer(es_ou, CutoffProblem(gamma=1.0, x0=2.0, n=2))
        with pytest.raises(InvalidInput):
            an.analyze()

    def test_lower_mode_summands_vanish(self, quarter_analyzer):
        report = quarter_analyzer.analyze()
        tail = report.records[-8:]
        for j in (0, 1):  # modes 1 and 2, below the pinned mode 3
            seq = [rec.summand_logs[j] for rec in tail]
            assert all(b <= a + 1e-9 for a, b in zip(seq, seq[1:]))
            assert seq[-1] < math.log(0.05)

    def test_no_cutoff_uniform_bound(self, es_quartic):
        an = CutoffAnalyzer(es_quartic, CutoffProblem(gamma=2.0, x0=1.0, n=2))
        report = an.analyze()
        bound = an.sup_norm_bound()
        for rec in report.records:
            for t in (0.0, 0.1, 1.0, 10.0):
                assert an.distance(rec.epsilon, t).to_float() <= bound + 1e-6


class TestMixingBracket:
    def test_offcenter_exponent_and_limit(self, half_analyzer):
        report = half_analyzer.mixing_bracket_check()
        assert report.kind == "offcenter"
        assert report.passed
        assert report.limit_value == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-12)
        assert report.limit_gap_rel < 0.02

    def test_centered_exponent(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=0.0, n=2))
        report = an.mixing_bracket_check()
        assert report.kind == "centered"
        assert report.passed

    def test_quarter_limit(self, quarter_analyzer):
        report = quarter_analyzer.mixing_bracket_check()
        assert report.limit_value == pytest.approx(2.0**0.75 / 0.75, rel=1e-12)

    def test_insufficient_span(self, es_half):
        an = CutoffAnalyzer(es_half, CutoffProblem(gamma=0.5, x0=2.0, n=2))
        with pytest.raises(InvalidInput):
            an.mixing_bracket_check(epsilon_grid=(0.5, 0.45, 0.4, 0.35))

    def test_requires_shallow_well(self, es_quartic):
        an = CutoffAnalyzer(es_quartic, CutoffProblem(gamma=2.0, x0=1.0, n=2))
        with pytest.raises(InvalidInput):
            an.mixing_bracket_check()


class TestScaledRates:
    def test_rates_use_scaling_law(self, half_analyzer, es_half):
        eps = 0.3
        view = ScaledEigenview(es_half, eps)
        for k in (1, 2, 3):
            assert half_analyzer.rate(eps, k) == scaled_eigenvalue(view, k)

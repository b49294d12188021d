import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condmedian.errors import InvalidArgumentError, ModelError, NumericalError
from condmedian.models import Gamma, Gaussian, PointMass, TwoPoint, gamma_grid_prior, matched_gaussian_prior
from condmedian.risk import (
    RiskCurve,
    admissibility_check,
    bayes_risk,
    gaussian_abs_moment,
    risk_derivative,
    risk_scan,
    z_scores,
)

# Oracles computed once with mpmath at 40 digits and frozen here.
# E|X - 0.3(X + Z)|^1.5 for X = +-1 with equal weights, inner integral split at the kink
RISK_TWO_POINT = 0.62838188000976096145
# E|X - 0.6(X + Z)| for X ~ Gamma(2, 1)
RISK_GAMMA = 0.91630533956795951721

A_GRID = np.round(np.arange(-0.5, 1.5001, 0.05), 10)


class TestQuadrature:
    @given(st.floats(-1, 2))
    @settings(max_examples=30, deadline=None)
    def test_gaussian_p2(self, a):
        r, se = bayes_risk(Gaussian(0.0, 1.0), a, 2.0)
        assert se is None
        assert r == pytest.approx((1 - a) ** 2 + a * a, rel=1e-12)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, 4.0])
    @pytest.mark.parametrize("a", [-0.5, 0.0, 0.3, 0.5, 1.0, 1.4])
    def test_gaussian_closed_form(self, p, a):
        ref = gaussian_abs_moment((1 - a) ** 2 + a * a, p)
        assert bayes_risk(Gaussian(0.0, 1.0), a, p)[0] == pytest.approx(ref, rel=1e-8)

    @pytest.mark.parametrize("a", [3.4e-276, 1e-12, 1e-3, -1e-3])
    @pytest.mark.parametrize("p", [1.0, 1.5, 4.0])
    def test_tiny_slopes(self, a, p):
        # the kink of |c - a z| lies far outside the noise window for most x; the outer
        # integrand tends to |x|^p, smoothed only over a width ~a, which caps accuracy
        ref = gaussian_abs_moment((1 - a) ** 2 + a * a, p)
        assert bayes_risk(Gaussian(0.0, 1.0), a, p)[0] == pytest.approx(ref, rel=1e-6)

    def test_two_point_oracle(self):
        assert bayes_risk(TwoPoint(-1.0, 1.0), 0.3, 1.5)[0] == pytest.approx(RISK_TWO_POINT, rel=1e-10)

    def test_gamma_oracle(self):
        assert bayes_risk(Gamma(2.0, 1.0), 0.6, 1.0)[0] == pytest.approx(RISK_GAMMA, rel=1e-9)
        # the tabulated prior is normalized by the trapezoid rule on its own grid, whose
        # endpoint error h^2/12 * f'(0) rescales the density by about 1.3e-5
        g = gamma_grid_prior(2.0, 1.0)
        h = g.x[1] - g.x[0]
        scale = 1.0 / (1.0 - h * h / 12.0)
        assert bayes_risk(g, 0.6, 1.0)[0] == pytest.approx(RISK_GAMMA * scale, rel=1e-8)

    @pytest.mark.parametrize("p", [1.0, 2.5])
    def test_point_mass(self, p):
        for a in (-0.4, 0.0, 0.7):
            r = bayes_risk(PointMass(0.0), a, p)[0]
            assert r == pytest.approx(abs(a) ** p * gaussian_abs_moment(1.0, p), rel=1e-10, abs=1e-300)

    def test_zero_variance_gaussian_is_point_mass(self):
        assert bayes_risk(Gaussian(2.0, 0.0), 0.5, 1.5) == bayes_risk(PointMass(2.0), 0.5, 1.5)

    def test_derivative_at_one(self):
        for prior in (Gaussian(0.0, 1.0), TwoPoint(-1.0, 1.0)):
            d = risk_derivative(prior, 1.0, 1.0, side="left")
            assert d == pytest.approx(math.sqrt(2 / math.pi), abs=1e-3)
        with pytest.raises(InvalidArgumentError):
            risk_derivative(Gaussian(0.0, 1.0), 1.0, 1.0, side="middle")

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            bayes_risk(Gaussian(0.0, 1.0), 0.5, 0.5)
        with pytest.raises(InvalidArgumentError):
            bayes_risk(Gaussian(0.0, 1.0), math.inf, 2.0)
        with pytest.raises(InvalidArgumentError):
            bayes_risk(Gaussian(0.0, 1.0), 0.5, 2.0, method="simpson")
        with pytest.raises(InvalidArgumentError):
            bayes_risk(Gaussian(0.0, 1.0), 0.5, 2.0, method="monte-carlo")
        with pytest.raises(ModelError):
            bayes_risk(Gamma(0.5, 1.0), 0.5, 2.0)

    def test_curve_rejects_negative(self):
        with pytest.raises(NumericalError):
            RiskCurve(np.array([0.0]), np.array([-1.0]), 2.0, "quadrature")


class TestScan:
    @pytest.mark.parametrize(
        "prior",
        [Gaussian(0.0, 1.0), TwoPoint(-1.0, 1.0), gamma_grid_prior(2.0, 1.0), Gaussian(1.0, 0.5), PointMass(0.0)],
        ids=["gauss", "two_point", "gamma_grid", "shifted_gauss", "point_mass"],
    )
    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0])
    def test_admissible(self, prior, p):
        chk = admissibility_check(risk_scan(prior, p, A_GRID))
        assert chk["argmin_in_unit_interval"]
        assert chk["nondecreasing_above_one"] and chk["nonincreasing_below_zero"]

    def test_gaussian_p1_argmin(self):
        assert risk_scan(Gaussian(0.0, 1.0), 1.0, A_GRID).argmin == pytest.approx(0.5, abs=1e-12)

    def test_point_mass_argmin(self):
        assert risk_scan(PointMass(0.0), 2.0, A_GRID).argmin == 0.0

    @pytest.mark.parametrize("a_star", [0.25, 0.5, 0.75])
    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_matched_prior_minimizer(self, a_star, p):
        curve = risk_scan(matched_gaussian_prior(a_star), p, A_GRID)
        assert abs(curve.argmin - a_star) <= 0.05 + 1e-12

    def test_grid_must_increase(self):
        with pytest.raises(InvalidArgumentError):
            risk_scan(Gaussian(0.0, 1.0), 2.0, [0.5, 0.2])


class TestMonteCarlo:
    GRID = np.array([-0.5, 0.0, 0.5, 1.0, 1.5])

    def test_deterministic(self):
        a = risk_scan(TwoPoint(-1.0, 1.0), 1.5, self.GRID, "monte-carlo", 100_000, seed=7)
        b = risk_scan(TwoPoint(-1.0, 1.0), 1.5, self.GRID, "monte-carlo", 100_000, seed=7)
        assert np.array_equal(a.risk, b.risk) and np.array_equal(a.stderr, b.stderr)
        assert a.seed == 7 and a.n_samples == 100_000

    def test_independent_of_jobs(self):
        one = risk_scan(Gaussian(0.0, 1.0), 2.0, self.GRID, "monte-carlo", 300_000, seed=3, jobs=1)
        four = risk_scan(Gaussian(0.0, 1.0), 2.0, self.GRID, "monte-carlo", 300_000, seed=3, jobs=4)
        assert np.array_equal(one.risk, four.risk)

    def test_seed_changes_result(self):
        a = bayes_risk(Gaussian(0.0, 1.0), 0.5, 2.0, "monte-carlo", 10_000, seed=1)
        b = bayes_risk(Gaussian(0.0, 1.0), 0.5, 2.0, "monte-carlo", 10_000, seed=2)
        assert a != b

    @pytest.mark.parametrize(
        "prior", [Gaussian(0.0, 1.0), TwoPoint(-1.0, 1.0), gamma_grid_prior(2.0, 1.0)], ids=["gauss", "two_point", "gamma_grid"]
    )
    def test_agrees_with_quadrature(self, prior):
        quad = risk_scan(prior, 1.5, self.GRID)
        mc = risk_scan(prior, 1.5, self.GRID, "monte-carlo", 200_000, seed=11)
        assert np.max(z_scores(quad, mc)) <= 3.0

    def test_zero_stderr_needs_exact_agreement(self):
        quad = RiskCurve(np.array([0.0]), np.array([1.0]), 1.0, "quadrature")
        mc = RiskCurve(np.array([0.0]), np.array([1.0]), 1.0, "monte-carlo", 10, 1, np.array([0.0]))
        assert z_scores(quad, mc)[0] == 0.0
        off = RiskCurve(np.array([0.0]), np.array([1.1]), 1.0, "monte-carlo", 10, 1, np.array([0.0]))
        assert z_scores(quad, off)[0] == np.inf

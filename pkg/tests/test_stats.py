import math

import numpy as np
import pytest

from singular_em import (
    ArgumentError,
    FreeCovParams,
    IsoParams,
    TiedDiagParams,
    UnivariateMixture,
    hellinger_distance,
    hellinger_exponent_fit,
    likelihood_surface_scan,
    location_error,
    minimax_pair,
    rate_fit,
    squared_hellinger,
    total_variation,
)


class TestRateFit:
    def test_exact_quarter_slope(self):
        ns = [10, 100, 1000, 10000]
        errs = [5.0 * n ** -0.25 for n in ns]
        fit = rate_fit(ns, errs)
        assert fit.slope == pytest.approx(-0.25, abs=1e-12)
        assert fit.stderr_slope == pytest.approx(0.0, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_exact_eighth_slope(self):
        ns = [16, 256, 4096]
        errs = [2.0 * n ** -0.125 for n in ns]
        assert rate_fit(ns, errs).slope == pytest.approx(-0.125, abs=1e-12)

    def test_affine_equivariance(self):
        ns = [10, 30, 100, 300]
        errs = [0.5, 0.4, 0.33, 0.21]
        base = rate_fit(ns, errs)
        scaled = rate_fit(ns, [7.5 * e for e in errs])
        assert scaled.slope == pytest.approx(base.slope, abs=1e-12)
        assert scaled.intercept == pytest.approx(base.intercept + math.log(7.5), abs=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ArgumentError):
            rate_fit([10, 100], [1.0, 0.5])
        with pytest.raises(ArgumentError):
            rate_fit([10, 100, 1000], [1.0, -0.5, 0.2])


class TestDistances:
    def test_identity_is_zero(self):
        p = UnivariateMixture(theta=0.2, v=1.1)
        assert hellinger_distance(p, p) < 1e-8
        assert total_variation(p, p) < 1e-8

    def test_symmetry(self):
        p = UnivariateMixture(theta=0.1, v=1.0)
        q = UnivariateMixture(theta=0.25, v=0.9)
        assert hellinger_distance(p, q) == pytest.approx(hellinger_distance(q, p), abs=1e-10)

    def test_against_trapezoid_oracle(self):
        # frozen 1e6-node trapezoid oracle for the pair at theta1 = 0.1
        pair = minimax_pair(0.1, 1.0)
        assert hellinger_distance(pair.eta1, pair.eta2) == pytest.approx(
            0.00020091053980008825, abs=1e-8)
        assert total_variation(pair.eta1, pair.eta2) == pytest.approx(
            0.0001690467381292546, abs=1e-8)

    def test_range_and_tv_hellinger_inequality(self):
        gen = np.random.default_rng(12)
        for _ in range(6):
            p = UnivariateMixture(theta=float(gen.uniform(0, 0.8)),
                                  v=float(gen.uniform(0.5, 2.0)))
            q = UnivariateMixture(theta=float(gen.uniform(0, 0.8)),
                                  v=float(gen.uniform(0.5, 2.0)))
            h = hellinger_distance(p, q)
            v = total_variation(p, q)
            assert 0.0 <= h <= 1.0 and 0.0 <= v <= 1.0
            assert v <= math.sqrt(2.0) * h + 1e-12

    def test_accepts_iso_params(self):
        p = IsoParams(theta=[0.1], sigma2=1.0)
        q = UnivariateMixture(theta=0.1, v=1.0)
        assert hellinger_distance(p, q) < 1e-9

    def test_separated_far_pair(self):
        p = UnivariateMixture(theta=0.0, v=0.02)
        q = UnivariateMixture(theta=8.0, v=0.02)
        assert total_variation(p, q) == pytest.approx(1.0, abs=1e-6)


class TestMinimaxPair:
    def test_degenerate_at_zero(self):
        pair = minimax_pair(0.0, 1.0)
        assert pair.eta1 == pair.eta2

    def test_displayed_construction(self):
        pair = minimax_pair(0.1, 1.0)
        assert pair.eta1.theta == 0.1 and pair.eta1.v == pytest.approx(1.03, abs=1e-15)
        assert pair.eta2.theta == 0.2 and pair.eta2.v == 1.0

    def test_construction_identities_exact(self):
        for t1 in (0.03, 0.1, 0.25):
            pair = minimax_pair(t1, 0.7)
            assert pair.eta2.theta == 2.0 * t1
            assert pair.eta1.v == 0.7 + 3.0 * t1 ** 2

    def test_parameter_distance_is_four_theta_sq(self):
        pair = minimax_pair(0.1, 1.0)
        assert pair.parameter_distance == pytest.approx(4 * 0.01, rel=1e-12)

    def test_rejects_invalid(self):
        with pytest.raises(ArgumentError):
            minimax_pair(0.4, 1.0)
        with pytest.raises(ArgumentError):
            minimax_pair(0.1, -1.0)


class TestHellingerExponent:
    def test_slope_in_window(self):
        fit = hellinger_exponent_fit(np.geomspace(0.02, 0.1, 7))
        assert 7.5 <= fit.slope <= 8.5

    def test_stability_under_tightened_tolerance(self):
        grid = np.geomspace(0.03, 0.1, 5)
        a = hellinger_exponent_fit(grid, tol=1e-12)
        b = hellinger_exponent_fit(grid, tol=1e-13)
        assert abs(a.slope - b.slope) < 0.01

    def test_requires_enough_points(self):
        with pytest.raises(ArgumentError):
            hellinger_exponent_fit([0.05])


class TestLocationError:
    def test_symmetric_fits(self):
        assert location_error("isotropic", IsoParams(theta=[0.0, 0.0], sigma2=1.0)) == 0.0
        assert location_error("tied_diagonal",
                              TiedDiagParams(theta=[3.0, 4.0], diag_vars=[1, 1])) == 5.0

    def test_free_zero_means(self):
        p = FreeCovParams(weights=[0.5, 0.5], means=[[0, 0], [0, 0]],
                          covariances=[np.eye(2), np.eye(2)])
        assert location_error("free", p) == 0.0

    def test_free_weighted_formula(self):
        p = FreeCovParams(weights=[1 / 3, 2 / 3], means=[[0.3, 0.0], [0.1, 0.0]],
                          covariances=[np.eye(2), np.eye(2)])
        assert location_error("free", p) == pytest.approx(
            math.sqrt(0.09 / 3 + 2 * 0.01 / 3), abs=1e-14)


class TestSurfaceScan:
    def test_location_only_exponent(self):
        scan = likelihood_surface_scan("location_only", np.geomspace(0.05, 0.3, 9))
        assert 3.5 <= scan.fit.slope <= 4.5

    def test_coupled_exponent(self):
        scan = likelihood_surface_scan("location_scale_coupled",
                                       np.geomspace(0.05, 0.3, 9))
        assert 7.5 <= scan.fit.slope <= 8.5

    def test_gaps_nonnegative(self):
        scan = likelihood_surface_scan("location_only", np.geomspace(0.02, 0.5, 12))
        assert np.all(scan.gap >= 0)

    def test_grid_validation(self):
        with pytest.raises(ArgumentError):
            likelihood_surface_scan("location_only", [0.0, 0.1, 0.2])
        with pytest.raises(ArgumentError):
            likelihood_surface_scan("weird_mode", [0.1, 0.2, 0.3])

import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from singular_em import (
    DataSet,
    EmIterationError,
    FreeCovParams,
    IsoParams,
    RngSpec,
    StopRule,
    TiedDiagParams,
    default_init,
    default_stop_rule,
    em_step_free,
    em_step_isotropic,
    em_step_tied_diagonal,
    q_function,
    run_em,
    sample_log_likelihood,
    sample_standard_normal,
)
from singular_em.em import location


def slaved_iso(theta, data):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return IsoParams(theta=theta, sigma2=data.z_nd - float(theta @ theta) / data.d)


class TestIsotropicStep:
    def test_zero_is_fixed_point(self):
        data = sample_standard_normal(200, 2, RngSpec(1))
        out = em_step_isotropic(IsoParams(theta=[0.0, 0.0], sigma2=1.0), data)
        assert np.all(out.theta == 0.0)
        assert out.sigma2 == pytest.approx(data.z_nd, abs=1e-15)

    def test_two_point_desk_case(self):
        data = DataSet.from_samples(np.array([[1.0], [-1.0]]))
        assert data.z_nd == 1.0
        out = em_step_isotropic(IsoParams(theta=[0.5], sigma2=0.75), data)
        assert out.theta[0] == pytest.approx(math.tanh(2.0 / 3.0), abs=1e-15)
        assert out.sigma2 == pytest.approx(1.0 - math.tanh(2.0 / 3.0) ** 2, abs=1e-15)

    def test_odd_symmetry(self):
        data = sample_standard_normal(500, 3, RngSpec(2))
        th = np.array([0.2, -0.1, 0.05])
        a = em_step_isotropic(slaved_iso(th, data), data)
        b = em_step_isotropic(slaved_iso(-th, data), data)
        assert np.allclose(a.theta, -b.theta, atol=0)

    def test_domain_error(self):
        data = DataSet.from_samples(np.array([[1.0], [-1.0]]))
        with pytest.raises(Exception) as exc:
            em_step_isotropic(IsoParams(theta=[1.5], sigma2=0.5), data)
        assert "domain" in str(exc.value).lower() or "denominator" in str(exc.value).lower()

    def test_sigma_clamp_fires_in_degenerate_case(self):
        # equal-norm data with saturated weights drives sigma'^2 to exactly 0
        data = DataSet.from_samples(np.array([[1.0], [-1.0]]))
        out = em_step_isotropic(IsoParams(theta=[0.99999], sigma2=1e-5), data)
        assert out.sigma2 == 1e-8

    def test_conservation_identity(self):
        data = sample_standard_normal(300, 2, RngSpec(3))
        p = slaved_iso([0.1, 0.05], data)
        out = em_step_isotropic(p, data)
        assert out.sigma2 + float(out.theta @ out.theta) / 2 == pytest.approx(
            data.z_nd, abs=1e-12)


class TestTiedStep:
    def test_zero_theta_gives_moments(self):
        data = sample_standard_normal(400, 2, RngSpec(4))
        p = TiedDiagParams(theta=[0.0, 0.0], diag_vars=[1.0, 1.0])
        out = em_step_tied_diagonal(p, data)
        assert np.all(out.theta == 0.0)
        assert np.allclose(out.diag_vars, np.mean(data.samples ** 2, axis=0), atol=1e-14)

    def test_reduces_to_isotropic_when_tied_equal(self):
        data = sample_standard_normal(300, 2, RngSpec(5))
        th = np.array([0.15, -0.08])
        s2 = data.z_nd - float(th @ th) / 2
        tied = em_step_tied_diagonal(TiedDiagParams(theta=th, diag_vars=[s2, s2]), data)
        iso = em_step_isotropic(IsoParams(theta=th, sigma2=s2), data)
        assert np.allclose(tied.theta, iso.theta, atol=1e-13)
        assert float(np.mean(tied.diag_vars)) == pytest.approx(iso.sigma2, abs=1e-13)

    def test_three_point_desk_case(self):
        X = np.array([[1.0, 0.5], [-0.5, 1.0], [0.0, -1.0]])
        data = DataSet.from_samples(X)
        th = np.array([0.2, 0.1])
        v = np.array([0.8, 0.9])
        # direct evaluation of the symmetric-mixture E and M steps
        w = 1.0 / (1.0 + np.exp(-2.0 * X @ (th / v)))
        theta_exp = ((2 * w - 1) @ X) / 3
        v_exp = np.mean(X ** 2, axis=0) - theta_exp ** 2
        out = em_step_tied_diagonal(TiedDiagParams(theta=th, diag_vars=v), data)
        assert np.allclose(out.theta, theta_exp, atol=1e-14)
        assert np.allclose(out.diag_vars, v_exp, atol=1e-14)


class TestFreeStep:
    def test_identical_components_fixed(self):
        data = sample_standard_normal(300, 2, RngSpec(6))
        p = FreeCovParams(weights=[0.5, 0.5], means=[[0.0, 0.0], [0.0, 0.0]],
                          covariances=[np.eye(2), np.eye(2)])
        out = em_step_free(p, data)
        assert np.allclose(out.weights, [0.5, 0.5], atol=1e-12)
        assert np.allclose(out.means[0], out.means[1], atol=1e-12)

    def test_responsibilities_normalized(self):
        from singular_em.model import _free_component_log_pdfs
        data = sample_standard_normal(100, 2, RngSpec(7))
        p = FreeCovParams(weights=[0.3, 0.7], means=[[0.5, 0.0], [-0.5, 0.2]],
                          covariances=[np.eye(2) * 0.9, np.eye(2) * 1.2])
        lp = _free_component_log_pdfs(p, data.samples) + np.log(p.weights)
        resp = np.exp(lp - np.logaddexp(lp[:, 0], lp[:, 1])[:, None])
        assert np.allclose(resp.sum(axis=1), 1.0, atol=1e-12)

    def test_four_point_desk_case(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.2], [0.5, -0.5], [-0.2, 0.8]])
        data = DataSet.from_samples(X)
        p = FreeCovParams(weights=[0.4, 0.6], means=[[0.3, 0.0], [-0.3, 0.1]],
                          covariances=[np.eye(2) * 0.8, np.eye(2) * 1.1])
        # independent responsibility computation via scipy densities
        pdf0 = multivariate_normal(p.means[0], p.covariances[0]).pdf(X)
        pdf1 = multivariate_normal(p.means[1], p.covariances[1]).pdf(X)
        num = np.stack([0.4 * pdf0, 0.6 * pdf1], axis=1)
        r = num / num.sum(axis=1, keepdims=True)
        w_exp = r.mean(axis=0)
        mu_exp = (r.T @ X) / r.sum(axis=0)[:, None]
        out = em_step_free(p, data)
        assert np.allclose(out.weights, w_exp, atol=1e-12)
        assert np.allclose(out.means, mu_exp, atol=1e-12)
        for k in range(2):
            diff = X - mu_exp[k]
            cov_exp = (diff * r[:, k:k + 1]).T @ diff / r[:, k].sum()
            assert np.allclose(out.covariances[k], cov_exp, atol=1e-12)


class TestQFunction:
    def test_equal_weights_at_zero_theta(self):
        data = sample_standard_normal(50, 2, RngSpec(8))
        p = IsoParams(theta=[0.0, 0.0], sigma2=1.0)
        q = q_function(p, p, data)
        # w == 1/2 everywhere, so Q is the average complete-data log-density
        expected = float(np.mean(-math.log(2 * math.pi) - data.sq_norms / 2))
        assert q == pytest.approx(expected, abs=1e-12)

    def test_two_point_desk_case(self):
        data = DataSet.from_samples(np.array([[1.0], [0.5]]))
        cur = IsoParams(theta=[0.3], sigma2=0.9)
        cand = IsoParams(theta=[0.1], sigma2=1.1)
        total = 0.0
        for x in (1.0, 0.5):
            w = math.exp(-(0.3 - x) ** 2 / 1.8) / (math.exp(-(0.3 - x) ** 2 / 1.8)
                                                   + math.exp(-(0.3 + x) ** 2 / 1.8))
            lp = math.log(math.exp(-(x - 0.1) ** 2 / 2.2) / math.sqrt(2 * math.pi * 1.1))
            lm = math.log(math.exp(-(x + 0.1) ** 2 / 2.2) / math.sqrt(2 * math.pi * 1.1))
            total += w * lp + (1 - w) * lm
        assert q_function(cand, cur, data) == pytest.approx(total / 2, abs=1e-12)

    def test_m_step_maximizes_q(self):
        data = sample_standard_normal(200, 2, RngSpec(9))
        cur = slaved_iso([0.12, -0.05], data)
        best = em_step_isotropic(cur, data)
        q_best = q_function(best, cur, data)
        gen = RngSpec(9, 1).generator()
        for _ in range(100):
            d_theta = gen.standard_normal(2) * 1e-3
            d_s2 = gen.standard_normal() * 1e-3
            perturbed = IsoParams(theta=best.theta + d_theta,
                                  sigma2=max(best.sigma2 + d_s2, 1e-8))
            assert q_function(perturbed, cur, data) <= q_best + 1e-12


class TestRunEm:
    def test_zero_init_converges_immediately(self):
        data = sample_standard_normal(100, 2, RngSpec(10))
        init = IsoParams(theta=[0.0, 0.0], sigma2=data.z_nd)
        traj = run_em("isotropic", init, data, StopRule(tol_theta=1e-9, max_iters=50))
        assert traj.iterations == 1
        assert traj.stopped_reason == "converged"

    @pytest.mark.parametrize("family,d", [("isotropic", 1), ("isotropic", 2),
                                          ("tied_diagonal", 2), ("free", 2)])
    def test_monotone_loglik(self, family, d):
        for rep in range(4):
            data = sample_standard_normal(400, d, RngSpec(11, rep))
            init = default_init(family, data, 0.1, RngSpec(12, rep))
            traj = run_em(family, init, data, StopRule(tol_theta=1e-7, max_iters=200))
            assert np.all(np.diff(traj.loglik) >= -1e-10)

    def test_loglik_matches_iterates(self):
        data = sample_standard_normal(200, 1, RngSpec(13))
        init = default_init("isotropic", data, 0.1, RngSpec(14))
        traj = run_em("isotropic", init, data, StopRule(tol_theta=1e-6, max_iters=100))
        assert len(traj.iterates) == len(traj.loglik) == traj.iterations + 1
        recomputed = [sample_log_likelihood(p, data) for p in traj.iterates]
        assert np.allclose(recomputed, traj.loglik, atol=1e-13)

    def test_equivariance_under_negation(self):
        data = sample_standard_normal(300, 2, RngSpec(15))
        neg = DataSet.from_samples(-data.samples)
        init = default_init("isotropic", data, 0.1, RngSpec(16))
        init_neg = IsoParams(theta=-init.theta, sigma2=init.sigma2)
        t1 = run_em("isotropic", init, data, StopRule(tol_theta=1e-8, max_iters=80))
        t2 = run_em("isotropic", init_neg, neg, StopRule(tol_theta=1e-8, max_iters=80))
        for a, b in zip(t1.iterates, t2.iterates):
            assert np.array_equal(a.theta, -b.theta)

    def test_deterministic(self):
        data = sample_standard_normal(500, 1, RngSpec(17))
        init = default_init("isotropic", data, 0.1, RngSpec(18))
        stop = StopRule(tol_theta=1e-9, max_iters=300)
        t1 = run_em("isotropic", init, data, stop)
        t2 = run_em("isotropic", init, data, stop)
        assert t1.iterations == t2.iterations
        assert np.array_equal(t1.final.theta, t2.final.theta)

    def test_conservation_along_trajectory(self):
        data = sample_standard_normal(2000, 2, RngSpec(19))
        init = default_init("isotropic", data, 0.1, RngSpec(20))
        traj = run_em("isotropic", init, data, StopRule(tol_theta=1e-9, max_iters=400))
        assert not traj.clamped
        for p in traj.iterates[1:]:
            assert p.sigma2 + float(p.theta @ p.theta) / 2 == pytest.approx(
                data.z_nd, abs=1e-12)

    def test_light_mode_matches_full(self):
        data = sample_standard_normal(3000, 1, RngSpec(21))
        init = default_init("isotropic", data, 0.1, RngSpec(22))
        stop = StopRule(tol_theta=1e-9, max_iters=500)
        full = run_em("isotropic", init, data, stop)
        light = run_em("isotropic", init, data, stop, record_loglik=False,
                       record_iterates=False)
        assert light.iterations == full.iterations
        assert np.array_equal(light.final.theta, full.final.theta)

    def test_error_carries_iteration_index(self):
        data = DataSet.from_samples(np.array([[1.0], [-1.0]]))
        init = IsoParams(theta=[0.9], sigma2=0.19)
        # converges toward |theta| = 1 where the denominator collapses
        with pytest.raises(EmIterationError) as exc:
            run_em("isotropic", init, data, StopRule(tol_theta=1e-15, max_iters=10000))
        assert exc.value.iteration >= 0

    def test_example_run_small_n(self):
        n = 10_000
        data = sample_standard_normal(n, 1, RngSpec(23))
        init = default_init("isotropic", data, 0.1, RngSpec(24))
        traj = run_em("isotropic", init, data, default_stop_rule(n, 1),
                      record_loglik=False, record_iterates=False)
        assert float(np.abs(traj.final.theta[0])) < 0.2

    def test_default_stop_rule_budgets(self):
        r1 = default_stop_rule(10000, 1)
        r2 = default_stop_rule(10000, 2)
        assert r1.max_iters == math.ceil(20 * 10000 ** 0.75 * math.log(10000))
        assert r2.max_iters == math.ceil(20 * math.sqrt(5000) * math.log(10000))

    def test_series_path_matches_direct_step(self):
        data = sample_standard_normal(6000, 2, RngSpec(25))
        from singular_em._faststep import SeriesStepper
        stepper = SeriesStepper(data.samples)
        for norm in (0.01, 0.05, 0.2, 0.4):
            u = np.array([norm, 0.0]) / math.sqrt(1.0)
            direct = (np.tanh(data.samples @ u) @ data.samples) / data.n
            fast = stepper.location_update(u)
            assert np.allclose(direct, fast, atol=5e-15)

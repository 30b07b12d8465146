import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import gammaln

from zinhpp.data import SpatialGraph
from zinhpp.likelihood import Likelihood
from zinhpp.model import ModelSpec, ParameterLayout, PriorConfig
from zinhpp.priors import (
    IcarPrior,
    Posterior,
    block_log_priors,
    gamma_logpdf,
    icar_log_density,
    log_posterior_kernel,
)

from conftest import ALL_VARIANTS, central_diff, make_toy, random_point, spec_for


def dense_icar_oracle(omega, tau, graph):
    """Log-density up to a constant from the pseudo-inverse of tau * Q."""
    q = graph.laplacian()
    prec = tau * q
    cov = np.linalg.pinv(prec, hermitian=True)
    ev = np.linalg.eigvalsh(cov)
    logdet_pseudo = np.sum(np.log(ev[ev > 1e-10]))
    return -0.5 * logdet_pseudo - 0.5 * omega @ prec @ omega


class TestDensities:
    def test_gamma_value(self):
        ref = -0.1 + 0.1 * math.log(0.1) - gammaln(0.1)
        assert gamma_logpdf(1.0, 0.1, 0.1) == pytest.approx(ref, rel=1e-14)
        assert gamma_logpdf(1.0, 0.1, 0.1) == pytest.approx(stats.gamma.logpdf(1.0, 0.1, scale=10.0),
                                                           rel=1e-12)

    def test_uniform_pi_prior_is_logit_jacobian(self):
        spec = ModelSpec("ZI-NHPP")
        lay = ParameterLayout(spec, 0)
        for s in (-2.0, 0.0, 1.3):
            u = np.array([0.0, 0.0, s])
            val, _ = block_log_priors(u, lay, spec.priors)
            base, _ = block_log_priors(np.array([0.0, 0.0, 0.0]), lay, spec.priors)
            pi = 1 / (1 + math.exp(-s))
            jac = math.log(pi * (1 - pi)) - math.log(0.25)
            assert val - base == pytest.approx(jac, abs=1e-13)

    def test_normal_mode(self):
        spec = ModelSpec("NHPP")
        lay = ParameterLayout(spec, 3)
        _, g = block_log_priors(np.zeros(lay.dim), lay, spec.priors)
        np.testing.assert_array_equal(g[lay["beta"].slice], 0.0)

    @pytest.mark.parametrize("variant", ALL_VARIANTS)
    def test_block_prior_gradient(self, variant):
        spec = spec_for(variant)
        lay = ParameterLayout(spec, 2, 1, 4)
        rng = np.random.default_rng(0)
        for _ in range(10):
            u = rng.normal(size=lay.dim)
            _, g = block_log_priors(u, lay, spec.priors)
            fd = central_diff(lambda v: block_log_priors(v, lay, spec.priors)[0], u)
            np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-7)


class TestIcar:
    def test_constant_field(self):
        g = SpatialGraph.path(5)
        prior = IcarPrior(g)
        val, d_om, _ = prior.log_density(np.zeros(5), 1.0)
        assert np.all(d_om == 0)
        loose = IcarPrior(g, scale=1e12)
        shifted = loose.log_density(np.full(5, 0.7), 1.0)[0]
        assert shifted == pytest.approx(loose.log_density(np.zeros(5), 1.0)[0], abs=1e-12)
        off = np.array([0.0, 0.1, 0.0, 0.0, 0.0])
        assert prior.log_density(off - off.mean(), 1.0)[0] < val

    def test_two_areas_hand_expansion(self):
        g = SpatialGraph(2, [(0, 1)])
        a = 0.8
        v0, _, _ = icar_log_density(np.zeros(2), 1.0, g)
        v1, _, _ = icar_log_density(np.array([a, -a]), 1.0, g)
        assert v1 - v0 == pytest.approx(-2 * a * a, abs=1e-13)

    def test_path_four_dense_oracle(self):
        g = SpatialGraph.path(4)
        rng = np.random.default_rng(0)
        diffs = []
        for _ in range(20):
            om = rng.normal(size=4)
            om -= om.mean()
            tau = rng.uniform(0.2, 5.0)
            val, _, _ = icar_log_density(om, tau, g)
            diffs.append(val - dense_icar_oracle(om, tau, g))
        assert np.ptp(diffs) < 1e-9

    def test_quadratic_part_shift_invariant(self):
        g = SpatialGraph.lattice(3, 3)
        prior = IcarPrior(g, scale=1e6)
        om = np.random.default_rng(1).normal(size=9)
        a = prior.log_density(om, 2.0)[0]
        b = prior.log_density(om + 3.0, 2.0)[0]
        assert a - b == pytest.approx(
            -0.5 * (om.mean() ** 2 - (om.mean() + 3) ** 2) / (1e6 / 3) ** 2, abs=1e-12)

    def test_three_area_conditional(self):
        # complete the square in omega_2 on the joint quadratic form
        g = SpatialGraph.path(3)
        tau = 1.7
        prior = IcarPrior(g, scale=1e8)
        w1, w3 = 0.3, -1.1
        xs = np.linspace(-2, 2, 5)
        vals = np.array([prior.log_density(np.array([w1, x, w3]), tau)[0] for x in xs])
        coef = np.polyfit(xs, vals, 2)
        var = -1.0 / (2 * coef[0])
        mean = coef[1] * var
        assert var == pytest.approx(1.0 / (tau * 2), rel=1e-8)
        assert mean == pytest.approx((w1 + w3) / 2, abs=1e-8)

    def test_gradient(self):
        g = SpatialGraph.lattice(3, 4)
        prior = IcarPrior(g)
        rng = np.random.default_rng(2)
        for _ in range(10):
            om = rng.normal(size=12)
            om -= om.mean()
            tau = rng.uniform(0.3, 3)
            _, d_om, d_tau = prior.log_density(om, tau)
            fd = central_diff(lambda v: prior.log_density(v, tau)[0], om, h=1e-6)
            np.testing.assert_allclose(d_om, fd, rtol=1e-6, atol=1e-6)
            ft = (prior.log_density(om, tau + 1e-6)[0] - prior.log_density(om, tau - 1e-6)[0]) / 2e-6
            assert d_tau == pytest.approx(ft, rel=1e-6)

    def test_disconnected_rank(self):
        g = SpatialGraph(5, [(0, 1), (1, 2), (3, 4)])
        prior = IcarPrior(g)
        assert prior.rank == 3
        assert prior.n_comp == 2

    def test_rejects_edgeless_graph(self):
        with pytest.raises(ValueError):
            IcarPrior(SpatialGraph(3, []))


class TestPosterior:
    @pytest.mark.parametrize("variant", ALL_VARIANTS)
    def test_additivity(self, variant):
        data, graph = make_toy(seed=1)
        spec = spec_for(variant)
        post = Posterior(data, spec, graph)
        lik = Likelihood(data, spec, graph)
        rng = np.random.default_rng(0)
        for _ in range(50):
            u = random_point(post.layout, rng)
            total, _ = post(u)
            parts = lik.evaluate(u).total + block_log_priors(u, post.layout, spec.priors)[0]
            if spec.variant.spatial:
                om = u[post.layout["omega"].slice]
                parts += icar_log_density(om, math.exp(u[post.layout["tau"].start]), graph)[0]
            assert total == pytest.approx(parts, abs=1e-10)

    @pytest.mark.parametrize("variant", ALL_VARIANTS)
    def test_gradient(self, variant):
        data, graph = make_toy(seed=2)
        spec = spec_for(variant)
        post = Posterior(data, spec, graph)
        rng = np.random.default_rng(1)
        for _ in range(20):
            u = random_point(post.layout, rng)
            _, g = post(u)
            fd = central_diff(lambda v: post(v)[0], u)
            np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-6)

    def test_nhpp_has_no_spatial_or_mixture_blocks(self):
        data, _ = make_toy()
        post = Posterior(data, ModelSpec("NHPP"))
        assert set(post.layout.blocks) == {"alpha1", "alpha2", "beta"}
        assert post.icar is None

    def test_overflow_guard(self):
        data, graph = make_toy()
        post = Posterior(data, spec_for("ZI-NHPP-SE"), graph)
        u = np.zeros(post.dim)
        u[post.layout["tau"].start] = -800.0
        val, g = post(u)
        assert val == -np.inf and np.all(g == 0)
        val, _ = post(np.full(post.dim, np.nan))
        assert val == -np.inf

    def test_functional_form(self):
        data, graph = make_toy()
        spec = spec_for("ZI-NHPP-SE")
        post = Posterior(data, spec, graph)
        u = random_point(post.layout, np.random.default_rng(0))
        assert log_posterior_kernel(data, graph, u, spec)[0] == post(u)[0]

    def test_initial_point_zero_frailty(self):
        data, graph = make_toy()
        post = Posterior(data, spec_for("SZI-NHPP-SE"), graph)
        u = post.initial_point(np.random.default_rng(0))
        assert np.all(u[post.layout["omega"].slice] == 0)
        assert np.all(np.abs(u) <= 2.0)

    def test_custom_priors_change_value(self):
        data, _ = make_toy()
        a = Posterior(data, ModelSpec("NHPP"))
        b = Posterior(data, ModelSpec("NHPP", priors=PriorConfig(beta_sd=0.5)))
        u = np.array([0.1, 0.2, 0.5, -0.5])
        assert a(u)[0] != b(u)[0]

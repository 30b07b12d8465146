import numpy as np
import pytest
from scipy import stats

from zinhpp.diagnostics import mcse_mean, split_rhat
from zinhpp.sampler import SamplerConfig, SamplerError, _Chain, _windows, run_hmc


class Gaussian:
    """Zero-mean Gaussian log density with covariance ``cov``."""

    def __init__(self, cov):
        self.prec = np.linalg.inv(np.atleast_2d(cov))

    def __call__(self, u):
        g = -self.prec @ u
        return 0.5 * float(u @ g), g


class Nowhere:
    def __call__(self, u):
        return -np.inf, np.zeros_like(u)


def _fast(**kw):
    base = dict(chains=2, iterations=1500, warmup=500, seed=1)
    base.update(kw)
    return SamplerConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(iterations=10, warmup=10)
        with pytest.raises(ValueError):
            SamplerConfig(metric="full")
        with pytest.raises(ValueError):
            SamplerConfig(target_accept=1.0)
        assert SamplerConfig().kept == 1000

    def test_windows_cover_warmup(self):
        init, ends = _windows(1000)
        assert init == 75
        assert ends[0] == 100 and ends[-1] == 950
        widths = np.diff([init] + ends)
        assert np.all(widths[:-1] * 2 <= widths[1:] + 1)


class TestSampler:
    def test_standard_gaussian(self):
        s = run_hmc(Gaussian(np.eye(5)), 5, _fast(metric="diag"))
        for j in range(5):
            x = s.draws[:, :, j]
            assert abs(x.mean()) < 3 * mcse_mean(x)
            assert x.var() == pytest.approx(1.0, rel=0.1)

    def test_correlated_gaussian(self):
        rho = 0.9
        s = run_hmc(Gaussian([[1, rho], [rho, 1]]), 2, _fast())
        pooled = s.draws.reshape(-1, 2)
        assert np.corrcoef(pooled.T)[0, 1] == pytest.approx(rho, abs=0.05)

    def test_deterministic(self):
        cfg = _fast(iterations=300, warmup=150)
        a = run_hmc(Gaussian(np.eye(3)), 3, cfg)
        b = run_hmc(Gaussian(np.eye(3)), 3, cfg)
        np.testing.assert_array_equal(a.draws, b.draws)

    def test_parallel_matches_serial(self):
        cfg = _fast(iterations=300, warmup=150)
        a = run_hmc(Gaussian(np.eye(3)), 3, cfg)
        b = run_hmc(Gaussian(np.eye(3)), 3, _fast(iterations=300, warmup=150, jobs=2))
        np.testing.assert_array_equal(a.draws, b.draws)

    def test_ks_one_dimension(self):
        s = run_hmc(Gaussian(np.eye(1)), 1, _fast(chains=2, iterations=3000, warmup=1000, seed=4))
        x = s.draws.reshape(-1)
        assert x.size == 4000
        assert stats.kstest(x, "norm").pvalue > 0.01

    @pytest.mark.parametrize("metric", ["diag", "dense"])
    def test_acceptance_after_adaptation(self, metric):
        cfg = _fast(metric=metric, seed=2)
        s = run_hmc(Gaussian(np.diag([1.0, 4.0, 0.25, 9.0])), 4, cfg)
        assert abs(s.accept_stat.mean() - cfg.target_accept) <= 0.1
        assert s.divergences == 0

    def test_energy_conservation(self):
        target = Gaussian(np.diag([1.0, 2.0, 0.5]))
        ch = _Chain(target, 3, SamplerConfig(metric="diag"), np.random.default_rng(0))
        q = np.array([0.3, -1.0, 0.8])
        lp, g = target(q)
        p = ch.metric.sample_momentum(ch.rng)
        h0 = -lp + ch.metric.kinetic(p)
        q1, p1, lp1, _ = ch.leapfrog(q, p, g, 1e-4, 1000)
        assert abs(-lp1 + ch.metric.kinetic(p1) - h0) < 1e-6
        assert np.linalg.norm(q1 - q) > 1e-3

    def test_rhat_on_gaussian(self):
        s = run_hmc(Gaussian(np.eye(2)), 2, _fast())
        for j in range(2):
            assert split_rhat(s.draws[:, :, j]) < 1.01

    def test_bad_target(self):
        with pytest.raises(SamplerError):
            run_hmc(Nowhere(), 2, _fast(iterations=20, warmup=10))

    def test_output_shapes(self):
        cfg = _fast(chains=3, iterations=200, warmup=100, init_optimize=False)
        s = run_hmc(Gaussian(np.eye(2)), 2, cfg, init_fn=lambda rng: rng.normal(size=2))
        assert s.draws.shape == (3, 100, 2)
        assert s.n_chains == 3 and s.n_kept == 100
        assert s.step_size.shape == (3,)
        assert np.all(s.n_leapfrog >= 1)

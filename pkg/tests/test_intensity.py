import math

import numpy as np
import pytest
from scipy import integrate, stats

from zinhpp.intensity import (
    BernsteinBaseline,
    PowerLawBaseline,
    bernstein_basis,
    bernstein_basis_cumulative,
    bernstein_cumulative,
    bernstein_intensity,
    linked_intensity,
    plp_cumulative,
    plp_intensity,
    plp_window_for,
    sinusoid_cumulative,
    sinusoid_intensity,
)


class TestPowerLaw:
    def test_constant_when_shape_is_one(self):
        assert plp_intensity(PowerLawBaseline(2, 1), 5.0) == 2.0

    def test_unit_time(self):
        assert plp_intensity(PowerLawBaseline(0.5, 1.3), 1.0) == pytest.approx(0.65, rel=1e-15)

    def test_value_matches_derivative_of_cumulative(self):
        b = PowerLawBaseline(0.5, 1.3)
        h = 1e-6
        fd = (plp_cumulative(b, 4 + h) - plp_cumulative(b, 4 - h)) / (2 * h)
        assert plp_intensity(b, 4.0) == pytest.approx(0.5 * 1.3 * 4**0.3, rel=1e-14)
        assert plp_intensity(b, 4.0) == pytest.approx(fd, rel=1e-8)

    def test_cumulative_examples(self):
        assert plp_cumulative(PowerLawBaseline(3.3, 0.7), 0.0) == 0.0
        assert plp_cumulative(PowerLawBaseline(1, 2), 3.0) == 9.0
        assert plp_cumulative(PowerLawBaseline(0.5, 1.3), 7.02) == pytest.approx(6.3, abs=0.05)

    def test_window_solver(self):
        t = plp_window_for(0.5, 1.3, 6.3)
        assert plp_cumulative(PowerLawBaseline(0.5, 1.3), t) == pytest.approx(6.3, rel=1e-12)

    def test_domain_errors(self):
        b = PowerLawBaseline(1, 1)
        with pytest.raises(ValueError):
            plp_intensity(b, 0.0)
        with pytest.raises(ValueError):
            plp_cumulative(b, -1.0)
        with pytest.raises(ValueError):
            PowerLawBaseline(0.0, 1.0)

    def test_log_parameter_gradients(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a1, a2, t = rng.uniform(0.2, 3), rng.uniform(0.3, 3), rng.uniform(0.1, 5)
            h = 1e-6
            b = PowerLawBaseline(a1, a2)
            for j, fn in ((0, "intensity"), (1, "cumulative")):
                g = getattr(b, fn + "_grad")(t)
                for k in range(2):
                    lp = [math.log(a1), math.log(a2)]
                    lm = list(lp)
                    lp[k] += h
                    lm[k] -= h
                    fp = getattr(PowerLawBaseline(*np.exp(lp)), fn)(t)
                    fm = getattr(PowerLawBaseline(*np.exp(lm)), fn)(t)
                    assert g[k] == pytest.approx((fp - fm) / (2 * h), rel=1e-6, abs=1e-10)


class TestBernsteinBasis:
    def test_uniform_degree_one(self):
        np.testing.assert_allclose(bernstein_basis(1, 1.0, 0.3), [1.0])

    def test_degree_two_midpoint(self):
        expect = [stats.beta.pdf(0.5, 1, 2), stats.beta.pdf(0.5, 2, 1)]
        np.testing.assert_allclose(bernstein_basis(2, 1.0, 0.5), [1.0, 1.0])
        np.testing.assert_allclose(bernstein_basis(2, 1.0, 0.5), expect)

    def test_left_endpoint(self):
        np.testing.assert_array_equal(bernstein_basis(3, 2.0, 0.0), [1.5, 0.0, 0.0])

    def test_right_endpoint_closed_form(self):
        d, zeta = 6, 3.0
        g = bernstein_basis(d, zeta, zeta)
        assert g[-1] == d / zeta
        assert np.all(g[:-1] == 0)

    def test_outside_support(self):
        with pytest.raises(ValueError):
            bernstein_basis(3, 2.0, 2.5)
        with pytest.raises(ValueError):
            bernstein_basis_cumulative(3, 2.0, -0.1)

    @pytest.mark.parametrize("d", [1, 3, 7, 15])
    def test_each_basis_integrates_to_one(self, d):
        zeta = 2.5
        for k in range(d):
            val, _ = integrate.quad(lambda t: bernstein_basis(d, zeta, t)[k], 0, zeta,
                                    epsabs=1e-13, epsrel=1e-13)
            assert val == pytest.approx(1.0, abs=1e-8)

    def test_cumulative_basis_shape_and_bounds(self):
        d, zeta = 8, 4.0
        t = np.linspace(0, zeta, 300)
        G = bernstein_basis_cumulative(d, zeta, t)
        assert G.shape == (300, d)
        np.testing.assert_array_equal(G[0], 0.0)
        np.testing.assert_allclose(G[-1], 1.0, atol=1e-15)
        assert np.all(np.diff(G, axis=0) >= -1e-15)


class TestBernsteinBaseline:
    def test_constant_basis(self):
        b = BernsteinBaseline(1, [math.log(2.0)], 4.0)
        t = np.array([0.0, 1.3, 4.0])
        np.testing.assert_allclose(bernstein_intensity(b, t), 0.5)
        np.testing.assert_allclose(bernstein_cumulative(b, t), 0.5 * t, atol=1e-15)

    def test_cumulative_matches_quadrature(self):
        rng = np.random.default_rng(7)
        b = BernsteinBaseline(5, rng.normal(size=5), 1.0)
        val, _ = integrate.quad(lambda s: float(b.intensity(s)), 0, 0.7, epsabs=1e-13, epsrel=1e-13)
        assert float(b.cumulative(0.7)) == pytest.approx(val, abs=1e-8)

    def test_log_gamma_gradients(self):
        rng = np.random.default_rng(3)
        h = 1e-5
        for _ in range(100):
            d = int(rng.integers(1, 9))
            zeta = rng.uniform(0.5, 5)
            c = rng.normal(size=d)
            t = rng.uniform(0, zeta)
            b = BernsteinBaseline(d, c, zeta)
            gi, gc = b.intensity_grad(t), b.cumulative_grad(t)
            for k in range(d):
                e = np.zeros(d)
                e[k] = h
                bp, bm = BernsteinBaseline(d, c + e, zeta), BernsteinBaseline(d, c - e, zeta)
                fi = (bp.intensity(t) - bm.intensity(t)) / (2 * h)
                fc = (bp.cumulative(t) - bm.cumulative(t)) / (2 * h)
                assert gi[k] == pytest.approx(fi, rel=1e-6, abs=1e-10)
                assert gc[k] == pytest.approx(fc, rel=1e-6, abs=1e-10)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            BernsteinBaseline(3, [0.0, 0.0], 1.0)


class TestLink:
    def test_zero_predictor_is_baseline(self):
        b = PowerLawBaseline(0.5, 1.3)
        li = linked_intensity(b, [1.0, 2.0], [0.0, 0.0], 0.0)
        t = np.linspace(0.1, 5, 20)
        np.testing.assert_array_equal(li(t), b.intensity(t))

    def test_log_two_doubles(self):
        b = BernsteinBaseline(3, [0.1, -0.2, 0.3], 2.0)
        li = linked_intensity(b, [1.0], [math.log(2.0) - 0.25], 0.25)
        t = np.linspace(0, 2, 17)
        np.testing.assert_allclose(li(t), 2 * b.intensity(t), rtol=1e-14)
        np.testing.assert_allclose(li.cumulative(t), 2 * b.cumulative(t), rtol=1e-14)

    def test_frailty_ratio(self):
        # exponentiated area effects 0.9919 and 1.1064 give a log gap of 0.1092
        gap = math.log(1.1064) - math.log(0.9919)
        b = PowerLawBaseline(1.0, 1.7)
        la = linked_intensity(b, omega=0.0)
        lb = linked_intensity(b, omega=gap)
        t = np.linspace(0.2, 9, 13)
        np.testing.assert_allclose(lb(t) / la(t), 1.1154, atol=5e-5)

    def test_shift_gives_exact_ratio(self):
        rng = np.random.default_rng(0)
        b = PowerLawBaseline(0.7, 0.8)
        x = rng.normal(size=3)
        beta = rng.normal(size=3)
        for delta in (-1.3, 0.0, 0.4, 2.2):
            r = linked_intensity(b, x, beta, delta)(1.5) / linked_intensity(b, x, beta, 0.0)(1.5)
            assert r == pytest.approx(math.exp(delta), rel=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            linked_intensity(PowerLawBaseline(1, 1), [1.0, 2.0], [1.0])


class TestSinusoid:
    def test_exact_sine_values(self):
        for b in (0.0, 0.5, 1.0, 3.0):
            assert sinusoid_intensity(b, 2.0) == pytest.approx(1 + 2 * b, abs=1e-15)
        assert sinusoid_intensity(1.0, 6.0) == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_array_equal(sinusoid_intensity(0.0, np.linspace(0, 10, 7)), 1.0)

    def test_cumulative_matches_quadrature(self):
        for t in (0.5, 3.0, 10.0):
            val, _ = integrate.quad(lambda s: float(sinusoid_intensity(1.0, s)), 0, t)
            assert float(sinusoid_cumulative(1.0, t)) == pytest.approx(val, abs=1e-10)

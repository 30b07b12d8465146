import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from zinhpp.special import beta_cdf, beta_pdf, betainc, log_beta


class TestBetaPdf:
    def test_matches_scipy_interior(self):
        x = np.linspace(0.01, 0.99, 41)
        for a, b in [(1, 1), (1, 5), (3, 2), (0.5, 0.7), (12.0, 4.0)]:
            np.testing.assert_allclose(beta_pdf(x, a, b), stats.beta.pdf(x, a, b), rtol=1e-12)

    def test_endpoint_closed_forms(self):
        assert beta_pdf(np.array([0.0]), 1, 3)[0] == 3.0
        assert beta_pdf(np.array([1.0]), 4, 1)[0] == 4.0
        assert beta_pdf(np.array([0.0]), 2, 3)[0] == 0.0
        assert beta_pdf(np.array([1.0]), 2, 3)[0] == 0.0

    def test_log_beta(self):
        assert log_beta(2.5, 3.5) == pytest.approx(special.betaln(2.5, 3.5), rel=1e-14)


class TestBetainc:
    def test_matches_scipy_grid(self):
        x = np.linspace(0.0, 1.0, 201)
        for a in (0.3, 1.0, 2.0, 7.5, 15.0):
            for b in (0.4, 1.0, 3.0, 15.0):
                np.testing.assert_allclose(betainc(a, b, x), special.betainc(a, b, x),
                                           atol=1e-12, rtol=0)

    def test_scalar_in_scalar_out(self):
        assert np.ndim(betainc(2.0, 3.0, 0.4)) == 0

    def test_endpoints(self):
        np.testing.assert_array_equal(betainc(3.0, 2.0, np.array([0.0, 1.0])), [0.0, 1.0])

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            betainc(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            betainc(1.0, 1.0, 1.5)

    @given(a=st.floats(0.2, 30), b=st.floats(0.2, 30), x=st.floats(0, 1))
    def test_symmetry_and_oracle(self, a, b, x):
        v = betainc(a, b, x)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(1.0 - betainc(b, a, 1.0 - x), abs=1e-12)
        assert v == pytest.approx(special.betainc(a, b, x), abs=1e-12)

    def test_cdf_alias_monotone(self):
        x = np.linspace(0, 1, 500)
        assert np.all(np.diff(beta_cdf(x, 3, 4)) >= 0)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special as sp

from harqgp.special import gamma_fn, log_gamma, lower_incomplete_gamma, regularized_lower_gamma


class TestGamma:
    def test_known_values(self):
        assert gamma_fn(1.0) == 1.0
        assert gamma_fn(4.0) == 6.0
        assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)

    @given(st.floats(0.05, 150.0))
    def test_log_gamma_matches_stdlib(self, a):
        assert log_gamma(a) == pytest.approx(math.lgamma(a), rel=1e-12, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            log_gamma(0.0)


class TestRegularizedLowerGamma:
    def test_exponential_case(self):
        assert regularized_lower_gamma(1.0, 0.5) == pytest.approx(0.3934693403, abs=1e-10)

    def test_zero_and_infinity(self):
        assert regularized_lower_gamma(2.5, 0.0) == 0.0
        assert regularized_lower_gamma(2.5, np.inf) == 1.0

    def test_quadrature_oracle(self):
        a, x = 0.5, 0.25
        val, _ = integrate.quad(lambda s: s ** (a - 1) * math.exp(-s), 0.0, x)
        assert lower_incomplete_gamma(a, x) == pytest.approx(val, rel=1e-10)

    @settings(max_examples=200)
    @given(st.floats(0.1, 60.0), st.floats(0.0, 200.0))
    def test_matches_scipy(self, a, x):
        assert regularized_lower_gamma(a, x) == pytest.approx(sp.gammainc(a, x), rel=1e-10, abs=1e-14)

    def test_vectorized_and_monotone(self):
        x = np.linspace(0.0, 20.0, 401)
        v = regularized_lower_gamma(3.3, x)
        assert isinstance(v, np.ndarray) and v.shape == x.shape
        assert np.all(np.diff(v) >= 0.0)
        assert v[0] == 0.0 and v[-1] <= 1.0

    def test_scalar_returns_float(self):
        assert isinstance(regularized_lower_gamma(2.0, 1.0), float)

"""
Tests for the elliptic integral kernels.
"""

import numpy as np
import pytest
from scipy.special import ellipe, ellipk, ellipkm1

from ellint import (EllipticPair, complete_elliptic, elliptic_from_complement, phi_bracket,
                    phi_bracket_scaled, psi_kernel, psi_kernel_scaled)
from errors import EllipticDomainError


class TestCompleteElliptic:
    def test_zero_modulus(self):
        pair = complete_elliptic(0.0)
        assert pair.K == pytest.approx(np.pi / 2, rel=1e-15)
        assert pair.E == pytest.approx(np.pi / 2, rel=1e-15)

    def test_half_modulus(self):
        pair = complete_elliptic(0.5)
        assert isinstance(pair, EllipticPair)
        assert pair.K == pytest.approx(1.685750354812596, rel=1e-12)
        assert pair.E == pytest.approx(1.467462209339427, rel=1e-12)

    def test_matches_scipy(self, rng):
        for k in rng.uniform(0.0, 0.999, 50):
            pair = complete_elliptic(k)
            assert pair.K == pytest.approx(ellipk(k * k), rel=1e-13)
            assert pair.E == pytest.approx(ellipe(k * k), rel=1e-13)

    def test_legendre_relation(self, rng):
        for k in rng.uniform(0.001, 0.999, 100):
            a = complete_elliptic(k)
            b = complete_elliptic(np.sqrt(1.0 - k * k))
            assert a.E * b.K + b.E * a.K - a.K * b.K == pytest.approx(np.pi / 2, abs=1e-12)

    @pytest.mark.parametrize("k", [1.0, 1.2, -0.1, np.nan])
    def test_out_of_range(self, k):
        with pytest.raises(EllipticDomainError, match="modulus out of range"):
            complete_elliptic(k)

    def test_vectorized_complement(self):
        m1 = np.array([1.0, 0.5, 1e-6])
        K, E = elliptic_from_complement(m1)
        np.testing.assert_allclose(K, ellipkm1(m1), rtol=1e-12)
        np.testing.assert_allclose(E, ellipe(1.0 - m1), rtol=1e-12)


class TestKernels:
    def test_psi_small_k_limit(self):
        assert psi_kernel_scaled(0.0, 1.0) == pytest.approx(np.pi / 32, rel=1e-15)
        assert psi_kernel(1e-4) / 1e-16 == pytest.approx(np.pi / 32, rel=1e-6)

    def test_phi_small_k_limit(self):
        assert phi_bracket_scaled(0.0, 1.0) == pytest.approx(3 * np.pi / 32, rel=1e-15)

    def test_psi_closed_form(self):
        k = 0.8
        K, E = ellipk(k * k), ellipe(k * k)
        assert psi_kernel(k) == pytest.approx((1 - k * k / 2) * K - E, rel=1e-12)

    def test_series_and_closed_form_agree_at_switch(self):
        m = np.array([0.1 - 1e-9, 0.1 + 1e-9])
        values = psi_kernel_scaled(m, 1.0 - m)
        assert values[0] == pytest.approx(values[1], rel=1e-7)
        values = phi_bracket_scaled(m, 1.0 - m)
        assert values[0] == pytest.approx(values[1], rel=1e-7)

    @pytest.mark.parametrize("k", [0.05, 0.3, 0.6, 0.9, 0.99])
    def test_phi_is_derivative_of_psi_over_k(self, k):
        h = 1e-5 * k
        numeric = (psi_kernel(k + h) / (k + h) - psi_kernel(k - h) / (k - h)) / (2 * h)
        assert phi_bracket(k) == pytest.approx(numeric, rel=1e-6)

    def test_kernels_positive(self, rng):
        m = rng.uniform(0.0, 0.999, 200)
        assert np.all(psi_kernel_scaled(m, 1.0 - m) > 0)
        assert np.all(phi_bracket_scaled(m, 1.0 - m) > 0)

"""
Unit tests for the archimedean place
Tests the three Bessel regimes and the Mellin identities of the Whittaker functions
"""

import math
import pytest
import sys
from pathlib import Path

from scipy import special

# Add src to path for imports
sys.path.append(str(Path(__file__).parent.parent.parent / 'src'))

from models import archimedean
from models.archimedean import ASYMPTOTIC, QUADRATURE, SERIES
from models.errors import DivergenceError, TruncationError


class TestBessel:
    """Test suite for K_0 and K_1"""

    def test_known_value(self):
        assert archimedean.bessel_K(0, 1.0) == pytest.approx(0.42102443824070834, rel=1e-10)

    @pytest.mark.parametrize("x, method", [(0.5, SERIES), (5.0, QUADRATURE), (30.0, ASYMPTOTIC)])
    def test_regime_selection(self, x, method):
        assert archimedean.select_method(x) == method

    @pytest.mark.parametrize("order", [0, 1])
    @pytest.mark.parametrize("x", [0.05, 0.7, 1.9, 3.0, 11.0, 25.0, 60.0])
    def test_against_scipy(self, order, x):
        reference = special.k0(x) if order == 0 else special.k1(x)
        result = archimedean.bessel_K_eval(order, x)
        assert result.value == pytest.approx(reference, rel=1e-9)
        assert result.abserr >= 0

    @pytest.mark.parametrize("order", [0, 1])
    def test_ode(self, order):
        for x in (0.3, 1.5, 4.0, 15.0, 28.0):
            scale = abs(archimedean.bessel_K(order, x)) * (x * x + 1)
            assert archimedean.bessel_ode_residual(order, x) < 1e-6 * scale

    @pytest.mark.parametrize("order", [0, 1])
    def test_regimes_agree(self, order):
        gaps = archimedean.regime_agreement(order)
        assert gaps["series_vs_quadrature"] < 1e-9
        assert gaps["quadrature_vs_asymptotic"] < 1e-9

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            archimedean.bessel_K(2, 1.0)
        with pytest.raises(ValueError):
            archimedean.bessel_K(0, 0.0)
        with pytest.raises(ValueError):
            archimedean.bessel_K(0, 1.0, method="tables")


class TestMellin:
    """Test suite for Mellin transforms and zeta integrals"""

    @pytest.mark.parametrize("s", [0.3, 0.5, 1.0, 1.5, 2.0])
    def test_K0_mellin(self, s):
        quad = archimedean.mellin_K0(s)
        assert quad.value == pytest.approx(archimedean.mellin_K0_closed(s), rel=1e-6)

    def test_K0_mellin_window(self):
        with pytest.raises(DivergenceError):
            archimedean.mellin_K0(-0.3)

    def test_complex_zeta_at_half(self):
        quad = archimedean.complex_zeta_integral(0.5)
        assert quad.value == pytest.approx(1 / (2 * math.pi) ** 2, rel=1e-6)

    def test_complex_whittaker(self):
        x = 1 / (4 * math.pi)
        w1 = archimedean.complex_whittaker_W1(x)
        assert w1 == pytest.approx(2 / math.pi * x * x * special.k0(1.0), rel=1e-9)
        assert archimedean.complex_whittaker(-x) == pytest.approx(4 * w1)

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_complex_zeta_normalized(self, s):
        quad = archimedean.complex_zeta_integral(s, normalized=True)
        assert quad.value == pytest.approx(archimedean.complex_L_factor(s), rel=1e-6)

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_real_zeta(self, s):
        quad = archimedean.real_zeta_integral(s, c_real=1.0)
        assert quad.value == pytest.approx(archimedean.real_zeta_closed(s, c_real=1.0), rel=1e-8)

    def test_real_L_factor_matches_default_constant(self):
        # c_R = 2 makes the real zeta integral equal L(s, D(2))
        assert archimedean.real_zeta_closed(1.0, 2.0) == pytest.approx(archimedean.real_L_factor(1.0))

    @pytest.mark.parametrize("identity", ["mellin", "complex-zeta", "real-zeta"])
    def test_verify_identity(self, identity):
        report = archimedean.verify_identity(identity)
        assert report["ok"]
        assert all(row["rel_err"] < 1e-6 for row in report["rows"])

    def test_unknown_identity(self):
        with pytest.raises(ValueError):
            archimedean.verify_identity("hyperbolic")

    def test_require_tolerance(self):
        quad = archimedean.Quadrature(1.0, 1e-3)
        with pytest.raises(TruncationError):
            archimedean.require_tolerance(quad, 1e-6)
        assert archimedean.require_tolerance(quad, 1e-2) is quad

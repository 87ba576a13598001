"""
Unit tests for the global measure over Q
Tests point counting, coefficient tables, L-values and the finite-level measures of 11a
"""

import math
import pytest
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import sympy

# Add src to path for imports
sys.path.append(str(Path(__file__).parent.parent.parent / 'src'))

from models.archimedean import real_whittaker
from models.char_gauss import dirichlet_chars, legendre_char, trivial_char
from models.errors import (
    MissingCoefficientError,
    NonPrimeError,
    NotOrdinaryError,
    ReductionError,
    TruncationError,
)
from models.global_q import (
    ADDITIVE,
    GOOD,
    NONSPLIT,
    SPLIT,
    CoeffTable,
    CyclotomicLog,
    EllipticInput,
    GlobalMeasure,
    L_finite_smoothed,
    Lp_value,
    alpha_pair,
    calibrate_archimedean,
    coeffs_from_curve,
    count_points,
    derivative_order_report,
    extend_coeffs,
    integrate_char_global,
    interpolation_check,
    lp_report,
    point_count_ap,
    reduction_type,
    twisted_root_number,
)
from models.local_dist import CompactOpen
from models.padic_core import field

L_11A = 0.2538418608559


@pytest.fixture(scope="module")
def measure_5(curve_11a, coeffs_11a):
    return GlobalMeasure(curve_11a, 5, n_trunc=2000, table=coeffs_11a)


@pytest.fixture(scope="module")
def measure_11(curve_11a, coeffs_11a):
    return GlobalMeasure(curve_11a, 11, n_trunc=2000, table=coeffs_11a)


@pytest.fixture(scope="module")
def coeffs_11a_5000(curve_11a):
    return coeffs_from_curve(curve_11a, 5000)


@pytest.fixture(scope="module")
def measure_5_deep(curve_11a, coeffs_11a_5000):
    return GlobalMeasure(curve_11a, 5, n_trunc=5000, table=coeffs_11a_5000)


@pytest.fixture(scope="module")
def measure_11_deep(curve_11a, coeffs_11a_5000):
    return GlobalMeasure(curve_11a, 11, n_trunc=5000, table=coeffs_11a_5000)


class TestCurves:
    """Test suite for curve models and point counts"""

    def test_singular_model(self):
        with pytest.raises(ValueError):
            EllipticInput("cusp", (0, 0, 0, 0, 0), 1, 1)

    def test_known_ap(self, curve_11a):
        assert point_count_ap(curve_11a, 2) == -2
        assert point_count_ap(curve_11a, 3) == -1
        assert point_count_ap(curve_11a, 13) == 4
        assert count_points(curve_11a, 5) == 5

    def test_counting_methods_agree(self, curve_11a):
        assert count_points(curve_11a, 211, brute_force=True) == count_points(curve_11a, 211, brute_force=False)

    def test_reduction(self, curve_11a):
        assert reduction_type(curve_11a, 11) == SPLIT
        assert reduction_type(curve_11a, 7) == GOOD

    def test_bad_prime_refused(self, curve_11a):
        with pytest.raises(ReductionError):
            point_count_ap(curve_11a, 11)

    def test_non_prime(self, curve_11a):
        with pytest.raises(NonPrimeError):
            count_points(curve_11a, 9)


class TestCoeffTable:
    """Test suite for coefficient tables"""

    def test_values(self, coeffs_11a):
        expected = {2: -2, 3: -1, 4: 2, 6: 2, 11: 1, 13: 4, 31: 7}
        for n, a_n in expected.items():
            assert coeffs_11a[n] == a_n

    def test_consistency(self, coeffs_11a):
        assert coeffs_11a.multiplicativity_violations(300) == []
        assert coeffs_11a.hasse_violations() == []

    def test_out_of_range(self, coeffs_11a):
        with pytest.raises(MissingCoefficientError):
            coeffs_11a[0]
        with pytest.raises(MissingCoefficientError):
            coeffs_11a[coeffs_11a.n_max + 1]

    def test_extend_needs_primes(self):
        with pytest.raises(MissingCoefficientError):
            extend_coeffs({2: -2, 3: -1}, 10, 11)

    def test_extend_matches_counts(self, coeffs_11a):
        primes = {p: coeffs_11a[p] for p in sympy.primerange(2, 101)}
        table = extend_coeffs(primes, 100, 11)
        assert np.array_equal(table.coeffs, coeffs_11a.coeffs[:101])

    def test_frame(self, coeffs_11a):
        df = coeffs_11a.to_frame()
        assert list(df.columns) == ["n", "a_n"]
        assert len(df) == coeffs_11a.n_max


class TestLocalParameters:
    """Test suite for the Satake parameters at p"""

    def test_split_and_nonsplit(self):
        assert alpha_pair(1, 11, SPLIT) == (1, 11)
        assert alpha_pair(-1, 7, NONSPLIT) == (-1, -7)

    def test_good_roots(self):
        a1, a2 = alpha_pair(1, 5, GOOD)
        assert sympy.simplify(a1 + a2) == 1
        assert sympy.simplify(a1 * a2) == 5

    def test_supersingular(self):
        with pytest.raises(NotOrdinaryError):
            alpha_pair(0, 19, GOOD)

    def test_additive(self):
        with pytest.raises(ReductionError):
            alpha_pair(0, 3, ADDITIVE)

    def test_cyclotomic_log(self):
        log = CyclotomicLog(5, 20)
        assert log.eps == 1
        assert CyclotomicLog(2, 20).eps == 2
        assert log.ell(6).valuation == 1
        assert log.in_image(log.ell(7))


class TestLValues:
    """Test suite for smoothed L-values"""

    @pytest.mark.parametrize("t", [0.9, 1.0, 1.1])
    def test_L_E_1(self, coeffs_11a, t):
        assert L_finite_smoothed(coeffs_11a, t=t).real == pytest.approx(L_11A, abs=1e-9)

    def test_twist_independent_of_split(self, coeffs_11a):
        chi = legendre_char(field(5, 1, 20))
        low = L_finite_smoothed(coeffs_11a, chi, t=0.9)
        high = L_finite_smoothed(coeffs_11a, chi, t=1.15)
        assert abs(low - high) < 1e-8

    def test_short_table(self, coeffs_11a):
        with pytest.raises(TruncationError):
            L_finite_smoothed(coeffs_11a, n_max=5)


class TestGlobalMeasure:
    """Test suite for the finite-level measures"""

    def test_short_table_rejected(self, curve_11a, coeffs_11a):
        with pytest.raises(MissingCoefficientError):
            GlobalMeasure(curve_11a, 5, n_trunc=3000, table=coeffs_11a)

    def test_coset_prime_to_p(self, measure_5):
        with pytest.raises(ValueError):
            measure_5.measure_coset(10, 1)

    def test_compatibility(self, measure_5):
        report = measure_5.finite_level(1).compatibility(measure_5.finite_level(2, jobs=2))
        assert report["ok"], report

    def test_compatibility_at_split_prime(self, measure_11_deep):
        report = measure_11_deep.finite_level(1).compatibility(measure_11_deep.finite_level(2, jobs=2))
        assert report["ok"], report

    def test_interpolation_primitive_character_mod_25(self, measure_5_deep):
        chars = [chi for chi in dirichlet_chars(5, 2, measure_5_deep.rep.field.precision)
                 if chi.cond_exp == 2 and chi.is_even()]
        assert chars
        report = interpolation_check(measure_5_deep, chars[0])
        assert report["rhs"] != 0
        assert report["ok"], report

    def test_total_mass_is_level_one_sum(self, measure_5):
        mass = measure_5.measure_coset(1, 0)
        assert mass.value == pytest.approx(measure_5.finite_level(1).total_mass(), abs=1e-12)

    def test_quadrature_agrees_with_series(self, measure_5):
        series = measure_5.measure_coset(2, 1)
        quad = measure_5.measure_coset(2, 1, quad=True)
        assert abs(series.value - quad.value) < 1e-8

    def test_odd_characters_vanish(self, measure_5):
        odd = [chi for chi in dirichlet_chars(5, 1, 20) if not chi.is_even()]
        for chi in odd:
            report = interpolation_check(measure_5, chi)
            assert report["rhs"] == 0
            assert report["ok"], report

    def test_interpolation_even_character(self, measure_5):
        report = interpolation_check(measure_5, legendre_char(field(5, 1, measure_5.rep.field.precision)))
        assert report["ok"], report

    def test_exceptional_zero(self, measure_11):
        assert measure_11.reduction == SPLIT
        lp = Lp_value(measure_11, 0, 1)
        assert abs(lp.value) < 10 * lp.error

    def test_nonzero_at_ordinary_prime(self, measure_5):
        lp = Lp_value(measure_5, 0, 1)
        assert abs(lp.value) > 100 * lp.error

    def test_lp_report(self, curve_11a, coeffs_11a):
        report = lp_report(curve_11a, 11, 1, Fraction(0), n_trunc=2000)
        assert report["exceptional"]
        assert report["euler_factor_at_1"] == [0.0, 0.0]
        assert len(report["measure"]["values"]) == 10


class TestPhi:
    """Test suite for the adelic function phi"""

    def test_leading_term(self, measure_5):
        fld = field(5, 1, measure_5.rep.field.precision)
        U = CompactOpen.units(fld)
        terms = measure_5.phi_terms(U, 15.0, n_trunc=200)
        top = max(terms, key=lambda t: abs(t["value"]))
        assert (top["k"], top["n"]) == (-1, 1)

    def test_eval_matches_terms(self, measure_5):
        fld = field(5, 1, measure_5.rep.field.precision)
        U = CompactOpen.units(fld)
        est = measure_5.phi_eval(U, 15.0, n_trunc=200)
        total = sum(t["value"] for t in measure_5.phi_terms(U, 15.0, n_trunc=200))
        assert est.value == pytest.approx(total)
        assert est.error < 1e-12

    def test_integral_matches_coset_measure(self, measure_5_deep):
        fld = field(5, 1, measure_5_deep.rep.field.precision)
        oracle, direct = {}, {}
        for a in (2, 4):
            U = CompactOpen.mult_coset(fld.from_int(pow(a, -1, 5)), 1)
            oracle[a] = measure_5_deep.phi_integral(U, tol=1e-9)
            direct[a] = measure_5_deep.measure_coset(a, 1).value
            assert oracle[a].error < 1e-6
            assert abs(oracle[a].value - direct[a]) < 1e-6
        ratio = oracle[2].value / oracle[4].value
        assert abs(ratio - direct[2] / direct[4]) < 1e-5 * abs(direct[2] / direct[4])

    def test_integral_needs_enough_coefficients(self, measure_5):
        fld = field(5, 1, measure_5.rep.field.precision)
        with pytest.raises(TruncationError):
            measure_5.phi_integral(CompactOpen.mult_coset(fld.one(), 1), tol=1e-9)

    def test_integral_rejects_zero(self, measure_5):
        fld = field(5, 1, measure_5.rep.field.precision)
        with pytest.raises(ValueError):
            measure_5.phi_integral(CompactOpen.ball(fld.zero(), 1))


class TestReports:
    """Test suite for the calibration and derivative reports"""

    def test_calibration_recovers_constant(self, measure_5):
        report = calibrate_archimedean(measure_5)
        assert report["c_real"].real == pytest.approx(report["c_real_used"], rel=1e-7)
        assert abs(report["c_real"].imag) < 1e-7 * abs(report["c_real_used"])

    def test_calibration_refused_at_exceptional_prime(self, measure_11):
        with pytest.raises(ReductionError):
            calibrate_archimedean(measure_11)

    def test_derivative_order(self, measure_5, measure_11):
        assert derivative_order_report(measure_11, n_expected=1)["consistent"]
        report = derivative_order_report(measure_5, n_expected=0)
        assert not report["vanishes"]
        assert report["consistent"]

    def test_trivial_character_integral_is_total_mass(self, measure_5):
        trivial = trivial_char(field(5, 1, measure_5.rep.field.precision))
        est = integrate_char_global(measure_5, trivial)
        assert est.value == pytest.approx(measure_5.measure_coset(1, 0).value, rel=1e-9)

    def test_twisted_root_number(self):
        assert twisted_root_number(-1, None, 37) == -1
        chi = legendre_char(field(5, 1, 20))
        assert twisted_root_number(1, chi, 11) == pytest.approx(1.0)
        with pytest.raises(ReductionError):
            twisted_root_number(1, legendre_char(field(11, 1, 20)), 11)

    def test_real_whittaker(self):
        assert real_whittaker(0.5, 2.0) == pytest.approx(math.exp(-math.pi))
        with pytest.raises(ValueError):
            real_whittaker(0.0)

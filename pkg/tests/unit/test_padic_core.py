"""
Unit tests for p-adic field arithmetic
Tests valuations, inversion, traces, digits and the log/exp pair
"""

import pytest
import sys
from fractions import Fraction
from pathlib import Path

# Add src to path for imports
sys.path.append(str(Path(__file__).parent.parent.parent / 'src'))

from models.errors import ConvergenceError, NonPrimeError, PrecisionError, WorkbenchError, ZeroInverseError
from models.padic_core import exp_p, field, from_digits, from_json, log_p, residue_reps, teichmuller


def _close(x, y, digits):
    return x.agrees(y, digits)


class TestFieldConstruction:
    """Test suite for LocalFieldSpec construction"""

    def test_rejects_composite_p(self):
        with pytest.raises(NonPrimeError):
            field(4)

    def test_rejects_bad_degree_and_precision(self):
        with pytest.raises(ValueError):
            field(5, 0)
        with pytest.raises(ValueError):
            field(5, 1, 0)

    def test_q_and_cache(self, F9):
        assert F9.q == 9
        assert field(3, 2, 20) is F9

    def test_residue_reps_counts(self, F9):
        everything, units = residue_reps(F9, 2)
        assert len(everything) == 81
        assert len(units) == 8 * 9


class TestArithmetic:
    """Test suite for PadicNum arithmetic"""

    def test_valuation_and_abs(self, Q5):
        x = Q5.from_int(50)
        assert x.valuation == 2
        assert x.abs() == Fraction(1, 25)
        assert Q5.from_rational(Fraction(3, 25)).valuation == -2
        assert Q5.zero().abs() == 0

    def test_rational_inverse(self, Q5):
        third = Q5.from_rational(Fraction(1, 3))
        assert third * 3 == Q5.one()

    def test_unit_inverse_in_extension(self, F9, rng):
        for _ in range(20):
            coeffs = [rng.randrange(9 ** 5) for _ in range(2)]
            if all(c % 3 == 0 for c in coeffs):
                continue
            x = F9.from_coeffs(coeffs, rng.randint(-3, 3))
            assert x * x.inverse() == F9.one()

    def test_zero_has_no_inverse(self, Q5):
        with pytest.raises(ZeroInverseError):
            Q5.zero().inverse()
        assert issubclass(ZeroInverseError, WorkbenchError)

    def test_teichmuller_is_root_of_unity(self, F9):
        w = teichmuller(F9.generator())
        assert w ** 8 == F9.one()

    def test_json_round_trip(self, F9):
        x = F9.from_coeffs((4, 7), -2)
        assert from_json(x.to_json(), F9.precision) == x


class TestTraceAndDigits:
    """Test suite for traces and digit expansions"""

    def test_frac_trace(self, Q5, F9):
        assert Q5.from_rational(Fraction(1, 5)).frac_trace() == Fraction(1, 5)
        assert F9.from_rational(Fraction(1, 3)).frac_trace() == Fraction(2, 3)
        assert Q5.from_int(7).frac_trace() == 0

    def test_digits(self, Q5):
        assert Q5.from_int(7).digit_expansion(2) == ((0, (2,)), (1, (1,)))
        assert Q5.from_int(7).truncate(1) == Q5.from_int(2)

    def test_digits_round_trip(self, Q5):
        x = Q5.from_int(1234)
        assert from_digits(Q5, x.digit_expansion(5)) == x

    def test_trace(self, Q5, F9):
        x = Q5.from_rational(Fraction(3, 5))
        assert x.trace() == x
        assert F9.one().trace() == field(3, 1, F9.precision).from_int(2)

    def test_to_string(self, Q5):
        assert Q5.from_int(10).to_string() == "5^1 * (2)"
        assert Q5.zero().to_string() == "0"

    def test_unit_key_beyond_precision(self, Q5):
        with pytest.raises(PrecisionError):
            Q5.one().unit_key(Q5.precision + 1)


class TestLogExp:
    """Test suite for the p-adic logarithm and exponential"""

    def test_log_inverts_exp(self, Q5):
        x = Q5.from_int(15)
        assert _close(log_p(exp_p(x)), x, 12)

    def test_log_is_additive_on_units(self, F9, rng):
        for _ in range(5):
            a = F9.from_coeffs([rng.randrange(1, 3 ** 10), rng.randrange(3 ** 10)])
            b = F9.from_coeffs([rng.randrange(1, 3 ** 10), rng.randrange(3 ** 10)])
            if not (a.is_unit() and b.is_unit()):
                continue
            assert _close(log_p(a * b), log_p(a) + log_p(b), 10)

    def test_log_kills_roots_of_unity(self, Q5):
        assert log_p(teichmuller(Q5.from_int(2))).is_zero() or log_p(teichmuller(Q5.from_int(2))).valuation >= 15

    def test_domain_errors(self, Q5):
        with pytest.raises(ConvergenceError):
            log_p(Q5.from_int(5))
        with pytest.raises(ConvergenceError):
            exp_p(Q5.one())


class TestPrecisionTracking:
    """Test suite for cancellation and the known-digit bookkeeping"""

    @pytest.fixture
    def Q5_10(self):
        return field(5, 1, 10)

    def test_total_cancellation_raises(self, Q5_10):
        with pytest.raises(PrecisionError):
            Q5_10.from_int(1 + 5 ** 10) - Q5_10.one()

    def test_self_difference_raises(self, Q5_10):
        x = Q5_10.from_rational(Fraction(7, 3))
        with pytest.raises(PrecisionError):
            x - x

    def test_partial_cancellation_shrinks_precision(self, Q5_10):
        x = Q5_10.from_int(1 + 3 * 5 ** 9) - 1
        assert x.valuation == 9
        assert x.unit == (3,)
        assert x.relative_precision == 1
        assert x.absolute_precision() == 10
        with pytest.raises(PrecisionError):
            x.unit_key(2)
        with pytest.raises(PrecisionError):
            x.digit_expansion(11)

    def test_reduced_precision_propagates(self, Q5_10):
        x = Q5_10.from_int(1 + 2 * 5 ** 7) - 1
        assert (x * Q5_10.from_int(3)).relative_precision == 3
        assert x.inverse().relative_precision == 3
        assert (x + Q5_10.one()).absolute_precision() == 10

    def test_comparison_without_cancellation(self, Q5_10):
        x = Q5_10.from_int(12)
        assert x.ord_difference(x) == 10
        assert x.agrees(Q5_10.from_int(2), 1)
        assert not x.agrees(Q5_10.from_int(2), 2)
        with pytest.raises(PrecisionError):
            x.agrees(x, 11)

    def test_large_power_keeps_its_valuation(self, Q5_10):
        assert Q5_10.from_int(5 ** 10).valuation == 10

    def test_json_keeps_precision(self, Q5_10):
        x = Q5_10.from_int(1 + 2 * 5 ** 7) - 1
        y = from_json(x.to_json(), 10)
        assert y == x
        assert y.relative_precision == 3

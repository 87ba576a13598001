"""
p-adic Core Arithmetic
Capped-relative-precision arithmetic in Q_p and its unramified extensions
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy
from sympy import Poly, Symbol

from models.errors import (
    ConvergenceError,
    FieldMismatchError,
    NonPrimeError,
    PrecisionError,
    ZeroInverseError,
)

logger = logging.getLogger(__name__)

_t = Symbol("t")

Digit = Tuple[int, ...]
DigitExpansion = Tuple[Tuple[int, Digit], ...]


def _ord_int(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer"""
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def _lowest_irreducible(p: int, f_res: int) -> Tuple[int, ...]:
    """Lowest monic irreducible polynomial of degree f_res over F_p.

    Candidates are ordered lexicographically by (c_{f-1}, ..., c_0); the
    result is returned as coefficients (c_0, ..., c_{f-1}, 1).
    """
    if f_res == 1:
        return (0, 1)
    for high_to_low in itertools.product(range(p), repeat=f_res):
        coeffs = (1,) + high_to_low
        if coeffs[-1] == 0:
            continue
        if Poly(list(coeffs), _t, modulus=p).is_irreducible:
            return tuple(reversed(coeffs))
    raise ArithmeticError(f"no irreducible polynomial of degree {f_res} mod {p}")


@dataclass(frozen=True)
class LocalFieldSpec:
    """An unramified extension of Q_p of residue degree f_res at fixed precision.

    The uniformizer is p. Elements are stored as p^v times a unit polynomial in t
    of degree < f_res, where t is a root of `modulus`.
    """

    p: int
    f_res: int
    precision: int
    modulus: Tuple[int, ...]

    @property
    def q(self) -> int:
        return self.p ** self.f_res

    @property
    def p_power(self) -> int:
        return self.p ** self.precision

    def zero(self) -> "PadicNum":
        return PadicNum(self, math.inf, (0,) * self.f_res)

    def one(self) -> "PadicNum":
        return self.from_coeffs((1,))

    def uniformizer(self) -> "PadicNum":
        return PadicNum(self, 1, (1,) + (0,) * (self.f_res - 1))

    def generator(self) -> "PadicNum":
        """The class of t (a unit generating the residue field when f_res > 1)"""
        if self.f_res == 1:
            return self.one()
        return self.from_coeffs((0, 1))

    def from_coeffs(self, coeffs: Sequence[int], valuation: int = 0) -> "PadicNum":
        """Element p^valuation * (c_0 + c_1 t + ...), normalized"""
        padded = list(coeffs) + [0] * (self.f_res - len(coeffs))
        if len(padded) > self.f_res:
            padded = _reduce_poly(padded, self.modulus)
        if not any(padded):
            return self.zero()
        shift = min(_ord_int(c, self.p) for c in padded if c)
        return _normalize(self, valuation + shift, [c // self.p ** shift for c in padded])

    def from_int(self, n: int) -> "PadicNum":
        return self.from_coeffs((n,))

    def from_rational(self, r: Union[int, Fraction]) -> "PadicNum":
        r = Fraction(r)
        if r == 0:
            return self.zero()
        v = _ord_int(r.numerator, self.p) - _ord_int(r.denominator, self.p)
        num = r.numerator // self.p ** max(0, _ord_int(r.numerator, self.p))
        den = r.denominator // self.p ** max(0, _ord_int(r.denominator, self.p))
        unit = num * pow(den, -1, self.p_power) % self.p_power
        return PadicNum(self, v, (unit,) + (0,) * (self.f_res - 1))

    def element(self, value) -> "PadicNum":
        if isinstance(value, PadicNum):
            _check_same_field(self, value.field)
            return value
        if isinstance(value, (int, Fraction)):
            return self.from_rational(value)
        if isinstance(value, (tuple, list)):
            return self.from_coeffs(value)
        raise TypeError(f"cannot build a p-adic element from {type(value).__name__}")

    def to_json(self) -> Dict:
        return {"p": self.p, "f": self.f_res, "precision": self.precision,
                "modulus": list(self.modulus)}


@lru_cache(maxsize=None)
def field(p: int, f_res: int = 1, precision: int = 30) -> LocalFieldSpec:
    """
    Build the unramified extension of Q_p of residue degree f_res

    Args:
        p: residue characteristic, must be prime
        f_res: residue degree (q = p^f_res)
        precision: relative precision N in digits

    Returns:
        LocalFieldSpec with the deterministic lowest irreducible modulus
    """
    if not isinstance(p, int) or p < 2 or not sympy.isprime(p):
        raise NonPrimeError(f"{p} is not prime")
    if f_res < 1:
        raise ValueError(f"residue degree must be >= 1, got {f_res}")
    if precision < 1:
        raise ValueError(f"precision must be >= 1, got {precision}")
    modulus = _lowest_irreducible(p, f_res)
    logger.debug(f"Field Q_{p}(f={f_res}) at precision {precision} with modulus {modulus}")
    return LocalFieldSpec(p=p, f_res=f_res, precision=precision, modulus=modulus)


def _check_same_field(a: LocalFieldSpec, b: LocalFieldSpec) -> None:
    if a != b:
        raise FieldMismatchError(f"operands from different fields: {a} vs {b}")


def _reduce_poly(coeffs: List[int], modulus: Tuple[int, ...]) -> List[int]:
    """Reduce an integer polynomial by a monic modulus (no coefficient reduction)"""
    f = len(modulus) - 1
    coeffs = list(coeffs)
    for d in range(len(coeffs) - 1, f - 1, -1):
        c = coeffs[d]
        if c:
            for i in range(f):
                coeffs[d - f + i] -= c * modulus[i]
            coeffs[d] = 0
    return coeffs[:f] + [0] * max(0, f - len(coeffs))


def _normalize(fld: LocalFieldSpec, valuation: int, coeffs: Sequence[int],
               prec: Optional[int] = None) -> "PadicNum":
    """Canonical form: reduce mod p^prec, then pull out the common p-power.

    Coefficients are meaningful modulo p^prec relative to `valuation` (prec
    defaults to N). A p-power pulled out after a cancellation costs the same
    number of known digits.
    """
    rel = fld.precision if prec is None else prec
    P = fld.p ** rel
    reduced = [c % P for c in coeffs]
    if not any(reduced):
        return fld.zero()
    shift = min(_ord_int(c, fld.p) for c in reduced if c)
    if shift:
        rel -= shift
        reduced = [(c // fld.p ** shift) % fld.p ** rel for c in reduced]
    return PadicNum(fld, valuation + shift, tuple(reduced), None if rel >= fld.precision else rel)


def _poly_mul(a: Sequence[int], b: Sequence[int], fld: LocalFieldSpec) -> List[int]:
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    reduced = _reduce_poly(prod, fld.modulus)
    return [c % fld.p_power for c in reduced]


@lru_cache(maxsize=None)
def _power_sums(fld: LocalFieldSpec) -> Tuple[int, ...]:
    """Traces Tr(t^k) for k < f via Newton's identities"""
    f = fld.f_res
    c = fld.modulus
    s = [f]
    for k in range(1, f):
        total = -k * c[f - k]
        for i in range(1, k):
            total -= c[f - i] * s[k - i]
        s.append(total)
    return tuple(s)


@dataclass(frozen=True)
class PadicNum:
    """p^valuation * unit with the unit polynomial known mod p^prec.

    prec is the relative precision, at most N (None stands for N); every
    element knows its digits below the absolute cap valuation + prec. Zero is
    the exact element with valuation math.inf.
    """

    field: LocalFieldSpec
    valuation: Union[int, float]
    unit: Tuple[int, ...]
    prec: Optional[int] = dc_field(default=None, compare=False)

    # ---- predicates -------------------------------------------------
    def is_zero(self) -> bool:
        return self.valuation == math.inf

    def is_unit(self) -> bool:
        return self.valuation == 0

    def is_integral(self) -> bool:
        return self.valuation >= 0

    @property
    def relative_precision(self) -> Union[int, float]:
        if self.is_zero():
            return math.inf
        return self.field.precision if self.prec is None else self.prec

    def absolute_precision(self) -> Union[int, float]:
        return self.valuation + self.relative_precision

    # ---- arithmetic -------------------------------------------------
    def _coerce(self, other) -> "PadicNum":
        if isinstance(other, PadicNum):
            _check_same_field(self.field, other.field)
            return other
        return self.field.element(other)

    def __add__(self, other) -> "PadicNum":
        """
        Sum at the smaller of the two absolute caps

        Raises:
            PrecisionError: every digit known below the cap cancels
        """
        other = self._coerce(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        v = min(self.valuation, other.valuation)
        cap = min(self.absolute_precision(), other.absolute_precision())
        p = self.field.p
        sa = p ** (self.valuation - v)
        sb = p ** (other.valuation - v)
        coeffs = [x * sa + y * sb for x, y in zip(self.unit, other.unit)]
        result = _normalize(self.field, v, coeffs, cap - v)
        if result.is_zero():
            raise PrecisionError(f"sum cancels every digit known below p^{cap}")
        return result

    __radd__ = __add__

    def __neg__(self) -> "PadicNum":
        if self.is_zero():
            return self
        P = self.field.p ** self.relative_precision
        return PadicNum(self.field, self.valuation, tuple((-c) % P for c in self.unit), self.prec)

    def __sub__(self, other) -> "PadicNum":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PadicNum":
        return self._coerce(other) - self

    def __mul__(self, other) -> "PadicNum":
        other = self._coerce(other)
        if self.is_zero() or other.is_zero():
            return self.field.zero()
        coeffs = _poly_mul(self.unit, other.unit, self.field)
        rel = min(self.relative_precision, other.relative_precision)
        return _normalize(self.field, self.valuation + other.valuation, coeffs, rel)

    __rmul__ = __mul__

    def inverse(self) -> "PadicNum":
        if self.is_zero():
            raise ZeroInverseError("inversion of zero")
        return _normalize(self.field, -self.valuation, _unit_inverse(self.unit, self.field),
                          self.relative_precision)

    def ord_difference(self, other) -> Union[int, float]:
        """ord(self - other), or the joint absolute cap when every known digit agrees"""
        other = self._coerce(other)
        if self.is_zero() or other.is_zero():
            return min(self.valuation, other.valuation)
        if self.valuation != other.valuation:
            return min(self.valuation, other.valuation)
        cap = min(self.absolute_precision(), other.absolute_precision())
        P = self.field.p ** (cap - self.valuation)
        diff = [(x - y) % P for x, y in zip(self.unit, other.unit)]
        if not any(diff):
            return cap
        return self.valuation + min(_ord_int(c, self.field.p) for c in diff if c)

    def agrees(self, other, n: Union[int, float]) -> bool:
        """
        self = other modulo p^n

        Raises:
            PrecisionError: the operands agree on every known digit, short of p^n
        """
        other = self._coerce(other)
        d = self.ord_difference(other)
        if d >= n:
            return True
        if d >= min(self.absolute_precision(), other.absolute_precision()):
            raise PrecisionError(f"congruence mod p^{n} undetermined: digits known only below p^{d}")
        return False

    def __truediv__(self, other) -> "PadicNum":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "PadicNum":
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "PadicNum":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> "PadicNum":
        """Multiply by p^k"""
        if self.is_zero():
            return self
        return PadicNum(self.field, self.valuation + k, self.unit, self.prec)

    # ---- valuation / absolute value ---------------------------------
    def abs(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        return Fraction(1, self.field.q) ** self.valuation

    def unit_key(self, n: int) -> Tuple[int, ...]:
        """Residue of the unit part mod p^n, used as a character-table key"""
        if n > self.relative_precision:
            raise PrecisionError(f"unit residue mod p^{n} exceeds the {self.relative_precision} known digits")
        m = self.field.p ** n
        return tuple(c % m for c in self.unit)

    # ---- trace and digits -------------------------------------------
    def trace(self) -> "PadicNum":
        """Trace down to Q_p, as an element of the degree-1 field at the same precision

        Zero when the trace vanishes on every known digit.
        """
        base = field(self.field.p, 1, self.field.precision)
        if self.is_zero():
            return base.zero()
        s = _power_sums(self.field)
        total = sum(c * sk for c, sk in zip(self.unit, s))
        return _normalize(base, self.valuation, (total,), self.relative_precision)

    def frac_trace(self) -> Fraction:
        """p-power-denominator fractional part of Tr(x), exactly"""
        if self.is_zero() or self.valuation >= 0:
            return Fraction(0)
        depth = -self.valuation
        if depth > self.relative_precision:
            raise PrecisionError(
                f"ord {self.valuation} below -{self.relative_precision}; x mod O is undetermined"
            )
        s = _power_sums(self.field)
        modulus = self.field.p ** depth
        total = sum(c * sk for c, sk in zip(self.unit, s)) % modulus
        return Fraction(total, modulus)

    def digit_expansion(self, upto: int) -> DigitExpansion:
        """
        p-adic digits below exponent `upto`

        Args:
            upto: exclusive exponent bound

        Returns:
            tuple of (exponent, digit) pairs with nonzero digits; each digit is a
            tuple of f_res integers in [0, p), a residue-field representative
        """
        if self.is_zero() or self.valuation >= upto:
            return ()
        if upto > self.absolute_precision():
            raise PrecisionError(
                f"digits up to p^{upto} requested, element known only below p^{self.absolute_precision()}"
            )
        p = self.field.p
        rest = list(self.unit)
        out = []
        for e in range(self.valuation, upto):
            digit = tuple(c % p for c in rest)
            rest = [c // p for c in rest]
            if any(digit):
                out.append((e, digit))
        return tuple(out)

    def truncate(self, n: int) -> "PadicNum":
        """Representative of self mod p^n built from its digits"""
        return from_digits(self.field, self.digit_expansion(n))

    # ---- serialization ---------------------------------------------
    def to_string(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i, c in enumerate(self.unit):
            if c:
                terms.append(str(c) if i == 0 else (f"{c}*t" if i == 1 else f"{c}*t^{i}"))
        return f"{self.field.p}^{self.valuation} * ({' + '.join(terms)})"

    def to_json(self) -> Dict:
        data = {
            "p": self.field.p,
            "f": self.field.f_res,
            "v": None if self.is_zero() else self.valuation,
            "coeffs": list(self.unit),
        }
        if self.prec is not None:
            data["prec"] = self.prec
        return data

    def __repr__(self) -> str:
        return f"PadicNum({self.to_string()})"


def _unit_inverse(unit: Tuple[int, ...], fld: LocalFieldSpec) -> Tuple[int, ...]:
    """Inverse of a unit polynomial: sympy mod-p inverse, then Newton lifting"""
    p = fld.p
    if fld.f_res == 1:
        return (pow(unit[0], -1, fld.p_power),)
    residue = Poly(list(reversed([c % p for c in unit])), _t, modulus=p)
    mod_poly = Poly(list(reversed(fld.modulus)), _t, modulus=p)
    inv_poly = residue.invert(mod_poly)
    y = [int(c) % p for c in reversed(inv_poly.all_coeffs())]
    y = y + [0] * (fld.f_res - len(y))
    precision = 1
    while precision < fld.precision:
        precision = min(2 * precision, fld.precision)
        uy = _poly_mul(unit, y, fld)
        two_minus = [(-c) for c in uy]
        two_minus[0] += 2
        y = _poly_mul(y, two_minus, fld)
    return tuple(c % fld.p_power for c in y)


def valuation(x: PadicNum) -> Union[int, float]:
    """ord of x; math.inf for zero"""
    return x.valuation


def abs_value(x: PadicNum) -> Fraction:
    return x.abs()


def from_digits(fld: LocalFieldSpec, digits: DigitExpansion) -> PadicNum:
    """Inverse of digit_expansion"""
    result = fld.zero()
    for exponent, digit in digits:
        result = result + fld.from_coeffs(digit, exponent)
    return result


def from_json(data: Dict, precision: Optional[int] = None) -> PadicNum:
    fld = field(int(data["p"]), int(data["f"]), precision or int(data.get("precision", 30)))
    if data.get("v") is None:
        return fld.zero()
    prec = data.get("prec")
    return _normalize(fld, int(data["v"]), [int(c) for c in data["coeffs"]], None if prec is None else int(prec))


def residue_reps(fld: LocalFieldSpec, n: int) -> Tuple[List[PadicNum], List[PadicNum]]:
    """
    Coset representatives of O/p^n and of U/U^(n)

    Args:
        fld: local field
        n: level, 0 <= n <= precision

    Returns:
        (all representatives, unit representatives); q^n and (q-1)q^(n-1) of them
    """
    if n > fld.precision:
        raise PrecisionError(f"level {n} exceeds precision {fld.precision}")
    if n == 0:
        return [fld.zero()], [fld.one()]
    m = fld.p ** n
    everything, units = [], []
    for coeffs in itertools.product(range(m), repeat=fld.f_res):
        x = fld.from_coeffs(coeffs)
        everything.append(x)
        if any(c % fld.p for c in coeffs):
            units.append(x)
    return everything, units


def residue_digits(fld: LocalFieldSpec) -> List[Digit]:
    """Residue-field transversal as digit tuples, zero first"""
    return [tuple(d) for d in itertools.product(range(fld.p), repeat=fld.f_res)]


# ---- p-adic analytic functions -------------------------------------------

def log_p(x: PadicNum) -> PadicNum:
    """Iwasawa-normalized p-adic logarithm on units, via x^(q-1) and the Mercator series"""
    if not x.is_unit():
        raise ConvergenceError(f"log_p is implemented on units only, got valuation {x.valuation}")
    fld = x.field
    y = x ** (fld.q - 1) if fld.p > 2 else (x ** (fld.q - 1)) ** 2
    if y.ord_difference(fld.one()) >= y.absolute_precision():
        # y = 1 on every known digit: a root of unity
        return fld.zero()
    z = y - 1
    total = fld.zero()
    power = fld.one()
    terms = fld.precision + 2 + int(math.log(fld.precision + 2, fld.p)) + 2
    for n in range(1, terms * 2):
        power = power * z
        if power.valuation - _ord_int(n, fld.p) > fld.precision + z.valuation + 2 + math.log(n + 1, fld.p):
            break
        term = power / fld.from_int(n)
        total = total + term if n % 2 else total - term
    factor = fld.q - 1 if fld.p > 2 else 2 * (fld.q - 1)
    return total / fld.from_int(factor)


def exp_p(x: PadicNum) -> PadicNum:
    """p-adic exponential on p^(1 + [p=2]) O"""
    fld = x.field
    need = 2 if fld.p == 2 else 1
    if x.is_zero():
        return fld.one()
    if x.valuation < need:
        raise ConvergenceError(f"exp_p diverges at valuation {x.valuation} (needs >= {need})")
    total = fld.one()
    term = fld.one()
    n = 1
    while True:
        term = term * x / fld.from_int(n)
        if term.is_zero() or term.valuation > fld.precision + 2 + math.log(n + 1, fld.p):
            break
        total = total + term
        n += 1
    return total


def teichmuller(x: PadicNum) -> PadicNum:
    """The (q-1)-st root of unity congruent to the unit x"""
    if not x.is_unit():
        raise ValueError("Teichmuller lift is defined on units")
    y = x
    for _ in range(x.field.precision + 1):
        nxt = y ** x.field.q
        if nxt == y:
            break
        y = nxt
    return y


def dumps(x: PadicNum) -> str:
    return json.dumps(x.to_json(), sort_keys=True)

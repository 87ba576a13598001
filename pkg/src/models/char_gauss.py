"""
Characters and Gauss Sums
Additive character, multiplicative quasi-characters, conductors, Gauss sums,
and the closed-form character integral over F*
"""

import cmath
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import sympy

from models.errors import CharacterError, ConvergenceError, DivergenceError, FieldMismatchError
from models.padic_core import LocalFieldSpec, PadicNum, field, residue_reps

logger = logging.getLogger(__name__)

Scalar = Union[int, Fraction, complex, float, sympy.Expr]
UnitKey = Tuple[int, ...]

_x = sympy.Symbol("x")


def scalar_is_zero(value: Scalar, tol: float = 0.0) -> bool:
    """Exact zero test for Fractions/sympy expressions, tolerance test for floats"""
    if isinstance(value, sympy.Basic):
        return sympy.simplify(value) == 0
    if isinstance(value, (complex, float)):
        return abs(value) <= tol
    return value == 0


def to_complex(value: Scalar) -> complex:
    if isinstance(value, sympy.Basic):
        return complex(sympy.N(value, 20))
    return complex(value)


# ---- exact cyclotomic arithmetic ------------------------------------------

@lru_cache(maxsize=None)
def _cyclotomic_coeffs(order: int) -> Tuple[int, ...]:
    """Coefficients (low to high) of the order-th cyclotomic polynomial"""
    poly = sympy.Poly(sympy.cyclotomic_poly(order, _x), _x)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


class CyclotomicNumber:
    """Finite sum of scalar multiples of roots of unity.

    Terms are keyed by the root-of-unity index k in [0, 1) (the root is
    e^{2 pi i k}); equality is decided modulo the cyclotomic polynomial of the
    common order, so the arithmetic is exact for Fraction or sympy coefficients.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Fraction, Scalar]] = None):
        self.terms: Dict[Fraction, Scalar] = {}
        for k, c in (terms or {}).items():
            key = Fraction(k) % 1
            self.terms[key] = self.terms.get(key, 0) + c

    @classmethod
    def root(cls, index: Fraction, coeff: Scalar = 1) -> "CyclotomicNumber":
        return cls({Fraction(index): coeff})

    @classmethod
    def scalar(cls, value: Scalar) -> "CyclotomicNumber":
        return cls({Fraction(0): value})

    def __add__(self, other) -> "CyclotomicNumber":
        other = other if isinstance(other, CyclotomicNumber) else CyclotomicNumber.scalar(other)
        out = CyclotomicNumber(dict(self.terms))
        for k, c in other.terms.items():
            out.terms[k] = out.terms.get(k, 0) + c
        return out

    __radd__ = __add__

    def __neg__(self) -> "CyclotomicNumber":
        return CyclotomicNumber({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "CyclotomicNumber":
        other = other if isinstance(other, CyclotomicNumber) else CyclotomicNumber.scalar(other)
        return self + (-other)

    def __rsub__(self, other) -> "CyclotomicNumber":
        return CyclotomicNumber.scalar(other) - self

    def __mul__(self, other) -> "CyclotomicNumber":
        if not isinstance(other, CyclotomicNumber):
            return CyclotomicNumber({k: c * other for k, c in self.terms.items()})
        out: Dict[Fraction, Scalar] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = (k1 + k2) % 1
                out[key] = out.get(key, 0) + c1 * c2
        return CyclotomicNumber(out)

    __rmul__ = __mul__

    def conjugate(self) -> "CyclotomicNumber":
        conj = lambda c: sympy.conjugate(c) if isinstance(c, sympy.Basic) else c
        return CyclotomicNumber({(-k) % 1: conj(c) for k, c in self.terms.items()})

    def order(self) -> int:
        return reduce(lambda a, b: a * b // math.gcd(a, b),
                      (k.denominator for k in self.terms), 1)

    def reduced_coeffs(self) -> List[Scalar]:
        """Coordinates in the power basis of Q(zeta_M), M = order()"""
        M = self.order()
        poly: List[Scalar] = [0] * M
        for k, c in self.terms.items():
            poly[int(k * M)] += c
        phi = _cyclotomic_coeffs(M)
        deg = len(phi) - 1
        for d in range(M - 1, deg - 1, -1):
            c = poly[d]
            if not scalar_is_zero(c):
                for i in range(deg):
                    poly[d - deg + i] -= c * phi[i]
            poly[d] = 0
        return poly[:deg]

    def is_zero(self) -> bool:
        return all(scalar_is_zero(c) for c in self.reduced_coeffs())

    def __eq__(self, other) -> bool:
        if not isinstance(other, CyclotomicNumber):
            other = CyclotomicNumber.scalar(other)
        return (self - other).is_zero()

    __hash__ = None

    def to_complex(self) -> complex:
        return sum((to_complex(c) * cmath.exp(2j * math.pi * float(k)) for k, c in self.terms.items()),
                   0j)

    def __complex__(self) -> complex:
        return self.to_complex()

    def __repr__(self) -> str:
        parts = [f"{c}*e({k})" for k, c in sorted(self.terms.items()) if not scalar_is_zero(c)]
        return "CyclotomicNumber(" + (" + ".join(parts) or "0") + ")"


def root_of_unity(index: Fraction) -> complex:
    return cmath.exp(2j * math.pi * float(index))


# ---- additive character ---------------------------------------------------

@dataclass(frozen=True)
class AddChar:
    """The canonical additive character psi(x) = e^{2 pi i frac_p(Tr x)}"""

    field: LocalFieldSpec

    def index(self, x: PadicNum) -> Fraction:
        return psi_index(self, x)

    def __call__(self, x: PadicNum) -> complex:
        return psi_eval(self, x)


def psi_index(psi: AddChar, x: PadicNum) -> Fraction:
    """Root-of-unity index of psi(x)"""
    if x.field != psi.field:
        raise FieldMismatchError("additive character and element from different fields")
    return x.frac_trace()


def psi_eval(psi: AddChar, x: PadicNum) -> complex:
    return root_of_unity(psi_index(psi, x))


def coset_integral(psi: AddChar, a: PadicNum, m: int) -> complex:
    """Integral of psi over a + p^m O with dx normalized by vol(O) = 1"""
    if m < 0:
        return 0j
    return psi_eval(psi, a) * psi.field.q ** (-m)


def coset_integral_exact(psi: AddChar, a: PadicNum, m: int) -> CyclotomicNumber:
    if m < 0:
        return CyclotomicNumber()
    return CyclotomicNumber.root(psi_index(psi, a), Fraction(1, psi.field.q ** m))


# ---- multiplicative characters --------------------------------------------

@dataclass(frozen=True)
class MultChar:
    """
    Quasi-character of F*: chi(u * p^m) = chi_U(u) * chi(p)^m

    unit_values maps unit residues mod p^L (L = max(cond_exp, 1)) to root-of-unity
    indices; at_uniformizer is chi(p) as a complex number or an exact scalar.
    """

    field: LocalFieldSpec
    cond_exp: int
    unit_values: Dict[UnitKey, Fraction] = dc_field(hash=False)
    at_uniformizer: Scalar = 1
    label: str = ""

    def __post_init__(self):
        if scalar_is_zero(self.at_uniformizer):
            raise CharacterError("chi(p) = 0 is not a quasi-character of F*")

    @property
    def table_level(self) -> int:
        return max(self.cond_exp, 1)

    def unit_index(self, u: PadicNum) -> Fraction:
        if not u.is_unit():
            raise CharacterError(f"expected a unit, got valuation {u.valuation}")
        if self.cond_exp == 0:
            return Fraction(0)
        key = u.unit_key(self.table_level)
        try:
            return self.unit_values[key]
        except KeyError:
            raise CharacterError(f"unit residue {key} missing from character table") from None

    def unit_value(self, u: PadicNum) -> complex:
        return root_of_unity(self.unit_index(u))

    def __call__(self, x: PadicNum) -> complex:
        if x.is_zero():
            raise CharacterError("characters of F* are not defined at 0")
        u = x.shift(-x.valuation)
        return self.unit_value(u) * to_complex(self.at_uniformizer) ** x.valuation

    def value_exact(self, x: PadicNum) -> CyclotomicNumber:
        u = x.shift(-x.valuation)
        return CyclotomicNumber.root(self.unit_index(u), self.at_uniformizer ** x.valuation)

    def dirichlet_value(self, n: int) -> complex:
        """Value on an integer prime to p through its image in U (0 if p | n)"""
        if n % self.field.p == 0:
            return 0j
        return self.unit_value(self.field.from_int(n))

    def is_even(self) -> bool:
        return self.unit_index(self.field.from_int(-1)) == 0

    def conjugate(self) -> "MultChar":
        at = self.at_uniformizer
        at_conj = sympy.conjugate(at) if isinstance(at, sympy.Basic) else (
            at.conjugate() if isinstance(at, complex) else at)
        return MultChar(self.field, self.cond_exp, {k: (-v) % 1 for k, v in self.unit_values.items()},
                        at_conj, label=f"conj({self.label})")

    def with_uniformizer(self, value: Scalar) -> "MultChar":
        return MultChar(self.field, self.cond_exp, self.unit_values, value, self.label)

    def conductor(self) -> int:
        return conductor(self)

    def to_json(self) -> Dict:
        at = self.at_uniformizer
        if isinstance(at, (int, Fraction)):
            at_json = {"exact": str(Fraction(at))}
        else:
            c = to_complex(at)
            at_json = {"re": c.real, "im": c.imag}
        return {
            "p": self.field.p,
            "f_res": self.field.f_res,
            "cond_exp": self.cond_exp,
            "unit_values": [[list(k), str(v)] for k, v in sorted(self.unit_values.items())],
            "chi_pi": at_json,
            "label": self.label,
        }


def _unit_table_keys(fld: LocalFieldSpec, level: int) -> Tuple[List[PadicNum], Dict[UnitKey, PadicNum]]:
    _, units = residue_reps(fld, level)
    return units, {u.unit_key(level): u for u in units}


def conductor(chi: MultChar) -> int:
    """
    Conductor exponent of chi, after checking the unit table is multiplicative

    Returns:
        minimal f with chi trivial on U^(f); 0 iff chi is unramified
    """
    if not chi.unit_values or all(v == 0 for v in chi.unit_values.values()):
        return 0
    level = chi.table_level
    units, by_key = _unit_table_keys(chi.field, level)
    if set(by_key) != set(chi.unit_values):
        raise CharacterError("character table does not cover U/U^(L) exactly")
    for a, b in itertools.product(units, repeat=2):
        ka, kb = a.unit_key(level), b.unit_key(level)
        kab = (a * b).unit_key(level)
        if (chi.unit_values[ka] + chi.unit_values[kb] - chi.unit_values[kab]) % 1 != 0:
            raise CharacterError(f"character table is not multiplicative at {ka} * {kb}")
    return _min_level(chi)


def trivial_char(fld: LocalFieldSpec) -> MultChar:
    return unramified_char(fld, 1, label="trivial")


def unramified_char(fld: LocalFieldSpec, at_uniformizer: Scalar, label: str = "") -> MultChar:
    """chi_alpha(x) = alpha^ord(x)"""
    return MultChar(fld, 0, {(1,) + (0,) * (fld.f_res - 1): Fraction(0)}, at_uniformizer,
                    label=label or f"unramified({at_uniformizer})")


def _subgroup_closure(gens: Sequence[PadicNum], level: int, one: PadicNum) -> Dict[UnitKey, PadicNum]:
    seen = {one.unit_key(level): one}
    queue = deque([one])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = x * g
            key = y.unit_key(level)
            if key not in seen:
                seen[key] = y
                queue.append(y)
    return seen


def _element_order(g: PadicNum, level: int) -> int:
    one_key = g.field.one().unit_key(level)
    y, n = g, 1
    while y.unit_key(level) != one_key:
        y = y * g
        n += 1
    return n


@lru_cache(maxsize=None)
def _unit_group_structure(fld: LocalFieldSpec, level: int) -> Tuple[Tuple[PadicNum, ...], Tuple[int, ...]]:
    """Greedy generating set of U/U^(level) with element orders"""
    units, _ = _unit_table_keys(fld, level)
    one = fld.one()
    gens: List[PadicNum] = []
    span = {one.unit_key(level)}
    for u in units:
        if u.unit_key(level) not in span:
            gens.append(u)
            span = set(_subgroup_closure(gens, level, one))
            if len(span) == len(units):
                break
    return tuple(gens), tuple(_element_order(g, level) for g in gens)


@lru_cache(maxsize=None)
def _enumerate_tables(fld: LocalFieldSpec, level: int) -> Tuple[Tuple[Tuple[UnitKey, Fraction], ...], ...]:
    gens, orders = _unit_group_structure(fld, level)
    one = fld.one()
    tables = []
    for exponents in itertools.product(*(range(o) for o in orders)):
        images = [Fraction(e, o) for e, o in zip(exponents, orders)]
        table = {one.unit_key(level): Fraction(0)}
        queue = deque([one])
        consistent = True
        while queue and consistent:
            x = queue.popleft()
            idx = table[x.unit_key(level)]
            for g, img in zip(gens, images):
                y = x * g
                key = y.unit_key(level)
                val = (idx + img) % 1
                if key in table:
                    if table[key] != val:
                        consistent = False
                        break
                else:
                    table[key] = val
                    queue.append(y)
        if consistent:
            tables.append(tuple(sorted(table.items())))
    logger.debug(f"Enumerated {len(tables)} characters of U/U^({level}) over q={fld.q}")
    return tuple(tables)


def enumerate_chars(fld: LocalFieldSpec, level: int, at_uniformizer: Scalar = 1) -> List[MultChar]:
    """
    All characters of U/U^(level), extended to F* by chi(p) = at_uniformizer

    Args:
        fld: local field
        level: n >= 1
        at_uniformizer: common value chi(p)

    Returns:
        list of MultChar with their true conductor exponents
    """
    if level < 1:
        return [unramified_char(fld, at_uniformizer)]
    chars = []
    for i, table in enumerate(_enumerate_tables(fld, level)):
        values = dict(table)
        provisional = MultChar(fld, level, values, at_uniformizer, label=f"chi_{level}_{i}")
        f = _min_level(provisional)
        if f == 0:
            chars.append(unramified_char(fld, at_uniformizer, label=provisional.label))
        else:
            chars.append(_restrict(provisional, f))
    return chars


def _trivial_on(chi: MultChar, n: int) -> bool:
    """chi is trivial on U^(n)"""
    m = chi.field.p ** n
    return all(v == 0 for k, v in chi.unit_values.items()
               if k[0] % m == 1 % m and all(c % m == 0 for c in k[1:]))


def _min_level(chi: MultChar) -> int:
    if all(v == 0 for v in chi.unit_values.values()):
        return 0
    level = chi.table_level
    return next(n for n in range(1, level + 1) if _trivial_on(chi, n))


def _restrict(chi: MultChar, f: int) -> MultChar:
    """Re-key a character table from level L down to its conductor level f"""
    if f == chi.table_level:
        return chi
    m = chi.field.p ** f
    values = {}
    for k, v in chi.unit_values.items():
        values[tuple(c % m for c in k)] = v
    return MultChar(chi.field, f, values, chi.at_uniformizer, chi.label)


def primitive_chars(fld: LocalFieldSpec, f: int, at_uniformizer: Scalar = 1) -> List[MultChar]:
    return [chi for chi in enumerate_chars(fld, f, at_uniformizer) if chi.cond_exp == f]


def legendre_char(fld: LocalFieldSpec, at_uniformizer: Scalar = 1) -> MultChar:
    """Quadratic character of the residue field, lifted to U (p odd)"""
    if fld.p == 2:
        raise CharacterError("the residue-field quadratic character needs p odd")
    _, units = residue_reps(fld, 1)
    half = (fld.q - 1) // 2
    one_key = fld.one().unit_key(1)
    values = {u.unit_key(1): (Fraction(0) if (u ** half).unit_key(1) == one_key else Fraction(1, 2))
              for u in units}
    return MultChar(fld, 1, values, at_uniformizer, label="legendre")


def dirichlet_chars(p: int, m: int, precision: int = 30) -> List[MultChar]:
    """Characters of (Z/p^m)^x as characters of Z_p^x with chi(p) = 1"""
    return enumerate_chars(field(p, 1, precision), m, 1)


# ---- Gauss sums -----------------------------------------------------------

def gauss_sum_exact(chi: MultChar, psi: AddChar) -> CyclotomicNumber:
    """tau(chi) = chi(p)^(-f) * sum_{u in U/U^(f)} chi(u) psi(u / p^f), exactly"""
    f = chi.cond_exp
    if f == 0:
        return CyclotomicNumber.scalar(1)
    _, units = residue_reps(chi.field, f)
    total = CyclotomicNumber()
    for u in units:
        total = total + CyclotomicNumber.root(chi.unit_index(u) + psi_index(psi, u.shift(-f)))
    at = chi.at_uniformizer
    scale = Fraction(at) ** (-f) if isinstance(at, (int, Fraction)) else at ** (-f)
    return total * scale


def gauss_sum(chi: MultChar, psi: AddChar) -> complex:
    """
    Gauss sum of chi against psi

    Args:
        chi: character with conductor exponent f
        psi: the canonical additive character of the same field

    Returns:
        complex value; 1 for unramified chi
    """
    f = chi.cond_exp
    if f == 0:
        return 1 + 0j
    _, units = residue_reps(chi.field, f)
    total = sum((chi.unit_value(u) * psi_eval(psi, u.shift(-f)) for u in units), 0j)
    return total * to_complex(chi.at_uniformizer) ** (-f)


def lemma24_value(chi: MultChar, psi: AddChar) -> Scalar:
    """
    Closed form of the integral of chi(x) psi(x) dx over F*

    Returns:
        (1 - chi(p)^-1) / (1 - chi(p)/q) for unramified chi, tau(chi) otherwise
    """
    if chi.cond_exp > 0:
        return gauss_sum(chi, psi)
    x = chi.at_uniformizer
    q = chi.field.q
    if abs(to_complex(x)) >= q:
        raise DivergenceError(f"|chi(p)| = {abs(to_complex(x))} >= q = {q}: integral diverges")
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return (1 - 1 / x) / (1 - x / q)
    x = to_complex(x)
    return (1 - 1 / x) / (1 - x / q)


# ---- annulus oracle -------------------------------------------------------

@dataclass
class AnnulusStepFunction:
    """
    Function on F* given annulus by annulus as a finite coset decomposition.

    pieces(k) returns (center, level, value) triples partitioning the annulus
    ord = k, every level equal to k + level_offset. `growth` bounds
    sup|g| on annulus k+1 by growth * sup|g| on annulus k for k >= 0, and
    `sup_at(k)` bounds |g| on annulus k.
    """

    pieces: Callable[[int], List[Tuple[PadicNum, int, Scalar]]]
    level_offset: int
    growth: float
    sup_at: Callable[[int], float]
    q: int


def char_step_function(chi: MultChar, extra: Scalar = 1) -> AnnulusStepFunction:
    """chi(x) * extra^ord(x) as an annulus step function"""
    fld = chi.field
    level = chi.table_level
    _, units = residue_reps(fld, level)
    x = to_complex(chi.at_uniformizer) * to_complex(extra)
    unit_vals = [(u, chi.unit_value(u)) for u in units]

    def pieces(k: int):
        scale = x ** k
        return [(u.shift(k), k + level, val * scale) for u, val in unit_vals]

    return AnnulusStepFunction(pieces=pieces, level_offset=level, growth=abs(x),
                               sup_at=lambda k: abs(x) ** k, q=fld.q)


def annulus_integral_oracle(g: AnnulusStepFunction, psi: AddChar, n_max: int,
                            tol: float = 1e-10) -> Dict:
    """
    Annulus-truncated integral of g(x) psi(x) dx over F*

    Sums annuli -n..n for growing n until the certified geometric tail drops
    below tol or n reaches n_max.

    Returns:
        Dict with value, tail_bound, n_used
    """
    ratio = g.growth / g.q
    if ratio >= 1:
        raise ConvergenceError(f"geometric ratio {ratio:.4g} >= 1: no convergence certificate")
    lowest = -g.level_offset
    cache: Dict[int, complex] = {}

    def annulus(k: int) -> complex:
        if k not in cache:
            cache[k] = sum((val * coset_integral(psi, c, lvl) for c, lvl, val in g.pieces(k)), 0j)
        return cache[k]

    value, tail, n = 0j, math.inf, 0
    for n in range(max(1, -lowest), n_max + 1):
        value = sum((annulus(k) for k in range(max(-n, lowest), n + 1)), 0j)
        tail = g.sup_at(n) * g.q ** (-n) * (1 - 1 / g.q) * ratio / (1 - ratio)
        if tail < tol:
            break
    logger.debug(f"annulus oracle: n={n}, tail bound {tail:.3e}")
    return {"value": value, "tail_bound": tail, "n_used": n}

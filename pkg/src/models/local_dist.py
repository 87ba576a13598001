"""
Local Distributions
The distribution mu = psi(x) chi_beta(x) dx of a tame local representation,
ordinarity, local L-factors, Euler factors and the character-integral identity
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import sympy

from models.char_gauss import (
    AddChar,
    CyclotomicNumber,
    MultChar,
    annulus_integral_oracle,
    char_step_function,
    gauss_sum,
    gauss_sum_exact,
    psi_eval,
    psi_index,
    scalar_is_zero,
    to_complex,
)
from models.errors import CertificationError, CharacterError, DivergenceError, PoleError
from models.padic_core import LocalFieldSpec, PadicNum, residue_reps

logger = logging.getLogger(__name__)

SPHERICAL = "spherical"
SPECIAL = "special"

_X = sympy.Symbol("X")


def _exact(x: Any) -> Any:
    return Fraction(x) if isinstance(x, int) else x


def _is_exact(x: Any) -> bool:
    if isinstance(x, (int, Fraction)):
        return True
    return isinstance(x, sympy.Basic) and not x.has(sympy.Float)


def _close(x: Any, y: Any, tol: float = 1e-12) -> bool:
    if _is_exact(x) and _is_exact(y):
        return scalar_is_zero(x - y)
    return abs(to_complex(x) - to_complex(y)) <= tol * max(1.0, abs(to_complex(y)))


# ---- representations ------------------------------------------------------

@dataclass(frozen=True)
class LocalRep:
    """
    Tame local representation pi(alpha1, alpha2)

    Special pairs are ordered chi1 = |.| chi2, i.e. alpha2 = q alpha1.
    """

    field: LocalFieldSpec
    alpha1: Any
    alpha2: Any
    kind: str = SPHERICAL

    def __post_init__(self):
        object.__setattr__(self, "alpha1", _exact(self.alpha1))
        object.__setattr__(self, "alpha2", _exact(self.alpha2))
        if scalar_is_zero(self.alpha1) or scalar_is_zero(self.alpha2):
            raise ValueError("alpha1 and alpha2 must be nonzero")
        q = self.field.q
        if self.kind == SPECIAL:
            if not _close(self.alpha2, q * self.alpha1):
                raise ValueError(f"special pair must satisfy alpha2 = q * alpha1, got "
                                 f"({self.alpha1}, {self.alpha2})")
        elif self.kind == SPHERICAL:
            if _close(self.alpha2, q * self.alpha1) or _close(self.alpha1, q * self.alpha2):
                raise ValueError("a^2 = nu (q+1)^2: this pair is special, not spherical")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def a(self) -> Any:
        return self.alpha1 + self.alpha2

    @property
    def nu(self) -> Any:
        return self.alpha1 * self.alpha2 / self.q

    @property
    def beta(self) -> Any:
        """alpha1 / nu = q / alpha2"""
        return self.q / self.alpha2

    def to_json(self) -> Dict:
        return {"p": self.field.p, "f_res": self.field.f_res, "kind": self.kind,
                "alpha1": str(self.alpha1), "alpha2": str(self.alpha2)}


def steinberg(fld: LocalFieldSpec) -> LocalRep:
    return LocalRep(fld, 1, fld.q, SPECIAL)


# ---- ordinarity -----------------------------------------------------------

def _newton_slopes(coeffs: Sequence[Fraction], p: int) -> List[Fraction]:
    """Valuations of the roots of sum c_i X^i (coeffs low to high), with multiplicity"""
    points = [(i, _ord_rational(c, p)) for i, c in enumerate(coeffs) if c != 0]
    hull: List[Tuple[int, int]] = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    roots: List[Fraction] = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        roots.extend([-Fraction(y2 - y1, x2 - x1)] * (x2 - x1))
    return roots


def _ord_rational(r: Fraction, p: int) -> int:
    r = Fraction(r)
    n, d, k = r.numerator, r.denominator, 0
    while n % p == 0:
        n //= p
        k += 1
    while d % p == 0:
        d //= p
        k -= 1
    return k


def _is_padic_unit(x: Any, p: int) -> bool:
    if isinstance(x, (float, complex)) or (isinstance(x, sympy.Basic) and x.has(sympy.Float)):
        raise CertificationError(f"cannot certify p-adic valuation of floating-point value {x}")
    if isinstance(x, sympy.Basic):
        value = sympy.simplify(x)
    else:
        value = sympy.Rational(Fraction(x).numerator, Fraction(x).denominator)
    if value.is_Rational:
        return value != 0 and _ord_rational(Fraction(int(value.p), int(value.q)), p) == 0
    poly = sympy.Poly(sympy.minimal_polynomial(value, _X), _X)
    lead = poly.LC()
    coeffs = [Fraction(sympy.Rational(c / lead).p, sympy.Rational(c / lead).q)
              for c in reversed(poly.all_coeffs())]
    valuations = _newton_slopes(coeffs, p)
    if all(v == 0 for v in valuations):
        return True
    if all(v != 0 for v in valuations):
        return False
    raise CertificationError(f"valuation of {value} depends on the embedding into Q_p-bar")


def is_ordinary(rep: LocalRep) -> bool:
    """a and nu both p-adic units"""
    p = rep.field.p
    result = _is_padic_unit(rep.a, p) and _is_padic_unit(rep.nu, p)
    logger.debug(f"is_ordinary({rep.alpha1}, {rep.alpha2}) = {result}")
    return result


# ---- compact opens --------------------------------------------------------

@dataclass(frozen=True)
class Coset:
    """The ball center + p^level O, with the center reduced below p^level"""

    center: PadicNum
    level: int

    @classmethod
    def make(cls, center: PadicNum, level: int) -> "Coset":
        return cls(center.truncate(level), level)

    def key(self) -> Tuple:
        return (self.level, self.center.digit_expansion(self.level))

    def contains_zero(self) -> bool:
        return self.center.is_zero()

    def contains(self, x: PadicNum) -> bool:
        return x.agrees(self.center, self.level)

    def children(self, depth: int = 1) -> List["Coset"]:
        fld = self.center.field
        reps, _ = residue_reps(fld, depth)
        return [Coset.make(self.center + r.shift(self.level), self.level + depth) for r in reps]

    def parent(self) -> "Coset":
        return Coset.make(self.center, self.level - 1)


@dataclass(frozen=True)
class CompactOpen:
    """Finite disjoint union of balls in F"""

    cosets: Tuple[Coset, ...]

    def __post_init__(self):
        items = sorted(self.cosets, key=Coset.key)
        for i, b1 in enumerate(items):
            for b2 in items[i + 1:]:
                small, big = (b1, b2) if b1.level >= b2.level else (b2, b1)
                if big.contains(small.center):
                    raise ValueError(f"cosets {b1.key()} and {b2.key()} overlap")
        object.__setattr__(self, "cosets", tuple(items))

    @classmethod
    def ball(cls, center: PadicNum, level: int) -> "CompactOpen":
        return cls((Coset.make(center, level),))

    @classmethod
    def mult_coset(cls, a: PadicNum, n: int) -> "CompactOpen":
        """a U^(n); for n = 0 the q-1 balls of the annulus through a"""
        k = a.valuation
        if n >= 1:
            return cls((Coset.make(a, n + k),))
        _, units = residue_reps(a.field, 1)
        return cls(tuple(Coset.make(a * u, k + 1) for u in units))

    @classmethod
    def units(cls, fld: LocalFieldSpec) -> "CompactOpen":
        return cls.mult_coset(fld.one(), 0)

    def union(self, other: "CompactOpen") -> "CompactOpen":
        return CompactOpen(self.cosets + other.cosets)

    def contains_zero(self) -> bool:
        return any(c.contains_zero() for c in self.cosets)

    def scaled(self, z: PadicNum) -> "CompactOpen":
        """z * S"""
        return CompactOpen(tuple(Coset.make(z * c.center, c.level + z.valuation) for c in self.cosets))

    def refine(self, level: int) -> "CompactOpen":
        """Split every coset down to the common level"""
        out: List[Coset] = []
        for c in self.cosets:
            out.extend(c.children(level - c.level) if c.level < level else [c])
        return CompactOpen(tuple(out))

    def canonical(self) -> "CompactOpen":
        """Merge complete families of q sibling cosets until none is left"""
        current = list(self.cosets)
        while True:
            if not current:
                return CompactOpen(())
            q = current[0].center.field.q
            groups: Dict[Tuple, List[Coset]] = defaultdict(list)
            for c in current:
                groups[c.parent().key()].append(c)
            merged = []
            changed = False
            for family in groups.values():
                if len(family) == q:
                    merged.append(family[0].parent())
                    changed = True
                else:
                    merged.extend(family)
            current = merged
            if not changed:
                return CompactOpen(tuple(current))


# ---- the distribution -----------------------------------------------------

@dataclass(frozen=True)
class LocalDist:
    """mu_{alpha1, nu} = psi(x) chi_beta(x) dx with beta = alpha1 / nu"""

    rep: LocalRep

    @property
    def beta(self) -> Any:
        return self.rep.beta

    @property
    def psi(self) -> AddChar:
        return AddChar(self.rep.field)

    def extends_to_zero(self) -> bool:
        return _close(self.beta, 1)


def _coset_measure(mu: LocalDist, c: Coset) -> complex:
    q = mu.rep.q
    if c.contains_zero():
        if not mu.extends_to_zero():
            raise DivergenceError("mu extends over 0 only when alpha1 = nu")
        return complex(q ** (-c.level)) if c.level >= 0 else 0j
    if c.level < 0:
        return 0j
    k = c.center.valuation
    return to_complex(mu.beta) ** k * psi_eval(mu.psi, c.center) * q ** (-c.level)


def _coset_measure_exact(mu: LocalDist, c: Coset) -> CyclotomicNumber:
    q = mu.rep.q
    if c.contains_zero():
        if not mu.extends_to_zero():
            raise DivergenceError("mu extends over 0 only when alpha1 = nu")
        return CyclotomicNumber.scalar(Fraction(1, q ** c.level)) if c.level >= 0 else CyclotomicNumber()
    if c.level < 0:
        return CyclotomicNumber()
    k = c.center.valuation
    return CyclotomicNumber.root(psi_index(mu.psi, c.center), mu.beta ** k * Fraction(1, q ** c.level))


def mu_eval(mu: LocalDist, S: CompactOpen) -> complex:
    """
    mu(S) as a sum of closed-form coset values

    Args:
        mu: local distribution
        S: compact open set

    Returns:
        complex value
    """
    return sum((_coset_measure(mu, c) for c in S.cosets), 0j)


def mu_eval_exact(mu: LocalDist, S: CompactOpen) -> CyclotomicNumber:
    if not _is_exact(mu.beta):
        raise CertificationError("exact evaluation needs exact alpha1, alpha2")
    total = CyclotomicNumber()
    for c in S.cosets:
        total = total + _coset_measure_exact(mu, c)
    return total


# ---- L-factors and Euler factors ------------------------------------------

def _q_power(q: int, s: Any) -> Any:
    """q^-(s + 1/2), exactly when s + 1/2 is an integer"""
    shifted = Fraction(s) + Fraction(1, 2) if isinstance(s, (int, Fraction)) else None
    if shifted is not None and shifted.denominator == 1:
        return Fraction(1, q) ** int(shifted)
    return complex(q) ** (-(complex(s) + 0.5))


def local_L(rep: LocalRep, chi_at: Any, s: Any, cond_exp: int = 0) -> Any:
    """
    L(s, pi x chi)

    Returns:
        1 for ramified chi; one factor for special pi, two for spherical pi
    """
    if cond_exp > 0:
        return 1
    t = _q_power(rep.q, s)
    x = _exact(chi_at)
    alphas = [rep.alpha1] if rep.kind == SPECIAL else [rep.alpha1, rep.alpha2]
    denominator = 1
    for alpha in alphas:
        denominator = denominator * (1 - alpha * x * t)
    if scalar_is_zero(denominator, 1e-14):
        raise PoleError(f"L(s, pi x chi) has a pole at chi(p) = {chi_at}, s = {s}")
    return 1 / denominator


def euler_factor(rep: LocalRep, chi: MultChar) -> Any:
    """
    e(alpha1, alpha2, chi)

    Raises:
        PoleError: unramified chi with chi(p) = alpha2
    """
    q = rep.q
    a1, a2 = rep.alpha1, rep.alpha2
    if chi.cond_exp > 0:
        return (a2 / q) ** chi.cond_exp
    x = _exact(chi.at_uniformizer)
    if _close(x, a2):
        raise PoleError("Euler factor is singular at chi(p) = alpha2")
    value = (1 - a1 * x / q) * (1 - a2 / (x * q)) / (1 - x / a2)
    if rep.kind == SPHERICAL:
        value = value * (1 - a2 * x / q)
    return value


def euler_L_product(rep: LocalRep, chi: MultChar) -> Any:
    """e * L(1/2), continuously extended through the poles of L at chi(p) = q / alpha_i"""
    if chi.cond_exp > 0:
        return (rep.alpha2 / rep.q) ** chi.cond_exp
    x = _exact(chi.at_uniformizer)
    a2 = rep.alpha2
    if _close(x, a2):
        raise PoleError("e * L(1/2) is singular at chi(p) = alpha2")
    return (1 - a2 / (rep.q * x)) / (1 - x / a2)


def semilocal_euler_factor(reps: Sequence[LocalRep], chis: Sequence[MultChar]) -> Any:
    if len(reps) != len(chis):
        raise ValueError(f"{len(reps)} representations but {len(chis)} characters")
    value = 1
    for rep, chi in zip(reps, chis):
        value = value * euler_factor(rep, chi)
    return value


# ---- the character integral ------------------------------------------------

def _integral_report(mu: LocalDist, chi: MultChar, tol: float) -> Dict:
    if chi.field != mu.rep.field:
        raise CharacterError("character and distribution over different fields")
    f = chi.cond_exp
    if f > 0:
        if _is_exact(chi.at_uniformizer) and _is_exact(mu.beta):
            exact = _ramified_integral_exact(mu, chi)
            return {"value": exact.to_complex(), "exact": exact, "tail_bound": 0.0, "n_used": f}
        return {"value": _ramified_integral(mu, chi), "exact": None, "tail_bound": 0.0, "n_used": f}
    x = to_complex(chi.at_uniformizer)
    if abs(x) >= abs(to_complex(mu.rep.alpha2)):
        raise DivergenceError(f"|chi(p)| = {abs(x):.6g} >= |alpha2|: integral diverges")
    g = char_step_function(chi, mu.beta)
    oracle = annulus_integral_oracle(g, mu.psi, n_max=100_000, tol=tol / 10)
    return {"value": oracle["value"], "exact": None, "tail_bound": oracle["tail_bound"],
            "n_used": oracle["n_used"]}


def _ramified_integral(mu: LocalDist, chi: MultChar) -> complex:
    f = chi.cond_exp
    q = mu.rep.q
    _, units = residue_reps(chi.field, f)
    xb = to_complex(chi.at_uniformizer) * to_complex(mu.beta)
    total = 0j
    for k in range(-f, 1):
        scale = xb ** k * q ** (-(k + f))
        total += scale * sum((chi.unit_value(u) * psi_eval(mu.psi, u.shift(k)) for u in units), 0j)
    return total


def _ramified_integral_exact(mu: LocalDist, chi: MultChar) -> CyclotomicNumber:
    """Finite annulus sum; annuli outside [-f, 0] vanish by orthogonality"""
    f = chi.cond_exp
    q = mu.rep.q
    _, units = residue_reps(chi.field, f)
    xb = _exact(chi.at_uniformizer) * mu.beta
    total = CyclotomicNumber()
    for k in range(-f, 1):
        scale = xb ** k * Fraction(1, q ** (k + f))
        for u in units:
            total = total + CyclotomicNumber.root(chi.unit_index(u) + psi_index(mu.psi, u.shift(k)), scale)
    return total


def integrate_char(mu: LocalDist, chi: MultChar, tol: float = 1e-10) -> complex:
    """
    Integral of chi over F* against mu

    Args:
        mu: local distribution
        chi: quasi-character; for unramified chi needs |chi(p)| < |alpha2|
        tol: absolute tolerance on the truncation tail

    Returns:
        complex value (exact finite sum for ramified chi)
    """
    return _integral_report(mu, chi, tol)["value"]


def prop27_check(mu: LocalDist, chi: MultChar, tol: float = 1e-8) -> Dict:
    """
    Compare the character integral with e * tau * L(1/2)

    Returns:
        Dict with lhs, rhs, abs_err, tail_bound and status
    """
    rep = mu.rep
    report = _integral_report(mu, chi, tol)
    exact_match = None
    if report["exact"] is not None and _is_exact(rep.alpha2):
        rhs_exact = gauss_sum_exact(chi, mu.psi) * euler_factor(rep, chi)
        exact_match = report["exact"] == rhs_exact
        rhs = rhs_exact.to_complex()
    else:
        try:
            L_half = local_L(rep, chi.at_uniformizer, Fraction(1, 2), chi.cond_exp)
            rhs = to_complex(euler_factor(rep, chi)) * gauss_sum(chi, mu.psi) * to_complex(L_half)
        except PoleError:
            logger.debug("L(1/2) pole: using the continuous extension of e * L")
            rhs = to_complex(euler_L_product(rep, chi)) * gauss_sum(chi, mu.psi)
    lhs = report["value"]
    abs_err = abs(lhs - rhs)
    rel_err = abs_err / max(abs(rhs), 1e-300)
    ok = exact_match if exact_match is not None else (rel_err < tol or abs_err < tol)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "abs_err": abs_err,
        "rel_err": rel_err,
        "tail_bound": report["tail_bound"],
        "exact": exact_match is not None,
        "ok": bool(ok),
    }


# ---- Whittaker values -----------------------------------------------------

def whittaker_WH(mu: LocalDist, n: int, a: PadicNum) -> complex:
    """W_H(diag(a, 1)) := mu(a H) for H = U^(n)"""
    return mu_eval(mu, CompactOpen.mult_coset(a, n))


def whittaker_WH_exact(mu: LocalDist, n: int, a: PadicNum) -> CyclotomicNumber:
    return mu_eval_exact(mu, CompactOpen.mult_coset(a, n))


def _unit_index(fld: LocalFieldSpec, n: int) -> int:
    return 1 if n == 0 else (fld.q - 1) * fld.q ** (n - 1)


def prop29c_check(mu: LocalDist, pieces: Iterable[Tuple[PadicNum, Any]], n: int) -> Dict:
    """
    Integral of an H-invariant step function against mu versus [U:H] times the
    multiplicative integral of f * W_H

    The multiplicative side is evaluated on the U^(n+1)-refinement of every coset.

    Args:
        mu: distribution with exact parameters
        pieces: (a, c) pairs for f = sum c 1_{a U^(n)}
        n: level of H

    Returns:
        Dict with lhs, rhs (exact) and equality status
    """
    fld = mu.rep.field
    pieces = list(pieces)
    lhs = CyclotomicNumber()
    S = CompactOpen(())
    for a, coeff in pieces:
        part = CompactOpen.mult_coset(a, n)
        S = S.union(part)
        lhs = lhs + mu_eval_exact(mu, part) * coeff
    ratio = Fraction(_unit_index(fld, n), _unit_index(fld, n + 1))
    rhs = CyclotomicNumber()
    for a, coeff in pieces:
        if n == 0:
            _, units = residue_reps(fld, 1)
            finer = [a * u for u in units]
        else:
            reps, _ = residue_reps(fld, 1)
            finer = [a * (fld.one() + r.shift(n)) for r in reps]
        for b in finer:
            rhs = rhs + whittaker_WH_exact(mu, n, b) * (ratio * coeff)
    equal = lhs == rhs
    logger.debug(f"prop29c n={n}: {len(pieces)} cosets, equal={equal}")
    return {"lhs": lhs.to_complex(), "rhs": rhs.to_complex(), "cosets": len(S.cosets), "ok": equal}


# ---- semi-local products --------------------------------------------------

def semilocal_mu(dists: Sequence[LocalDist], sets: Sequence[CompactOpen]) -> complex:
    """Product distribution evaluated on a product of compact opens"""
    if len(dists) != len(sets):
        raise ValueError(f"{len(dists)} local factors but {len(sets)} compact opens")
    value = 1 + 0j
    for mu, S in zip(dists, sets):
        value *= mu_eval(mu, S)
    return value

"""
Global Measures over Q
The cyclotomic p-adic L-function of an elliptic curve over Q: coefficients,
local parameters, the finite-level measure, interpolation and exceptional zeros
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd
import sympy
from scipy import integrate

from config.settings import settings
from models.archimedean import real_whittaker
from models.char_gauss import (
    AddChar,
    MultChar,
    gauss_sum,
    to_complex,
    trivial_char,
)
from models.errors import (
    MissingCoefficientError,
    NonPrimeError,
    NotOrdinaryError,
    ReductionError,
    ResourceLimitError,
    TruncationError,
)
from models.local_dist import (
    SPECIAL,
    SPHERICAL,
    CompactOpen,
    LocalDist,
    LocalRep,
    euler_factor,
    is_ordinary,
    mu_eval,
)
from models.padic_core import PadicNum, exp_p, field, log_p

logger = logging.getLogger(__name__)

GOOD = "good"
SPLIT = "split"
NONSPLIT = "nonsplit"
ADDITIVE = "additive"

MAX_POINT_COUNT_PRIME = 10_000
_BRUTE_FORCE_LIMIT = 200
_ROUNDOFF = 1e-15


class Estimate(NamedTuple):
    value: complex
    error: float


# ---- curves ---------------------------------------------------------------

@dataclass(frozen=True)
class EllipticInput:
    """Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6"""

    label: str
    ainvs: Tuple[int, int, int, int, int]
    conductor: int
    root_number: int

    def __post_init__(self):
        if len(self.ainvs) != 5:
            raise ValueError(f"expected five Weierstrass coefficients, got {len(self.ainvs)}")
        if self.root_number not in (1, -1):
            raise ValueError(f"root number must be +1 or -1, got {self.root_number}")
        if self.discriminant == 0:
            raise ValueError(f"curve {self.label} is singular")

    @property
    def b_invariants(self) -> Tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    def to_json(self) -> Dict:
        return {"label": self.label, "ainvs": list(self.ainvs), "conductor": self.conductor,
                "root_number": self.root_number, "discriminant": self.discriminant}


CURVES: Dict[str, EllipticInput] = {
    "11a": EllipticInput("11a", (0, -1, 1, -10, -20), 11, 1),
    "37a": EllipticInput("37a", (0, 0, 1, -1, 0), 37, -1),
}


def get_curve(label: str) -> EllipticInput:
    try:
        return CURVES[label]
    except KeyError:
        raise ValueError(f"unknown curve {label!r}; known: {sorted(CURVES)}") from None


# ---- point counting -------------------------------------------------------

def _check_prime(ell: int) -> None:
    if not sympy.isprime(ell):
        raise NonPrimeError(f"{ell} is not prime")


def count_points(E: EllipticInput, ell: int, brute_force: Optional[bool] = None) -> int:
    """
    #E(F_ell) on the reduced model, point at infinity and any singular point included

    Args:
        E: curve
        ell: prime
        brute_force: enumerate the full (x, y) grid; by default only for small ell
            and for ell = 2

    Returns:
        number of projective points
    """
    _check_prime(ell)
    if ell > MAX_POINT_COUNT_PRIME:
        raise ResourceLimitError(f"point counting is limited to primes <= {MAX_POINT_COUNT_PRIME}")
    a1, a2, a3, a4, a6 = (c % ell for c in E.ainvs)
    xs = np.arange(ell, dtype=np.int64)
    if brute_force is None:
        brute_force = ell == 2 or ell <= _BRUTE_FORCE_LIMIT
    if brute_force:
        x, y = np.meshgrid(xs, xs, indexing="ij")
        lhs = (y * y + a1 * x * y + a3 * y) % ell
        rhs = ((((x + a2) * x) % ell + a4) * x + a6) % ell
        return int(np.count_nonzero(lhs == rhs)) + 1
    if ell == 2:
        raise ValueError("the square-completion count needs an odd prime")
    b2, b4, b6, _ = E.b_invariants
    disc = ((((4 * xs + b2) % ell) * xs % ell + 2 * b4) % ell * xs % ell + b6) % ell
    squares = np.zeros(ell, dtype=bool)
    squares[(xs * xs) % ell] = True
    legendre = np.where(disc == 0, 0, np.where(squares[disc], 1, -1))
    return ell + int(legendre.sum()) + 1


def reduction_type(E: EllipticInput, p: int) -> str:
    """good, split, nonsplit or additive, from the point count of the reduced model"""
    _check_prime(p)
    if E.discriminant % p:
        return GOOD
    ap = p + 1 - count_points(E, p)
    return {1: SPLIT, -1: NONSPLIT}.get(ap, ADDITIVE)


def point_count_ap(E: EllipticInput, ell: int) -> int:
    """
    a_ell = ell + 1 - #E(F_ell) at a prime of good reduction

    Raises:
        ReductionError: bad reduction at ell
    """
    _check_prime(ell)
    if E.discriminant % ell == 0:
        raise ReductionError(f"{E.label} has bad reduction at {ell}; use bad_prime_ap")
    ap = ell + 1 - count_points(E, ell)
    if ap * ap > 4 * ell:
        raise ReductionError(f"a_{ell} = {ap} violates the Hasse bound")
    return ap


def bad_prime_ap(E: EllipticInput, p: int) -> int:
    return {SPLIT: 1, NONSPLIT: -1, ADDITIVE: 0}[reduction_type(E, p)]


# ---- coefficient tables ---------------------------------------------------

@dataclass
class CoeffTable:
    """a_n for 1 <= n <= n_max of a weight-2 newform of level `conductor`"""

    conductor: int
    coeffs: np.ndarray
    root_number: int = 1
    label: str = ""

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int) -> int:
        if n < 1 or n > self.n_max:
            raise MissingCoefficientError(f"a_{n} not in table (n_max = {self.n_max})")
        return int(self.coeffs[n])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": np.arange(1, self.n_max + 1), "a_n": self.coeffs[1:]})

    def multiplicativity_violations(self, limit: Optional[int] = None) -> List[Tuple[int, int]]:
        limit = min(limit or self.n_max, self.n_max)
        bad = []
        for m in range(2, limit + 1):
            for n in range(m + 1, limit // m + 1):
                if math.gcd(m, n) == 1 and self.coeffs[m * n] != self.coeffs[m] * self.coeffs[n]:
                    bad.append((m, n))
        return bad

    def hasse_violations(self) -> List[int]:
        return [p for p in sympy.primerange(2, self.n_max + 1)
                if self.conductor % p and self.coeffs[p] ** 2 > 4 * p]


def extend_coeffs(table: Union[CoeffTable, Mapping[int, int]], n_max: int,
                  conductor: Optional[int] = None, root_number: int = 1) -> CoeffTable:
    """
    Fill a_n for n <= n_max from the prime values

    Prime powers follow the Hecke recursion at good primes and a_{p^k} = a_p^k at
    bad ones; composite n are filled multiplicatively.

    Raises:
        MissingCoefficientError: a prime p <= n_max has no a_p
    """
    if isinstance(table, CoeffTable):
        known = {n: int(table.coeffs[n]) for n in range(1, table.n_max + 1)}
        conductor, root_number, label = table.conductor, table.root_number, table.label
    else:
        known, label = dict(table), ""
    if conductor is None:
        raise ValueError("conductor is required")
    coeffs = np.zeros(n_max + 1, dtype=np.int64)
    if n_max >= 1:
        coeffs[1] = 1
    for p in sympy.primerange(2, n_max + 1):
        if p not in known:
            raise MissingCoefficientError(f"a_{p} is required to extend to n_max = {n_max}")
        ap = known[p]
        prev, cur, pk = 1, ap, p
        while pk <= n_max:
            coeffs[pk] = cur
            nxt = ap * cur - (p * prev if conductor % p else 0)
            prev, cur, pk = cur, nxt, pk * p
    smallest = np.zeros(n_max + 1, dtype=np.int64)
    for p in sympy.primerange(2, n_max + 1):
        block = smallest[p::p]
        block[block == 0] = p
    for n in range(2, n_max + 1):
        p = int(smallest[n])
        m, pk = n, 1
        while m % p == 0:
            m //= p
            pk *= p
        if m > 1:
            coeffs[n] = coeffs[pk] * coeffs[m]
    return CoeffTable(conductor, coeffs, root_number, label)


@lru_cache(maxsize=8)
def coeffs_from_curve(E: EllipticInput, n_max: int) -> CoeffTable:
    """Coefficient table from point counts at good primes and the bad-prime convention"""
    primes = {}
    for p in sympy.primerange(2, n_max + 1):
        primes[p] = point_count_ap(E, p) if E.discriminant % p else bad_prime_ap(E, p)
    table = extend_coeffs(primes, n_max, E.conductor, E.root_number)
    table.label = E.label
    logger.info(f"{E.label}: {len(primes)} prime coefficients counted, n_max = {n_max}")
    return table


# ---- local parameters -----------------------------------------------------

def alpha_pair(a_p: int, p: int, reduction: str) -> Tuple[sympy.Expr, sympy.Expr]:
    """
    (alpha1, alpha2) with alpha2 the p-adically non-unit root

    At good p, alpha2 is (a_p + sqrt(a_p^2 - 4p)) / 2 with the principal square
    root, which fixes the embedding of Q-bar into Q_p-bar.

    Raises:
        NotOrdinaryError: p | a_p at a good prime
        ReductionError: additive reduction
    """
    if reduction == GOOD:
        if a_p % p == 0:
            raise NotOrdinaryError(f"a_{p} = {a_p} is divisible by {p}: supersingular")
        root = sympy.sqrt(sympy.Integer(a_p * a_p - 4 * p))
        return (sympy.Integer(a_p) - root) / 2, (sympy.Integer(a_p) + root) / 2
    if reduction == SPLIT:
        return sympy.Integer(1), sympy.Integer(p)
    if reduction == NONSPLIT:
        return sympy.Integer(-1), sympy.Integer(-p)
    raise ReductionError(f"{reduction} reduction at {p} is not supported")


def local_rep(E: EllipticInput, p: int) -> LocalRep:
    reduction = reduction_type(E, p)
    ap = point_count_ap(E, p) if reduction == GOOD else bad_prime_ap(E, p)
    a1, a2 = alpha_pair(ap, p, reduction)
    kind = SPHERICAL if reduction == GOOD else SPECIAL
    return LocalRep(field(p, 1, settings.padic_precision), a1, a2, kind)


# ---- cyclotomic logarithm -------------------------------------------------

@dataclass(frozen=True)
class CyclotomicLog:
    """ell = log_p o N on Z_p^x, with image p^eps Z_p"""

    p: int
    precision: int = 30

    @property
    def eps(self) -> int:
        return 2 if self.p == 2 else 1

    def ell(self, a: Union[int, Fraction]) -> PadicNum:
        return log_p(field(self.p, 1, self.precision).from_rational(a))

    def exp(self, x: PadicNum) -> PadicNum:
        return exp_p(x)

    def in_image(self, x: PadicNum) -> bool:
        return x.is_zero() or x.valuation >= self.eps


def _lift(x: PadicNum, m: int) -> int:
    """Integer representative of an integral x modulo p^m"""
    p = x.field.p
    return sum(digit[0] * p ** e for e, digit in x.digit_expansion(m))


# ---- period engine --------------------------------------------------------

class GlobalMeasure:
    """
    The measure mu_pi on Z_p^x of a curve over Q at a fixed p

    Coset values come from the collapsed idele integral: p-power partial
    periods of the newform, evaluated through the modular transformation that
    moves each cusp b/p^j to infinity.
    """

    def __init__(self, curve: EllipticInput, p: int, n_trunc: Optional[int] = None,
                 c_real: Optional[float] = None, table: Optional[CoeffTable] = None,
                 tol: Optional[float] = None):
        _check_prime(p)
        self.curve = curve
        self.p = p
        self.n_trunc = n_trunc or settings.coeff_truncation
        self.c_real = settings.real_whittaker_constant if c_real is None else c_real
        self.tol = settings.tail_tolerance if tol is None else tol
        self.table = table if table is not None else coeffs_from_curve(curve, self.n_trunc)
        if self.table.n_max < self.n_trunc:
            raise MissingCoefficientError(f"table stops at {self.table.n_max} < N_trunc = {self.n_trunc}")
        N = curve.conductor
        if N % p == 0 and N != p ** _ord(N, p):
            raise ReductionError(f"cusps b/{p}^j are unsupported for conductor {N}")
        self.reduction = reduction_type(curve, p)
        self.a_p = self.table[p]
        self.rep = local_rep(curve, p)
        self.beta = to_complex(self.rep.beta)
        n = np.arange(1, self.n_trunc + 1, dtype=np.int64)
        self._n = n
        self._weights = self.table.coeffs[1:self.n_trunc + 1].astype(float) / n
        self._cache: Dict[Tuple[int, int, bool], Estimate] = {}

    # -- partial periods --
    def _transform(self, b: int, d: int) -> Tuple[int, float, int]:
        """(r* numerator, M, sign) for the cusp b/d, d a power of p"""
        N = self.curve.conductor
        if d == 1:
            return 0, float(N), self.curve.root_number
        if math.gcd(d, N) == 1:
            return (-pow(N * b, -1, d)) % d, float(N) * d * d, self.curve.root_number
        if d % N == 0:
            return (-pow(b, -1, d)) % d, float(d) * d, -1
        raise ReductionError(f"no modular transformation for the cusp {b}/{d} at level {N}")

    def _series(self, b: int, d: int, t0: float) -> complex:
        phases = np.exp(2j * np.pi * ((self._n * b) % d) / d)
        return complex(np.sum(self._weights * np.exp(-2 * np.pi * self._n * t0) * phases))

    def _tail(self, t0: float) -> float:
        r = math.exp(-2 * math.pi * t0)
        return 2.0 * r ** (self.n_trunc + 1) / (1 - r)

    def _quad_series(self, b: int, d: int, t0: float) -> Tuple[complex, float]:
        """2 pi times the integral of f(b/d + it) over [t0, inf), by quadrature"""
        phases = np.exp(2j * np.pi * ((self._n * b) % d) / d)
        coeffs = self._weights * self._n * phases

        def part(t: float, comp: int) -> float:
            value = np.sum(coeffs * np.exp(-2 * np.pi * self._n * t))
            return float(value.real if comp == 0 else value.imag)

        upper = t0 + 40.0 / (2 * math.pi)
        re, e_re = integrate.quad(part, t0, upper, args=(0,), epsabs=1e-14, epsrel=1e-12,
                                  limit=settings.quad_limit)
        im, e_im = integrate.quad(part, t0, upper, args=(1,), epsabs=1e-14, epsrel=1e-12,
                                  limit=settings.quad_limit)
        return 2 * math.pi * complex(re, im), 2 * math.pi * (e_re + e_im)

    def partial_period(self, b: int, d: int, quad: bool = False) -> Estimate:
        """
        Sum of a_n / n e(n b / d), i.e. 2 pi times the integral of f(b/d + it) over t > 0

        Raises:
            TruncationError: tail bound above tolerance at this N_trunc
        """
        g = math.gcd(b, d)
        b, d = (b // g) % (d // g), d // g
        key = (b, d, quad)
        if key in self._cache:
            return self._cache[key]
        r_star, M, sign = self._transform(b, d)
        t0 = 1.0 / math.sqrt(M)
        tail = 2 * self._tail(t0)
        if tail > self.tol:
            raise TruncationError(f"tail bound {tail:.2e} at cusp {b}/{d} exceeds {self.tol:.1e}; "
                                  f"raise N_trunc above {self.n_trunc}")
        if quad:
            v1, e1 = self._quad_series(b, d, t0)
            v2, e2 = self._quad_series(r_star, d, t0)
            value, err = v1 + sign * v2, e1 + e2 + tail
        else:
            value = self._series(b, d, t0) + sign * self._series(r_star, d, t0)
            magnitude = float(np.sum(np.abs(self._weights) * np.exp(-2 * np.pi * self._n * t0)))
            err = tail + 2 * _ROUNDOFF * magnitude
        est = Estimate(value, err)
        self._cache[key] = est
        return est

    def coprime_period(self, b: int, d: int, quad: bool = False) -> Estimate:
        """Sum over n prime to p of a_n / n e(n b / d)"""
        p, ap = self.p, self.a_p
        parts = [(1.0, b), (-ap / p, p * b)]
        if self.reduction == GOOD:
            parts.append((1.0 / p, p * p * b))
        value, err = 0j, 0.0
        for coeff, num in parts:
            est = self.partial_period(num, d, quad)
            value += coeff * est.value
            err += abs(coeff) * est.error
        return Estimate(value, err)

    def _I(self, u: int, j: int, quad: bool) -> Estimate:
        est = self.coprime_period(u, self.p ** j, quad)
        scale = self.c_real / math.pi
        return Estimate(scale * est.value.real, scale * est.error)

    def unit_coset_value(self, u: int, m: int, quad: bool = False) -> Estimate:
        """mu_pi(u (1 + p^m Z_p)) for m >= 1"""
        p, beta = self.p, self.beta
        base = self._I(0, 0, quad)
        value = base.value / (1 - beta / p)
        err = base.error / abs(1 - beta / p)
        for j in range(1, m + 1):
            est = self._I(u % p ** j, j, quad)
            value += beta ** (-j) * p ** j * est.value
            err += abs(beta) ** (-j) * p ** j * est.error
        return Estimate(value / p ** m, err / p ** m)

    def measure_coset(self, a: int, m: int, quad: bool = False) -> Estimate:
        """
        Measure of the coset of G_p matching a mod p^m under reciprocity

        Args:
            a: integer prime to p
            m: level; m = 0 gives the total mass
            quad: evaluate the partial periods by quadrature

        Returns:
            Estimate(value, error)
        """
        p = self.p
        if a % p == 0:
            raise ValueError(f"{a} is not prime to {p}")
        if m == 0:
            parts = [self.measure_coset(b, 1, quad) for b in range(1, p)]
            return Estimate(sum(e.value for e in parts), sum(e.error for e in parts))
        return self.unit_coset_value(pow(a, -1, p ** m), m, quad)

    def finite_level(self, m: int, jobs: int = 1, quad: bool = False) -> "FiniteLevelMeasure":
        residues = [a for a in range(1, self.p ** m) if a % self.p]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                values = list(pool.map(lambda a: self.measure_coset(a, m, quad), residues))
        else:
            values = [self.measure_coset(a, m, quad) for a in residues]
        return FiniteLevelMeasure(self.p, m, dict(zip(residues, values)))

    # -- phi --
    def _local_measure(self) -> LocalDist:
        fld = field(self.p, 1, settings.padic_precision)
        return LocalDist(LocalRep(fld, to_complex(self.rep.alpha1), to_complex(self.rep.alpha2),
                                  self.rep.kind))

    def _phi_block(self, mu: LocalDist, U: CompactOpen, k: int,
                   n_max: int) -> List[Tuple[int, int, complex]]:
        """(n, sign, mu_p(zeta U) a_n / n) for zeta = sign * n * p^k, n <= n_max prime to p"""
        fld = mu.rep.field
        scale = Fraction(self.p) ** k
        block = []
        for n in range(1, n_max + 1):
            if n % self.p:
                for sign in (1, -1):
                    m = mu_eval(mu, U.scaled(fld.from_rational(sign * n * scale)))
                    if m != 0:
                        block.append((n, sign, m * self.table[n] / n))
        return block

    def phi_terms(self, U: CompactOpen, x_inf: float, n_trunc: Optional[int] = None) -> List[Dict]:
        """Nonzero terms of phi(U, x_inf): zeta = sign * n * p^k with n prime to p"""
        n_trunc = n_trunc or self.n_trunc
        mu = self._local_measure()
        k_min = -max(c.level for c in U.cosets)
        terms = []
        k = k_min
        while self.p ** (k - k_min) <= n_trunc:
            scale = float(Fraction(self.p) ** k)
            for n, sign, coeff in self._phi_block(mu, U, k, n_trunc // self.p ** (k - k_min)):
                w = real_whittaker(n * scale * x_inf, self.c_real)
                terms.append({"n": n, "k": k, "sign": sign, "value": coeff * w})
            k += 1
        return terms

    def phi_eval(self, U: CompactOpen, x_inf: float, n_trunc: Optional[int] = None,
                 tol: Optional[float] = None) -> Estimate:
        """
        phi(U, x_inf) = sum over zeta of mu_p(zeta U) W^p(zeta x_inf)

        Raises:
            TruncationError: tail bound above tol
        """
        n_trunc = n_trunc or self.n_trunc
        tol = self.tol if tol is None else tol
        terms = self.phi_terms(U, x_inf, n_trunc)
        value = sum((t["value"] for t in terms), 0j)
        k_min = -max(c.level for c in U.cosets)
        bound = sum(abs(self.beta) ** c.center.valuation * self.p ** (-c.level)
                    for c in U.cosets if not c.contains_zero())
        bound *= max(1.0, (abs(self.beta) / self.p) ** k_min)
        # omitted terms have n p^(k - k_min) > N_trunc at argument x_inf p^k_min
        x_min = x_inf * float(Fraction(self.p) ** k_min)
        r = math.exp(-2 * math.pi * x_min)
        N = n_trunc
        tail = 4 * bound * self.c_real * x_min * r ** (N + 1) * ((N + 1) - N * r) / (1 - r) ** 2
        if tail > tol:
            raise TruncationError(f"phi tail bound {tail:.2e} above {tol:.1e} at x_inf = {x_inf}")
        return Estimate(value, tail)

    def phi_integral(self, U: CompactOpen, tol: Optional[float] = None) -> Estimate:
        """
        Integral of phi(U, x) over x in (0, inf) against dx / x, by quadrature

        The zeta-sum is integrated one power p^k at a time. Block k only sees cusps
        b / p^max(-k, 0), so its integrand is cut at the height where the modular
        decay at those cusps drops below tol. Inside Z_p the measure scales as
        mu(p S) = (beta / p) mu(S), so every block past k = 0 is block 0 times
        (beta / p)^k.

        Raises:
            ValueError: U meets 0 or leaves Z_p
            TruncationError: a block needs more than N_trunc coefficients
        """
        if U.contains_zero() or any(c.center.valuation < 0 for c in U.cosets):
            raise ValueError("phi_integral needs U inside Z_p minus 0")
        tol = self.tol if tol is None else tol
        p, mu, N = self.p, self._local_measure(), self.curve.conductor
        log_tol = math.log(1.0 / tol)
        value, err = 0j, 0.0
        for k in range(-max(c.level for c in U.cosets), 1):
            if k == 0:
                # the coprime-to-p sum at the cusp 0 also sees f(p^2 z)
                M = float(N) * (p * p if self.reduction == GOOD else p)
            else:
                _, M, _ = self._transform(1, p ** -k)
            y0 = 2 * math.pi / (M * log_tol)
            n_max = math.ceil(log_tol / (2 * math.pi * y0))
            if n_max > self.n_trunc:
                raise TruncationError(f"phi block p^{k} needs {n_max} coefficients; "
                                      f"raise N_trunc above {self.n_trunc}")
            block = self._phi_block(mu, U, k, n_max)
            scale = float(Fraction(p) ** k)
            scales = np.array([n for n, _, _ in block], dtype=float) * scale
            coeffs = np.array([c for _, _, c in block], dtype=complex)
            x0 = y0 / scale

            def part(x: float, comp: int) -> float:
                # W(s x) / x
                total = np.sum(coeffs * self.c_real * scales * np.exp(-2 * np.pi * scales * x))
                return float(total.real if comp == 0 else total.imag)

            upper = x0 + (log_tol + 5) / (2 * math.pi * scale)
            points = list(np.geomspace(x0, upper, 12)[1:-1])
            re, e_re = integrate.quad(part, x0, upper, args=(0,), points=points,
                                      epsabs=tol / 10, limit=settings.quad_limit)
            im, e_im = integrate.quad(part, x0, upper, args=(1,), points=points,
                                      epsabs=tol / 10, limit=settings.quad_limit)
            block_value = complex(re, im)
            block_err = e_re + e_im + tol * self.c_real * float(np.sum(np.abs(coeffs))) / (2 * math.pi)
            logger.debug(f"phi block p^{k}: {len(block)} terms from x = {x0:.3e}, value {block_value:.6e}")
            value += block_value
            err += block_err
        ratio = self.beta / p
        return Estimate(value + block_value * ratio / (1 - ratio),
                        err + block_err * abs(ratio) / abs(1 - ratio))

    # -- local data --
    def euler_factor_at(self, chi: MultChar) -> complex:
        return to_complex(euler_factor(self.rep, chi))


def _ord(n: int, p: int) -> int:
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


# ---- finite-level measures ------------------------------------------------

@dataclass
class FiniteLevelMeasure:
    p: int
    level: int
    values: Dict[int, Estimate] = dc_field(default_factory=dict)

    @property
    def error(self) -> float:
        floor = 100 * np.finfo(float).eps * sum(abs(e.value) for e in self.values.values())
        return sum(e.error for e in self.values.values()) + floor

    def total_mass(self) -> complex:
        return sum((self.values[a].value for a in sorted(self.values)), 0j)

    def compatibility(self, finer: "FiniteLevelMeasure") -> Dict:
        """Compare each level-m value with the sum of its level-(m+1) refinements"""
        if finer.level != self.level + 1 or finer.p != self.p:
            raise ValueError("compatibility needs the next level of the same p")
        modulus = self.p ** self.level
        worst = 0.0
        for a in sorted(self.values):
            children = sum((finer.values[b].value for b in sorted(finer.values) if b % modulus == a), 0j)
            worst = max(worst, abs(children - self.values[a].value))
        error = self.error + finer.error
        return {"level": self.level, "max_discrepancy": worst, "error_estimate": error,
                "ok": worst <= 10 * error}

    def to_json(self) -> Dict:
        return {
            "p": self.p,
            "level": self.level,
            "values": {str(a): [e.value.real, e.value.imag] for a, e in sorted(self.values.items())},
            "error": self.error,
        }


# ---- complex L-values -----------------------------------------------------

def _dirichlet_values(chi: Optional[MultChar], n: np.ndarray, conj: bool = False) -> np.ndarray:
    if chi is None or chi.cond_exp == 0:
        return np.ones(len(n), dtype=complex)
    c = chi.conjugate() if conj else chi
    modulus = chi.field.p ** chi.cond_exp
    table = np.array([c.dirichlet_value(a) for a in range(modulus)], dtype=complex)
    return table[n % modulus]


def classical_gauss_sum(chi: MultChar) -> complex:
    modulus = chi.field.p ** chi.cond_exp
    return sum((chi.dirichlet_value(a) * np.exp(2j * np.pi * a / modulus) for a in range(1, modulus)), 0j)


def twisted_root_number(w: int, chi: Optional[MultChar], N: int) -> complex:
    """w(E x chi) = w chi(N) tau(chi)^2 / D for primitive chi of conductor D prime to N"""
    if chi is None or chi.cond_exp == 0:
        return complex(w)
    D = chi.field.p ** chi.cond_exp
    if math.gcd(D, N) != 1:
        raise ReductionError("twist conductor must be prime to the level")
    return w * chi.dirichlet_value(N) * classical_gauss_sum(chi) ** 2 / D


def L_finite_smoothed(table: CoeffTable, chi: Optional[MultChar] = None, t: float = 1.0,
                      n_max: Optional[int] = None, tol: Optional[float] = None) -> complex:
    """
    L(E, chi, 1) from the smoothed series split at t / sqrt(M), M = N D^2

    Raises:
        TruncationError: the dropped tail exceeds tol
    """
    n_max = min(n_max or table.n_max, table.n_max)
    tol = settings.tail_tolerance if tol is None else tol
    D = 1 if chi is None or chi.cond_exp == 0 else chi.field.p ** chi.cond_exp
    M = table.conductor * D * D
    sq = math.sqrt(M)
    r = math.exp(-2 * math.pi * min(t, 1 / t) / sq)
    tail = 4.0 * r ** (n_max + 1) / (1 - r)
    if tail > tol:
        raise TruncationError(f"smoothed series tail {tail:.2e} above {tol:.1e}; n_max = {n_max} is too small")
    n = np.arange(1, n_max + 1, dtype=np.int64)
    b = table.coeffs[1:n_max + 1].astype(float) / n
    w = twisted_root_number(table.root_number, chi, table.conductor)
    first = np.sum(b * _dirichlet_values(chi, n) * np.exp(-2 * np.pi * n * t / sq))
    second = np.sum(b * _dirichlet_values(chi, n, conj=True) * np.exp(-2 * np.pi * n / (t * sq)))
    value = complex(first + w * second)
    logger.debug(f"smoothed L-value t={t}: {value:.12g} (tail {tail:.1e})")
    return value


# ---- interpolation and L_p ------------------------------------------------

def integrate_char_global(measure: GlobalMeasure, chi: MultChar, level: Optional[int] = None,
                          quad: bool = False) -> Estimate:
    """Sum over a mod p^m of chi(a) mu(a, m)"""
    m = level or max(chi.cond_exp, 1)
    fl = measure.finite_level(m, quad=quad)
    value = sum((chi.dirichlet_value(a) * fl.values[a].value for a in sorted(fl.values)), 0j)
    return Estimate(value, fl.error)


def interpolation_rhs(measure: GlobalMeasure, chi: MultChar) -> complex:
    """(c_R / pi) tau(chi_p) e(pi_p, chi_p) L(E, chi, 1); zero for odd chi"""
    if not chi.is_even():
        return 0j
    chi_p = chi.conjugate().with_uniformizer(1)
    tau = gauss_sum(chi_p, AddChar(chi.field))
    e = measure.euler_factor_at(chi_p)
    twist = None if chi.cond_exp == 0 else chi
    L = L_finite_smoothed(measure.table, twist)
    return measure.c_real / math.pi * tau * e * L


def interpolation_check(measure: GlobalMeasure, chi: MultChar,
                        reference: Optional[MultChar] = None, tol: float = 5e-3) -> Dict:
    """
    Both sides of the interpolation formula, plus the ratio test against a
    reference character that cancels every global constant

    Returns:
        Dict with lhs, rhs, error, ratio_discrepancy and ok
    """
    lhs = integrate_char_global(measure, chi)
    rhs = interpolation_rhs(measure, chi)
    report = {"p": measure.p, "label": chi.label, "even": chi.is_even(),
              "lhs": lhs.value, "rhs": rhs, "error": lhs.error, "ratio_discrepancy": None}
    if abs(rhs) == 0:
        report["ok"] = abs(lhs.value) <= 10 * lhs.error + 1e-12
        return report
    reference = reference or trivial_char(chi.field)
    lhs_ref = integrate_char_global(measure, reference)
    rhs_ref = interpolation_rhs(measure, reference)
    if abs(rhs_ref) == 0 or abs(lhs_ref.value) <= 10 * lhs_ref.error:
        report["ok"] = abs(lhs.value / rhs - 1) < tol
        report["absolute_discrepancy"] = abs(lhs.value / rhs - 1)
        return report
    discrepancy = abs((lhs.value / lhs_ref.value) / (rhs / rhs_ref) - 1)
    report["ratio_discrepancy"] = discrepancy
    report["ok"] = discrepancy < tol
    logger.info(f"interpolation p={measure.p} chi={chi.label}: ratio discrepancy {discrepancy:.2e}")
    return report


def Lp_value(measure: GlobalMeasure, s: Union[int, Fraction], m: int) -> Estimate:
    """
    Riemann sum of exp_p(s ell(a)) against mu at level m

    The p-adic weights are lifted to integers modulo p^m; at s = 0 every
    weight is 1 and the sum is the total mass.

    Raises:
        ConvergenceError: s ell(a) outside the domain of exp_p
    """
    log = CyclotomicLog(measure.p, settings.padic_precision)
    fl = measure.finite_level(m)
    s_padic = field(measure.p, 1, settings.padic_precision).from_rational(s)
    value, error = 0j, 0.0
    for a in sorted(fl.values):
        weight = _lift(log.exp(s_padic * log.ell(a)), m)
        value += weight * fl.values[a].value
        error += weight * fl.values[a].error
    floor = 100 * np.finfo(float).eps * sum(abs(e.value) for e in fl.values.values()) * measure.p ** m
    return Estimate(value, error + floor)


def derivative_order_report(measure: GlobalMeasure, m: int = 1, n_expected: int = 1,
                            step: int = 1) -> Dict:
    """L_p(0) against its noise floor, and the first divided difference"""
    at_zero = Lp_value(measure, 0, m)
    at_step = Lp_value(measure, step, m)
    vanishes = abs(at_zero.value) < 10 * at_zero.error
    report = {
        "p": measure.p,
        "reduction": measure.reduction,
        "Lp0": at_zero.value,
        "error_estimate": at_zero.error,
        "vanishes": vanishes,
        "divided_difference": (at_step.value - at_zero.value) / step,
        "expected_order": n_expected,
        "consistent": vanishes == (n_expected > 0),
    }
    logger.info(f"L_p(0) at p={measure.p}: |{abs(at_zero.value):.3e}| vs error {at_zero.error:.1e}")
    return report


def calibrate_archimedean(measure: GlobalMeasure) -> Dict:
    """Recover c_R from the total mass at a prime where e(pi_p, 1) != 0"""
    e = measure.euler_factor_at(trivial_char(measure.rep.field))
    if abs(e) == 0:
        raise ReductionError(f"e(pi_{measure.p}, 1) = 0: calibration needs a non-exceptional prime")
    mass = measure.measure_coset(1, 0)
    L = L_finite_smoothed(measure.table)
    c = mass.value * math.pi / (e * L)
    return {"p": measure.p, "mass": mass.value, "euler_factor": e, "L_E_1": L,
            "c_real": c, "c_real_used": measure.c_real}


def lp_report(curve: EllipticInput, p: int, level: int, s: Union[int, Fraction] = 0,
              n_trunc: Optional[int] = None, jobs: int = 1) -> Dict:
    measure = GlobalMeasure(curve, p, n_trunc)
    fl = measure.finite_level(level, jobs=jobs)
    lp = Lp_value(measure, s, level)
    e1 = measure.euler_factor_at(trivial_char(measure.rep.field))
    return {
        "curve": curve.label,
        "p": p,
        "reduction": measure.reduction,
        "alpha": [str(measure.rep.alpha1), str(measure.rep.alpha2)],
        "ordinary": is_ordinary(measure.rep),
        "euler_factor_at_1": [e1.real, e1.imag],
        "measure": fl.to_json(),
        "s": str(s),
        "Lp0": [lp.value.real, lp.value.imag],
        "error_estimate": lp.error,
        "exceptional": measure.reduction == SPLIT and abs(lp.value) < 10 * lp.error,
    }

"""
Archimedean Place
Modified Bessel functions K_0, K_1 and the Mellin transforms of the real and
complex discrete-series Whittaker functions
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from config.settings import settings
from models.errors import DivergenceError, TruncationError

logger = logging.getLogger(__name__)

SERIES = "series"
QUADRATURE = "quadrature"
ASYMPTOTIC = "asymptotic"

# zeta integral of W^1 is L(s, pi_v) / 4, so the normalized complex Whittaker
# function is 4 W^1
COMPLEX_WHITTAKER_SCALE = 4.0

_GL_NODES = 96
_CUTOFF = 45.0


class Quadrature(NamedTuple):
    value: float
    abserr: float


@dataclass(frozen=True)
class BesselEval:
    order: int
    x: float
    value: float
    method: str
    abserr: float


def _check_order(order: int) -> None:
    if order not in (0, 1):
        raise ValueError(f"only K_0 and K_1 are supported, got order {order}")


def select_method(x: float) -> str:
    if x <= settings.bessel_series_radius:
        return SERIES
    if x >= settings.bessel_asymptotic_radius:
        return ASYMPTOTIC
    return QUADRATURE


# ---- the three regimes ----------------------------------------------------

def _series(order: int, x: float) -> Tuple[float, float]:
    """Ascending series with digamma coefficients"""
    y = x * x / 4.0
    log_half = math.log(x / 2.0)
    gamma = np.euler_gamma
    harmonic = 0.0
    if order == 0:
        term, i_sum, h_sum = 1.0, 1.0, 0.0
        for k in range(1, 200):
            term *= y / (k * k)
            harmonic += 1.0 / k
            i_sum += term
            h_sum += harmonic * term
            if term * max(harmonic, 1.0) < 1e-18 * abs(i_sum):
                break
        value = -(log_half + gamma) * i_sum + h_sum
    else:
        term = 1.0
        i_sum = 1.0
        psi_sum = (harmonic - gamma) + (harmonic + 1.0 - gamma)
        d_sum = psi_sum
        for k in range(1, 200):
            term *= y / (k * (k + 1))
            harmonic += 1.0 / k
            psi_sum = (harmonic - gamma) + (harmonic + 1.0 / (k + 1) - gamma)
            i_sum += term
            d_sum += psi_sum * term
            if term * max(abs(psi_sum), 1.0) < 1e-18 * abs(i_sum):
                break
        value = 1.0 / x + log_half * (x / 2.0) * i_sum - (x / 4.0) * d_sum
    return value, 1e-15 * abs(value)


@lru_cache(maxsize=4)
def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _weighted_rule(order: int, x: float, n: int) -> float:
    """e^x K(x) = integral over [0, T] of exp(-x (cosh t - 1)) cosh(order t) dt"""
    upper = math.acosh(1.0 + _CUTOFF / x)
    nodes, weights = _gauss_legendre(n)
    t = 0.5 * upper * (nodes + 1.0)
    integrand = np.exp(-x * (np.cosh(t) - 1.0)) * np.cosh(order * t)
    return 0.5 * upper * float(np.dot(weights, integrand))


def _quadrature(order: int, x: float) -> Tuple[float, float]:
    """Exponentially weighted Gauss-Legendre rule; error from doubling the node count"""
    scale = math.exp(-x)
    coarse = _weighted_rule(order, x, _GL_NODES)
    fine = _weighted_rule(order, x, 2 * _GL_NODES)
    return fine * scale, (abs(fine - coarse) + 1e-16 * abs(fine)) * scale


def _asymptotic(order: int, x: float) -> Tuple[float, float]:
    """sqrt(pi / 2x) e^-x times the Hankel expansion, cut at its smallest term"""
    mu = 4.0 * order * order
    total, term = 1.0, 1.0
    for k in range(1, 60):
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-18:
            term = nxt
            break
        total += nxt
        term = nxt
    prefactor = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x)
    return prefactor * total, prefactor * abs(term)


_METHODS = {SERIES: _series, QUADRATURE: _quadrature, ASYMPTOTIC: _asymptotic}


def bessel_K_eval(order: int, x: float, method: Optional[str] = None) -> BesselEval:
    """
    Evaluate K_order(x) with an error estimate

    Args:
        order: 0 or 1
        x: positive real argument
        method: force a regime; by default chosen from the switchover radii

    Returns:
        BesselEval with value, method and absolute error estimate
    """
    _check_order(order)
    if not x > 0:
        raise ValueError(f"K_{order}(x) needs x > 0, got {x}")
    method = method or select_method(x)
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}")
    value, err = _METHODS[method](order, float(x))
    return BesselEval(order, float(x), value, method, err)


def bessel_K(order: int, x: float, method: Optional[str] = None) -> float:
    return bessel_K_eval(order, x, method).value


def bessel_ode_residual(order: int, x: float, rel_step: float = 5e-3) -> float:
    """
    |x^2 y'' + x y' - (x^2 + order^2) y| for y = K_order, by five-point differences

    All stencil points use the regime selected at x. The step is rel_step * min(x, 1).
    """
    method = select_method(x)
    h = rel_step * min(x, 1.0)
    ys = [bessel_K(order, x + k * h, method) for k in (-2, -1, 0, 1, 2)]
    d1 = (ys[0] - 8 * ys[1] + 8 * ys[3] - ys[4]) / (12 * h)
    d2 = (-ys[0] + 16 * ys[1] - 30 * ys[2] + 16 * ys[3] - ys[4]) / (12 * h * h)
    return abs(x * x * d2 + x * d1 - (x * x + order * order) * ys[2])


def regime_agreement(order: int) -> Dict:
    """Relative gaps between neighbouring regimes at the two switchover radii"""
    r1, r2 = settings.bessel_series_radius, settings.bessel_asymptotic_radius
    s, q1 = bessel_K(order, r1, SERIES), bessel_K(order, r1, QUADRATURE)
    q2, a = bessel_K(order, r2, QUADRATURE), bessel_K(order, r2, ASYMPTOTIC)
    return {
        "order": order,
        "series_vs_quadrature": abs(s - q1) / abs(q1),
        "quadrature_vs_asymptotic": abs(q2 - a) / abs(a),
    }


# ---- Mellin transforms ----------------------------------------------------

def _quad(fn, a: float, b: float) -> Quadrature:
    value, err = integrate.quad(fn, a, b, epsabs=0.0, epsrel=settings.quad_epsrel,
                                limit=settings.quad_limit)
    return Quadrature(value, err)


def _quad_halfline(fn, breakpoints: Sequence[float]) -> Quadrature:
    edges = [0.0] + list(breakpoints) + [np.inf]
    parts = [_quad(fn, a, b) for a, b in zip(edges, edges[1:])]
    total = Quadrature(sum(p.value for p in parts), sum(p.abserr for p in parts))
    logger.debug(f"half-line quadrature: value {total.value:.15g}, error {total.abserr:.2e}")
    return total


def mellin_K0_closed(s: float) -> float:
    """2^(2s-1) Gamma(s + 1/2)^2"""
    return 2.0 ** (2 * s - 1) * special.gamma(s + 0.5) ** 2


def mellin_K0(s: float) -> Quadrature:
    """
    Integral of K_0(x) x^(2s) over (0, inf)

    Raises:
        DivergenceError: s <= -1/4
    """
    if s <= -0.25:
        raise DivergenceError(f"Mellin transform of K_0 at s = {s} is outside the supported window")
    return _quad_halfline(lambda x: bessel_K(0, x) * x ** (2 * s), [1.0, 20.0])


def complex_whittaker_W1(x: float) -> float:
    """W^1(diag(x, 1)) = (2/pi) x^2 K_0(4 pi |x|)"""
    r = abs(x)
    return 2.0 / math.pi * r * r * bessel_K(0, 4.0 * math.pi * r)


def complex_whittaker(x: float) -> float:
    return COMPLEX_WHITTAKER_SCALE * complex_whittaker_W1(x)


def complex_L_factor(s: float) -> float:
    """L(s, mu1) L(s, mu2) = 4 (2 pi)^-(2s+1) Gamma(s + 1/2)^2"""
    return 4.0 * (2 * math.pi) ** (-(2 * s + 1)) * special.gamma(s + 0.5) ** 2


def complex_zeta_integral(s: float, normalized: bool = False) -> Quadrature:
    """
    Integral of W^1(diag(x, 1)) |x|_C^(s - 1/2) over C* against dr/r dtheta

    The integrand is S^1-invariant, so the angular integral contributes 2 pi.

    Args:
        s: real, s > -1/2
        normalized: integrate the normalized function 4 W^1 instead

    Returns:
        Quadrature; equals L(s, pi_v) / 4, or L(s, pi_v) when normalized
    """
    if s <= -0.5:
        raise DivergenceError(f"complex zeta integral diverges at s = {s}")
    scale = COMPLEX_WHITTAKER_SCALE if normalized else 1.0
    radial = _quad_halfline(lambda r: complex_whittaker_W1(r) * r ** (2 * s - 2),
                            [1.0 / (4 * math.pi), 20.0 / (4 * math.pi)])
    factor = 2 * math.pi * scale
    return Quadrature(factor * radial.value, factor * radial.abserr)


def real_whittaker(t: float, c_real: Optional[float] = None) -> float:
    """W(diag(t, 1)) = c_R t e^(-2 pi t) for t > 0"""
    if not t > 0:
        raise ValueError(f"real Whittaker function needs t > 0, got {t}")
    c_real = settings.real_whittaker_constant if c_real is None else c_real
    return c_real * t * math.exp(-2 * math.pi * t)


def real_L_factor(s: float) -> float:
    """L(s, D(2)) = Gamma_C(s + 1/2) = 2 (2 pi)^-(s+1/2) Gamma(s + 1/2)"""
    return 2.0 * (2 * math.pi) ** (-(s + 0.5)) * special.gamma(s + 0.5)


def real_zeta_closed(s: float, c_real: Optional[float] = None) -> float:
    c_real = settings.real_whittaker_constant if c_real is None else c_real
    return c_real * (2 * math.pi) ** (-(s + 0.5)) * special.gamma(s + 0.5)


def real_zeta_integral(s: float, c_real: Optional[float] = None) -> Quadrature:
    """Integral of W(t) t^(s - 1/2) d^x t over (0, inf)"""
    if s <= -0.5:
        raise DivergenceError(f"real zeta integral diverges at s = {s}")
    return _quad_halfline(lambda t: real_whittaker(t, c_real) * t ** (s - 1.5), [1.0, 10.0])


# ---- identity reports -----------------------------------------------------

def verify_identity(identity: str, s_values: Optional[Sequence[float]] = None,
                    tol: float = 1e-6) -> Dict:
    """
    Compare a Mellin quadrature with its closed form at several s

    Args:
        identity: "mellin", "complex-zeta" or "real-zeta"
        s_values: points to test
        tol: relative tolerance

    Returns:
        Dict with one row per s and an overall ok flag
    """
    table = {
        "mellin": (mellin_K0, mellin_K0_closed, [0.3, 0.5, 1.0, 1.5, 2.0]),
        "complex-zeta": (lambda s: complex_zeta_integral(s, normalized=True), complex_L_factor,
                         [0.5, 1.0, 2.0]),
        "real-zeta": (real_zeta_integral, real_zeta_closed, [0.5, 1.0, 2.0]),
    }
    if identity not in table:
        raise ValueError(f"unknown identity {identity!r}")
    numeric, closed, default_s = table[identity]
    rows: List[Dict] = []
    for s in (s_values or default_s):
        quad = numeric(s)
        expected = closed(s)
        rel_err = abs(quad.value - expected) / abs(expected)
        if quad.abserr > tol * abs(expected):
            logger.warning(f"{identity} at s={s}: quadrature error {quad.abserr:.2e} near tolerance")
        rows.append({"s": s, "value": quad.value, "expected": expected,
                     "abserr": quad.abserr, "rel_err": rel_err, "ok": rel_err < tol})
    ok = all(r["ok"] for r in rows)
    logger.info(f"identity {identity}: {len(rows)} points, ok={ok}")
    return {"identity": identity, "rows": rows, "ok": ok}


def require_tolerance(quad: Quadrature, tol: float) -> Quadrature:
    if quad.abserr > tol:
        raise TruncationError(f"quadrature error {quad.abserr:.2e} above tolerance {tol:.2e}")
    return quad

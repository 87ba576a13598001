"""
Bruhat-Tits Lattice Graph
Lattices in F^2, the directed graph of index-q inclusions, Hecke operators,
the harmonic functions rho, the delta maps and the constructive free basis
"""

import logging
from collections import deque
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional, Tuple, Union

import sympy
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from models.errors import DivergenceError, ResourceLimitError
from models.padic_core import DigitExpansion, LocalFieldSpec, PadicNum, from_digits, residue_digits

logger = logging.getLogger(__name__)

MAX_BALL_VERTICES = 200_000


def _shift(u: DigitExpansion, k: int) -> DigitExpansion:
    return tuple((e + k, d) for e, d in u)


def _trunc(u: DigitExpansion, m: int) -> DigitExpansion:
    return tuple((e, d) for e, d in u if e < m)


def _exact(x: Any) -> Any:
    return Fraction(x) if isinstance(x, int) else x


def _is_zero(value: Any, tol: float = 0.0) -> bool:
    if isinstance(value, sympy.Basic):
        return sympy.cancel(value) == 0
    if isinstance(value, (complex, float)):
        return abs(value) <= tol
    return value == 0


@dataclass(frozen=True, order=True)
class Lattice:
    """L = O (p^m1, 0) + O (u, p^m2), u a digit expansion below p^m1.

    The digit expansion is taken in the fixed residue-field transversal, so equal
    lattices have identical fields.
    """

    m1: int
    m2: int
    u: DigitExpansion
    field: LocalFieldSpec = dc_field(compare=False)

    @classmethod
    def standard(cls, fld: LocalFieldSpec) -> "Lattice":
        return cls(0, 0, (), fld)

    @classmethod
    def v_n(cls, fld: LocalFieldSpec, n: int) -> "Lattice":
        """O + p^n O"""
        return cls(0, n, (), fld)

    @classmethod
    def from_element(cls, fld: LocalFieldSpec, m1: int, m2: int, u: PadicNum) -> "Lattice":
        return cls(m1, m2, u.digit_expansion(m1), fld)

    def u_value(self) -> PadicNum:
        return from_digits(self.field, self.u)

    # ---- structure ----------------------------------------------------
    def scale(self, k: int) -> "Lattice":
        """p^k L"""
        return Lattice(self.m1 + k, self.m2 + k, _shift(self.u, k), self.field)

    def neighbors_in(self) -> List["Lattice"]:
        """The q+1 sublattices of index q"""
        m1, m2, u, fld = self.m1, self.m2, self.u, self.field
        out = [Lattice(m1, m2 + 1, _trunc(_shift(u, 1), m1), fld)]
        for d in residue_digits(fld):
            out.append(Lattice(m1 + 1, m2, u + ((m1, d),) if any(d) else u, fld))
        return out

    def neighbors_out(self) -> List["Lattice"]:
        """The q+1 superlattices of index q"""
        m1, m2, u, fld = self.m1, self.m2, self.u, self.field
        out = [Lattice(m1 - 1, m2, _trunc(u, m1 - 1), fld)]
        low = _shift(u, -1)
        for d in residue_digits(fld):
            out.append(Lattice(m1, m2 - 1, low + ((m1 - 1, d),) if any(d) else low, fld))
        return out

    def height(self) -> int:
        """h(pi(v)); h(pi(v_n)) = n"""
        return self.m2 - self.m1

    def ord_e1(self) -> int:
        """ord_v(e1): e1 = p^k * (primitive vector of v) with k = -m1"""
        return -self.m1

    def tree_class(self) -> "Lattice":
        """Representative of the homothety class with m2 = 0"""
        return self.scale(-self.m2)

    def contains(self, x: PadicNum, y: PadicNum) -> bool:
        return self._min_scale(x, y) <= 0

    def _min_scale(self, x: PadicNum, y: PadicNum) -> Union[int, float]:
        """Least k with p^k (x, y) in L"""
        c = y.shift(-self.m2)
        rest = x.ord_difference(c * self.u_value())
        return max(self.m2 - y.valuation, self.m1 - rest)

    def is_sublattice_of(self, other: "Lattice") -> bool:
        fld = self.field
        b1 = (fld.one().shift(self.m1), fld.zero())
        b2 = (self.u_value(), fld.one().shift(self.m2))
        return other.contains(*b1) and other.contains(*b2)

    def act(self, a: PadicNum, b: PadicNum, d: PadicNum) -> "Lattice":
        """g L for the upper-triangular g = (a, b; 0, d)"""
        if a.is_zero() or d.is_zero():
            raise ValueError("upper-triangular matrix must be invertible")
        m1 = self.m1 + a.valuation
        m2 = self.m2 + d.valuation
        unit_d = d.shift(-d.valuation)
        head, tail = a * self.u_value(), b.shift(self.m2)
        if head.agrees(-tail, m1):
            return Lattice(m1, m2, (), self.field)
        return Lattice.from_element(self.field, m1, m2, (head + tail) / unit_d)

    def label(self) -> str:
        u = "+".join(f"{list(d)}p^{e}" if self.field.f_res > 1 else f"{d[0]}p^{e}" for e, d in self.u)
        return f"[{self.m1},{self.m2};{u or 0}]"

    def __repr__(self) -> str:
        return f"Lattice{self.label()}"


@dataclass(frozen=True, order=True)
class Edge:
    """Index-q inclusion sub -> sup; o(e) = sub, t(e) = sup"""

    sub: Lattice
    sup: Lattice

    @property
    def o(self) -> Lattice:
        return self.sub

    @property
    def t(self) -> Lattice:
        return self.sup

    def scale(self, k: int) -> "Edge":
        return Edge(self.sub.scale(k), self.sup.scale(k))

    def act(self, a: PadicNum, b: PadicNum, d: PadicNum) -> "Edge":
        return Edge(self.sub.act(a, b, d), self.sup.act(a, b, d))

    def label(self) -> str:
        return f"{self.sub.label()}->{self.sup.label()}"


def neighbors_in(v: Lattice) -> List[Lattice]:
    return v.neighbors_in()


def neighbors_out(v: Lattice) -> List[Lattice]:
    return v.neighbors_out()


def height(v: Lattice) -> int:
    return v.height()


def ord_lattice_e1(v: Lattice) -> int:
    return v.ord_e1()


def edges_into(v: Lattice) -> List[Edge]:
    return [Edge(w, v) for w in v.neighbors_in()]


def edges_out_of(v: Lattice) -> List[Edge]:
    return [Edge(v, w) for w in v.neighbors_out()]


def tree_distance(v: Lattice, w: Lattice) -> int:
    """Distance between pi(v) and pi(w) in the tree"""
    k1 = w.m1 - v.m1
    k2 = w.m2 - v.m2
    off = w.u_value().ord_difference(v.u_value().shift(k2)) - v.m1
    low = min(k1, k2, off)
    return int(k1 + k2 - 2 * low)


# ---- ends and balls -------------------------------------------------------

def end_in_edge(x: Optional[PadicNum], e: Edge) -> bool:
    """
    Membership of an end of the tree in U(pi(e))

    Args:
        x: point of P^1(F); None stands for infinity
        e: edge

    Returns:
        True iff the primitive multiple of (x, 1) in t(e) is not in o(e)
    """
    fld = e.sup.field
    vec = (fld.one(), fld.zero()) if x is None else (x, fld.one())
    k = e.sup._min_scale(*vec)
    primitive = (vec[0].shift(k), vec[1].shift(k))
    return not e.sub.contains(*primitive)


def ball_to_edge(a: PadicNum, n: int) -> Edge:
    """
    Canonical edge with U(pi(e)) = a + p^n O

    The edge is g e0 for g = (p^n, a; 0, 1) and e0 = (O + pO -> O^2).
    """
    fld = a.field
    sup = Lattice(n, 0, a.digit_expansion(n), fld)
    sub = Lattice(n, 1, a.shift(1).digit_expansion(n), fld)
    return Edge(sub, sup)


def ball(fld: LocalFieldSpec, radius: int, center: Optional[Lattice] = None) -> Dict[Lattice, int]:
    """
    Breadth-first ball in the lattice graph (steps along in- and out-edges)

    Returns:
        mapping lattice -> graph distance from the center
    """
    center = center or Lattice.standard(fld)
    dist = {center: 0}
    queue = deque([center])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for w in v.neighbors_in() + v.neighbors_out():
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
                if len(dist) > MAX_BALL_VERTICES:
                    raise ResourceLimitError(f"ball of radius {radius} exceeds {MAX_BALL_VERTICES} vertices")
    logger.debug(f"ball(q={fld.q}, r={radius}) has {len(dist)} vertices")
    return dist


def tree_ball(fld: LocalFieldSpec, radius: int) -> Dict[Lattice, int]:
    """Ball of homothety classes in the tree, keyed by class representatives"""
    v0 = Lattice.standard(fld)
    dist = {v0: 0}
    queue = deque([v0])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for w in v.neighbors_out():
            c = w.tree_class()
            if c not in dist:
                dist[c] = dist[v] + 1
                queue.append(c)
    return dist


def regularity_check(fld: LocalFieldSpec, radius: int) -> Dict:
    """In/out degree q+1 with genuine index-q inclusions at every vertex of a ball"""
    vertices = ball(fld, radius)
    bad = []
    for v in vertices:
        ins, outs = v.neighbors_in(), v.neighbors_out()
        ok = len(set(ins)) == fld.q + 1 and len(set(outs)) == fld.q + 1
        ok = ok and all(w.m1 + w.m2 == v.m1 + v.m2 + 1 and w.is_sublattice_of(v) for w in ins)
        ok = ok and all(w.m1 + w.m2 == v.m1 + v.m2 - 1 and v.is_sublattice_of(w) for w in outs)
        if not ok:
            bad.append(v.label())
    return {"q": fld.q, "radius": radius, "vertices": len(vertices), "irregular": bad, "ok": not bad}


# ---- finitely supported functions -----------------------------------------

@dataclass
class FnFinSupp:
    """Finitely supported function on lattices or edges with generic scalars"""

    values: Dict[Hashable, Any] = dc_field(default_factory=dict)
    kind: str = "vertex"

    @classmethod
    def indicator(cls, key: Hashable, kind: str = "vertex", coeff: Any = 1) -> "FnFinSupp":
        return cls({key: coeff}, kind)

    def __call__(self, key: Hashable) -> Any:
        return self.values.get(key, 0)

    def add_at(self, key: Hashable, value: Any) -> None:
        self.values[key] = self.values.get(key, 0) + value

    def support(self) -> List[Hashable]:
        return sorted(k for k, v in self.values.items() if not _is_zero(v))

    def pruned(self, tol: float = 0.0) -> "FnFinSupp":
        return FnFinSupp({k: v for k, v in self.values.items() if not _is_zero(v, tol)}, self.kind)

    def __add__(self, other: "FnFinSupp") -> "FnFinSupp":
        out = FnFinSupp(dict(self.values), self.kind)
        for k, v in other.values.items():
            out.add_at(k, v)
        return out

    def __neg__(self) -> "FnFinSupp":
        return FnFinSupp({k: -v for k, v in self.values.items()}, self.kind)

    def __sub__(self, other: "FnFinSupp") -> "FnFinSupp":
        return self + (-other)

    def scaled(self, c: Any) -> "FnFinSupp":
        return FnFinSupp({k: c * v for k, v in self.values.items()}, self.kind)

    def times(self, g: Callable[[Hashable], Any]) -> "FnFinSupp":
        """Pointwise product with an arbitrary function"""
        return FnFinSupp({k: v * g(k) for k, v in self.values.items()}, self.kind)

    def pairing(self, other: Callable[[Hashable], Any]) -> Any:
        total = 0
        for k in sorted(self.values):
            total = total + self.values[k] * other(k)
        return total

    def equals(self, other: "FnFinSupp", tol: float = 0.0) -> bool:
        return not (self - other).pruned(tol).values

    def act(self, a: PadicNum, b: PadicNum, d: PadicNum) -> "FnFinSupp":
        """(g phi)(x) = phi(g^-1 x)"""
        out = FnFinSupp(kind=self.kind)
        for k, v in self.values.items():
            out.add_at(k.act(a, b, d), v)
        return out

    def to_json(self) -> Dict:
        def enc(v):
            if isinstance(v, complex):
                return {"re": v.real, "im": v.imag}
            return str(v)
        return {"kind": self.kind,
                "values": [[k.label(), enc(self.values[k])] for k in self.support()]}


Function = Union[FnFinSupp, Callable[[Lattice], Any]]


def hecke_T(phi: Function) -> Function:
    """T phi(v) = sum of phi over the in-neighbors of v"""
    if isinstance(phi, FnFinSupp):
        out = FnFinSupp()
        for x, c in phi.values.items():
            for w in x.neighbors_out():
                out.add_at(w, c)
        return out
    return lambda v: sum((phi(w) for w in v.neighbors_in()), 0)


def hecke_R(phi: Function) -> Function:
    """R phi(v) = phi(p^-1 v)"""
    if isinstance(phi, FnFinSupp):
        return FnFinSupp({x.scale(1): c for x, c in phi.values.items()})
    return lambda v: phi(v.scale(-1))


def hecke_R_inv(phi: Function) -> Function:
    if isinstance(phi, FnFinSupp):
        return FnFinSupp({x.scale(-1): c for x, c in phi.values.items()})
    return lambda v: phi(v.scale(1))


def hecke_TR(phi: Function) -> Function:
    """(T R) phi(v) = sum of phi over the out-neighbors of v"""
    if isinstance(phi, FnFinSupp):
        return hecke_T(hecke_R(phi))
    return lambda v: sum((phi(w) for w in v.neighbors_out()), 0)


def pairing(phi1: FnFinSupp, phi2: Callable) -> Any:
    return phi1.pairing(phi2)


def edge_pairing(c: FnFinSupp, d: Function) -> Any:
    """<c, d> summed over edges"""
    if c.kind != "edge" or (isinstance(d, FnFinSupp) and d.kind != "edge"):
        raise ValueError("edge_pairing needs functions on edges")
    return c.pairing(d)


# ---- harmonic functions ---------------------------------------------------

@dataclass(frozen=True)
class RhoFn:
    """rho(v) = alpha^h(v) * nu^(-ord_v(e1)), so T rho = a rho and rho(p v) = nu rho(v)"""

    alpha: Any
    nu: Any
    q: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", _exact(self.alpha))
        object.__setattr__(self, "nu", _exact(self.nu))

    @property
    def a(self) -> Any:
        return self.alpha + self.q * self.nu / self.alpha

    def __call__(self, v: Lattice) -> Any:
        return self.alpha ** v.height() * self.nu ** (-v.ord_e1())


def rho_eval(rho: RhoFn, v: Lattice) -> Any:
    return rho(v)


def harmonic_check(rho: RhoFn, fld: LocalFieldSpec, radius: int, tol: float = 0.0) -> Dict:
    """
    Check T rho = a rho and rho(p v) = nu rho(v) on every vertex of a ball

    Returns:
        Dict with vertex count, failing vertices and overall status
    """
    T_rho = hecke_T(rho)
    scaled = hecke_R_inv(rho)
    a = rho.a
    t_fail, r_fail = [], []
    vertices = ball(fld, radius)
    for v in vertices:
        value = rho(v)
        if not _is_zero(T_rho(v) - a * value, tol):
            t_fail.append(v.label())
        if not _is_zero(scaled(v) - rho.nu * value, tol):
            r_fail.append(v.label())
    report = {
        "q": fld.q,
        "radius": radius,
        "vertices": len(vertices),
        "a": str(a),
        "T_failures": t_fail,
        "R_failures": r_fail,
        "ok": not t_fail and not r_fail,
    }
    logger.info(f"harmonic check q={fld.q} r={radius}: {len(vertices)} vertices, ok={report['ok']}")
    return report


def harmonic_duals(alpha: Any, nu: Any, q: int) -> Tuple[RhoFn, RhoFn]:
    """
    The two rho-type functions killing the relations of the class of delta_{alpha,nu}

    Both satisfy T rho' = (a / nu) rho' and rho'(p v) = nu^-1 rho'(v). Only the
    second, rho_{q/alpha, 1/nu}, is compatible with ball refinement for every nu;
    the first agrees with it on refinements when nu = 1.
    """
    alpha, nu = _exact(alpha), _exact(nu)
    return RhoFn(alpha / nu, 1 / nu, q), RhoFn(q / alpha, 1 / nu, q)


# ---- delta maps -----------------------------------------------------------

def delta_tilde(rho: Callable[[Lattice], Any], c: FnFinSupp) -> FnFinSupp:
    """delta~_rho(c)(v) = sum_{t(e)=v} rho(o(e)) c(e) - sum_{o(e)=v} rho(t(e)) c(e)"""
    out = FnFinSupp()
    for e, value in c.values.items():
        out.add_at(e.t, rho(e.o) * value)
        out.add_at(e.o, -rho(e.t) * value)
    return out


def delta_tilde_up(rho: Callable[[Lattice], Any], phi: Function) -> Union[FnFinSupp, Callable[[Edge], Any]]:
    """delta~^rho(phi)(e) = rho(o(e)) phi(t(e)) - rho(t(e)) phi(o(e))"""
    if not isinstance(phi, FnFinSupp):
        return lambda e: rho(e.o) * phi(e.t) - rho(e.t) * phi(e.o)
    edges = set()
    for x in phi.values:
        edges.update(edges_into(x))
        edges.update(edges_out_of(x))
    return FnFinSupp({e: rho(e.o) * phi(e.t) - rho(e.t) * phi(e.o) for e in edges}, "edge")


def delta_composite_rhs(rho1: FnFinSupp, rho2: FnFinSupp, phi: FnFinSupp) -> FnFinSupp:
    """(T + TR)(rho1 rho2) * phi - rho2 * (T + TR)(rho1 phi)"""
    prod12 = rho1.times(rho2)
    prod1phi = phi.times(rho1)
    first = (hecke_T(prod12) + hecke_TR(prod12))
    second = (hecke_T(prod1phi) + hecke_TR(prod1phi))
    return phi.times(first) - second.times(rho2)


@dataclass(frozen=True)
class BallStep:
    """c * 1_{center + p^level O} as one piece of a step function on F"""

    center: PadicNum
    level: int
    coeff: Any = 1

    def contains_zero(self) -> bool:
        return self.center.valuation >= self.level


def delta_alpha_nu(alpha: Any, nu: Any, pieces: Iterable[BallStep]) -> FnFinSupp:
    """
    delta_{alpha,nu}(f) for f a finite sum of ball indicators

    Each ball is weighted by chi_alpha chi_nu^-1 (constant on balls missing 0),
    lifted to its canonical edge and pushed through delta~_rho.

    Raises:
        DivergenceError: a ball contains 0 while alpha != nu
    """
    pieces = list(pieces)
    if not pieces:
        return FnFinSupp()
    q = pieces[0].center.field.q
    c = FnFinSupp(kind="edge")
    for piece in pieces:
        if piece.contains_zero():
            if alpha != nu:
                raise DivergenceError("f must vanish near 0 unless alpha == nu")
            weight = 1
        else:
            k = piece.center.valuation
            weight = (_exact(alpha) / _exact(nu)) ** k
        c.add_at(ball_to_edge(piece.center, piece.level), weight * piece.coeff)
    return delta_tilde(RhoFn(alpha, nu, q), c)


def class_pairing(delta: FnFinSupp, dual: Callable[[Lattice], Any]) -> Any:
    """<delta, rho'>, well defined on classes for the harmonic duals"""
    return delta.pairing(dual)


def image_rank_check(fld: LocalFieldSpec, radius: int) -> Dict:
    """
    Rank of delta (rho = 1) on the edges of a ball against the degree-zero functions

    Returns:
        Dict with vertices, edges, rank and expected rank |V| - 1
    """
    vertices = ball(fld, radius)
    index = {v: i for i, v in enumerate(sorted(vertices))}
    rows: Dict[int, Dict[int, Any]] = {}
    for v in sorted(vertices):
        for w in v.neighbors_out():
            if w in index:
                rows[len(rows)] = {index[w]: QQ(1), index[v]: QQ(-1)}
    matrix = DomainMatrix(rows, (len(rows), len(index)), QQ)
    rank = matrix.rank()
    return {
        "q": fld.q,
        "radius": radius,
        "vertices": len(index),
        "edges": len(rows),
        "rank": rank,
        "expected": len(index) - 1,
        "ok": rank == len(index) - 1,
    }


# ---- free basis -----------------------------------------------------------

def free_basis(fld: LocalFieldSpec, n_max: int, max_layer: int = 5000) -> Dict:
    """
    Layered basis of C_c(V~) over R[T, R^{+-1}] and the rank check of X_{n,0}

    Args:
        fld: local field (only q matters)
        n_max: deepest layer
        max_layer: refuse layers larger than this

    Returns:
        Dict with layers C_n, chosen sets V_n, |X_{n,0}|, expected sizes and exact ranks
    """
    q = fld.q
    if n_max >= 1 and (q + 1) * q ** (n_max - 1) > max_layer:
        raise ResourceLimitError(f"layer {n_max} for q={q} exceeds {max_layer} vertices")
    v0 = Lattice.standard(fld)
    layers: List[List[Lattice]] = [[v0]]
    chosen: List[List[Lattice]] = [[v0]]
    children: Dict[Lattice, List[Lattice]] = {}
    for n in range(1, n_max + 1):
        layer = []
        picks = []
        for parent in layers[-1]:
            kids = sorted(w for w in parent.neighbors_out() if tree_distance(v0, w) == n)
            children[parent] = kids
            layer.extend(kids)
            if n > 1:
                picks.extend(kids[: q - 1])
        if n == 1:
            picks = layer[:q]
        layers.append(layer)
        chosen.append(picks)

    sizes, expected, ranks = {}, {}, {}
    for n in range(0, n_max + 1):
        col = {v: j for j, v in enumerate(layers[n])}
        rows = []
        for i in range(0, n + 1):
            for x in chosen[i]:
                image = FnFinSupp.indicator(x)
                for _ in range(n - i):
                    image = hecke_T(image)
                row = {col[v]: QQ(int(c)) for v, c in image.values.items() if v in col and c}
                rows.append(row)
        matrix = DomainMatrix({i: r for i, r in enumerate(rows) if r}, (len(rows), len(col)), QQ)
        sizes[n] = len(rows)
        expected[n] = 1 if n == 0 else (q + 1) * q ** (n - 1)
        ranks[n] = matrix.rank()
        logger.debug(f"free basis q={q} n={n}: |X|={sizes[n]}, rank {ranks[n]}")
    return {
        "q": q,
        "layers": layers,
        "V": chosen,
        "X_sizes": sizes,
        "expected": expected,
        "ranks": ranks,
        "ok": all(sizes[n] == expected[n] == ranks[n] for n in sizes),
    }


# ---- export ---------------------------------------------------------------

def to_dot(fld: LocalFieldSpec, radius: int, tree: bool = False) -> str:
    """DOT text for a ball in the lattice graph, or in the tree when tree=True"""
    lines = ["digraph bruhat_tits {"]
    if tree:
        vertices = tree_ball(fld, radius)
        for v in sorted(vertices):
            lines.append(f'  "{v.label()}" [label="h={v.height()}\\n{v.label()}"];')
        for v in sorted(vertices):
            for w in v.neighbors_out():
                c = w.tree_class()
                if c in vertices and vertices[c] == vertices[v] + 1:
                    lines.append(f'  "{v.label()}" -> "{c.label()}";')
    else:
        vertices = ball(fld, radius)
        for v in sorted(vertices):
            lines.append(f'  "{v.label()}" [label="h={v.height()}\\n{v.label()}"];')
        for v in sorted(vertices):
            for w in v.neighbors_out():
                if w in vertices:
                    lines.append(f'  "{v.label()}" -> "{w.label()}";')
    lines.append("}")
    return "\n".join(lines)

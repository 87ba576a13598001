"""
Unit tests for the lattice graph
Tests regularity, Hecke adjoints, harmonic functions, the delta maps and the free basis
"""

import pytest
import sys
from fractions import Fraction
from pathlib import Path

import sympy

# Add src to path for imports
sys.path.append(str(Path(__file__).parent.parent.parent / 'src'))

from models import bt_lattice
from models.bt_lattice import BallStep, Edge, FnFinSupp, Lattice, RhoFn
from models.errors import DivergenceError, ResourceLimitError
from models.padic_core import field


@pytest.fixture
def Q2():
    return field(2, 1, 30)


@pytest.fixture
def Q3():
    return field(3, 1, 30)


def _random_fn(vertices, rng, size=4):
    fn = FnFinSupp()
    for v in rng.sample(vertices, size):
        fn.add_at(v, rng.randint(-5, 5) or 1)
    return fn


class TestGraph:
    """Test suite for lattices and their neighborhoods"""

    @pytest.mark.parametrize("q, radius", [(2, 3), (3, 2)])
    def test_regularity(self, q, radius):
        assert bt_lattice.regularity_check(field(q, 1, 30), radius)["ok"]

    def test_regularity_extension(self, F9):
        assert bt_lattice.regularity_check(F9, 1)["ok"]

    def test_tree_ball_size(self, Q2, Q3):
        assert len(bt_lattice.tree_ball(Q2, 2)) == 1 + 3 + 6
        assert len(bt_lattice.tree_ball(Q3, 2)) == 1 + 4 + 12

    def test_height_invariant_under_scaling(self, Q3):
        v = Lattice.v_n(Q3, 2)
        assert v.height() == 2
        assert v.scale(3).height() == 2
        assert v.scale(3).ord_e1() == v.ord_e1() - 3

    def test_neighbors_are_distinct_sublattices(self, Q3):
        v = Lattice.standard(Q3)
        ins = v.neighbors_in()
        assert len(set(ins)) == 4
        assert all(w.is_sublattice_of(v) for w in ins)
        assert all(v in w.neighbors_out() for w in ins)

    def test_tree_distance(self, Q2):
        v0 = Lattice.standard(Q2)
        assert bt_lattice.tree_distance(v0, v0.scale(5)) == 0
        assert bt_lattice.tree_distance(v0, Lattice.v_n(Q2, 3)) == 3

    def test_ball_resource_limit(self, Q3, monkeypatch):
        monkeypatch.setattr(bt_lattice, "MAX_BALL_VERTICES", 20)
        with pytest.raises(ResourceLimitError):
            bt_lattice.ball(Q3, 4)

    def test_dot_export(self, Q2):
        text = bt_lattice.to_dot(Q2, 1, tree=True)
        assert text.startswith("digraph")
        assert text.count("->") == 3


class TestGroupAction:
    """Test suite for upper-triangular matrices acting on lattices"""

    def test_scalar_is_scaling(self, Q3):
        v = Lattice.v_n(Q3, 2)
        p = Q3.from_int(3)
        assert v.act(p, Q3.zero(), p) == v.scale(1)

    def test_integral_unipotent_fixes_standard(self, Q3):
        v0 = Lattice.standard(Q3)
        assert v0.act(Q3.one(), Q3.from_int(2), Q3.one()) == v0

    def test_diag_p_1_gives_sublattice(self, Q3):
        v0 = Lattice.standard(Q3)
        assert v0.act(Q3.from_int(3), Q3.zero(), Q3.one()) in v0.neighbors_in()

    def test_singular_rejected(self, Q3):
        with pytest.raises(ValueError):
            Lattice.standard(Q3).act(Q3.zero(), Q3.one(), Q3.one())

    def test_function_action_moves_support(self, Q3):
        v0 = Lattice.standard(Q3)
        p = Q3.from_int(3)
        phi = FnFinSupp.indicator(v0, coeff=Fraction(5))
        moved = phi.act(p, Q3.zero(), p)
        assert moved.support() == [v0.scale(1)]

    def test_tree_class(self, Q3):
        v = Lattice.v_n(Q3, 2).scale(4)
        assert v.tree_class().m2 == 0
        assert v.tree_class() == Lattice.v_n(Q3, 2).tree_class()

    def test_functional_forms(self, Q3):
        v = Lattice.v_n(Q3, 1).scale(2)
        rho = RhoFn(Fraction(3, 2), Fraction(5, 7), 3)
        assert bt_lattice.height(v) == 1
        assert bt_lattice.ord_lattice_e1(v) == -2
        assert bt_lattice.rho_eval(rho, v) == Fraction(3, 2) * Fraction(5, 7) ** 2

    def test_edge_pairing_needs_edges(self, Q3):
        phi = FnFinSupp.indicator(Lattice.standard(Q3))
        with pytest.raises(ValueError):
            bt_lattice.edge_pairing(phi, phi)


class TestEnds:
    """Test suite for edges as open sets of ends"""

    def test_ball_edge_membership(self, Q5):
        e = bt_lattice.ball_to_edge(Q5.zero(), 2)
        assert bt_lattice.end_in_edge(Q5.from_int(25), e)
        assert not bt_lattice.end_in_edge(Q5.from_int(5), e)
        assert not bt_lattice.end_in_edge(None, e)

    def test_ball_edge_is_an_edge(self, Q5):
        e = bt_lattice.ball_to_edge(Q5.from_int(7), 2)
        assert e.sup in e.sub.neighbors_out()


class TestHecke:
    """Test suite for Hecke operators and pairings"""

    @pytest.mark.parametrize("q", [2, 3])
    def test_T_adjoint_is_TR(self, q, rng):
        vertices = sorted(bt_lattice.ball(field(q, 1, 30), 3))
        for _ in range(20):
            phi1, phi2 = _random_fn(vertices, rng), _random_fn(vertices, rng)
            assert bt_lattice.hecke_T(phi1).pairing(phi2) == phi1.pairing(bt_lattice.hecke_TR(phi2))

    def test_R_adjoint_is_R_inverse(self, Q2, rng):
        vertices = sorted(bt_lattice.ball(Q2, 3))
        phi1, phi2 = _random_fn(vertices, rng), _random_fn(vertices, rng)
        assert bt_lattice.hecke_R(phi1).pairing(phi2) == phi1.pairing(bt_lattice.hecke_R_inv(phi2))

    def test_T_of_indicator(self, Q3):
        v = Lattice.standard(Q3)
        image = bt_lattice.hecke_T(FnFinSupp.indicator(v))
        assert sorted(image.support()) == sorted(v.neighbors_out())


class TestHarmonic:
    """Test suite for rho-type functions"""

    def test_symbolic(self, Q2):
        alpha, nu = sympy.symbols("alpha nu", nonzero=True)
        report = bt_lattice.harmonic_check(RhoFn(alpha, nu, 2), Q2, 3)
        assert report["ok"], report

    def test_rational(self, Q3):
        assert bt_lattice.harmonic_check(RhoFn(Fraction(3, 2), Fraction(5, 7), 3), Q3, 3)["ok"]

    def test_duals_are_harmonic(self, Q3):
        alpha, nu = Fraction(2), Fraction(3, 5)
        a = RhoFn(alpha, nu, 3).a
        for dual in bt_lattice.harmonic_duals(alpha, nu, 3):
            assert dual.a == a / nu
            assert bt_lattice.harmonic_check(dual, Q3, 2)["ok"]


class TestDelta:
    """Test suite for the delta maps"""

    def test_delta_adjoint(self, Q2, rng):
        vertices = sorted(bt_lattice.ball(Q2, 3))
        rho = RhoFn(Fraction(3, 2), Fraction(5, 7), 2)
        for _ in range(10):
            phi = _random_fn(vertices, rng)
            c = FnFinSupp(kind="edge")
            for v in rng.sample(vertices, 3):
                c.add_at(Edge(v, rng.choice(v.neighbors_out())), rng.randint(1, 5))
            assert bt_lattice.delta_tilde(rho, c).pairing(phi) == bt_lattice.edge_pairing(c, bt_lattice.delta_tilde_up(rho, phi))

    @pytest.mark.parametrize("q", [2, 3])
    def test_composite(self, q, rng):
        fld = field(q, 1, 30)
        vertices = sorted(bt_lattice.ball(fld, 4))
        inner = sorted(bt_lattice.ball(fld, 2))
        for _ in range(5):
            rho1, rho2 = _random_fn(vertices, rng, 40), _random_fn(vertices, rng, 40)
            phi = _random_fn(inner, rng, 3)
            lhs = bt_lattice.delta_tilde(rho1, bt_lattice.delta_tilde_up(rho2, phi))
            assert lhs.equals(bt_lattice.delta_composite_rhs(rho1, rho2, phi))

    def test_delta_alpha_nu_needs_vanishing_at_zero(self, Q5):
        with pytest.raises(DivergenceError):
            bt_lattice.delta_alpha_nu(2, 1, [BallStep(Q5.zero(), 1)])

    def test_delta_alpha_nu_refinement(self, Q5):
        """A ball and its q sub-balls give the same class against the compatible dual"""
        alpha, nu = Fraction(2), Fraction(3)
        a = Q5.from_int(1)
        coarse = bt_lattice.delta_alpha_nu(alpha, nu, [BallStep(a, 1)])
        fine = bt_lattice.delta_alpha_nu(alpha, nu, [BallStep(a + Q5.from_int(5 * d), 2) for d in range(5)])
        dual = bt_lattice.harmonic_duals(alpha, nu, 5)[1]
        assert bt_lattice.class_pairing(coarse, dual) == bt_lattice.class_pairing(fine, dual)


class TestRanks:
    """Test suite for the rank computations"""

    def test_image_rank(self, Q2):
        report = bt_lattice.image_rank_check(Q2, 2)
        assert report["rank"] == report["expected"]

    def test_free_basis_q2(self, Q2):
        report = bt_lattice.free_basis(Q2, 3)
        assert report["X_sizes"][3] == 12
        assert report["ok"]

    def test_free_basis_q3(self, Q3):
        assert bt_lattice.free_basis(Q3, 3)["ok"]

    def test_free_basis_limit(self, Q3):
        with pytest.raises(ResourceLimitError):
            bt_lattice.free_basis(Q3, 6, max_layer=100)

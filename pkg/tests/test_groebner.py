import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from insep.groebner import groebner
from insep.poly import PolyRing, TermOrder, parse_poly
from oracles import groebner_reduced

p = 3
R = PolyRing(p, [("A", ["x", "y", "z"])])
X = sp.symbols("x y z")
# plain grevlex on one block, as sympy orders it
ORDER = TermOrder(3, ((0, 1, 2),))

small = st.lists(st.tuples(st.tuples(*[st.integers(0, 2)] * 3), st.integers(1, p - 1)), min_size=1, max_size=4)


def build(ts):
    f = R.zero()
    for e, c in ts:
        f = f + R.monomial(e, c)
    return f


def as_sympy(f):
    return sp.Poly(sum(c * X[0] ** e[0] * X[1] ** e[1] * X[2] ** e[2] for e, c in f.terms.items()), *X, modulus=p)


@settings(max_examples=40, deadline=None)
@given(gens=st.lists(small, min_size=1, max_size=3))
def test_reduced_basis_matches_sympy(gens):
    polys = [build(g) for g in gens]
    polys = [f for f in polys if not f.is_zero()]
    if not polys:
        return
    G = groebner(polys, ORDER)
    ref = groebner_reduced([as_sympy(f).as_expr() for f in polys], X, p)
    mine = sorted(sp.Poly(as_sympy(g).monic().as_expr(), *X, modulus=p).as_expr().as_ordered_terms().__str__()
                  for g in G.polys)
    theirs = sorted(sp.Poly(g, *X, modulus=p).monic().as_expr().as_ordered_terms().__str__() for g in ref.exprs)
    assert mine == theirs


@settings(max_examples=40, deadline=None)
@given(gens=st.lists(small, min_size=1, max_size=3), mult=st.lists(small, min_size=3, max_size=3), other=small)
def test_membership_and_normal_form(gens, mult, other):
    polys = [build(g) for g in gens]
    G = groebner(polys, ORDER)
    member = R.zero()
    for f, m in zip(polys, mult):
        member = member + f * build(m)
    assert G.reduce(member).is_zero()
    h = build(other)
    r = G.reduce(h)
    assert G.reduce(r) == r
    assert G.contains(h - r)


def test_unit_ideal():
    G = groebner([parse_poly("x*y - 1", R), parse_poly("x", R)], ORDER)
    assert G.is_unit()

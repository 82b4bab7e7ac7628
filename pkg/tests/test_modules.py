from hypothesis import given, settings
from hypothesis import strategies as st

from insep.ideals import Ideal, determinant
from insep.modules import (ModuleMap, PresentedModule, dual_module, generic_rank, length_at_prime, pairing_sound,
                           same_submodule, saturation_in, top_minor_sections)
from insep.poly import PolyRing, parse_poly

R = PolyRing(3, [("A", ["x", "y"])])
I0 = Ideal(R, [])
P = lambda s: parse_poly(s, R)
zero, one = R.zero(), R.one()


def free(n, name="e"):
    return PresentedModule(R, I0, [f"{name}{i}" for i in range(n)], [[] for _ in range(n)])


def test_dual_of_free_is_free():
    D = dual_module(free(2))
    assert D.ngens == 2 and D.embedding == [[one, zero], [zero, one]]
    assert pairing_sound(free(2), D)


def test_dual_kills_torsion():
    # <du, dv | x^2 du = 0>: functionals must send du to 0
    M = PresentedModule(R, I0, ["du", "dv"], [[P("x^2")], [zero]])
    D = dual_module(M)
    assert pairing_sound(M, D)
    assert generic_rank(D.embedding, I0) == 1
    assert all(v[0].is_zero() for v in D.embedding)
    assert same_submodule(D.embedding, [[zero, one]], I0)


def _sat(vecs, n):
    src = free(len(vecs), "g")
    mat = [[vecs[b][a] for b in range(len(vecs))] for a in range(n)]
    return saturation_in(ModuleMap(src, free(n), mat)).embedding


def test_saturation_examples():
    assert same_submodule(_sat([[P("x")]], 1), [[one]], I0)
    diag = [[P("x"), P("y")]]
    s = _sat(diag, 2)
    assert same_submodule(s, diag, I0)
    assert same_submodule(_sat(s, 2), s, I0)


def test_saturation_contains_image_and_is_idempotent():
    img = [[P("x*y"), P("x^2")], [P("y"), zero]]
    s = _sat(img, 2)
    from insep.modules import in_submodule
    assert all(in_submodule(v, s, I0) for v in img)
    assert same_submodule(_sat(s, 2), s, I0)


def test_minor_sections_identity():
    ms = top_minor_sections([[P("x"), P("x*y"), P("x^2")]], 1, R)
    assert ms.content == P("x")
    assert all(ms.content * s == r for s, r in zip(ms.sections, ms.raw))
    ident = top_minor_sections([[one, zero], [zero, one]], 2, R)
    assert ident.content == one and ident.sections == [one]


def test_length_examples():
    x = P("x")
    assert length_at_prime([[one, zero], [zero, one]], x, I0) == 0
    assert length_at_prime([[x, zero], [zero, x * x]], x, I0) == 3


entries = st.sampled_from(["1", "x", "y", "x + y", "x^2", "x*y + 1", "2*x", "y^2 + x"])


@settings(max_examples=25, deadline=None)
@given(a=st.lists(entries, min_size=4, max_size=4), b=st.lists(entries, min_size=4, max_size=4))
def test_length_is_additive(a, b):
    A = [[P(a[0]), P(a[1])], [P(a[2]), P(a[3])]]
    B = [[P(b[0]), P(b[1])], [P(b[2]), P(b[3])]]
    if determinant(A, R).is_zero() or determinant(B, R).is_zero():
        return
    AB = [[A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)] for i in range(2)]
    x = P("x")
    assert length_at_prime(AB, x, I0) == length_at_prime(A, x, I0) + length_at_prime(B, x, I0)

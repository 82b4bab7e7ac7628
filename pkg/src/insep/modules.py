"""Finitely presented modules over chart rings F_p[vars]/I.

Module elements of O^g are encoded as polynomials linear in square-zero
tag variables, so syzygies, duals and saturations reduce to ordinary
Groebner computations (the usual "tag variable" trick).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import combinations
from typing import Sequence

from .ideals import (Ideal, UnsupportedInput, determinant, generic_closure, generic_dimension, poly_gcd_many,
                     poly_div, quotient, eliminate)
from .poly import MultiPoly, PolyRing, TermOrder


class RankError(ValueError):
    pass


def _tag_ring(ring: PolyRing, nf: int, ne: int):
    fnames = [f"_f{i}" for i in range(nf)]
    enames = [f"_e{i}" for i in range(ne)]
    blocks = []
    if fnames:
        blocks.append(("_ftags", fnames))
    if enames:
        blocks.append(("_etags", enames))
    R2 = ring.extend(blocks, front=True)
    return R2, [R2.index[n] for n in fnames], [R2.index[n] for n in enames]


def syzygies_mod(rows: Sequence[Sequence[MultiPoly]], I: Ideal) -> list[list[MultiPoly]]:
    """Generators of {a in O^g : sum_i a_i rows[i] in I^k}, reduced mod I, zeros dropped.

    ``rows`` is a g x k matrix.  Vectors with all entries in I are
    discarded since they are zero in the chart ring.
    """
    ring = I.ring
    g = len(rows)
    k = len(rows[0]) if g else 0
    if g == 0:
        return []
    if k == 0 or all(all(I.contains(x) for x in r) for r in rows):
        return [[ring.one() if i == j else ring.zero() for i in range(g)] for j in range(g)]
    R2, fi, ei = _tag_ring(ring, k, g)
    F = [R2.gens()[i] for i in fi]
    E = [R2.gens()[i] for i in ei]
    gens = []
    for i in range(g):
        v = E[i]
        for j in range(k):
            if not rows[i][j].is_zero():
                v = v + R2.embed(rows[i][j]) * F[j]
        gens.append(v)
    for h in I.gens:
        hh = R2.embed(h)
        for j in range(k):
            gens.append(hh * F[j])
    tags = F + E
    for a in range(len(tags)):
        for b in range(a, len(tags)):
            gens.append(tags[a] * tags[b])
    J = Ideal(R2, gens)
    # block order: f-tags, e-tags, then the chart ring
    G = J.gb(R2.default_order)
    out = []
    for poly in G.polys:
        if any(poly.degree_in([i]) > 0 for i in fi):
            continue
        degs = {sum(e[i] for i in ei) for e in poly.terms}
        if degs != {1}:
            continue
        vec = []
        for i, idx in enumerate(ei):
            part = {}
            for e, c in poly.terms.items():
                if e[idx] == 1:
                    ne = list(e)
                    ne[idx] = 0
                    part[tuple(ne)] = c
            vec.append(I.reduce(R2.restrict(MultiPoly(R2, part), ring)))
        if any(not x.is_zero() for x in vec):
            out.append(vec)
    return out


def generic_rank(vectors: Sequence[Sequence[MultiPoly]], I: Ideal) -> int:
    """Rank over the fraction field of F_p[vars]/I (I prime) of the given vectors."""
    if not vectors:
        return 0
    n = len(vectors[0])
    m = len(vectors)
    ring = I.ring
    best = 0
    for r in range(1, min(n, m) + 1):
        hit = False
        for rs in combinations(range(m), r):
            for cs in combinations(range(n), r):
                d = determinant([[vectors[i][j] for j in cs] for i in rs], ring)
                if not I.contains(d):
                    hit = True
                    break
            if hit:
                break
        if not hit:
            break
        best = r
    return best


@dataclass
class PresentedModule:
    """coker of a relation matrix over the chart ring ring/ideal.

    ``relations`` is a g x k matrix (rows = generators, columns = relations).
    ``embedding`` optionally records the module as a submodule of a free
    module: one vector per generator.
    """

    ring: PolyRing
    ideal: Ideal
    labels: list
    relations: list
    chart: tuple = ()
    embedding: list | None = None

    def __post_init__(self):
        self.relations = [[self.ideal.reduce(x) for x in r] for r in self.relations]

    @property
    def ngens(self) -> int:
        return len(self.labels)

    def rank(self) -> int:
        """Generic rank of the cokernel."""
        if not self.relations or not self.relations[0]:
            rel_rank = 0
        else:
            cols = [[self.relations[i][j] for i in range(self.ngens)] for j in range(len(self.relations[0]))]
            rel_rank = generic_rank(cols, self.ideal)
        return self.ngens - rel_rank

    def is_free_presentation(self) -> bool:
        return all(all(x.is_zero() for x in r) for r in self.relations)


@dataclass
class ModuleMap:
    source: PresentedModule
    target: PresentedModule
    matrix: list  # target.ngens x source.ngens

    def is_compatible(self) -> bool:
        """Each source relation maps into the target relation submodule."""
        I = self.target.ideal
        tgt_cols = []
        if self.target.relations and self.target.relations[0]:
            tgt_cols = [[self.target.relations[i][j] for i in range(self.target.ngens)]
                        for j in range(len(self.target.relations[0]))]
        if not self.source.relations or not self.source.relations[0]:
            return True
        for j in range(len(self.source.relations[0])):
            col = [self.source.relations[i][j] for i in range(self.source.ngens)]
            img = [sum((self.matrix[a][b] * col[b] for b in range(self.source.ngens)), I.ring.zero())
                   for a in range(self.target.ngens)]
            if not in_submodule(img, tgt_cols, I):
                return False
        return True


def in_submodule(v: Sequence[MultiPoly], gens: Sequence[Sequence[MultiPoly]], I: Ideal) -> bool:
    """Membership of v in the submodule of O^n spanned by gens (mod I)."""
    ring = I.ring
    if all(I.contains(x) for x in v):
        return True
    if not gens:
        return False
    n = len(v)
    R2, fi, _ = _tag_ring(ring, n, 0)
    F = [R2.gens()[i] for i in fi]

    def enc(w):
        out = R2.zero()
        for j in range(n):
            if not w[j].is_zero():
                out = out + R2.embed(w[j]) * F[j]
        return out

    polys = [enc(w) for w in gens]
    for h in I.gens:
        for j in range(n):
            polys.append(R2.embed(h) * F[j])
    for a in range(n):
        for b in range(a, n):
            polys.append(F[a] * F[b])
    J = Ideal(R2, polys)
    return J.contains(enc(v))


def dual_module(M: PresentedModule) -> PresentedModule:
    """Hom(M, O) as the module of functionals killing every relation.

    The result is presented on its generating functionals, embedded in O^g;
    its relations are the syzygies among those functionals.
    """
    I = M.ideal
    ring = M.ring
    g = M.ngens
    if not M.relations or not M.relations[0] or M.is_free_presentation():
        vecs = [[ring.one() if i == j else ring.zero() for i in range(g)] for j in range(g)]
    else:
        vecs = syzygies_mod(M.relations, I)
    labels = [f"phi{i}" for i in range(len(vecs))]
    if vecs:
        # relations among the functionals: syzygies of the vectors
        syz = syzygies_mod(vecs, I)
        rel = [[s[i] for s in syz] for i in range(len(vecs))] if syz else [[] for _ in vecs]
    else:
        rel = []
    return PresentedModule(ring, I, labels, rel, M.chart, embedding=vecs)


def pairing_sound(M: PresentedModule, D: PresentedModule) -> bool:
    """Every functional of D annihilates every relation of M (modulo the chart ideal)."""
    I = M.ideal
    if not M.relations or not M.relations[0]:
        return True
    for phi in D.embedding or []:
        for j in range(len(M.relations[0])):
            val = sum((phi[i] * M.relations[i][j] for i in range(M.ngens)), M.ring.zero())
            if not I.contains(val):
                return False
    return True


def annihilator_vectors(vectors: Sequence[Sequence[MultiPoly]], n: int, I: Ideal) -> list:
    """{a in O^n : a . v in I for all v in vectors}."""
    if not vectors:
        return [[I.ring.one() if i == j else I.ring.zero() for i in range(n)] for j in range(n)]
    rows = [[v[i] for v in vectors] for i in range(n)]  # n x len(vectors)
    return syzygies_mod(rows, I)


def saturation_in(f: ModuleMap) -> PresentedModule:
    """Saturation of the image of f inside its free target, as a double annihilator."""
    tgt = f.target
    I = tgt.ideal
    n = tgt.ngens
    if not tgt.is_free_presentation():
        raise UnsupportedInput("saturation_in needs a free target presentation")
    img = [[f.matrix[a][b] for a in range(n)] for b in range(f.source.ngens)]
    img = [v for v in img if any(not I.contains(x) for x in v)]
    r_img = generic_rank(img, I)
    if r_img != min(f.source.ngens, n) and r_img < f.source.rank():
        raise RankError("map is not injective at the generic point")
    perp = annihilator_vectors(img, n, I)
    sat = annihilator_vectors(perp, n, I) if perp else [[I.ring.one() if i == j else I.ring.zero()
                                                         for i in range(n)] for j in range(n)]
    labels = [f"s{i}" for i in range(len(sat))]
    return PresentedModule(tgt.ring, I, labels, [[] for _ in sat], tgt.chart, embedding=sat)


def same_submodule(A: Sequence, B: Sequence, I: Ideal) -> bool:
    return all(in_submodule(v, B, I) for v in A) and all(in_submodule(v, A, I) for v in B)


# ---------------------------------------------------------------------------
# maximal minors and valuations


@dataclass
class MinorSections:
    content: MultiPoly
    sections: list
    raw: list
    index_sets: list = dc_field(default_factory=list)


def maximal_minors(matrix: Sequence[Sequence[MultiPoly]], r: int, ring: PolyRing):
    """All r x r minors of an r x d matrix, keyed by column subsets."""
    d = len(matrix[0]) if matrix else 0
    if r > len(matrix):
        raise RankError("rank exceeds number of rows")
    out = []
    for cs in combinations(range(d), r):
        out.append((cs, determinant([[matrix[i][j] for j in cs] for i in range(r)], ring)))
    return out


def top_minor_sections(matrix: Sequence[Sequence[MultiPoly]], r: int, ring: PolyRing) -> MinorSections:
    """Content and primitive parts of the maximal minors of an r x d matrix.

    content * sections[i] == raw[i] exactly; the first nonzero primitive
    section is made monic.
    """
    if r == 0:
        return MinorSections(ring.one(), [ring.one()], [ring.one()], [()])
    minors = maximal_minors(matrix, r, ring)
    raw = [m for _, m in minors]
    nz = [m for m in raw if not m.is_zero()]
    if not nz:
        raise RankError("all maximal minors vanish")
    c = poly_gcd_many(nz)
    first = next(m for m in raw if not m.is_zero())
    prim_first = poly_div(first, c)
    lc = prim_first.lc()
    c = c.scale(lc)
    secs = [poly_div(m, c) if not m.is_zero() else ring.zero() for m in raw]
    return MinorSections(c, secs, raw, [cs for cs, _ in minors])


def uniformizer_check(I: Ideal, pi: MultiPoly, var_idx: Sequence[int]) -> bool:
    """pi cuts the prime divisor reducedly at its generic point (so pi is a uniformiser)."""
    from .ideals import jacobian_minors
    vs = set(var_idx)
    eqs = [g for g in I.gens if g.variables() & vs]
    c = len(eqs)
    polys = eqs + [pi]
    minors = jacobian_minors(polys, var_idx, c + 1)
    D = I + [pi]
    dim_d = generic_dimension(D)
    if not minors:
        return False
    return generic_dimension(D + minors) < dim_d


def valuation(h: MultiPoly, pi: MultiPoly, I: Ideal, cap: int = 64) -> int:
    """Order of h along the divisor (pi = 0) of the chart ring, with pi a uniformiser.

    v(h) = max k with ((pi^k) + I) : h not contained in P = I + (pi).
    Membership in P is tested with the symbols inverted: they are units at
    the generic point of the divisor.
    """
    P = generic_closure(I + [pi])
    if I.contains(h):
        raise RankError("valuation of zero")
    k = 0
    pk = pi
    while k < cap:
        Q = quotient(I + [pk], h)
        if all(P.contains(q) for q in Q.gens):
            return k
        k += 1
        pk = pk * pi
    raise RankError("valuation exceeds cap")


def length_at_prime(matrix: Sequence[Sequence[MultiPoly]], pi: MultiPoly, I: Ideal) -> int:
    """Length of the cokernel of a square matrix localised at (pi = 0): v_pi(det)."""
    n = len(matrix)
    if n == 0:
        return 0
    if any(len(r) != n for r in matrix):
        raise RankError("length_at_prime needs a square matrix")
    det = determinant([list(r) for r in matrix], I.ring)
    if I.contains(det):
        raise RankError("map degenerates at the generic point")
    return valuation(det, pi, I)

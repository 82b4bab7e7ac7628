"""Ideal-theoretic operations on top of the Groebner engine.

Everything lives in F_p[ambient vars, tower symbols].  Statements about the
generic fibre (coefficients in the tower *field*) are made through
:func:`generic_closure` and :func:`generic_dimension`, which use a block
order with the ambient variables dominating the symbols.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from sympy.polys.domains import GF
from sympy.polys.orderings import grevlex
from sympy.polys.rings import PolyRing as _SymRing

from .groebner import GBasis, groebner
from .mpgcd import exact_quotient, gcd_cofactors
from .poly import MultiPoly, PolyRing, TermOrder
from .tower_field import TowerElement, TowerField


class UnsupportedInput(ValueError):
    """Input outside the class the algorithms can certify."""


class Ideal:
    """Immutable ideal handle with a per-order Groebner basis cache."""

    def __init__(self, ring: PolyRing, gens: Iterable[MultiPoly]):
        self.ring = ring
        gs = []
        for g in gens:
            if g.ring != ring:
                g = ring.embed(g)
            if not g.is_zero():
                gs.append(g)
        self.gens = tuple(gs)
        self._gb: dict = {}

    def __repr__(self):
        return "Ideal(" + ", ".join(str(g) for g in self.gens) + ")"

    def gb(self, order: TermOrder | None = None) -> GBasis:
        order = order or self.ring.default_order
        if order not in self._gb:
            if not self.gens:
                self._gb[order] = GBasis(self.ring, order, [])
            else:
                self._gb[order] = groebner(self.gens, order)
        return self._gb[order]

    def is_zero(self) -> bool:
        return not self.gens

    def is_unit(self) -> bool:
        return bool(self.gens) and self.gb().is_unit()

    def reduce(self, f: MultiPoly, order: TermOrder | None = None) -> MultiPoly:
        if f.ring != self.ring:
            f = self.ring.embed(f)
        return self.gb(order).reduce(f)

    def contains(self, f: MultiPoly) -> bool:
        return self.reduce(f).is_zero()

    def contains_ideal(self, other: "Ideal") -> bool:
        return all(self.contains(g) for g in other.gens)

    def equals(self, other: "Ideal") -> bool:
        return self.contains_ideal(other) and other.contains_ideal(self)

    def __add__(self, other):
        if isinstance(other, Ideal):
            return Ideal(self.ring, self.gens + other.gens)
        return Ideal(self.ring, self.gens + tuple(other))

    def reduced_gens(self, order: TermOrder | None = None) -> list[MultiPoly]:
        return list(self.gb(order).polys)


# ---------------------------------------------------------------------------
# orders


def elimination_order(ring: PolyRing, elim: Sequence[int]) -> TermOrder:
    elim = tuple(sorted(set(elim)))
    rest_blocks = []
    for b in ring.default_order.blocks:
        rb = tuple(i for i in b if i not in elim)
        if rb:
            rest_blocks.append(rb)
    return TermOrder(ring.nvars, (elim,) + tuple(rest_blocks))


def generic_order(ring: PolyRing) -> TermOrder:
    """All non-parameter variables in one grevlex block, then the symbols."""
    pidx = ring.param_indices
    amb = tuple(i for i in range(ring.nvars) if i not in pidx)
    blocks = tuple(b for b in (amb, pidx) if b)
    return TermOrder(ring.nvars, blocks)


# ---------------------------------------------------------------------------
# elimination, saturation, quotients


def eliminate(I: Ideal, elim: Iterable) -> Ideal:
    """I intersected with the subring free of the given variables (names or indices)."""
    ring = I.ring
    idx = [ring.index[v] if isinstance(v, str) else v for v in elim]
    if not idx:
        return I
    order = elimination_order(ring, idx)
    G = I.gb(order)
    keep = [g for g in G.polys if not any(g.degree_in([i]) > 0 for i in idx)]
    return Ideal(ring, keep)


def _aux_ring(ring: PolyRing, name: str) -> PolyRing:
    n = name
    while n in ring.index:
        n = "_" + n
    return ring.extend([(n, [n])], front=True)


def saturate(I: Ideal, f: MultiPoly) -> Ideal:
    """(I : f^infinity) via the Rabinowitsch trick."""
    if f.is_zero():
        raise ValueError("cannot saturate by zero")
    ring = I.ring
    if f.is_constant():
        return I
    R2 = _aux_ring(ring, "_sat")
    y = R2.gens()[0]
    gens = [R2.embed(g) for g in I.gens] + [y * R2.embed(f) - 1]
    J = eliminate(Ideal(R2, gens), [0])
    return Ideal(ring, [R2.restrict(g, ring) for g in J.gens])


def intersect(I: Ideal, J: Ideal) -> Ideal:
    ring = I.ring
    R2 = _aux_ring(ring, "_int")
    t = R2.gens()[0]
    gens = [t * R2.embed(g) for g in I.gens] + [(1 - t) * R2.embed(g) for g in J.gens]
    K = eliminate(Ideal(R2, gens), [0])
    return Ideal(ring, [R2.restrict(g, ring) for g in K.gens])


def divide_exact(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    """f / g for g dividing f; raises otherwise."""
    q, r = to_sympy(f).div(to_sympy(g))
    if r:
        raise ValueError("inexact division")
    return from_sympy(q, f.ring)


def quotient(I: Ideal, J) -> Ideal:
    """(I : J) for an ideal or a single polynomial J."""
    ring = I.ring
    if isinstance(J, MultiPoly):
        gens = [J]
    else:
        gens = list(J.gens)
    result = None
    for g in gens:
        if g.is_zero():
            continue
        K = intersect(I, Ideal(ring, [g]))
        Q = Ideal(ring, [divide_exact(h, g) for h in K.gens])
        result = Q if result is None else intersect(result, Q)
    if result is None:
        return Ideal(ring, [ring.one()])
    return result


def radical_member(I: Ideal, f: MultiPoly) -> bool:
    """f in rad(I), by the Rabinowitsch test."""
    if f.is_zero():
        return True
    R2 = _aux_ring(I.ring, "_rad")
    y = R2.gens()[0]
    J = Ideal(R2, [R2.embed(g) for g in I.gens] + [y * R2.embed(f) - 1])
    return J.is_unit()


def generic_radical_member(I: Ideal, f: MultiPoly) -> bool:
    """f in rad(I) once the symbols are inverted."""
    if f.is_zero():
        return True
    R2 = _aux_ring(I.ring, "_rad")
    y = R2.gens()[0]
    J = Ideal(R2, [R2.embed(g) for g in I.gens] + [y * R2.embed(f) - 1])
    return generic_dimension(J) < 0


# ---------------------------------------------------------------------------
# dimension


def _max_independent(lms: list[tuple], variables: Sequence[int]) -> int:
    """Krull dimension of the monomial ideal generated by lms (restricted to variables)."""
    variables = list(variables)
    supports = [frozenset(i for i in variables if m[i]) for m in lms]
    if any(not s for s in supports):
        return -1
    best = 0
    n = len(variables)

    def rec(start: int, chosen: frozenset):
        nonlocal best
        if len(chosen) > best:
            best = len(chosen)
        if len(chosen) + (n - start) <= best:
            return
        for k in range(start, n):
            v = variables[k]
            c2 = chosen | {v}
            if all(not s <= c2 for s in supports):
                rec(k + 1, c2)

    rec(0, frozenset())
    return best


def krull_dimension(I: Ideal) -> int:
    """Dimension of F_p[vars]/I (-1 for the unit ideal)."""
    if I.is_zero():
        return I.ring.nvars
    G = I.gb()
    return _max_independent(G.leading_monomials(), range(I.ring.nvars))


def generic_dimension(I: Ideal) -> int:
    """Dimension of the ideal extended to coefficients in F_p(symbols).

    Uses a block order with the non-symbol variables first; the resulting
    basis is a Groebner basis of the extended ideal.
    """
    ring = I.ring
    pidx = set(ring.param_indices)
    amb = [i for i in range(ring.nvars) if i not in pidx]
    if I.is_zero():
        return len(amb)
    G = I.gb(generic_order(ring))
    lms = []
    for m in G.leading_monomials():
        xm = tuple(m[i] if i not in pidx else 0 for i in range(ring.nvars))
        lms.append(xm)
    return _max_independent(lms, amb)


def leading_param_coefficients(I: Ideal) -> list[MultiPoly]:
    """For each basis element (generic order), the coefficient of its leading ambient monomial."""
    ring = I.ring
    order = generic_order(ring)
    pidx = set(ring.param_indices)
    out = []
    for g in I.gb(order).polys:
        lm = g.lm(order)
        xm = tuple(lm[i] if i not in pidx else 0 for i in range(ring.nvars))
        coeff = {}
        for e, c in g.terms.items():
            if all(e[i] == xm[i] for i in range(ring.nvars) if i not in pidx):
                ne = tuple(e[i] if i in pidx else 0 for i in range(ring.nvars))
                coeff[ne] = c
        out.append(MultiPoly(ring, coeff))
    return out


def generic_closure(I: Ideal) -> Ideal:
    """I F_p(symbols)[vars] intersected with F_p[symbols][vars]."""
    if I.is_zero():
        return I
    h = None
    for c in leading_param_coefficients(I):
        if c.is_constant():
            continue
        h = c if h is None else h * c
    if h is None:
        return I
    return saturate(I, squarefree_part(h))


# ---------------------------------------------------------------------------
# gcd and squarefree parts through sympy


@lru_cache(maxsize=None)
def _sym_ring(p: int, names: tuple):
    return _SymRing(names, GF(p), grevlex)


def to_sympy(f: MultiPoly):
    R = _sym_ring(f.ring.p, f.ring.names)
    return R.from_dict(dict(f.terms)) if f.terms else R.zero


def from_sympy(g, ring: PolyRing) -> MultiPoly:
    p = ring.p
    return MultiPoly(ring, {tuple(e): int(c) % p for e, c in g.items() if int(c) % p})


def poly_gcd(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    if a.is_zero():
        return b.monic() if not b.is_zero() else b
    if b.is_zero():
        return a.monic()
    g, _, _ = gcd_cofactors(a.ring.p, a.ring.nvars, a.terms, b.terms)
    return MultiPoly(a.ring, g).monic()


def poly_gcd_many(polys: Iterable[MultiPoly]) -> MultiPoly | None:
    g = None
    for f in polys:
        if f.is_zero():
            continue
        g = f.monic() if g is None else poly_gcd(g, f)
        if g.is_constant():
            return g
    return g


def poly_div(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    return MultiPoly(a.ring, exact_quotient(a.ring.p, a.ring.nvars, a.terms, b.terms))


def squarefree_part(f: MultiPoly) -> MultiPoly:
    """Product of the distinct irreducible factors of f (up to a unit)."""
    if f.is_zero() or f.is_constant():
        return f.ring.one() if not f.is_zero() else f
    ring = f.ring
    p = ring.p
    # split off a Frobenius-stable part: if all derivatives vanish f is a p-th power
    ders = [f.diff(i) for i in range(ring.nvars)]
    if all(d.is_zero() for d in ders):
        root = MultiPoly(ring, {tuple(k // p for k in e): c for e, c in f.terms.items()})
        return squarefree_part(root)
    g = poly_gcd_many([f] + ders)
    if g is None or g.is_constant():
        return f.monic()
    a = poly_div(f, g)  # product of factors whose multiplicity is prime to p, squarefree
    # factors of g not already in a
    rest = g
    while True:
        h = poly_gcd(rest, a)
        if h.is_constant():
            break
        rest = poly_div(rest, h)
    out = a
    if not rest.is_constant():
        out = out * squarefree_part(rest)
    return out.monic()


def split_monomial(f: MultiPoly):
    """f = x^e * rest with rest not divisible by any variable."""
    e = f.monomial_content()
    return e, f.divide_monomial(e)


# ---------------------------------------------------------------------------
# tower-level helpers


def lift_poly(f: MultiPoly, src: TowerField, dst: TowerField) -> MultiPoly:
    """Reinterpret symbol exponents of f (written at src levels) at dst levels."""
    if src == dst:
        return f
    if not src.is_subfield_of(dst):
        raise ValueError("can only lift to a larger field")
    ring = f.ring
    p = src.p
    scale = {ring.index[t]: p ** (b - a) for t, a, b in zip(src.params, src.levels, dst.levels)}
    out = {}
    for e, c in f.terms.items():
        ne = tuple(k * scale.get(i, 1) for i, k in enumerate(e))
        out[ne] = c
    return MultiPoly(ring, out)


def lower_poly(f: MultiPoly, src: TowerField, dst: TowerField) -> MultiPoly | None:
    """Inverse of lift_poly when f actually lives at dst levels, else None."""
    if src == dst:
        return f
    ring = f.ring
    p = src.p
    scale = {ring.index[t]: p ** (a - b) for t, a, b in zip(src.params, src.levels, dst.levels)}
    out = {}
    for e, c in f.terms.items():
        ne = []
        for i, k in enumerate(e):
            s = scale.get(i, 1)
            if k % s:
                return None
            ne.append(k // s)
        out[tuple(ne)] = c
    return MultiPoly(ring, out)


def param_content(f: MultiPoly) -> MultiPoly:
    """gcd over F_p[symbols] of the coefficients of f in the ambient variables."""
    ring = f.ring
    amb = [i for i in range(ring.nvars) if i not in ring.param_indices]
    coeffs = f.coefficients_in(amb)
    g = poly_gcd_many(coeffs.values())
    return g if g is not None else ring.one()


def strip_param_content(f: MultiPoly) -> MultiPoly:
    c = param_content(f)
    if c.is_constant():
        return f.monic()
    return poly_div(f, c).monic()


def coefficient_element(f: MultiPoly, field: TowerField) -> TowerElement:
    """A polynomial purely in the symbols, as a field element."""
    pidx = f.ring.param_indices
    d = {}
    for e, c in f.terms.items():
        if any(e[i] for i in range(f.ring.nvars) if i not in pidx):
            raise ValueError("polynomial involves ambient variables")
        d[tuple(e[i] for i in pidx)] = c
    return field.from_dict(d)


def element_poly(a: TowerElement, ring: PolyRing) -> MultiPoly:
    """Numerator of a field element as a polynomial in the ring's symbols."""
    if not a.is_polynomial():
        raise ValueError("element has a denominator")
    pidx = ring.param_indices
    out = {}
    for e, c in a.num_dict().items():
        ne = [0] * ring.nvars
        for i, k in zip(pidx, e):
            ne[i] = k
        out[tuple(ne)] = c
    return MultiPoly(ring, out)


def split_field_coefficients(f: MultiPoly, field: TowerField) -> dict:
    """f as {ambient exponent: TowerElement coefficient}."""
    ring = f.ring
    pidx = set(ring.param_indices)
    amb = [i for i in range(ring.nvars) if i not in pidx]
    out = {}
    for key, coeff in f.coefficients_in(amb).items():
        out[key] = coefficient_element(coeff, field)
    return out


def join_field_coefficients(coeffs: dict, ring: PolyRing) -> MultiPoly:
    """Inverse of split_field_coefficients after clearing denominators (content stripped)."""
    if not coeffs:
        return ring.zero()
    pidx = set(ring.param_indices)
    amb = [i for i in range(ring.nvars) if i not in pidx]
    den = None
    for a in coeffs.values():
        if a.is_zero():
            continue
        d = element_poly(TowerElement(a.field, a.den, a.field.ring.one, canonical=True), ring)
        den = d if den is None else den * poly_div(d, poly_gcd(den, d))
    out = ring.zero()
    for key, a in coeffs.items():
        if a.is_zero():
            continue
        num = element_poly(TowerElement(a.field, a.num, a.field.ring.one, canonical=True), ring)
        dd = element_poly(TowerElement(a.field, a.den, a.field.ring.one, canonical=True), ring)
        mult = poly_div(den, dd)
        e = [0] * ring.nvars
        for i, k in zip(amb, key):
            e[i] = k
        out = out + (num * mult).mul_monomial(tuple(e))
    return strip_param_content(out)


def pth_power_test(f: MultiPoly, field: TowerField, within: TowerField) -> MultiPoly | None:
    """g with g^p = f, written at ``within`` levels, if it exists there."""
    if not field.is_subfield_of(within):
        raise ValueError("f must be defined over a subfield of 'within'")
    p = field.p
    F = lift_poly(f, field, within)
    out = {}
    for e, c in F.terms.items():
        if any(k % p for k in e):
            return None
        out[tuple(k // p for k in e)] = c
    return MultiPoly(f.ring, out)


def pth_power_up_to_unit(f: MultiPoly, field: TowerField, within: TowerField) -> MultiPoly | None:
    """A root of f up to a unit of the field: returns G with f = unit * G^p, G content-free."""
    f = strip_param_content(f)
    ring = f.ring
    order = generic_order(ring)
    lc = _lead_param_coeff(f, order)
    p = field.p
    g = pth_power_test(f * lc ** (p - 1), field, within)
    if g is None:
        return None
    return strip_param_content(g)


def _lead_param_coeff(f: MultiPoly, order: TermOrder) -> MultiPoly:
    ring = f.ring
    pidx = set(ring.param_indices)
    lm = f.lm(order)
    xm = tuple(lm[i] if i not in pidx else 0 for i in range(ring.nvars))
    coeff = {}
    for e, c in f.terms.items():
        if all(e[i] == xm[i] for i in range(ring.nvars) if i not in pidx):
            coeff[tuple(e[i] if i in pidx else 0 for i in range(ring.nvars))] = c
    return MultiPoly(ring, coeff)


# ---------------------------------------------------------------------------
# charts and Jacobian loci


def chart_list(ring: PolyRing, blocks: Sequence[str] | None = None) -> list[tuple[int, ...]]:
    """All standard charts: one variable index per projective block."""
    blocks = blocks or ring.block_names
    idx = [ring.block_index[b] for b in blocks]
    out = [()]
    for b in idx:
        out = [c + (i,) for c in out for i in b]
    return out


def dehomogenize(f: MultiPoly, chart: Sequence[int]) -> MultiPoly:
    return f.subs({i: 1 for i in chart})


def homogenize_chart(f: MultiPoly, chart: Sequence[int]) -> MultiPoly:
    """Re-homogenise a chart polynomial block by block using the chart variables."""
    ring = f.ring
    g = f
    for b, hv in zip([ring.block_index[n] for n in ring.block_names], chart):
        g = g.homogenize(b, hv)
    return g


def chart_ideal(I: Ideal, chart: Sequence[int]) -> Ideal:
    return Ideal(I.ring, [dehomogenize(g, chart) for g in I.gens] + [I.ring.gens()[i] - 1 for i in chart])


def jacobian_minors(polys: Sequence[MultiPoly], var_idx: Sequence[int], size: int) -> list[MultiPoly]:
    J = [[f.diff(v) for v in var_idx] for f in polys]
    out = []
    for rows in combinations(range(len(polys)), size):
        for cols in combinations(range(len(var_idx)), size):
            d = determinant([[J[r][c] for c in cols] for r in rows], polys[0].ring)
            if not d.is_zero():
                out.append(d)
    return out


def determinant(M: list[list[MultiPoly]], ring: PolyRing) -> MultiPoly:
    """Laplace expansion; matrices here are tiny."""
    n = len(M)
    if n == 0:
        return ring.one()
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = ring.zero()
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * determinant(minor, ring)
        total = total + term if j % 2 == 0 else total - term
    return total


def jacobian_singular_primes(gens: Sequence[MultiPoly], ring: PolyRing, codim_expected: int | None = None):
    """Codimension-one components of the Jacobian locus, chart by chart.

    ``gens`` define a complete intersection in a product of projective
    spaces over the symbol field.  The Jacobian is taken with respect to
    the chart variables and all tower symbols.  Returns a list of
    homogeneous polynomials (one per divisor), deduplicated across charts.
    Raises :class:`UnsupportedInput` when part of the codimension-one
    singular locus is not cut out by a principal chart equation dividing
    every minor, or when the input is not a complete intersection.
    """
    I = Ideal(ring, gens)
    c = len(gens)
    pidx = list(ring.param_indices)
    found: dict = {}
    for chart in chart_list(ring):
        dgens = [dehomogenize(g, chart) for g in gens]
        Ic = Ideal(ring, dgens + [ring.gens()[i] - 1 for i in chart])
        dim_z = generic_dimension(Ic)
        if dim_z < 0:
            continue
        amb = [i for i in ring.ambient_indices if i not in chart]
        if dim_z != len(amb) - c:
            raise UnsupportedInput("input is not a complete intersection on a chart")
        cand = jacobian_minors(dgens, amb + pidx, c)
        if not cand:
            # every point is singular: not generically reduced
            raise UnsupportedInput("Jacobian vanishes identically; scheme is not reduced")
        g = poly_gcd_many(cand)
        primes = []
        if g is not None and not g.is_constant():
            e, rest = split_monomial(g)
            for i, k in enumerate(e):
                if k and i not in pidx:
                    primes.append(ring.gens()[i])
            if not rest.is_constant():
                sq = squarefree_part(rest)
                amb_part = [i for i in sq.variables() if i not in pidx]
                if amb_part:
                    primes.append(sq)
        verified = []
        for pi in primes:
            d = generic_dimension(Ic + [pi])
            if d == dim_z - 1:
                verified.append(pi)
        # nothing of codimension one may remain outside the candidates
        sing = Ic + cand
        rest_locus = sing
        for pi in verified:
            rest_locus = saturate(rest_locus, pi)
        if generic_dimension(rest_locus) >= dim_z - 1:
            raise UnsupportedInput("codimension-one singular locus not supported on principal chart primes")
        for pi in verified:
            H = strip_param_content(homogenize_chart(pi, chart))
            key = tuple(sorted(H.terms.items()))
            found.setdefault(key, H)
    return [found[k] for k in sorted(found)]

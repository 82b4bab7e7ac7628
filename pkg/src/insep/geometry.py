"""Schemes in products of projective spaces over tower fields.

A :class:`SchemeDesc` is a list of multihomogeneous generators in a
:class:`~insep.poly.PolyRing`, read at the levels of its tower field.  The
operations here implement base change, reduced structure by p-th root
extraction, R1 testing through the Jacobian over the perfect ground field,
and a bounded p-th-root closure standing in for normalisation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field, replace
from itertools import combinations, product
from typing import Sequence

from .ideals import (Ideal, UnsupportedInput, chart_list, dehomogenize, generic_dimension,
                     jacobian_minors, jacobian_singular_primes, join_field_coefficients, lift_poly,
                     pth_power_up_to_unit, strip_param_content)
from .modules import generic_rank
from .poly import MultiPoly, PolyRing, format_poly
from .tower_field import FieldError, TowerElement, TowerField, field_nullspace, pth_root

log = logging.getLogger(__name__)


class CertificateError(RuntimeError):
    pass


@dataclass(frozen=True)
class DivisorClass:
    degrees: tuple

    def __add__(self, other: "DivisorClass") -> "DivisorClass":
        return DivisorClass(tuple(a + b for a, b in zip(self.degrees, other.degrees)))

    def __sub__(self, other: "DivisorClass") -> "DivisorClass":
        return DivisorClass(tuple(a - b for a, b in zip(self.degrees, other.degrees)))

    def scale(self, k: int) -> "DivisorClass":
        return DivisorClass(tuple(k * a for a in self.degrees))

    def pullback_frobenius(self, p: int) -> "DivisorClass":
        return self.scale(p)

    def is_effective(self) -> bool:
        return all(a >= 0 for a in self.degrees)

    def is_zero(self) -> bool:
        return not any(self.degrees)

    @classmethod
    def zero(cls, nblocks: int) -> "DivisorClass":
        return cls((0,) * nblocks)

    def to_list(self) -> list:
        return list(self.degrees)


@dataclass
class SchemeDesc:
    field: TowerField
    ring: PolyRing
    gens: tuple
    name: str = "X"
    flags: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.gens = tuple(self.gens)
        for g in self.gens:
            if g.ring != self.ring:
                raise ValueError("generator in a foreign ring")
            if g.multidegree() is None:
                raise ValueError(f"generator {format_poly(g)} is not multihomogeneous")
        self.flags.setdefault("complete_intersection", None)

    @property
    def blocks(self) -> list:
        return [(b, self.ring.block_vars(b)) for b in self.ring.block_names]

    @property
    def ambient_dim(self) -> int:
        return sum(len(v) - 1 for _, v in self.blocks)

    @property
    def expected_dim(self) -> int:
        return self.ambient_dim - len(self.gens)

    @property
    def ideal(self) -> Ideal:
        return Ideal(self.ring, self.gens)

    def multidegrees(self) -> list:
        return [g.multidegree() for g in self.gens]

    def levels_map(self) -> dict:
        return self.field.level_map()

    def format_gens(self) -> list:
        return [format_poly(g, self.levels_map()) for g in self.gens]

    def with_gens(self, gens, field: TowerField | None = None, name: str | None = None, **flags) -> "SchemeDesc":
        fl = dict(self.flags)
        fl.update(flags)
        return SchemeDesc(field or self.field, self.ring, tuple(gens), name or self.name, fl)

    def dimension(self) -> int:
        """Projective dimension of the generic fibre, computed chart-wise."""
        best = -1
        for chart in chart_list(self.ring):
            Ic = Ideal(self.ring, [dehomogenize(g, chart) for g in self.gens]
                       + [self.ring.gens()[i] - 1 for i in chart])
            best = max(best, generic_dimension(Ic))
        return best

    def check_complete_intersection(self) -> bool:
        ci = self.dimension() == self.expected_dim
        self.flags["complete_intersection"] = ci
        return ci

    def h0_is_constants(self) -> bool:
        """A positive-dimensional complete intersection in a product of projective
        spaces is connected with H^0(O) = K."""
        ok = self.expected_dim > 0 and self.check_complete_intersection()
        self.flags["h0_equals_K"] = ok
        return ok


@dataclass(frozen=True)
class BaseChangeSpec:
    source: TowerField
    target: TowerField

    def __post_init__(self):
        if not self.source.is_subfield_of(self.target):
            raise FieldError("target must contain the source")
        if any(b - a > 1 for a, b in zip(self.source.levels, self.target.levels)):
            raise FieldError("base change is not of height one (a level rises by more than 1)")

    @property
    def raised(self) -> list:
        return self.target.raised_params(self.source)

    @property
    def degree(self) -> int:
        return self.source.p ** len(self.raised)

    @classmethod
    def raise_params(cls, source: TowerField, params: Sequence[str]) -> "BaseChangeSpec":
        return cls(source, source.raised(params))

    @classmethod
    def frobenius(cls, source: TowerField) -> "BaseChangeSpec":
        return cls(source, source.raised(source.params))


def base_change(X: SchemeDesc, bc: BaseChangeSpec) -> SchemeDesc:
    if X.field != bc.source:
        X = lift_scheme(X, bc.source) if X.field.is_subfield_of(bc.source) else None
        if X is None:
            raise FieldError("scheme is not defined over the source field")
    gens = [lift_poly(g, bc.source, bc.target) for g in X.gens]
    fl = {k: v for k, v in X.flags.items() if k == "complete_intersection"}
    return SchemeDesc(bc.target, X.ring, tuple(gens), X.name + "_L", fl)


def lift_scheme(X: SchemeDesc, target: TowerField) -> SchemeDesc:
    gens = [lift_poly(g, X.field, target) for g in X.gens]
    fl = {k: v for k, v in X.flags.items() if k == "complete_intersection"}
    return SchemeDesc(target, X.ring, tuple(gens), X.name, fl)


# ---------------------------------------------------------------------------
# residue classes and combination search


def residue_classes(g: MultiPoly, p: int):
    """g = sum over (rho, gamma) of u^rho x^gamma * A_{rho,gamma} with A in F_p[u^p, x^p].

    Keys are full exponent residue vectors (all variables, symbols included).
    Values are the polynomials A (with exponents still multiples of p).
    """
    out: dict = {}
    for e, c in g.terms.items():
        key = tuple(k % p for k in e)
        rest = tuple(k - r for k, r in zip(e, key))
        out.setdefault(key, {})[rest] = c
    return {k: MultiPoly(g.ring, v) for k, v in out.items()}


def _frob_root(A: MultiPoly, p: int) -> MultiPoly:
    return MultiPoly(A.ring, {tuple(k // p for k in e): c for e, c in A.terms.items()})


def _pow_coeffs(f: MultiPoly, field: TowerField) -> dict:
    """Coefficients of f in L^p over the monomials x^(p beta), keyed by (residue, beta)."""
    ring = f.ring
    p = ring.p
    pidx = list(ring.param_indices)
    amb = [i for i in range(ring.nvars) if i not in ring.param_indices]
    out: dict = {}
    for e, c in f.terms.items():
        res = tuple(k % p for k in e)
        beta = tuple(e[i] // p for i in amb)
        num = tuple(e[i] - e[i] % p for i in pidx)
        out.setdefault((res, beta), {})[num] = c
    return {k: field.from_dict(v) for k, v in out.items()}


def combination_root(gi: MultiPoly, gj: MultiPoly, field: TowerField):
    """Find (lam, c) in L^2, lam != 0, with lam*gi + c*gj a p-th power in L[x].

    Returns the content-free root or None.  Works over L^p on the basis
    u^sigma of L, so the search is an exact linear-algebra problem.
    """
    ring = gi.ring
    p = ring.p
    pidx = list(ring.param_indices)
    sigmas = list(product(range(p), repeat=len(pidx)))
    cols = []
    for base in (gi, gj):
        for sg in sigmas:
            e = [0] * ring.nvars
            for i, k in zip(pidx, sg):
                e[i] = k
            cols.append(_pow_coeffs(base.mul_monomial(tuple(e)), field))
    keys = sorted({k for col in cols for k in col if any(k[0])})
    if not keys:
        return None
    rows = [[col.get(k, field.zero()) for col in cols] for k in keys]
    kernel = field_nullspace(rows, field)
    half = len(sigmas)
    for v in kernel:
        if not any(v[:half]):
            continue
        lam = _assemble(v[:half], sigmas, field)
        c = _assemble(v[half:], sigmas, field)
        comb = _combine_poly(gi, lam, field) + _combine_poly(gj, c, field) if c else _combine_poly(gi, lam, field)
        root = pth_power_up_to_unit(comb, field, field)
        if root is not None:
            return root
    return None


def _assemble(coeffs, sigmas, field: TowerField) -> TowerElement:
    out = field.zero()
    for a, sg in zip(coeffs, sigmas):
        if a:
            e = field.one()
            for t, k in zip(field.params, sg):
                if k:
                    e = e * field.symbol(t, k)
            out = out + a * e
    return out


def _combine_poly(g: MultiPoly, lam: TowerElement, field: TowerField) -> MultiPoly:
    """lam * g with denominators cleared (as a polynomial)."""
    from .ideals import split_field_coefficients
    coeffs = split_field_coefficients(g, field)
    return join_field_coefficients({k: v * lam for k, v in coeffs.items()}, g.ring)


# ---------------------------------------------------------------------------
# reduced structure


@dataclass
class ReductionCertificate:
    certified: bool
    changed: bool
    status: str
    exponent_drops: list
    steps: list
    message: str = ""

    def to_json(self) -> dict:
        return {"certified": self.certified, "changed": self.changed, "status": self.status,
                "exponent_drops": list(self.exponent_drops), "steps": list(self.steps),
                "message": self.message}


def generically_reduced(gens: Sequence[MultiPoly], ring: PolyRing) -> bool:
    """Jacobian R0 test over the perfect ground field, chart by chart.

    The scheme is a complete intersection, so generic smoothness of every
    component of the total space is equivalent to reducedness.
    """
    c = len(gens)
    pidx = list(ring.param_indices)
    for chart in chart_list(ring):
        dg = [dehomogenize(g, chart) for g in gens]
        Ic = Ideal(ring, dg + [ring.gens()[i] - 1 for i in chart])
        dz = generic_dimension(Ic)
        if dz < 0:
            continue
        amb = [i for i in ring.ambient_indices if i not in chart]
        minors = jacobian_minors(dg, amb + pidx, c)
        if not minors:
            return False
        if generic_dimension(Ic + minors) >= dz:
            return False
    return True


def reduce_structure(XL: SchemeDesc, max_rounds: int = 16):
    """Reduced structure Z of XL with a certificate.

    Generators are replaced by their p-th roots (up to units of the field)
    while possible; pairs of generators of equal multidegree are searched
    for combinations that are p-th powers.  The result is certified by the
    Jacobian R0 test.
    """
    field = XL.field
    gens = [strip_param_content(g) for g in XL.gens]
    drops = [0] * len(gens)
    steps = []
    for _ in range(max_rounds):
        progress = False
        for i, g in enumerate(gens):
            while True:
                r = pth_power_up_to_unit(g, field, field)
                if r is None or r.is_constant():
                    break
                g = r
                drops[i] += 1
                steps.append({"generator": i, "kind": "root"})
                progress = True
            gens[i] = g
        md = [g.multidegree() for g in gens]
        for i, j in combinations(range(len(gens)), 2):
            if md[i] != md[j]:
                continue
            r = combination_root(gens[i], gens[j], field)
            if r is not None and not r.is_constant():
                gens[i] = r
                drops[i] += 1
                steps.append({"generator": i, "kind": "combination", "with": j})
                progress = True
                md = [g.multidegree() for g in gens]
        if not progress:
            break
    changed = any(drops)
    Z = SchemeDesc(field, XL.ring, tuple(gens), "Z", {"complete_intersection": XL.flags.get("complete_intersection")})
    ok = generically_reduced(gens, XL.ring)
    Z.flags["reduced"] = ok
    cert = ReductionCertificate(ok, changed, "certified" if ok else "uncertified", drops, steps,
                                "" if ok else "Jacobian R0 test failed after root extraction")
    return Z, cert


# ---------------------------------------------------------------------------
# degrees and R1


def symbol_jacobian(gens: Sequence[MultiPoly], ring: PolyRing, params: Sequence[str]) -> list:
    """Rows = generators, columns = d/du for the symbols of ``params``."""
    return [[g.diff(ring.index[t]) for t in params] for g in gens]


def omega_rank(Y: SchemeDesc, X_field: TowerField) -> int:
    """Generic rank of Omega_{Y/X} = #raised symbols - rank of the symbol Jacobian."""
    raised = Y.field.raised_params(X_field)
    if not raised:
        return 0
    J = symbol_jacobian(Y.gens, Y.ring, raised)
    rows = [r for r in J if any(not x.is_zero() for x in r)]
    if not rows:
        return len(raised)
    return len(raised) - generic_rank(rows, Y.ideal)


def degree_insep(Y: SchemeDesc, X: SchemeDesc) -> int:
    """[K(Y) : K(X)] = p^(generic rank of Omega_{Y/X})."""
    return X.field.p ** omega_rank(Y, X.field)


def r1_test(Z: SchemeDesc) -> list:
    """Codimension-one primes where Z fails R1 (Jacobian over the ground field)."""
    primes = jacobian_singular_primes(list(Z.gens), Z.ring)
    if not primes and Z.flags.get("complete_intersection") is not False:
        Z.flags["R1"] = True
        Z.flags["normal"] = True
    else:
        Z.flags["R1"] = not primes
    return primes


# ---------------------------------------------------------------------------
# p-th root closure


@dataclass
class ClosureResult:
    Y: SchemeDesc
    new_elements: list
    status: str
    rounds: int
    failing_primes: list

    def to_json(self) -> dict:
        return {"status": self.status, "new_elements": list(self.new_elements), "rounds": self.rounds,
                "failing_primes": [format_poly(f) for f in self.failing_primes]}


def _two_class_split(g: MultiPoly, field: TowerField):
    """If g = w1*G1^p + w2*G2^p with w1/w2 a symbol monomial, return (theta, G1, G2).

    theta is a TowerElement with theta^p = w1/w2; G1, G2 are written at
    the levels of ``field``.
    """
    ring = g.ring
    p = ring.p
    cls = residue_classes(g, p)
    if len(cls) != 2:
        return None
    pidx = set(ring.param_indices)
    (k1, A1), (k2, A2) = sorted(cls.items())
    if any(k1[i] != k2[i] for i in range(ring.nvars) if i not in pidx):
        return None
    if any(k1[i] for i in range(ring.nvars) if i not in pidx):
        return None
    # w1 = u^k1, w2 = u^k2
    ratio = field.one()
    for t in field.params:
        i = ring.index[t]
        d = k1[i] - k2[i]
        if d:
            ratio = ratio * field.symbol(t, 1) ** d
    theta = pth_root(ratio)
    return theta, _frob_root(A1, p), _frob_root(A2, p)


def pth_root_closure(Z: SchemeDesc, degree_bound: int | None = None, max_rounds: int = 8) -> ClosureResult:
    """Bounded normalisation by adjoining p-th roots of ratios of residue classes."""
    if degree_bound is None:
        degree_bound = 2 * max(g.total_degree() for g in Z.gens)
    Y = Z
    new = []
    rounds = 0
    primes = r1_test(Y)
    while primes and rounds < max_rounds:
        rounds += 1
        done = False
        for i, g in enumerate(Y.gens):
            split = _two_class_split(g, Y.field)
            if split is None:
                continue
            theta, G1, G2 = split
            newfield = Y.field.join(theta.field)
            if newfield == Y.field:
                continue
            G1l = lift_poly(G1, Y.field, newfield)
            G2l = lift_poly(G2, Y.field, newfield)
            from .ideals import split_field_coefficients
            c1 = split_field_coefficients(G1l, newfield)
            c2 = split_field_coefficients(G2l, newfield)
            th = theta.lift(newfield)
            comb = dict((k, v) for k, v in c2.items())
            for k, v in c1.items():
                comb[k] = comb.get(k, newfield.zero()) + th * v
            h = join_field_coefficients({k: v for k, v in comb.items() if v}, Y.ring)
            if h.total_degree() > degree_bound:
                continue
            gens = [lift_poly(x, Y.field, newfield) for x in Y.gens]
            gens[i] = h
            Yn = SchemeDesc(newfield, Y.ring, tuple(gens), "Y", {"complete_intersection": Y.flags.get("complete_intersection")})
            Yr, cert = reduce_structure(Yn)
            if not cert.certified:
                continue
            new.append({"generator": i, "adjoined": str(theta), "field": newfield.to_json()})
            Y = Yr
            done = True
            break
        if not done:
            break
        primes = r1_test(Y)
    status = "certified-normal" if not primes else "closure-at-bound"
    Y = Y.with_gens(Y.gens, name="Y", normal=not primes)
    return ClosureResult(Y, new, status, rounds, primes)

"""Conormal data, the decomposition into fixed and movable parts, the essential
part of a base change, the canonical bundle formula check and the fibration."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from itertools import combinations
from typing import Sequence

from .geometry import (BaseChangeSpec, CertificateError, ClosureResult, DivisorClass, SchemeDesc, base_change,
                       lift_scheme, omega_rank, pth_root_closure, r1_test, reduce_structure)
from .ideals import (Ideal, UnsupportedInput, chart_list, dehomogenize, determinant, eliminate,
                     generic_dimension, generic_order, generic_radical_member, join_field_coefficients,
                     lift_poly, poly_div, poly_gcd_many,
                     split_field_coefficients, strip_param_content)
from .modules import (ModuleMap, PresentedModule, RankError, dual_module, generic_rank, pairing_sound,
                      saturation_in, same_submodule, uniformizer_check, valuation)
from .poly import MultiPoly, PolyRing, format_poly
from .tower_field import (FieldDerivation, TowerElement, TowerField, constants_subfield, field_nullspace,
                          field_rref, pth_root)

log = logging.getLogger(__name__)


class ConsistencyError(RuntimeError):
    """Cross-chart or internal invariant violated."""


class EssentialPartError(RuntimeError):
    pass


def _chart_ideal(gens, ring: PolyRing, chart) -> Ideal:
    return Ideal(ring, [dehomogenize(g, chart) for g in gens] + [ring.gens()[i] - 1 for i in chart])


def _rank_rows(J, I: Ideal, rank: int):
    """Rows of J carrying a nonzero rank x rank minor modulo I."""
    if rank == 0:
        return []
    ncols = len(J[0])
    ring = I.ring
    for rows in combinations(range(len(J)), rank):
        for cols in combinations(range(ncols), rank):
            d = determinant([[J[i][j] for j in cols] for i in rows], ring)
            if not I.contains(d):
                return list(rows)
    raise RankError("no nonvanishing minor of the expected size")


def symbol_matrix(gens: Sequence[MultiPoly], symbols: Sequence[str]) -> list:
    ring = gens[0].ring
    return [[g.diff(ring.index[t]) for t in symbols] for g in gens]


def ordered_charts(ring: PolyRing, prefer: int | None = None) -> list:
    """Standard charts, with the preferred one (by index) moved to the front."""
    charts = chart_list(ring)
    if prefer is None:
        return charts
    if not 0 <= prefer < len(charts):
        raise ValueError(f"chart index {prefer} out of range 0..{len(charts) - 1}")
    return [charts[prefer]] + charts[:prefer] + charts[prefer + 1:]


# ---------------------------------------------------------------------------
# conormal presentation


@dataclass
class ConormalData:
    X: SchemeDesc
    Z: SchemeDesc
    bc: BaseChangeSpec
    symbols: list
    matrix: list
    rank_J: int
    r: int
    rows: list
    chart_pref: int | None = None

    @property
    def d(self) -> int:
        return len(self.symbols)

    def chart_module(self, chart) -> PresentedModule:
        """Omega_{Z/X} on a chart: generators du_i, one relation column per generator of Z."""
        ring = self.Z.ring
        I = _chart_ideal(self.Z.gens, ring, chart)
        rel = [[dehomogenize(self.matrix[j][i], chart) for j in range(len(self.matrix))]
               for i in range(self.d)]
        return PresentedModule(ring, I, ["d" + t for t in self.symbols], rel, tuple(chart))

    def primary_chart(self):
        for chart in ordered_charts(self.Z.ring, self.chart_pref):
            if generic_dimension(_chart_ideal(self.Z.gens, self.Z.ring, chart)) >= 0:
                return chart
        raise ConsistencyError("scheme has empty charts everywhere")

    def to_json(self) -> dict:
        lv = self.Z.levels_map()
        return {"symbols": list(self.symbols), "d": self.d, "r": self.r, "rank_J": self.rank_J,
                "relations": [[format_poly(x, lv) for x in row] for row in self.matrix]}


def omega_presentation(Z: SchemeDesc, X: SchemeDesc, bc: BaseChangeSpec) -> ConormalData:
    symbols = bc.target.raised_params(bc.source)
    if Z.field != bc.target:
        raise ValueError("Z must live over the target field")
    if not symbols:
        return ConormalData(X, Z, bc, [], [[] for _ in Z.gens], 0, 0, [])
    J = symbol_matrix(Z.gens, symbols)
    I = Z.ideal
    nz = [row for row in J if any(not x.is_zero() for x in row)]
    rank = generic_rank(nz, I) if nz else 0
    rows = _rank_rows(J, I, rank)
    return ConormalData(X, Z, bc, list(symbols), J, rank, len(symbols) - rank, rows)


# ---------------------------------------------------------------------------
# movable part


@dataclass
class MovablePart:
    sections: list
    raw: list
    content: MultiPoly
    cls: DivisorClass
    r: int

    def is_zero(self) -> bool:
        return self.cls.is_zero()


def _canonical_span(polys: Sequence[MultiPoly], field: TowerField) -> list:
    """Reduced echelon basis over the field, content-free and monic."""
    ring = polys[0].ring
    coeffs = [split_field_coefficients(f, field) for f in polys]
    order = ring.default_order
    mons = sorted({m for c in coeffs for m in c}, reverse=True)
    amb = [i for i in range(ring.nvars) if i not in ring.param_indices]

    def full(m):
        e = [0] * ring.nvars
        for i, k in zip(amb, m):
            e[i] = k
        return tuple(e)

    mons.sort(key=lambda m: order.key(full(m)), reverse=True)
    rows = [[c.get(m, field.zero()) for m in mons] for c in coeffs]
    R, piv = field_rref(rows, field)
    out = []
    for row in R[:len(piv)]:
        f = join_field_coefficients({m: a for m, a in zip(mons, row) if a}, ring)
        out.append(f.monic(order))
    return sorted(out, key=lambda f: order.key(f.lm(order)), reverse=True)


def movable_part(Z: SchemeDesc, symbols: Sequence[str], check_fixed: bool = True,
                 keep: Sequence[str] | None = None) -> MovablePart:
    """Primitive complementary minors of the symbol Jacobian of Z.

    With ``keep``, only the Pluecker coordinates indexed by subsets of
    ``keep`` are used (the image in the module on those symbols).
    """
    ring = Z.ring
    nb = len(ring.ambient_blocks)
    d = len(symbols)
    if d == 0:
        return MovablePart([ring.one()], [ring.one()], ring.one(), DivisorClass.zero(nb), 0)
    J = symbol_matrix(Z.gens, symbols)
    I = Z.ideal
    nz = [row for row in J if any(not x.is_zero() for x in row)]
    rank = generic_rank(nz, I) if nz else 0
    r = d - rank
    if rank == 0:
        return MovablePart([ring.one()], [ring.one()], ring.one(), DivisorClass.zero(nb), r)
    rows = _rank_rows(J, I, rank)
    raw = []
    allowed = set(range(d)) if keep is None else {k for k, t in enumerate(symbols) if t in keep}
    for S in combinations(range(d), r):
        if not set(S) <= allowed:
            continue
        C = [j for j in range(d) if j not in S]
        m = determinant([[J[i][j] for j in C] for i in rows], ring)
        if not m.is_zero() and I.contains(m):
            m = ring.zero()
        raw.append(m)
    nzm = [m for m in raw if not m.is_zero()]
    if not nzm:
        raise ConsistencyError("all Pluecker coordinates vanish")
    content = poly_gcd_many(nzm)
    secs = [strip_param_content(poly_div(m, content)) for m in nzm]
    degs = {s.multidegree() for s in secs}
    if len(degs) != 1 or None in degs:
        raise ConsistencyError("movable sections do not share a multidegree")
    cls = DivisorClass(degs.pop())
    if check_fixed and not cls.is_zero():
        _assert_no_fixed_divisor(Z, secs)
    return MovablePart(_canonical_span(secs, Z.field), raw, content, cls, r)


def _assert_no_fixed_divisor(Z: SchemeDesc, secs) -> None:
    ring = Z.ring
    for chart in chart_list(ring):
        Ic = _chart_ideal(Z.gens, ring, chart)
        dz = generic_dimension(Ic)
        if dz < 0:
            continue
        base = Ic + [dehomogenize(s, chart) for s in secs]
        if generic_dimension(base) >= dz - 1:
            raise UnsupportedInput("movable sections share a divisor modulo the ideal of Z")


# ---------------------------------------------------------------------------
# fixed part


def _prime_candidates(Y: SchemeDesc, pil: MultiPoly) -> list:
    """Homogeneous forms that may cut the support of (pil = 0) on Y reducedly:
    pil itself, then the ambient variables and the basis of (Y, pil)."""
    ring = Y.ring
    out = [pil]
    out += [ring.gens()[i] for i in ring.ambient_indices]
    I = Ideal(ring, list(Y.gens) + [pil])
    out += [strip_param_content(g) for g in I.gb(generic_order(ring)).polys]
    seen, uniq = set(), []
    for g in out:
        if g.is_constant() or g.multidegree() is None:
            continue
        g = g.monic()
        key = tuple(sorted(g.terms.items()))
        if key not in seen:
            seen.add(key)
            uniq.append(g)
    return uniq[:1] + sorted(uniq[1:], key=lambda g: (g.total_degree(), format_poly(g)))


def fixed_length(cd: ConormalData, Y: SchemeDesc, pi: MultiPoly) -> tuple:
    """(prime of Y, length(F'/F) there) for the divisor of Y lying over (pi = 0).

    F = Omega_{Y/X}^dual sits in the free module on the symbols of Y; its
    image in the module on the original symbols R saturates to F'.  The
    length is the drop in valuation of the Pluecker coordinates.  When pi
    does not stay a uniformiser on Y (the normalisation may ramify over it)
    a form with the same support that does is used instead.
    """
    ring = Y.ring
    R = list(cd.symbols)
    E = Y.field.raised_params(cd.Z.field)
    cols = [t for t in Y.field.params if t in R or t in E]
    keep = [k for k, t in enumerate(cols) if t in R and t not in E]
    pil = lift_poly(pi, cd.Z.field, Y.field)
    pidx = list(ring.param_indices)
    cands = None
    for chart in ordered_charts(ring, cd.chart_pref):
        Ic = _chart_ideal(Y.gens, ring, chart)
        dy = generic_dimension(Ic)
        if dy < 0:
            continue
        pic0 = dehomogenize(pil, chart)
        if pic0.is_constant() or generic_dimension(Ic + [pic0]) != dy - 1:
            continue
        amb = [i for i in ring.ambient_indices if i not in chart]
        if cands is None:
            cands = _prime_candidates(Y, pil)
        prime = None
        for k, g in enumerate(cands):
            pic = dehomogenize(g, chart)
            if pic.is_constant() or generic_dimension(Ic + [pic]) != dy - 1:
                continue
            if k and not (generic_radical_member(Ic + [pic], pic0)
                                          and generic_radical_member(Ic + [pic0], pic)):
                continue
            if uniformizer_check(Ic, pic, amb + pidx):
                prime = g
                break
        if prime is None:
            continue
        J = [[dehomogenize(g.diff(ring.index[t]), chart) for t in cols] for g in Y.gens]
        nz = [row for row in J if any(not x.is_zero() for x in row)]
        rank = generic_rank(nz, Ic) if nz else 0
        rY = len(cols) - rank
        if rY != cd.r:
            raise ConsistencyError(f"rank of Omega_Y/X ({rY}) differs from Omega_Z/X ({cd.r})")
        rows = _rank_rows(J, Ic, rank)
        vals = {}
        for S in combinations(range(len(cols)), rY):
            C = [j for j in range(len(cols)) if j not in S]
            m = determinant([[J[i][j] for j in C] for i in rows], ring) if rows else ring.one()
            if m.is_zero() or Ic.contains(m):
                continue
            vals[S] = valuation(m, pic, Ic)
        if not vals:
            raise ConsistencyError("all Pluecker coordinates vanish")
        sub = [v for S, v in vals.items() if all(k in keep for k in S)]
        if not sub:
            raise ConsistencyError("derivations of Y do not reach the original symbols")
        return prime, min(sub) - min(vals.values())
    raise UnsupportedInput(f"no chart on which {format_poly(pi)} is a uniformiser")


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class LinearSystemData:
    fixed: list  # (prime, multiplicity or None)
    movable: MovablePart
    fixed_certified: bool
    nblocks: int
    levels: dict = dc_field(default_factory=dict)
    z_level_consistent: bool | None = None

    @property
    def fixed_class(self) -> DivisorClass:
        cls = DivisorClass.zero(self.nblocks)
        for pi, mult in self.fixed:
            if mult:
                cls = cls + DivisorClass(pi.multidegree()).scale(mult)
        return cls

    @property
    def movable_class(self) -> DivisorClass:
        return self.movable.cls

    @property
    def total_class(self) -> DivisorClass:
        return self.fixed_class + self.movable_class

    def fixed_is_zero(self) -> bool:
        return all(m == 0 for _, m in self.fixed)

    def to_json(self) -> dict:
        mv = self.movable
        return {
            "fixed": [{"prime": format_poly(pi, self.levels), "multiplicity": m} for pi, m in self.fixed
                      if m != 0],
            "fixed_candidates": [format_poly(pi, self.levels) for pi, _ in self.fixed],
            "fixed_certified": self.fixed_certified,
            "fixed_class": self.fixed_class.to_list(),
            "movable": [] if mv.is_zero() else [format_poly(s, self.levels) for s in mv.sections],
            "movable_class": mv.cls.to_list(),
            "total_class": self.total_class.to_list(),
            "r": mv.r,
            "z_level_consistent": self.z_level_consistent,
        }


def decompose(cd: ConormalData, Y: SchemeDesc, closure_status: str = "certified-normal",
              primes: Sequence[MultiPoly] | None = None) -> LinearSystemData:
    Z = cd.Z
    nb = len(Z.ring.ambient_blocks)
    mv = movable_part(Z, cd.symbols)
    if mv.r != cd.r:
        raise ConsistencyError("rank mismatch between conormal data and movable part")
    if primes is None:
        primes = r1_test(Z)
    certified = closure_status == "certified-normal"
    consistent = None
    if certified and cd.symbols:
        # the movable part lives on Y: Pluecker coordinates of F in the module
        # on the original symbols that are still symbols of Y
        E = Y.field.raised_params(Z.field)
        cols = [t for t in Y.field.params if t in cd.symbols or t in E]
        keep = [t for t in cd.symbols if t not in E]
        mvY = movable_part(Y, cols, keep=keep)
        lifted = _canonical_span([lift_poly(f, Z.field, Y.field) for f in mv.sections], Y.field)
        consistent = mvY.cls == mv.cls and lifted == mvY.sections
        mv = mvY
    fixed = []
    for pi in primes:
        # certified entries carry the prime of Y, which may differ from that of Z
        fixed.append(fixed_length(cd, Y, pi) if certified else (pi, None))
    lv = Y.levels_map()
    return LinearSystemData(fixed, mv, certified, nb, lv, consistent)


# ---------------------------------------------------------------------------
# module-level checks


def _independent(vecs, I: Ideal) -> list:
    # saturation only sees the generic span, so a generically independent subset suffices
    keep = []
    for v in vecs:
        if generic_rank(keep + [v], I) > len(keep):
            keep.append(v)
    return keep


def module_checks(cd: ConormalData) -> dict:
    """Dual pairing soundness and saturation idempotence on the primary chart."""
    if cd.d == 0:
        return {"pairing_sound": True, "saturation_idempotent": True}
    chart = cd.primary_chart()
    M = cd.chart_module(chart)
    D = dual_module(M)
    sound = pairing_sound(M, D)
    I = M.ideal
    free = PresentedModule(M.ring, I, list(M.labels), [[] for _ in M.labels], M.chart)
    idem = True
    vecs = _independent(D.embedding or [], I)
    if vecs:
        src = PresentedModule(M.ring, I, [f"g{i}" for i in range(len(vecs))], [[] for _ in vecs], M.chart)
        mat = [[vecs[b][a] for b in range(len(vecs))] for a in range(cd.d)]
        sat = saturation_in(ModuleMap(src, free, mat))
        svecs = _independent(sat.embedding, I)
        src2 = PresentedModule(M.ring, I, [f"h{i}" for i in range(len(svecs))], [[] for _ in svecs], M.chart)
        mat2 = [[svecs[b][a] for b in range(len(svecs))] for a in range(cd.d)]
        sat2 = saturation_in(ModuleMap(src2, free, mat2))
        idem = same_submodule(sat.embedding, sat2.embedding, I)
    return {"pairing_sound": sound, "saturation_idempotent": idem}


# ---------------------------------------------------------------------------
# canonical bundle formula


def canonical_class(S: SchemeDesc) -> DivisorClass:
    """Adjunction: K = sum of generator degrees minus (n_b + 1) per block."""
    out = [-(len(vs)) for _, vs in S.blocks]
    for g in S.gens:
        out = [a + b for a, b in zip(out, g.multidegree())]
    return DivisorClass(tuple(out))


@dataclass
class CbfReport:
    K_Y: DivisorClass
    phi_K_X: DivisorClass
    rhs: DivisorClass
    passed: bool
    applicable: bool = True

    def to_json(self) -> dict:
        return {"K_Y": self.K_Y.to_list(), "phi_K_X": self.phi_K_X.to_list(),
                "p_minus_1_times_c": self.rhs.to_list(),
                "difference": (self.phi_K_X - self.K_Y).to_list(), "pass": self.passed,
                "applicable": self.applicable}


def x_is_normal(X: SchemeDesc) -> bool | None:
    """Serre's criterion for the complete intersection X over K; None if undecided."""
    try:
        return not r1_test(X)
    except UnsupportedInput:
        return None


def verify_cbf(decomp: LinearSystemData, X: SchemeDesc, Y: SchemeDesc, x_normal: bool | None = True) -> CbfReport:
    """Class identity phi^*K_X - K_Y = (p-1)(F + M); only meaningful for normal X."""
    if X.flags.get("complete_intersection") is False:
        raise UnsupportedInput("canonical classes need a complete intersection")
    p = X.field.p
    KX = canonical_class(X)
    KY = canonical_class(Y)
    rhs = decomp.total_class.scale(p - 1)
    return CbfReport(KY, KX, rhs, (KX - KY) == rhs, bool(x_normal))


# ---------------------------------------------------------------------------
# essential part


def foliation_kernel(Z: SchemeDesc, base: TowerField) -> tuple:
    """L-solutions c of sum_i c_i dg_j/du_i in I(Z) for all j, degree by degree.

    Returns (symbols, basis) where basis is a list of coefficient vectors.
    """
    L = Z.field
    symbols = L.raised_params(base)
    d = len(symbols)
    if d == 0:
        return symbols, []
    ring = Z.ring
    J = symbol_matrix(Z.gens, symbols)
    md = [g.multidegree() for g in Z.gens]
    blocks = [len(idx) for _, idx in ring.ambient_blocks]
    amb = [i for i in range(ring.nvars) if i not in ring.param_indices]
    nunk = d
    layout = []  # (j, k, monomial exponent in ambient coords, column)
    for j in range(len(Z.gens)):
        for k in range(len(Z.gens)):
            diff = [a - b for a, b in zip(md[j], md[k])]
            if any(x < 0 for x in diff):
                continue
            for mono in _monomials(blocks, diff):
                layout.append((j, k, mono, nunk))
                nunk += 1
    gcoef = [split_field_coefficients(g, L) for g in Z.gens]
    Jcoef = [[split_field_coefficients(x, L) if not x.is_zero() else {} for x in row] for row in J]
    rows = []
    for j in range(len(Z.gens)):
        eqs: dict = {}
        for i in range(d):
            for m, a in Jcoef[j][i].items():
                eqs.setdefault(m, {})[i] = eqs.get(m, {}).get(i, L.zero()) + a
        for (jj, k, mono, col) in layout:
            if jj != j:
                continue
            for m, a in gcoef[k].items():
                key = tuple(x + y for x, y in zip(m, mono))
                eqs.setdefault(key, {})[col] = eqs.get(key, {}).get(col, L.zero()) - a
        for m in sorted(eqs):
            row = [L.zero()] * nunk
            for col, a in eqs[m].items():
                row[col] = a
            if any(row):
                rows.append(row)
    if not rows:
        kernel = [[L.one() if i == j else L.zero() for i in range(d)] for j in range(d)]
    else:
        kern = field_nullspace(rows, L, ncols=nunk)
        proj = [v[:d] for v in kern if any(v[:d])]
        if not proj:
            return symbols, []
        R, piv = field_rref(proj, L)
        kernel = [list(r) for r in R[:len(piv)]]
    return symbols, kernel


def _monomials(blocks, degs):
    """Exponent tuples (over all ambient variables) of the given multidegree."""
    from itertools import combinations_with_replacement
    parts = []
    for n, dg in zip(blocks, degs):
        opts = []
        for combo in combinations_with_replacement(range(n), dg):
            e = [0] * n
            for i in combo:
                e[i] += 1
            opts.append(tuple(e))
        parts.append(opts)
    out = [()]
    for opts in parts:
        out = [a + b for a in out for b in opts]
    return sorted(out)


@dataclass
class EssentialPartResult:
    L_prime: TowerField
    derivations: list
    rank_G: int
    degree_T_Tprime: int
    flag_reduced: bool
    flag_no_sections: bool
    Z_prime: SchemeDesc
    degree_Y_Yprime: int

    @property
    def ok(self) -> bool:
        return self.flag_reduced and self.flag_no_sections

    def to_json(self) -> dict:
        return {"L_prime": self.L_prime.to_json(), "L_prime_desc": self.L_prime.describe(),
                "derivations": [repr(d) for d in self.derivations], "rank_G": self.rank_G,
                "degree_T_Tprime": self.degree_T_Tprime, "degree_Y_Yprime": self.degree_Y_Yprime,
                "flag_reduced_over_L": self.flag_reduced, "flag_no_sections": self.flag_no_sections,
                "Z_prime": self.Z_prime.format_gens()}


def essential_part(Z: SchemeDesc, X: SchemeDesc, bc: BaseChangeSpec, strict: bool = True) -> EssentialPartResult:
    K, L = bc.source, bc.target
    symbols, kernel = foliation_kernel(Z, K)
    ders = [FieldDerivation(L, K, {t: c for t, c in zip(symbols, v) if c}) for v in kernel]
    if ders:
        sub = constants_subfield(L, K, ders)
        if sub.field is None:
            raise UnsupportedInput("essential part is not a monomial subtower: " + sub.describe())
        Lp = sub.field
        rank = sub.rank
    else:
        Lp, rank = L, 0
    p = K.p
    if L.degree_over(Lp) != p ** rank:
        raise EssentialPartError("degree bookkeeping [L:L'] != p^rank")
    Zp, cert = reduce_structure(base_change(X, BaseChangeSpec(K, Lp)))
    Zl = lift_scheme(Zp, L)
    Z2, cert2 = reduce_structure(Zl)
    flag1 = cert.certified and cert2.certified and not cert2.changed
    _, kern_p = foliation_kernel(Zp, K)
    flag3 = not kern_p
    degYY = p ** omega_rank(Zl, Lp)
    res = EssentialPartResult(Lp, ders, rank, p ** rank, flag1, flag3, Zp, degYY)
    if strict and not res.ok:
        which = [n for n, f in (("reduced-over-L", flag1), ("no-sections", flag3)) if not f]
        raise EssentialPartError("essential part verification failed: " + ", ".join(which))
    return res


# ---------------------------------------------------------------------------
# fibration


@dataclass
class FibrationReport:
    trivial: bool
    status: str
    sections: list
    image_ideal: list
    image_dim: int | None
    source_dim: int
    V_ideal: list
    V_blocks: list
    KV: TowerField | None = None
    KW: TowerField | None = None
    fibre: list = dc_field(default_factory=list)
    movable_over_V_zero: bool | None = None
    reduced_over_W: bool | None = None
    nonreduced_over_KV_root: bool | None = None

    def to_json(self) -> dict:
        return {"trivial": self.trivial, "status": self.status, "sections": list(self.sections),
                "image_ideal": list(self.image_ideal), "image_dim": self.image_dim,
                "source_dim": self.source_dim, "V_ideal": list(self.V_ideal), "V_blocks": list(self.V_blocks),
                "K_V": self.KV.to_json() if self.KV else None, "K_W": self.KW.to_json() if self.KW else None,
                "generic_fibre": list(self.fibre), "movable_over_V_zero": self.movable_over_V_zero,
                "reduced_over_W": self.reduced_over_W,
                "nonreduced_over_KV_root": self.nonreduced_over_KV_root}


def image_ideal(Z: SchemeDesc, sections: Sequence[MultiPoly]):
    """Kernel of L[w] -> L[x]/I(Z), w_k -> s_k, by elimination; returns (ring_w, gens)."""
    ring = Z.ring
    k = len(sections)
    wn = []
    for i in range(k):
        n = f"w{i}"
        while n in ring.index:
            n = "_" + n
        wn.append(n)
    big = PolyRing(ring.p, [(b, ring.block_vars(b)) for b in ring.block_names] + [("_img", wn)], ring.params)
    emb = lambda f: MultiPoly(big, {tuple(e[:len(ring.ambient_indices)]) + (0,) * k
                                    + tuple(e[len(ring.ambient_indices):]): c for e, c in f.terms.items()})
    gens = [emb(g) for g in Z.gens] + [big.var(wn[i]) - emb(s) for i, s in enumerate(sections)]
    E = eliminate(Ideal(big, gens), list(ring.ambient_indices))
    wring = PolyRing(ring.p, [("_img", wn)], ring.params)
    off = len(ring.ambient_indices)
    out = []
    for g in E.gens:
        out.append(MultiPoly(wring, {e[off:]: c for e, c in g.terms.items()}))
    return wring, out


def fibration(decomp: LinearSystemData, X: SchemeDesc, Z: SchemeDesc) -> FibrationReport:
    mv = decomp.movable
    dimX = X.expected_dim
    lv = Z.levels_map()
    if mv.is_zero():
        return FibrationReport(True, "no fibration; movable part is zero", [], [], None, dimX, [], [])
    secs = mv.sections
    wring, img = image_ideal(Z, secs)
    dimW = generic_dimension(Ideal(wring, img)) - 1 if img else len(secs) - 1
    img_s = [format_poly(g, lv) for g in img]
    sec_s = [format_poly(s, lv) for s in secs]
    if dimW == dimX:
        return FibrationReport(True, "trivial", sec_s, img_s, dimW, dimX,
                               X.format_gens(), [b for b, _ in X.blocks])
    ring = X.ring
    used = [b for k, (b, idx) in enumerate(ring.ambient_blocks)
            if any(s.multidegree()[k] > 0 for s in secs)]
    rep = FibrationReport(False, "function-field level", sec_s, img_s, dimW, dimX, [], used)
    if len(used) == len(ring.ambient_blocks):
        return rep
    other = [i for b, idx in ring.ambient_blocks if b not in used for i in idx]
    V = eliminate(X.ideal, other)
    vgens = [strip_param_content(g) for g in V.reduced_gens()]
    vring = PolyRing(ring.p, [(b, ring.block_vars(b)) for b in used], ring.params)
    vgens = [ring.restrict(g, vring) for g in vgens]
    rep.V_ideal = [format_poly(g.monic(), X.levels_map()) for g in vgens]
    Vdim = generic_dimension(Ideal(vring, vgens)) - len(used)
    if Vdim != dimW:
        rep.status = "function-field level (projection dimension differs from image)"
        return rep
    rep.status = "projection"
    fib = _generic_fibre(X, Z.field, vgens, used, vring)
    if fib is None:
        return rep
    Xi, KV, KW = fib
    rep.KV, rep.KW = KV, KW
    rep.fibre = Xi.format_gens()
    bcW = BaseChangeSpec(KV, KW)
    ZW, certW = reduce_structure(base_change(Xi, bcW))
    mvW = movable_part(ZW, bcW.raised, check_fixed=False) if certW.certified else None
    rep.movable_over_V_zero = bool(mvW is not None and mvW.is_zero())
    rep.reduced_over_W = certW.certified and not certW.changed
    Zr, certF = reduce_structure(base_change(Xi, BaseChangeSpec.frobenius(KV)))
    rep.nonreduced_over_KV_root = certF.changed
    return rep


def _generic_fibre(X: SchemeDesc, L: TowerField, vgens, used, vring):
    """Generic fibre of X over V when V's equation can be solved for a parameter.

    V must be a hypersurface whose equation is linear in some parameter t
    with a monomial coefficient; then K(V) = F_p(other params, affine
    coordinates of V's blocks) and t is a rational function of those.
    """
    if len(vgens) != 1:
        return None
    f = vgens[0]
    ring = X.ring
    K = X.field
    solve = None
    for t in K.params:
        ti = vring.index[t]
        if f.degree_in([ti]) != 1:
            continue
        lin = {e: c for e, c in f.terms.items() if e[ti] == 1}
        if len(lin) == 1 and all(e[j] == 0 for e in lin for j in vring.param_indices if j != ti):
            solve = (t, next(iter(lin.items())))
            break
    if solve is None:
        return None
    t, (mexp, mcoef) = solve
    chart = []
    for b in used:
        cand = [v for v in vring.block_vars(b) if mexp[vring.index[v]] == 0]
        if not cand:
            return None
        chart.append(cand[-1])
    coords = [v for b in used for v in vring.block_vars(b) if v not in chart]
    new_params = [q for q in K.params if q != t] + coords
    rest = [b for b in ring.block_names if b not in used]
    fring = PolyRing(ring.p, [(b, ring.block_vars(b)) for b in rest], new_params)
    KV = TowerField.base(ring.p, new_params)

    def elem(exps: dict, coeff: int) -> TowerElement:
        """Monomial in the old param/coordinate names as an element of K(V)."""
        num = [0] * len(new_params)
        for name, k in exps.items():
            if name in chart or k == 0:
                continue
            num[new_params.index(name)] += k
        return KV.from_dict({tuple(num): coeff})

    # t = -(f - m t) / m
    tnum = KV.zero()
    for e, c in f.terms.items():
        if e[vring.index[t]] == 1:
            continue
        tnum = tnum + elem({vring.names[i]: e[i] for i in range(vring.nvars)}, c)
    tden = elem({vring.names[i]: mexp[i] for i in range(vring.nvars) if vring.names[i] != t}, mcoef)
    t_expr = -(tnum / tden)
    gens = []
    for g in X.gens:
        coeffs: dict = {}
        for e, c in g.terms.items():
            names = {ring.names[i]: e[i] for i in range(ring.nvars)}
            key = tuple(e[ring.index[v]] for b in rest for v in ring.block_vars(b))
            a = elem({n: k for n, k in names.items() if n != t and n not in
                      {v for b in rest for v in ring.block_vars(b)}}, c)
            a = a * t_expr ** names.get(t, 0)
            coeffs[key] = coeffs.get(key, KV.zero()) + a
        coeffs = {k: v for k, v in coeffs.items() if v}
        if not coeffs:
            continue
        h = join_field_coefficients(coeffs, fring)
        if h.is_constant():
            return None
        gens.append(h)
    if not gens:
        return None
    Xi = SchemeDesc(KV, fring, tuple(gens), "X_xi", {"complete_intersection": None})
    # K(W) = K(V) L
    KW = KV
    for q in L.raised_params(K):
        if q == t:
            KW = KW.join(pth_root(t_expr).field)
        else:
            KW = KW.join(KV.raised([q]))
    return Xi, KV, KW


# ---------------------------------------------------------------------------
# tower inequality


@dataclass
class TowerInequality:
    A: DivisorClass
    B: DivisorClass
    C: DivisorClass
    passed: bool

    @property
    def difference(self) -> DivisorClass:
        return self.A - self.B - self.C

    def to_json(self) -> dict:
        return {"M_T_S": self.A.to_list(), "M_Tprime_S": self.B.to_list(), "M_T_Tprime": self.C.to_list(),
                "difference": self.difference.to_list(), "pass": self.passed}


def tower_inequality_check(X: SchemeDesc, bc_T: BaseChangeSpec, bc_Tp: BaseChangeSpec) -> TowerInequality:
    """det F'_{T/T'} + det F'_{T'/S} - det F'_{T/S} effective, in movable classes.

    det F' is minus the movable class; the coordinate-compatible map
    Y_T -> Y_T' pulls O(a) back to O(a).
    """
    if not bc_Tp.target.is_subfield_of(bc_T.target) or bc_Tp.source != bc_T.source:
        raise ValueError("T' must sit between S and T")
    ZT, _ = reduce_structure(base_change(X, bc_T))
    ZTp, _ = reduce_structure(base_change(X, bc_Tp))
    RT = bc_T.raised
    RTp = bc_Tp.target.raised_params(bc_Tp.source)
    A = movable_part(ZT, RT, check_fixed=False).cls
    B = movable_part(ZTp, RTp, check_fixed=False).cls
    C = movable_part(ZT, [t for t in RT if t not in RTp], check_fixed=False).cls
    diff = A - B - C
    return TowerInequality(A, B, C, diff.is_effective())


# ---------------------------------------------------------------------------
# full analysis


@dataclass
class Analysis:
    X: SchemeDesc
    bc: BaseChangeSpec
    Z: SchemeDesc | None = None
    reduction: object = None
    closure: ClosureResult | None = None
    conormal: ConormalData | None = None
    decomposition: LinearSystemData | None = None
    cbf: CbfReport | None = None
    essential: EssentialPartResult | None = None
    fibration: FibrationReport | None = None
    errors: dict = dc_field(default_factory=dict)
    uncertified: list = dc_field(default_factory=list)
    x_normal: bool | None = None
    h0_equals_K: bool | None = None
    timing: dict = dc_field(default_factory=dict)


STAGES = {
    "reduce": ("reduce",),
    "movable": ("reduce", "conormal", "movable"),
    "fixed": ("reduce", "closure", "conormal", "decompose"),
    "essential": ("reduce", "essential"),
    "cbf": ("reduce", "closure", "conormal", "decompose", "cbf"),
    "fibration": ("reduce", "conormal", "movable", "fibration"),
    "analyze": ("reduce", "closure", "conormal", "decompose", "cbf", "essential", "fibration"),
}


def analyze(X: SchemeDesc, bc: BaseChangeSpec, degree_bound: int | None = None,
            command: str = "analyze", threads: int = 1, chart: int | None = None) -> Analysis:
    """Run the stages a command needs.  Results do not depend on ``threads``."""
    stages = STAGES[command]
    A = Analysis(X, bc)
    clock = time.perf_counter
    A.h0_equals_K = X.h0_is_constants()
    if not A.h0_equals_K:
        A.uncertified.append("h0")

    t0 = clock()
    A.Z, A.reduction = reduce_structure(base_change(X, bc))
    A.timing["reduce"] = clock() - t0
    if not A.reduction.certified:
        A.uncertified.append("reduce")
        return A
    Z = A.Z
    primes = None
    if "closure" in stages:
        t0 = clock()
        try:
            primes = r1_test(Z)
            A.closure = pth_root_closure(Z, degree_bound)
            if A.closure.status != "certified-normal":
                A.uncertified.append("closure")
        except UnsupportedInput as exc:
            A.errors["closure"] = str(exc)
            A.uncertified.append("closure")
        A.timing["closure"] = clock() - t0
    recoverable = (UnsupportedInput, ConsistencyError, CertificateError)
    if "conormal" in stages:
        t0 = clock()
        try:
            A.conormal = omega_presentation(Z, X, bc)
            A.conormal.chart_pref = chart
        except recoverable as exc:
            A.errors["conormal"] = str(exc)
            A.uncertified.append("conormal")
        A.timing["conormal"] = clock() - t0
    t0 = clock()
    try:
        if A.conormal is None:
            pass
        elif "decompose" in stages:
            if A.closure is not None:
                A.decomposition = decompose(A.conormal, A.closure.Y, A.closure.status, primes)
            else:
                A.decomposition = decompose(A.conormal, Z, "uncertified", primes or [])
        elif "movable" in stages:
            mv = movable_part(Z, A.conormal.symbols)
            A.decomposition = LinearSystemData([], mv, False, len(Z.ring.ambient_blocks), Z.levels_map())
    except recoverable as exc:
        A.errors["decompose"] = str(exc)
        A.uncertified.append("decompose")
    if A.decomposition is not None:
        # the decomposition theory assumes X normal
        A.x_normal = x_is_normal(X)
        if A.x_normal is not True:
            A.uncertified.append("x_normal")
    A.timing["decompose"] = clock() - t0
    if "cbf" in stages and A.decomposition is not None and A.decomposition.fixed_certified:
        t0 = clock()
        A.cbf = verify_cbf(A.decomposition, X, A.closure.Y, A.x_normal)
        if not (A.cbf.passed and A.cbf.applicable):
            A.uncertified.append("cbf")
        A.timing["cbf"] = clock() - t0

    def run_essential():
        t = clock()
        try:
            res = essential_part(Z, X, bc, strict=False)
            return res, None, clock() - t
        except recoverable as exc:
            return None, str(exc), clock() - t

    def run_fibration():
        t = clock()
        try:
            return fibration(A.decomposition, X, Z), None, clock() - t
        except recoverable as exc:
            return None, str(exc), clock() - t

    jobs = {}
    want_ess = "essential" in stages
    want_fib = "fibration" in stages and A.decomposition is not None
    if threads > 1 and want_ess and want_fib:
        with ThreadPoolExecutor(max_workers=2) as pool:
            jobs["essential"] = pool.submit(run_essential)
            jobs["fibration"] = pool.submit(run_fibration)
            ess = jobs["essential"].result()
            fib = jobs["fibration"].result()
    else:
        ess = run_essential() if want_ess else None
        fib = run_fibration() if want_fib else None
    # merge in a fixed order
    if ess is not None:
        A.essential, err, A.timing["essential"] = ess
        if err is not None:
            A.errors["essential"] = err
            A.uncertified.append("essential")
        elif not A.essential.ok:
            A.uncertified.append("essential")
    if fib is not None:
        A.fibration, err, A.timing["fibration"] = fib
        if err is not None:
            A.errors["fibration"] = err
            A.uncertified.append("fibration")
        elif A.fibration.status.startswith("function-field"):
            A.uncertified.append("fibration")
    return A

"""Buchberger's algorithm with the sugar strategy and Gebauer-Moeller pair pruning.

Normal forms are computed by :func:`insep.kernels.normal_form_arrays`, so
the inner reduction loop runs in numba (or its numpy twin).
"""

from __future__ import annotations

import heapq
import logging
import os

import numpy as np

from . import kernels
from .poly import MultiPoly, PolyRing, TermOrder, from_arrays, to_arrays

log = logging.getLogger(__name__)

DEFAULT_STEP_LIMIT = int(os.environ.get("INSEP_GB_STEP_LIMIT", "200000"))


class GroebnerLimitError(RuntimeError):
    """Raised when the pair budget of a Groebner computation is exhausted."""


def _divides(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def _disjoint(a, b) -> bool:
    return all(x == 0 or y == 0 for x, y in zip(a, b))


def _combine(e, k, c, p):
    """Sort rows by decreasing key and add up equal monomials mod p."""
    if e.shape[0] == 0:
        return e, k, c
    order = np.lexsort(k.T[::-1])[::-1]
    e, k, c = e[order], k[order], c[order]
    same = np.zeros(e.shape[0], dtype=bool)
    same[1:] = np.all(k[1:] == k[:-1], axis=1)
    group = np.cumsum(~same) - 1
    sums = np.zeros(int(group[-1]) + 1, dtype=np.int64)
    np.add.at(sums, group, c)
    first = ~same
    e, k = e[first], k[first]
    c = sums % p
    keep = c != 0
    return e[keep], k[keep], c[keep]


class _Elem:
    __slots__ = ("e", "k", "c", "lm", "sugar")

    def __init__(self, e, k, c, sugar):
        self.e, self.k, self.c = e, k, c
        self.lm = tuple(int(x) for x in e[0])
        self.sugar = sugar


class GBasis:
    """A reduced Groebner basis together with a fast normal-form routine."""

    def __init__(self, ring: PolyRing, order: TermOrder, polys: list[MultiPoly]):
        self.ring = ring
        self.order = order
        self.W = order.matrix
        self.polys = polys
        self._pack()

    def _pack(self):
        arrs = [to_arrays(g, self.order, self.W) for g in self.polys]
        self.lms = [tuple(int(x) for x in a[0][0]) for a in arrs]
        self._set_arrays(arrs)

    def _set_arrays(self, arrs):
        nv = self.ring.nvars
        nw = self.W.shape[0]
        if arrs:
            self.ge = np.ascontiguousarray(np.concatenate([a[0] for a in arrs]))
            self.gk = np.ascontiguousarray(np.concatenate([a[1] for a in arrs]))
            self.gc = np.ascontiguousarray(np.concatenate([a[2] for a in arrs]))
            self.offs = np.cumsum([0] + [a[0].shape[0] for a in arrs]).astype(np.int64)
        else:
            self.ge = np.zeros((0, nv), dtype=np.int64)
            self.gk = np.zeros((0, nw), dtype=np.int64)
            self.gc = np.zeros(0, dtype=np.int64)
            self.offs = np.zeros(1, dtype=np.int64)

    def is_unit(self) -> bool:
        return any(not any(lm) for lm in self.lms)

    def reduce(self, f: MultiPoly) -> MultiPoly:
        if f.ring != self.ring:
            raise ValueError("ring mismatch in normal form")
        if not f.terms:
            return f
        if not self.polys:
            return f
        fe, fk, fc = to_arrays(f, self.order, self.W)
        re, _, rc = kernels.normal_form_arrays(fe, fk, fc, self.ge, self.gk, self.gc, self.offs, self.ring.p)
        return from_arrays(self.ring, re, rc)

    def contains(self, f: MultiPoly) -> bool:
        return self.reduce(f).is_zero()

    def leading_monomials(self) -> list[tuple]:
        return list(self.lms)


def groebner(polys, order: TermOrder | None = None, step_limit: int | None = None) -> GBasis:
    """Reduced Groebner basis of the ideal generated by ``polys``.

    The result is monic, sorted increasingly by leading monomial and
    depends only on the ideal and the order.
    """
    polys = [f for f in polys if not f.is_zero()]
    if not polys:
        raise ValueError("groebner() needs at least one nonzero polynomial")
    ring = polys[0].ring
    order = order or ring.default_order
    W = order.matrix
    p = ring.p
    limit = DEFAULT_STEP_LIMIT if step_limit is None else step_limit

    elems: list[_Elem] = []
    active: list[int] = []
    pairs: list = []  # heap of (sugar, lcm key, i, j, lcm)
    pair_set: set = set()
    cache = {"stale": True, "basis": None}

    def reducer() -> GBasis:
        if cache["stale"]:
            b = GBasis.__new__(GBasis)
            b.ring, b.order, b.W, b.polys = ring, order, W, []
            arrs = [(elems[i].e, elems[i].k, elems[i].c) for i in active]
            b.lms = [elems[i].lm for i in active]
            b._set_arrays(arrs)
            cache["basis"] = b
            cache["stale"] = False
        return cache["basis"]

    def nf(e, k, c):
        b = reducer()
        if not active:
            return e, k, c
        return kernels.normal_form_arrays(e, k, c, b.ge, b.gk, b.gc, b.offs, p)

    def make_monic(e, k, c):
        inv = pow(int(c[0]), p - 2, p)
        return e, k, (c * inv) % p

    def update(h_idx: int):
        h = elems[h_idx]
        hl = h.lm
        cand = []
        for g in active:
            cand.append((g, _lcm(hl, elems[g].lm)))
        # chain criterion among the new pairs
        keep = []
        for a, (g, l) in enumerate(cand):
            if _disjoint(hl, elems[g].lm):
                keep.append((g, l))
                continue
            dominated = False
            for b, (g2, l2) in enumerate(cand):
                if b == a:
                    continue
                if _divides(l2, l) and (l2 != l or b < a):
                    dominated = True
                    break
            if not dominated:
                keep.append((g, l))
        new_pairs = [(g, l) for g, l in keep if not _disjoint(hl, elems[g].lm)]
        # prune old pairs
        nonlocal pairs
        if pairs:
            kept = []
            for item in pairs:
                _, _, i, j, l = item
                if (_divides(hl, l) and _lcm(elems[i].lm, hl) != l and _lcm(elems[j].lm, hl) != l):
                    pair_set.discard((i, j))
                    continue
                kept.append(item)
            if len(kept) != len(pairs):
                pairs = kept
                heapq.heapify(pairs)
        for g, l in new_pairs:
            gi = elems[g]
            ltot = sum(l)
            sugar = max(gi.sugar + ltot - sum(gi.lm), h.sugar + ltot - sum(hl))
            i, j = (g, h_idx)
            key = tuple(-int(x) for x in (np.array(l, dtype=np.int64) @ W.T))
            heapq.heappush(pairs, (sugar, key, i, j, l))
            pair_set.add((i, j))
        # drop basis elements whose leading monomial h divides
        active[:] = [g for g in active if not _divides(hl, elems[g].lm)]
        active.append(h_idx)
        cache["stale"] = True

    # seed with the inputs, smallest first
    seeds = sorted(polys, key=lambda f: (order.key(f.lm(order)), f.total_degree()))
    for f in seeds:
        e, k, c = to_arrays(f, order, W)
        e, k, c = nf(e, k, c)
        if e.shape[0] == 0:
            continue
        e, k, c = make_monic(e, k, c)
        elems.append(_Elem(e, k, c, f.total_degree()))
        update(len(elems) - 1)

    steps = 0
    while pairs:
        sugar, _, i, j, l = heapq.heappop(pairs)
        if (i, j) not in pair_set:
            continue
        pair_set.discard((i, j))
        steps += 1
        if steps > limit:
            raise GroebnerLimitError(f"Groebner pair budget {limit} exhausted")
        gi, gj = elems[i], elems[j]
        mi = np.array(l, dtype=np.int64) - gi.e[0]
        mj = np.array(l, dtype=np.int64) - gj.e[0]
        e = np.concatenate([gi.e[1:] + mi, gj.e[1:] + mj])
        k = np.concatenate([gi.k[1:] + mi @ W.T, gj.k[1:] + mj @ W.T])
        c = np.concatenate([gi.c[1:], (-gj.c[1:]) % p])
        e, k, c = _combine(e, k, c, p)
        if e.shape[0] == 0:
            continue
        e, k, c = nf(np.ascontiguousarray(e), np.ascontiguousarray(k), np.ascontiguousarray(c))
        if e.shape[0] == 0:
            continue
        e, k, c = make_monic(e, k, c)
        elems.append(_Elem(e, k, c, sugar))
        update(len(elems) - 1)
        if not any(elems[elems.__len__() - 1].lm):
            # unit ideal
            active[:] = [len(elems) - 1]
            pairs.clear()
            pair_set.clear()
            cache["stale"] = True
            break

    # minimal basis then interreduction
    lms = {g: elems[g].lm for g in active}
    minimal = []
    for g in active:
        if any(h != g and _divides(lms[h], lms[g]) and (lms[h] != lms[g] or h < g) for h in active):
            continue
        minimal.append(g)
    minimal.sort(key=lambda g: order.key(lms[g]))
    out: list[MultiPoly] = []
    for a, g in enumerate(minimal):
        others = [h for h in minimal if h != g]
        b = GBasis.__new__(GBasis)
        b.ring, b.order, b.W, b.polys = ring, order, W, []
        b._set_arrays([(elems[h].e, elems[h].k, elems[h].c) for h in others])
        el = elems[g]
        # keep the leading term, reduce the tail
        if others:
            te, tk, tc = kernels.normal_form_arrays(el.e[1:].copy(), el.k[1:].copy(), el.c[1:].copy(),
                                                    b.ge, b.gk, b.gc, b.offs, p)
            e = np.concatenate([el.e[:1], te])
            c = np.concatenate([el.c[:1], tc])
        else:
            e, c = el.e, el.c
        out.append(from_arrays(ring, e, c))
    log.debug("groebner: %d pairs, %d elements", steps, len(out))
    return GBasis(ring, order, out)

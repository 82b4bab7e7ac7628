"""Sparse multivariate polynomials over F_p with block term orders.

A :class:`PolyRing` fixes the variable universe.  Ambient variables come
first, grouped into named blocks (one per projective factor); the tower
symbols of the base parameters follow in a final block called
``"params"``.  A symbol for parameter ``t`` at level ``e`` stands for
``t^(1/p^e)``; the level lives on the :class:`~insep.tower_field.TowerField`,
not on the ring, so one ring serves every level of a tower.

Coefficients are ints in ``[0, p)``.  Field coefficients with
denominators are handled one layer up by clearing denominators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

PARAM_BLOCK = "params"


@dataclass(frozen=True)
class TermOrder:
    """Block order, grevlex inside each block, earlier blocks dominate."""

    nvars: int
    blocks: tuple  # tuple of tuples of variable indices

    def __post_init__(self):
        seen = sorted(i for b in self.blocks for i in b)
        if seen != list(range(self.nvars)):
            raise ValueError("term order blocks must partition the variables")

    @property
    def matrix(self) -> np.ndarray:
        rows = []
        for b in self.blocks:
            if not b:
                continue
            r = np.zeros(self.nvars, dtype=np.int64)
            r[list(b)] = 1
            rows.append(r)
            for v in reversed(b[1:]):
                r = np.zeros(self.nvars, dtype=np.int64)
                r[v] = -1
                rows.append(r)
        return np.array(rows, dtype=np.int64).reshape(len(rows), self.nvars)

    def key(self, exp) -> tuple:
        out = []
        for b in self.blocks:
            if not b:
                continue
            out.append(sum(exp[i] for i in b))
            for v in reversed(b[1:]):
                out.append(-exp[v])
        return tuple(out)


class PolyRing:
    """Polynomial ring F_p[ambient vars, tower symbols]."""

    def __init__(self, p: int, blocks: Sequence[tuple[str, Sequence[str]]], params: Sequence[str] = ()):
        self.p = int(p)
        self.block_names = [b for b, _ in blocks]
        names: list[str] = []
        self.block_index: dict[str, tuple[int, ...]] = {}
        for bname, vs in blocks:
            if bname == PARAM_BLOCK:
                raise ValueError("block name 'params' is reserved")
            idx = tuple(range(len(names), len(names) + len(vs)))
            self.block_index[bname] = idx
            names.extend(vs)
        self.params = tuple(params)
        pidx = tuple(range(len(names), len(names) + len(self.params)))
        self.block_index[PARAM_BLOCK] = pidx
        names.extend(self.params)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        self.names = tuple(names)
        self.nvars = len(names)
        self.index = {n: i for i, n in enumerate(names)}
        self.ambient_blocks = [(b, self.block_index[b]) for b in self.block_names]
        self.default_order = TermOrder(self.nvars, tuple(self.block_index[b] for b in self.block_names)
                                       + (pidx,))
        self._spec = (self.p, tuple((b, tuple(self.names[i] for i in self.block_index[b]))
                                    for b in self.block_names), self.params)

    def __eq__(self, other):
        return isinstance(other, PolyRing) and self._spec == other._spec

    def __hash__(self):
        return hash(self._spec)

    def __repr__(self):
        return f"PolyRing(p={self.p}, vars={list(self.names)})"

    @property
    def spec(self):
        return self._spec

    @property
    def param_indices(self) -> tuple[int, ...]:
        return self.block_index[PARAM_BLOCK]

    @property
    def ambient_indices(self) -> tuple[int, ...]:
        return tuple(i for _, b in self.ambient_blocks for i in b)

    def block_vars(self, name: str) -> list[str]:
        return [self.names[i] for i in self.block_index[name]]

    def param_var(self, param: str) -> int:
        return self.index[param]

    # constructors
    def zero(self) -> "MultiPoly":
        return MultiPoly(self, {})

    def one(self) -> "MultiPoly":
        return self.const(1)

    def const(self, c: int) -> "MultiPoly":
        c %= self.p
        return MultiPoly(self, {(0,) * self.nvars: c} if c else {})

    def var(self, name: str, power: int = 1) -> "MultiPoly":
        e = [0] * self.nvars
        e[self.index[name]] = power
        return MultiPoly(self, {tuple(e): 1})

    def monomial(self, exp, coeff: int = 1) -> "MultiPoly":
        coeff %= self.p
        return MultiPoly(self, {tuple(int(x) for x in exp): coeff} if coeff else {})

    def gens(self) -> list["MultiPoly"]:
        return [self.var(n) for n in self.names]

    def extend(self, new_blocks: Sequence[tuple[str, Sequence[str]]], front: bool = False) -> "PolyRing":
        """Ring with extra ambient blocks, placed before (front) or after the old ones."""
        old = [(b, self.block_vars(b)) for b in self.block_names]
        blocks = list(new_blocks) + old if front else old + list(new_blocks)
        return PolyRing(self.p, blocks, self.params)

    def embed(self, f: "MultiPoly") -> "MultiPoly":
        """Map a polynomial from a ring whose variables are a subset of ours."""
        if f.ring == self:
            return f
        pos = [self.index[n] for n in f.ring.names]
        out = {}
        for e, c in f.terms.items():
            ne = [0] * self.nvars
            for i, k in enumerate(e):
                if k:
                    ne[pos[i]] = k
            out[tuple(ne)] = c
        return MultiPoly(self, out)

    def restrict(self, f: "MultiPoly", sub: "PolyRing") -> "MultiPoly":
        """Inverse of :meth:`embed`; raises if f uses a variable missing from sub."""
        pos = [sub.index.get(n) for n in self.names]
        out = {}
        for e, c in f.terms.items():
            ne = [0] * sub.nvars
            for i, k in enumerate(e):
                if k:
                    if pos[i] is None:
                        raise ValueError(f"variable {self.names[i]} not in target ring")
                    ne[pos[i]] = k
            out[tuple(ne)] = c
        return MultiPoly(sub, out)


def _inv(a: int, p: int) -> int:
    return pow(a % p, p - 2, p)


class MultiPoly:
    """Immutable sparse polynomial: ``terms`` maps exponent tuples to ints mod p."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: PolyRing, terms: dict):
        self.ring = ring
        self.terms = terms
        self._hash = None

    # basic protocol
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring.const(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring.spec, frozenset(self.terms.items())))
        return self._hash

    def __len__(self):
        return len(self.terms)

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.ring != self.ring:
                raise ValueError("polynomials live in different rings")
            return other
        if isinstance(other, int):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.ring.p
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = (out.get(e, 0) + c) % p
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return MultiPoly(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        p = self.ring.p
        return MultiPoly(self.ring, {e: (p - c) % p for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.ring.p
        if len(self.terms) > len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        out: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = (out.get(e, 0) + ca * cb) % p
        return MultiPoly(self.ring, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def scale(self, c: int) -> "MultiPoly":
        p = self.ring.p
        c %= p
        if not c:
            return self.ring.zero()
        return MultiPoly(self.ring, {e: (v * c) % p for e, v in self.terms.items()})

    def mul_monomial(self, exp, c: int = 1) -> "MultiPoly":
        p = self.ring.p
        return MultiPoly(self.ring, {tuple(x + y for x, y in zip(e, exp)): (v * c) % p
                                     for e, v in self.terms.items() if (v * c) % p})

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        p = self.ring.p
        result = self.ring.one()
        base = self
        while k:
            # Frobenius shortcut: (sum c m)^p = sum c m^p over F_p
            if k % p == 0:
                base = base.frobenius()
                k //= p
                continue
            result = result * base
            k -= 1
        return result

    def frobenius(self, times: int = 1) -> "MultiPoly":
        q = self.ring.p ** times
        return MultiPoly(self.ring, {tuple(x * q for x in e): c for e, c in self.terms.items()})

    # queries
    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, idx: Iterable[int]) -> int:
        idx = tuple(idx)
        return max((sum(e[i] for i in idx) for e in self.terms), default=-1)

    def block_degrees(self, exp) -> tuple[int, ...]:
        return tuple(sum(exp[i] for i in b) for _, b in self.ring.ambient_blocks)

    def multidegree(self) -> tuple[int, ...] | None:
        """Common per-block degree if homogeneous in every ambient block."""
        degs = {self.block_degrees(e) for e in self.terms}
        if len(degs) != 1:
            return None if degs else tuple(0 for _ in self.ring.ambient_blocks)
        return degs.pop()

    def is_homogeneous(self) -> bool:
        return self.multidegree() is not None

    def variables(self) -> set[int]:
        return {i for e in self.terms for i, k in enumerate(e) if k}

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def sorted_terms(self, order: TermOrder | None = None):
        order = order or self.ring.default_order
        return sorted(self.terms.items(), key=lambda t: order.key(t[0]), reverse=True)

    def lead(self, order: TermOrder | None = None):
        order = order or self.ring.default_order
        return max(self.terms.items(), key=lambda t: order.key(t[0]))

    def lm(self, order: TermOrder | None = None):
        return self.lead(order)[0]

    def lc(self, order: TermOrder | None = None) -> int:
        return self.lead(order)[1]

    def monic(self, order: TermOrder | None = None) -> "MultiPoly":
        if not self.terms:
            return self
        return self.scale(_inv(self.lc(order), self.ring.p))

    def diff(self, var) -> "MultiPoly":
        i = self.ring.index[var] if isinstance(var, str) else var
        p = self.ring.p
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k % p:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = (c * k) % p
        return MultiPoly(self.ring, out)

    def subs(self, values: dict) -> "MultiPoly":
        """Substitute polynomials (or ints) for variables given by name or index."""
        vals = {}
        for k, v in values.items():
            i = self.ring.index[k] if isinstance(k, str) else k
            vals[i] = v if isinstance(v, MultiPoly) else self.ring.const(int(v))
        powcache: dict = {}
        out = self.ring.zero()
        for e, c in self.terms.items():
            rest = list(e)
            t = None
            for i, v in vals.items():
                if e[i]:
                    key = (i, e[i])
                    if key not in powcache:
                        powcache[key] = v ** e[i]
                    t = powcache[key] if t is None else t * powcache[key]
                    rest[i] = 0
            mono = self.ring.monomial(rest, c)
            out = out + (mono if t is None else mono * t)
        return out

    def coefficients_in(self, idx: Sequence[int]) -> dict:
        """Split as sum over exponents in ``idx`` of (exp, coefficient poly in the other variables)."""
        idx = tuple(idx)
        out: dict = {}
        for e, c in self.terms.items():
            key = tuple(e[i] for i in idx)
            rest = list(e)
            for i in idx:
                rest[i] = 0
            out.setdefault(key, {})[tuple(rest)] = c
        return {k: MultiPoly(self.ring, v) for k, v in out.items()}

    def monomial_content(self) -> tuple[int, ...]:
        if not self.terms:
            return (0,) * self.ring.nvars
        es = list(self.terms)
        return tuple(min(e[i] for e in es) for i in range(self.ring.nvars))

    def divide_monomial(self, exp) -> "MultiPoly":
        return MultiPoly(self.ring, {tuple(x - y for x, y in zip(e, exp)): c for e, c in self.terms.items()})

    def homogenize(self, block_idx: Sequence[int], hvar: int, degree: int | None = None) -> "MultiPoly":
        """Homogenise with respect to the variables in block_idx using variable hvar."""
        block_idx = tuple(block_idx)
        d = degree if degree is not None else max((sum(e[i] for i in block_idx) for e in self.terms), default=0)
        out = {}
        for e, c in self.terms.items():
            ne = list(e)
            ne[hvar] += d - sum(e[i] for i in block_idx)
            out[tuple(ne)] = c
        return MultiPoly(self.ring, out)

    def __repr__(self):
        return f"MultiPoly({format_poly(self)})"

    def __str__(self):
        return format_poly(self)


# ---------------------------------------------------------------------------
# printing and parsing

def _fmt_exp(name: str, k: Fraction) -> str:
    if k == 1:
        return name
    if k.denominator == 1:
        return f"{name}^{k.numerator}"
    return f"{name}^({k.numerator}/{k.denominator})"


def format_poly(f: MultiPoly, levels: dict | None = None, order: TermOrder | None = None) -> str:
    """Plain-text rendering.  ``levels`` maps parameter names to tower levels;
    symbol exponents are then printed as rational powers of the parameter."""
    if not f.terms:
        return "0"
    ring = f.ring
    p = ring.p
    levels = levels or {}
    parts = []
    for e, c in f.sorted_terms(order):
        factors = []
        pidx = ring.param_indices
        for i in list(pidx) + list(ring.ambient_indices) + [j for j in range(ring.nvars)
                                                             if j not in pidx and j not in ring.ambient_indices]:
            k = e[i]
            if not k:
                continue
            name = ring.names[i]
            lev = levels.get(name, 0) if i in pidx else 0
            factors.append(_fmt_exp(name, Fraction(k, p ** lev)))
        cs = c if c <= p // 2 or p == 2 else c - p
        sign = "-" if cs < 0 else "+"
        mag = abs(cs)
        if factors:
            body = "*".join(factors)
            if mag != 1:
                body = f"{mag}*{body}"
        else:
            body = str(mag)
        parts.append((sign, body))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


class PolyParseError(ValueError):
    def __init__(self, msg: str, text: str, pos: int):
        super().__init__(f"{msg} at column {pos + 1} in {text!r}")
        self.column = pos + 1
        self.msg = msg


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else pos
        if m.group(1):
            toks.append(("int", int(m.group(1)), start))
        elif m.group(2):
            toks.append(("name", m.group(2), start))
        elif m.group(3) and not m.group(3).isspace():
            toks.append(("op", m.group(3), start))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


def parse_poly(text: str, ring: PolyRing, levels: dict | None = None) -> MultiPoly:
    """Parse ``s*x^4 + t^2*y^4 + z^4``; ``s^(1/2)`` is a tower symbol power.

    ``levels`` gives the tower level of each parameter; a rational exponent
    ``a/b`` on parameter t needs ``b | p^level(t)``.
    """
    levels = levels or {}
    toks = _tokenize(text)
    pos = 0
    p = ring.p

    def peek():
        return toks[pos]

    def take(kind=None, val=None):
        nonlocal pos
        t = toks[pos]
        if (kind and t[0] != kind) or (val is not None and t[1] != val):
            want = val if val is not None else kind
            raise PolyParseError(f"expected {want!r}, found {t[1]!r}", text, t[2])
        pos += 1
        return t

    def exponent() -> Fraction:
        t = peek()
        if t[0] == "int":
            take()
            return Fraction(t[1])
        if t[0] == "op" and t[1] == "(":
            take()
            neg = False
            if peek()[0] == "op" and peek()[1] == "-":
                take()
                neg = True
            a = take("int")[1]
            b = 1
            if peek()[0] == "op" and peek()[1] == "/":
                take()
                b = take("int")[1]
            take("op", ")")
            if b == 0:
                raise PolyParseError("zero denominator", text, t[2])
            return Fraction(-a if neg else a, b)
        raise PolyParseError("bad exponent", text, t[2])

    def atom() -> MultiPoly:
        t = peek()
        if t[0] == "int":
            take()
            base = ring.const(t[1])
            rational_ok = False
        elif t[0] == "name":
            take()
            if t[1] not in ring.index:
                raise PolyParseError(f"unknown variable {t[1]!r}", text, t[2])
            base = None
            name = t[1]
        elif t[0] == "op" and t[1] == "(":
            take()
            base = expr()
            take("op", ")")
        else:
            raise PolyParseError(f"unexpected token {t[1]!r}", text, t[2])
        k = Fraction(1)
        if peek()[0] == "op" and peek()[1] == "^":
            take()
            k = exponent()
        if k < 0:
            raise PolyParseError("negative exponent", text, t[2])
        if base is None:
            idx = ring.index[name]
            if idx in ring.param_indices:
                q = p ** levels.get(name, 0)
                kk = k * q
                if kk.denominator != 1:
                    raise PolyParseError(f"root of {name} not available at level {levels.get(name, 0)}",
                                         text, t[2])
                return ring.var(name, int(kk))
            if k.denominator != 1:
                raise PolyParseError(f"fractional power of ambient variable {name}", text, t[2])
            return ring.var(name, int(k))
        if k.denominator != 1:
            raise PolyParseError("fractional power of a compound expression", text, t[2])
        return base ** int(k)

    def term() -> MultiPoly:
        f = atom()
        while peek()[0] == "op" and peek()[1] == "*":
            take()
            f = f * atom()
        return f

    def expr() -> MultiPoly:
        sign = 1
        if peek()[0] == "op" and peek()[1] in "+-":
            sign = -1 if take()[1] == "-" else 1
        f = term()
        if sign < 0:
            f = -f
        while peek()[0] == "op" and peek()[1] in "+-":
            op = take()[1]
            g = term()
            f = f + g if op == "+" else f - g
        return f

    f = expr()
    if peek()[0] != "end":
        t = peek()
        raise PolyParseError(f"trailing input {t[1]!r}", text, t[2])
    return f


# ---------------------------------------------------------------------------
# array form for the kernels

def to_arrays(f: MultiPoly, order: TermOrder, W: np.ndarray | None = None):
    W = order.matrix if W is None else W
    nv = f.ring.nvars
    if not f.terms:
        return (np.zeros((0, nv), dtype=np.int64), np.zeros((0, W.shape[0]), dtype=np.int64),
                np.zeros(0, dtype=np.int64))
    items = f.sorted_terms(order)
    e = np.array([t[0] for t in items], dtype=np.int64).reshape(len(items), nv)
    c = np.array([t[1] for t in items], dtype=np.int64)
    k = e @ W.T
    return e, k, c


def from_arrays(ring: PolyRing, e: np.ndarray, c: np.ndarray) -> MultiPoly:
    return MultiPoly(ring, {tuple(int(x) for x in row): int(v) for row, v in zip(e, c)})

"""Parameter tower fields F_p(t_1^(1/p^e_1), ..., t_m^(1/p^e_m)).

Elements are reduced fractions of polynomials in the symbols
``u_i = t_i^(1/p^e_i)``, stored as sympy ``PolyElement`` objects over
GF(p) with a monic denominator.  All symbol rings of one ``(p, params)``
pair are shared across levels; an element moves to a higher level by
multiplying its exponents by a power of p.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

from sympy.polys.domains import GF

from .mpgcd import gcd_cofactors
from sympy.polys.orderings import grevlex
from sympy.polys.rings import PolyRing as _SymRing


class FieldError(ValueError):
    pass


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@lru_cache(maxsize=None)
def symbol_ring(p: int, params: tuple):
    return _SymRing(params, GF(p), grevlex)


@dataclass(frozen=True)
class TowerField:
    p: int
    params: tuple
    levels: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "levels", tuple(int(e) for e in self.levels))
        if not is_prime(self.p):
            raise FieldError(f"p={self.p} is not prime")
        if len(self.levels) != len(self.params):
            raise FieldError("levels and params differ in length")
        if any(e < 0 for e in self.levels):
            raise FieldError("levels must be non-negative")
        if len(set(self.params)) != len(self.params):
            raise FieldError("duplicate parameter names")

    @classmethod
    def base(cls, p: int, params: Sequence[str]) -> "TowerField":
        return cls(p, tuple(params), (0,) * len(params))

    @property
    def ring(self):
        return symbol_ring(self.p, self.params)

    def level(self, param: str) -> int:
        return self.levels[self.params.index(param)]

    def level_map(self) -> dict:
        return dict(zip(self.params, self.levels))

    def degree_over(self, sub: "TowerField") -> int:
        if not sub.is_subfield_of(self):
            raise FieldError("not a subfield")
        return self.p ** (sum(self.levels) - sum(sub.levels))

    def is_subfield_of(self, other: "TowerField") -> bool:
        return (self.p == other.p and self.params == other.params
                and all(a <= b for a, b in zip(self.levels, other.levels)))

    def join(self, other: "TowerField") -> "TowerField":
        if self.p != other.p or self.params != other.params:
            raise FieldError("fields over different parameter sets")
        return TowerField(self.p, self.params, tuple(max(a, b) for a, b in zip(self.levels, other.levels)))

    def raised(self, params: Sequence[str], by: int = 1) -> "TowerField":
        lev = list(self.levels)
        for t in params:
            lev[self.params.index(t)] += by
        return TowerField(self.p, self.params, tuple(lev))

    def with_levels(self, levels) -> "TowerField":
        return TowerField(self.p, self.params, tuple(levels))

    def raised_params(self, sub: "TowerField") -> list[str]:
        return [t for t, a, b in zip(self.params, sub.levels, self.levels) if b > a]

    def to_json(self) -> dict:
        return {"p": self.p, "params": list(self.params), "levels": list(self.levels)}

    @classmethod
    def from_json(cls, d: dict) -> "TowerField":
        return cls(int(d["p"]), tuple(d["params"]), tuple(d["levels"]))

    def describe(self) -> str:
        if not any(self.levels):
            return f"F_{self.p}({', '.join(self.params)})"
        parts = []
        for t, e in zip(self.params, self.levels):
            parts.append(t if e == 0 else f"{t}^(1/{self.p ** e})")
        return f"F_{self.p}({', '.join(parts)})"

    # element constructors
    def zero(self) -> "TowerElement":
        return TowerElement(self, self.ring.zero, self.ring.one)

    def one(self) -> "TowerElement":
        return TowerElement(self, self.ring.one, self.ring.one)

    def const(self, c: int) -> "TowerElement":
        return TowerElement(self, self.ring.ground_new(c % self.p), self.ring.one)

    def symbol(self, param: str, power: int = 1) -> "TowerElement":
        e = [0] * len(self.params)
        e[self.params.index(param)] = power
        return TowerElement(self, self.ring.from_dict({tuple(e): 1}), self.ring.one)

    def param(self, param: str) -> "TowerElement":
        """The parameter t itself, i.e. u^(p^e)."""
        return self.symbol(param, self.p ** self.level(param))

    def from_dict(self, num: dict, den: dict | None = None) -> "TowerElement":
        R = self.ring
        n = R.from_dict({tuple(k): v % self.p for k, v in num.items() if v % self.p})
        d = R.from_dict({tuple(k): v % self.p for k, v in den.items() if v % self.p}) if den else R.one
        return TowerElement(self, n, d)


def _canon(num, den, p):
    if not den:
        raise ZeroDivisionError("division by zero in tower field")
    if not num:
        return num.ring.zero, num.ring.one
    R = num.ring
    if not den.is_ground:
        g, a, b = gcd_cofactors(p, R.ngens, dict(num.items()), dict(den.items()))
        if len(g) > 1 or next(iter(g)) != (0,) * R.ngens:
            num, den = R.from_dict(a), R.from_dict(b)
    lc = den.LC
    if lc != 1:
        inv = num.ring.domain.convert(pow(int(lc) % p, p - 2, p))
        num = num * inv
        den = den * inv
    return num, den


def _rescale(poly, q: int, ring):
    if q == 1:
        return poly
    return ring.from_dict({tuple(k * q for k in e): c for e, c in poly.items()})


class TowerElement:
    """Canonical fraction num/den in the symbols of ``field``."""

    __slots__ = ("field", "num", "den")

    def __init__(self, field: TowerField, num, den, canonical: bool = False):
        if not canonical:
            num, den = _canon(num, den, field.p)
        self.field = field
        self.num = num
        self.den = den

    def lift(self, target: TowerField) -> "TowerElement":
        """The same element viewed inside a larger field."""
        if target == self.field:
            return self
        if not self.field.is_subfield_of(target):
            raise FieldError(f"{self.field.describe()} is not inside {target.describe()}")
        p = self.field.p
        scales = [p ** (b - a) for a, b in zip(self.field.levels, target.levels)]
        R = target.ring

        def sc(poly):
            return R.from_dict({tuple(k * s for k, s in zip(e, scales)): c for e, c in poly.items()})

        return TowerElement(target, sc(self.num), sc(self.den), canonical=all(s == 1 for s in scales))

    def minimal(self) -> "TowerElement":
        """Rewrite in the smallest tower level that contains the element."""
        p = self.field.p
        lev = list(self.field.levels)
        exps = [e for e in list(self.num.keys()) + list(self.den.keys())]
        divs = []
        for i in range(len(lev)):
            d = 0
            while d < lev[i] and all(e[i] % (p ** (d + 1)) == 0 for e in exps):
                d += 1
            divs.append(d)
        if not any(divs):
            return self
        target = self.field.with_levels([a - d for a, d in zip(lev, divs)])
        R = target.ring

        def sc(poly):
            return R.from_dict({tuple(k // (p ** d) for k, d in zip(e, divs)): c for e, c in poly.items()})

        return TowerElement(target, sc(self.num), sc(self.den), canonical=True)

    def _pair(self, other):
        if isinstance(other, int):
            return self, self.field.const(other)
        if not isinstance(other, TowerElement):
            return None, None
        if other.field == self.field:
            return self, other
        j = self.field.join(other.field)
        return self.lift(j), other.lift(j)

    def __add__(self, other):
        a, b = self._pair(other)
        if a is None:
            return NotImplemented
        if a.den == b.den:
            return TowerElement(a.field, a.num + b.num, a.den)
        return TowerElement(a.field, a.num * b.den + b.num * a.den, a.den * b.den)

    __radd__ = __add__

    def __neg__(self):
        return TowerElement(self.field, -self.num, self.den, canonical=True)

    def __sub__(self, other):
        a, b = self._pair(other)
        if a is None:
            return NotImplemented
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._pair(other)
        if a is None:
            return NotImplemented
        return TowerElement(a.field, a.num * b.num, a.den * b.den)

    __rmul__ = __mul__

    def inverse(self) -> "TowerElement":
        if not self.num:
            raise ZeroDivisionError("inverse of zero")
        return TowerElement(self.field, self.den, self.num)

    def __truediv__(self, other):
        a, b = self._pair(other)
        if a is None:
            return NotImplemented
        return a * b.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return TowerElement(self.field, self.num ** k, self.den ** k, canonical=True) if k else self.field.one()

    def frobenius(self) -> "TowerElement":
        R = self.field.ring
        p = self.field.p
        return TowerElement(self.field, _rescale(self.num, p, R), _rescale(self.den, p, R), canonical=True)

    def __eq__(self, other):
        a, b = self._pair(other)
        if a is None:
            return NotImplemented
        return a.num == b.num and a.den == b.den

    def __hash__(self):
        m = self.minimal()
        return hash((m.field, tuple(sorted(m.num.items())), tuple(sorted(m.den.items()))))

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def is_constant(self) -> bool:
        return self.den == 1 and (not self.num or self.num.is_ground)

    def constant_value(self) -> int:
        if not self.is_constant():
            raise FieldError("not an F_p constant")
        return int(self.num.LC) % self.field.p if self.num else 0

    def is_polynomial(self) -> bool:
        return self.den == 1

    def num_dict(self) -> dict:
        p = self.field.p
        return {tuple(e): int(c) % p for e, c in self.num.items()}

    def den_dict(self) -> dict:
        p = self.field.p
        return {tuple(e): int(c) % p for e, c in self.den.items()}

    def __repr__(self):
        return f"TowerElement({self})"

    def __str__(self):
        n = _fmt_sym(self.num_dict(), self.field)
        if self.den == 1:
            return n
        d = _fmt_sym(self.den_dict(), self.field)
        return f"({n})/({d})"


def _fmt_sym(terms: dict, field: TowerField) -> str:
    if not terms:
        return "0"
    p = field.p
    parts = []
    for e, c in sorted(terms.items(), key=lambda t: (-sum(t[0]), tuple(-x for x in t[0]))):
        fs = []
        for name, k, lev in zip(field.params, e, field.levels):
            if not k:
                continue
            q = Fraction(k, p ** lev)
            if q == 1:
                fs.append(name)
            elif q.denominator == 1:
                fs.append(f"{name}^{q.numerator}")
            else:
                fs.append(f"{name}^({q.numerator}/{q.denominator})")
        cs = c if c <= p // 2 or p == 2 else c - p
        body = "*".join(fs)
        if not body:
            body = str(abs(cs))
        elif abs(cs) != 1:
            body = f"{abs(cs)}*{body}"
        parts.append(("-" if cs < 0 else "+", body))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sg, b in parts[1:]:
        s += f" {sg} {b}"
    return s


# ---------------------------------------------------------------------------
# p-th roots


def _root_poly(terms: dict, p: int, raise_mask):
    """p-th root of sum c*u^e given that each e_i is divisible by p unless raise_mask[i]."""
    out = {}
    for e, c in terms.items():
        ne = []
        for k, r in zip(e, raise_mask):
            # at a raised level the old symbol u_i equals v_i^p, so u^k = v^(pk) and the root is v^k
            ne.append(k if r else k // p)
        out[tuple(ne)] = c
    return out


def pth_root(a: TowerElement) -> TowerElement:
    """The unique b in the tower closure with b^p = a, at minimal levels."""
    f = a.field
    p = f.p
    exps = list(a.num_dict()) + list(a.den_dict())
    mask = [any(e[i] % p for e in exps) for i in range(len(f.params))]
    target = f.with_levels([lv + 1 if m else lv for lv, m in zip(f.levels, mask)])
    b = target.from_dict(_root_poly(a.num_dict(), p, mask), _root_poly(a.den_dict(), p, mask))
    return b.minimal()


def pth_root_within(a: TowerElement, within: TowerField) -> TowerElement | None:
    """p-th root of a if it lies in ``within``, else None."""
    b = pth_root(a)
    if b.field.is_subfield_of(within):
        return b.lift(within)
    return None


# ---------------------------------------------------------------------------
# derivations


class DerivationError(ValueError):
    pass


class FieldDerivation:
    """Sum_i a_i d/du_i on the symbols of ``field``, killing ``base``."""

    def __init__(self, field: TowerField, base: TowerField, coeffs: dict):
        if not base.is_subfield_of(field):
            raise DerivationError("base must be a subfield")
        self.field = field
        self.base = base
        self.coeffs = {}
        for t, c in coeffs.items():
            if t not in field.params:
                raise DerivationError(f"unknown parameter {t}")
            c = c if isinstance(c, TowerElement) else field.const(int(c))
            c = c.lift(field.join(c.field)) if c.field != field else c
            if c.field != field:
                raise DerivationError("coefficient outside the field")
            if c:
                if field.level(t) <= base.level(t):
                    raise DerivationError(f"d/d{t} does not kill the base (level not raised)")
                self.coeffs[t] = c

    @classmethod
    def partial(cls, field: TowerField, base: TowerField, param: str) -> "FieldDerivation":
        return cls(field, base, {param: field.one()})

    def __call__(self, a: TowerElement) -> TowerElement:
        a = a.lift(self.field) if a.field != self.field else a
        R = self.field.ring
        res = self.field.zero()
        for t, c in self.coeffs.items():
            i = self.field.params.index(t)
            g = R.gens[i]
            dn = a.num.diff(g)
            dd = a.den.diff(g)
            if not dn and not dd:
                continue
            part = TowerElement(self.field, dn * a.den - a.num * dd, a.den ** 2)
            res = res + c * part
        return res

    def __repr__(self):
        return "FieldDerivation(" + " + ".join(f"({c})*d/d{t}" for t, c in sorted(self.coeffs.items())) + ")"


# ---------------------------------------------------------------------------
# linear algebra over a tower field


def field_rref(rows: list[list[TowerElement]], field: TowerField):
    """Reduced row echelon form of a matrix with TowerElement entries.

    Returns (rows, pivot columns).  Deterministic: the first nonzero entry
    in column order is used as pivot.
    """
    m = [[x if isinstance(x, TowerElement) else field.const(int(x)) for x in r] for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    piv_cols = []
    r = 0
    for c in range(ncols):
        pr = None
        for i in range(r, len(m)):
            if m[i][c]:
                pr = i
                break
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        piv_cols.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], piv_cols


def field_rank(rows, field) -> int:
    return len(field_rref(rows, field)[1])


def field_nullspace(rows, field: TowerField, ncols: int | None = None) -> list[list[TowerElement]]:
    if not rows:
        n = ncols or 0
        return [[field.one() if i == j else field.zero() for i in range(n)] for j in range(n)]
    ncols = len(rows[0])
    red, piv = field_rref(rows, field)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for fc in free:
        v = [field.zero() for _ in range(ncols)]
        v[fc] = field.one()
        for i, pc in enumerate(piv):
            v[pc] = -red[i][fc]
        basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# constants of a family of derivations


@dataclass
class SubfieldResult:
    """L' presented by generators over the base, plus its tower form when monomial."""

    generators: list
    degree_over_base: int
    rank: int  # log_p [L : L']
    field: TowerField | None
    kernel_basis: list
    coefficient_rank: int = 0

    def describe(self) -> str:
        if self.field is not None:
            return self.field.describe()
        return "base(" + ", ".join(str(g) for g in self.generators) + ")"


def _basis_exponents(L: TowerField, base: TowerField):
    raised = [i for i, (a, b) in enumerate(zip(base.levels, L.levels)) if b > a]
    return raised, [c for c in product(range(L.p), repeat=len(raised))]


def expand_in_basis(a: TowerElement, L: TowerField, base: TowerField):
    """Coordinates of a in L over F = L^p * base on the basis u^c (0 <= c_i < p, raised i).

    Coordinates are elements of F, returned as TowerElements of L.
    """
    p = L.p
    a = a.lift(L) if a.field != L else a
    raised, cs = _basis_exponents(L, base)
    # make the denominator a p-th power: a = num*den^(p-1) / den^p
    num = a.num * a.den ** (p - 1)
    den = TowerElement(L, a.den ** p, L.ring.one)
    buckets: dict = {c: {} for c in cs}
    for e, c in num.items():
        key = tuple(e[i] % p for i in raised)
        rest = list(e)
        for j, i in enumerate(raised):
            rest[i] -= key[j]
        buckets[key][tuple(rest)] = int(c) % p
    return [L.from_dict(buckets[c]) / den if buckets[c] else L.zero() for c in cs]


def derivation_matrix(d: FieldDerivation, L: TowerField, base: TowerField):
    """Matrix of d as an F-linear map on the basis u^c; columns are images of basis vectors."""
    raised, cs = _basis_exponents(L, base)
    cols = []
    for c in cs:
        e = [0] * len(L.params)
        for j, i in enumerate(raised):
            e[i] = c[j]
        img = d(L.from_dict({tuple(e): 1}))
        cols.append(expand_in_basis(img, L, base))
    n = len(cs)
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def constants_subfield(L: TowerField, base: TowerField, ders: list) -> SubfieldResult:
    """Joint constants L' = {a in L : d(a) = 0 for all d in ders}.

    L must be of height one over base.  The kernel is computed over
    F = L^p * base on the monomial basis; L' is returned as a tower field
    when the kernel is spanned by basis monomials, otherwise only by its
    generators.
    """
    if not base.is_subfield_of(L):
        raise DerivationError("base is not a subfield of L")
    if any(b - a > 1 for a, b in zip(base.levels, L.levels)):
        raise DerivationError("L is not of height one over base")
    for d in ders:
        if d.field != L:
            raise DerivationError("derivation lives on a different field")
        for t in d.coeffs:
            if L.level(t) <= base.level(t):
                raise DerivationError(f"derivation does not kill the base (d/d{t})")
    p = L.p
    raised, cs = _basis_exponents(L, base)
    # rank of the coefficient matrix over L gives the degree
    coeff_rows = [[d.coeffs.get(L.params[i], L.zero()) for i in raised] for d in ders]
    rank = field_rank(coeff_rows, L) if coeff_rows and raised else 0
    rows = []
    for d in ders:
        rows.extend(derivation_matrix(d, L, base))
    kernel = field_nullspace(rows, L, ncols=len(cs)) if rows else field_nullspace([], L, ncols=len(cs))
    # tower form: kernel spanned by monomials with exponents supported on a subset S
    field = None
    gens = []
    kernel_monomial = all(sum(1 for x in v if x) == 1 for v in kernel)
    support = set()
    if kernel_monomial:
        for v in kernel:
            j = next(i for i, x in enumerate(v) if x)
            support.add(cs[j])
        S = [k for k in range(len(raised)) if any(c[k] for c in support)]
        expected = {c for c in cs if all(c[k] == 0 for k in range(len(raised)) if k not in S)}
        if support == expected:
            lev = list(base.levels)
            for k in S:
                lev[raised[k]] += 1
            field = base.with_levels(lev)
            gens = [L.symbol(L.params[raised[k]]) for k in S]
    if field is None:
        for v in kernel:
            gens.append(sum((x * L.from_dict({tuple(c if i in raised else 0 for i in range(len(L.params))): 1})
                             for x, c in zip(v, cs) if x), L.zero()))
    # [L : L'] from the kernel; equals p^rank when the derivations span a p-closed family
    deg = len(kernel)
    codeg = p ** len(raised) // deg
    krank = 0
    while p ** krank < codeg:
        krank += 1
    return SubfieldResult(gens, deg, krank, field, kernel, rank)

"""Independent reference computations used by the tests.

Nothing here imports the package's algebra code: these are brute-force or
sympy-based recomputations of quantities the package derives on its own.
"""

from __future__ import annotations

import itertools

import sympy as sp
from sympy import GF
from sympy.polys.matrices import DomainMatrix

s, t, x, y, z = sp.symbols("s t x y z")
sigma, tau = sp.symbols("sigma tau")


def _monos(n):
    return [(a, b, n - a - b) for a in range(n + 1) for b in range(n + 1 - a)]


def _field(p):
    return GF(p).frac_field(s, t)


def frobenius_solutions(f, p: int, d: int):
    """Basis of {q in K[x,y,z]_(pd - deg f) : q*f has only p-divisible exponents}.

    K = F_p(s,t).  Each solution gives P = q*f in K[x^p,y^p,z^p], hence an
    h over K^(1/p) with h^p = P, of degree d.
    """
    K = _field(p)
    F = sp.Poly(f, x, y, z, domain=K)
    e = p * d - F.total_degree()
    if e < 0:
        return []
    qm = _monos(e)
    rows = {}
    for j, m in enumerate(qm):
        for (a, b, c), coef in F.terms():
            key = (a + m[0], b + m[1], c + m[2])
            if all(k % p == 0 for k in key):
                continue
            rows.setdefault(key, {})[j] = coef
    if not rows:
        basis = [[1 if i == j else 0 for i in range(len(qm))] for j in range(len(qm))]
    else:
        keys = sorted(rows)
        M = DomainMatrix([[K.convert(rows[k].get(j, 0)) for j in range(len(qm))] for k in keys],
                         (len(keys), len(qm)), K)
        N = M.nullspace().to_Matrix()
        basis = [list(N.row(i)) for i in range(N.rows)]
    return [sp.expand(sum(c * x ** m[0] * y ** m[1] * z ** m[2] for c, m in zip(v, qm))) for v in basis]


def _root_coeff(a, p):
    """p-th root of a in F_p(s,t), written in sigma = s^(1/p), tau = t^(1/p)."""
    num, den = sp.fraction(sp.together(a))
    num = sp.expand(num * den ** (p - 1))
    den = sp.expand(den ** p)
    root = lambda e: sp.expand(e).subs({s: sigma, t: tau}, simultaneous=True)
    # c^(1/p) = c for c in F_p, and (s^i t^j)^(1/p) = sigma^i tau^j
    dr = sp.Poly(den, s, t)
    inner = sp.Poly(sum(c * s ** (i // p) * t ** (j // p) for (i, j), c in dr.terms()), s, t)
    return root(num) / root(inner.as_expr())


def pth_root_form(P, p):
    """h over F_p(sigma,tau) with h^p = P, for P in K[x^p,y^p,z^p]."""
    Pp = sp.Poly(sp.together(P).as_numer_denom()[0], x, y, z)
    den = sp.together(P).as_numer_denom()[1]
    out = 0
    for (a, b, c), coef in Pp.terms():
        assert a % p == 0 and b % p == 0 and c % p == 0
        out += _root_coeff(coef / den, p) * x ** (a // p) * y ** (b // p) * z ** (c // p)
    return sp.expand(out)


def minimal_nilpotent(f, p: int):
    """Smallest-degree h over K^(1/p) with h not in (f) and h^p in (f).

    Returns None when K^(1/p)[x,y,z]/(f) is reduced.  A nilpotent of degree
    d times a variable is one of degree d+1, so reducedness only needs the
    top degree deg f - 1; below deg f every solution is automatically
    outside (f).
    """
    n = sp.Poly(f, x, y, z).total_degree()
    if not frobenius_solutions(f, p, n - 1):
        return None
    for d in range(1, n):
        sols = frobenius_solutions(f, p, d)
        if sols:
            return pth_root_form(sp.expand(sols[0] * f), p)
    raise AssertionError("unreachable: top degree had a solution")


def proportional(a, b, p, gens=(x, y, z)) -> bool:
    """a = c*b for a nonzero constant c in F_p(sigma, tau)."""
    K = GF(p).frac_field(sigma, tau)
    A = sp.Poly(a, *gens, domain=K)
    B = sp.Poly(b, *gens, domain=K)
    if A.is_zero or B.is_zero:
        return A.is_zero and B.is_zero
    c = K.quo(A.LC(), B.LC())
    return (A - B.mul_ground(c)).is_zero


def rank_mod_p(rows, p: int) -> int:
    return DomainMatrix([[GF(p)(int(v)) for v in r] for r in rows], (len(rows), len(rows[0])), GF(p)).rank()


def groebner_reduced(polys, gens, p, order="grevlex"):
    return sp.groebner(polys, *gens, modulus=p, order=order)


def is_pth_power_over_K(f, p: int) -> bool:
    P = sp.Poly(f, x, y, z, s, t)
    return all(all(k % p == 0 for k in m) for m in P.monoms())


def hypersurface_family(p: int):
    """Plane curves of degree <= p^2 over F_p(s,t): Fermat forms with all
    coefficient pairs from a small pool, plus the same forms with one extra
    monomial (p-divisible or not).  Forms that are already p-th powers over K
    are left out: they are not varieties."""
    pool = [1, s, t, s * t]
    out = []
    degrees = sorted({p, p * p} | ({3} if p == 2 else {2, 4}))
    for n in degrees:
        for cx, cy in itertools.product(pool, repeat=2):
            base = cx * x ** n + cy * y ** n + z ** n
            if not is_pth_power_over_K(base, p):
                out.append(base)
        extras = [x ** (n - p) * y ** p if n > p else None, x ** (n - 1) * y, x * y * z ** (n - 2)]
        for ex in extras:
            if ex is None:
                continue
            for cx, cy in [(s, t), (t, s * t), (s * t, 1)]:
                out.append(cx * x ** n + cy * y ** n + z ** n + s * ex)
    return out


def _is_pth_power_L(c, p) -> bool:
    """c in F_p(sigma, tau) is a p-th power (F_p is perfect, so exponents decide)."""
    num, den = sp.fraction(sp.together(c))
    for e in (num, den):
        P = sp.Poly(e, sigma, tau, modulus=p)
        if not all(k % p == 0 for m in P.monoms() for k in m):
            return False
    return True


def diagonal_reduced_over_L(coeffs, p) -> bool:
    """sum c_i x_i^q over L = F_p(sigma, tau) is reduced unless it is a unit
    times a p-th power, i.e. unless every ratio c_i / c_0 is a p-th power."""
    c0 = coeffs[0]
    return not all(_is_pth_power_L(c / c0, p) for c in coeffs[1:])


def essential_params_oracle(coeffs, p) -> set:
    """Parameters whose p-th root survives in the field of constants of the
    derivations of L/K killing the normalised coefficients.

    Only valid when that kernel is spanned by coordinate derivations, which
    holds for monomial coefficients.
    """
    c0 = coeffs[0]
    ratios = [sp.together(c / c0) for c in coeffs[1:]]
    J = sp.Matrix([[sp.diff(r, v) for v in (sigma, tau)] for r in ratios])
    rows = []
    for i in range(J.rows):
        row = []
        for j in range(2):
            num = sp.Poly(sp.fraction(sp.together(J[i, j]))[0], sigma, tau, modulus=p)
            row.append(0 if num.is_zero else 1)
        rows.append(row)
    # a coordinate derivation d/dv lies in the kernel when its column vanishes
    killed = {name for j, name in enumerate("st") if all(r[j] == 0 for r in rows)}
    return {"s", "t"} - killed

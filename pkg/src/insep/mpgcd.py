"""Multivariate gcd over F_p, delegated to FLINT.

sympy's generic subresultant gcd is far too slow for the rational
functions that appear in tower-field arithmetic; FLINT's is not.
Polynomials travel as ``{exponent tuple: int}`` dictionaries.
"""

from functools import lru_cache

import flint


@lru_cache(maxsize=None)
def _ctx(p: int, nvars: int):
    return flint.nmod_mpoly_ctx.get(tuple(f"v{i}" for i in range(nvars)), modulus=p)


def _clean(d):
    return {tuple(int(k) for k in e): int(c) for e, c in d.items()}


def gcd_cofactors(p: int, nvars: int, a: dict, b: dict):
    """(g, a/g, b/g) with g the monic gcd (FLINT's normalisation)."""
    ctx = _ctx(p, nvars)
    A = ctx.from_dict(_clean(a))
    B = ctx.from_dict(_clean(b))
    G = A.gcd(B)
    return _clean(G.to_dict()), _clean((A / G).to_dict()), _clean((B / G).to_dict())


def exact_quotient(p: int, nvars: int, a: dict, b: dict) -> dict:
    ctx = _ctx(p, nvars)
    return _clean((ctx.from_dict(_clean(a)) / ctx.from_dict(_clean(b))).to_dict())

"""Hot numeric kernels: modular row reduction and polynomial normal forms.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics.  The numba path is used unless the
environment variable ``INSEP_DISABLE_NUMBA`` is set to a truthy value, or
:func:`set_backend` is called.

Polynomials handed to the normal-form kernel are in *array form*:

``exps``  int64[n, nvars]  exponent vectors
``keys``  int64[n, nw]     order keys (``exps @ W.T`` for the weight matrix W)
``coefs`` int64[n]         coefficients in [1, p)

with rows sorted by decreasing key (lexicographic on key rows).
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _env_disabled() -> bool:
    return os.environ.get("INSEP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


_BACKEND = "numpy" if (_env_disabled() or not HAVE_NUMBA) else "numba"


def backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    """Switch between ``"numba"`` and ``"numpy"`` kernels at runtime."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _BACKEND = name


# ---------------------------------------------------------------------------
# modular row reduction


@njit(cache=True)
def _rref_numba(a, p):
    rows, cols = a.shape
    pivots = np.empty(min(rows, cols), dtype=np.int64)
    npiv = 0
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        piv = -1
        for i in range(r, rows):
            if a[i, c] % p != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for j in range(cols):
                tmp = a[r, j]
                a[r, j] = a[piv, j]
                a[piv, j] = tmp
        # inverse by Fermat; p is small
        v = a[r, c] % p
        inv = 1
        e = p - 2
        b = v
        while e > 0:
            if e & 1:
                inv = (inv * b) % p
            b = (b * b) % p
            e >>= 1
        for j in range(c, cols):
            a[r, j] = (a[r, j] * inv) % p
        for i in range(rows):
            if i != r:
                f = a[i, c] % p
                if f != 0:
                    for j in range(c, cols):
                        a[i, j] = (a[i, j] - f * a[r, j]) % p
        pivots[npiv] = c
        npiv += 1
        r += 1
    return a, pivots[:npiv]


def _rref_numpy(a, p):
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.nonzero(a[r:, c] % p)[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        inv = pow(int(a[r, c] % p), p - 2, p)
        a[r, c:] = (a[r, c:] * inv) % p
        f = a[:, c].copy() % p
        f[r] = 0
        if f.any():
            a[:, c:] = (a[:, c:] - np.outer(f, a[r, c:])) % p
        pivots.append(c)
        r += 1
    return a, np.asarray(pivots, dtype=np.int64)


def rref_mod_p(matrix, p: int):
    """Reduced row echelon form over F_p.

    Returns ``(R, pivots)``; the input is copied.  Entries may be any
    integers; the result has entries in ``[0, p)``.
    """
    a = np.array(matrix, dtype=np.int64, copy=True) % p
    if a.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if a.size == 0:
        return a, np.zeros(0, dtype=np.int64)
    if _BACKEND == "numba":
        return _rref_numba(a, p)
    return _rref_numpy(a, p)


def rank_mod_p(matrix, p: int) -> int:
    return len(rref_mod_p(matrix, p)[1])


def nullspace_mod_p(matrix, p: int) -> np.ndarray:
    """Basis of the right kernel, one vector per row, in canonical form."""
    a = np.asarray(matrix, dtype=np.int64)
    cols = a.shape[1]
    r, piv = rref_mod_p(a, p)
    pivset = set(int(c) for c in piv)
    free = [c for c in range(cols) if c not in pivset]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(piv):
            basis[k, pc] = (-r[i, fc]) % p
    return basis


# ---------------------------------------------------------------------------
# polynomial normal form


@njit(cache=True)
def _key_cmp(ka, ia, kb, ib):
    for j in range(ka.shape[1]):
        if ka[ia, j] > kb[ib, j]:
            return 1
        if ka[ia, j] < kb[ib, j]:
            return -1
    return 0


@njit(cache=True)
def _merge_sub(we, wk, wc, start, te, tk, tc, p):
    """Return (w[start:] + t) with coefficients mod p, zeros dropped."""
    n1 = we.shape[0] - start
    n2 = te.shape[0]
    nv = we.shape[1]
    nw = wk.shape[1]
    oe = np.empty((n1 + n2, nv), dtype=np.int64)
    ok = np.empty((n1 + n2, nw), dtype=np.int64)
    oc = np.empty(n1 + n2, dtype=np.int64)
    i = start
    j = 0
    n = 0
    while i < we.shape[0] or j < n2:
        if i < we.shape[0] and j < n2:
            c = _key_cmp(wk, i, tk, j)
        elif i < we.shape[0]:
            c = 1
        else:
            c = -1
        if c > 0:
            oe[n] = we[i]
            ok[n] = wk[i]
            oc[n] = wc[i]
            n += 1
            i += 1
        elif c < 0:
            oe[n] = te[j]
            ok[n] = tk[j]
            oc[n] = tc[j]
            n += 1
            j += 1
        else:
            v = (wc[i] + tc[j]) % p
            if v != 0:
                oe[n] = we[i]
                ok[n] = wk[i]
                oc[n] = v
                n += 1
            i += 1
            j += 1
    return oe[:n], ok[:n], oc[:n]


@njit(cache=True)
def _normal_form_numba(fe, fk, fc, ge, gk, gc, offs, p):
    nv = fe.shape[1]
    nw = fk.shape[1]
    m = offs.shape[0] - 1
    cap = 16
    re = np.empty((cap, nv), dtype=np.int64)
    rk = np.empty((cap, nw), dtype=np.int64)
    rc = np.empty(cap, dtype=np.int64)
    nr = 0
    we = fe.copy()
    wk = fk.copy()
    wc = fc.copy()
    s = 0
    while s < we.shape[0]:
        found = -1
        for i in range(m):
            lo = offs[i]
            ok = True
            for v in range(nv):
                if ge[lo, v] > we[s, v]:
                    ok = False
                    break
            if ok:
                found = i
                break
        if found < 0:
            if nr == cap:
                cap *= 2
                ne = np.empty((cap, nv), dtype=np.int64)
                nk = np.empty((cap, nw), dtype=np.int64)
                nc = np.empty(cap, dtype=np.int64)
                ne[:nr] = re[:nr]
                nk[:nr] = rk[:nr]
                nc[:nr] = rc[:nr]
                re, rk, rc = ne, nk, nc
            re[nr] = we[s]
            rk[nr] = wk[s]
            rc[nr] = wc[s]
            nr += 1
            s += 1
            continue
        lo = offs[found]
        hi = offs[found + 1]
        c = wc[s]
        t = hi - lo - 1
        te = np.empty((t, nv), dtype=np.int64)
        tk = np.empty((t, nw), dtype=np.int64)
        tc = np.empty(t, dtype=np.int64)
        for a in range(t):
            for v in range(nv):
                te[a, v] = ge[lo + 1 + a, v] + we[s, v] - ge[lo, v]
            for v in range(nw):
                tk[a, v] = gk[lo + 1 + a, v] + wk[s, v] - gk[lo, v]
            tc[a] = (p - (c * gc[lo + 1 + a]) % p) % p
        we, wk, wc = _merge_sub(we, wk, wc, s + 1, te, tk, tc, p)
        s = 0
    return re[:nr].copy(), rk[:nr].copy(), rc[:nr].copy()


def _sort_desc(e, k, c):
    if k.shape[0] == 0:
        return e, k, c
    order = np.lexsort(k.T[::-1])[::-1]
    return e[order], k[order], c[order]


def _normal_form_numpy(fe, fk, fc, ge, gk, gc, offs, p):
    lms = ge[offs[:-1]] if len(offs) > 1 else np.zeros((0, fe.shape[1]), dtype=np.int64)
    we, wk, wc = fe.copy(), fk.copy(), fc.copy()
    out_e, out_k, out_c = [], [], []
    while we.shape[0] > 0:
        lead = we[0]
        hits = np.nonzero(np.all(lms <= lead, axis=1))[0] if lms.shape[0] else []
        if len(hits) == 0:
            out_e.append(we[0])
            out_k.append(wk[0])
            out_c.append(wc[0])
            we, wk, wc = we[1:], wk[1:], wc[1:]
            continue
        i = int(hits[0])
        lo, hi = int(offs[i]), int(offs[i + 1])
        c = int(wc[0])
        te = ge[lo + 1:hi] + (lead - ge[lo])
        tk = gk[lo + 1:hi] + (wk[0] - gk[lo])
        tc = (-(c * gc[lo + 1:hi])) % p
        e = np.concatenate([we[1:], te])
        k = np.concatenate([wk[1:], tk])
        cc = np.concatenate([wc[1:], tc])
        if e.shape[0] == 0:
            we, wk, wc = e, k, cc
            continue
        e, k, cc = _sort_desc(e, k, cc)
        # combine equal monomials (adjacent after sorting)
        same = np.zeros(e.shape[0], dtype=bool)
        same[1:] = np.all(k[1:] == k[:-1], axis=1)
        group = np.cumsum(~same) - 1
        sums = np.zeros(group[-1] + 1, dtype=np.int64)
        np.add.at(sums, group, cc)
        first = ~same
        e, k = e[first], k[first]
        cc = sums % p
        keep = cc != 0
        we, wk, wc = e[keep], k[keep], cc[keep]
    nv, nw = fe.shape[1], fk.shape[1]
    if not out_e:
        return (np.zeros((0, nv), dtype=np.int64), np.zeros((0, nw), dtype=np.int64),
                np.zeros(0, dtype=np.int64))
    return np.array(out_e, dtype=np.int64), np.array(out_k, dtype=np.int64), np.array(out_c, dtype=np.int64)


def normal_form_arrays(fe, fk, fc, ge, gk, gc, offs, p):
    """Full normal form of one polynomial modulo a monic basis.

    The basis is given concatenated: polynomial ``i`` occupies rows
    ``offs[i]:offs[i+1]`` of ``ge/gk/gc`` with its leading term first.
    Reducers are tried in basis order.
    """
    if _BACKEND == "numba":
        return _normal_form_numba(fe, fk, fc, ge, gk, gc, offs, p)
    return _normal_form_numpy(fe, fk, fc, ge, gk, gc, offs, p)

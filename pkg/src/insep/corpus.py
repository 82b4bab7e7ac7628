"""Seeded generator of Fermat-type complete intersections for property testing."""

from __future__ import annotations

import os
import random
from dataclasses import dataclass

PROFILES = ("fermat-hypersurface", "fermat-product", "mixed-level")

# coefficient monomials, as exponent vectors in the first two parameters
_POOL2 = ((1, 0), (0, 1), (1, 1), (2, 0), (0, 0))


@dataclass(frozen=True)
class CorpusInstance:
    name: str
    text: str
    p: int
    profile: str


def _mono(names, exps, denoms=None) -> str:
    parts = []
    for i, (n, e) in enumerate(zip(names, exps)):
        d = denoms[i] if denoms else 1
        if e == 0:
            continue
        if d > 1:
            parts.append(f"{n}^({e}/{d})")
        else:
            parts.append(n if e == 1 else f"{n}^{e}")
    return "*".join(parts)


def _term(coef: str, var: str, e: int) -> str:
    return f"{coef}*{var}^{e}" if coef else f"{var}^{e}"


def _fermat(rng, p, names, vars_, q, pool, denoms=None):
    """Fermat form with random coefficients, not all of them p-th powers."""
    while True:
        exps = [rng.choice(pool) for _ in vars_]
        if any(any(e % p for e in ex) for ex in exps):
            break
    return " + ".join(_term(_mono(names, ex, denoms), v, q) for ex, v in zip(exps, vars_))


def _toml(p, params, levels, blocks, gens, raise_):
    q = lambda xs: "[" + ", ".join(f'"{x}"' for x in xs) + "]"
    lines = ["[field]", f"p = {p}", f"params = {q(params)}",
             "levels = [" + ", ".join(map(str, levels)) + "]", "",
             "[ambient]", f"blocks = {q([b for b, _ in blocks])}",
             "variables = [" + ", ".join(q(vs) for _, vs in blocks) + "]", "",
             "[scheme]", "generators = ["]
    lines += [f'    "{g}",' for g in gens]
    lines += ["]", "", "[base_change]", f"raise = {q(raise_)}", ""]
    return "\n".join(lines)


def _raise_subset(rng, cands, proper=False):
    k = rng.randint(1, len(cands) - 1 if proper and len(cands) > 1 else len(cands))
    return sorted(rng.sample(cands, k))


def _hypersurface(rng, p):
    m = 1 if p == 3 else rng.choice((1, 2))
    g = _fermat(rng, p, ("s", "t"), ("x", "y", "z"), p ** m, _POOL2)
    return _toml(p, ["s", "t"], [0, 0], [("P", ["x", "y", "z"])], [g], _raise_subset(rng, ["s", "t"]))


def _product(rng, p):
    A, B = ["x", "y", "z"], ["u", "v", "w"]
    blocks = [("A", A), ("B", B)]
    if rng.random() < 0.5:
        # one Fermat factor twisted by a Frobenius-linear incidence relation
        m = 1 if p == 3 else rng.choice((1, 2))
        g1 = _fermat(rng, p, ("s", "t"), A, p ** m, _POOL2)
        g2 = f"x*u^{p} + y*v^{p} + z*w^{p}"
        return _toml(p, ["s", "t"], [0, 0], blocks, [g1, g2], _raise_subset(rng, ["s", "t"]))
    pool3 = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1), (0, 0, 0))
    g1 = _fermat(rng, p, ("r", "s", "t"), A, p, pool3)
    n = 1 if p == 3 else rng.choice((1, 2))
    g2 = _fermat(rng, p, ("r", "s", "t"), B, p ** n, pool3)
    return _toml(p, ["r", "s", "t"], [0, 0, 0], blocks, [g1, g2], _raise_subset(rng, ["r", "s", "t"]))


def _mixed(rng, p, force_partial):
    params = ["r", "s", "t"]
    levels = [0, 0, 0]
    if not force_partial and rng.random() < 0.4:
        levels[rng.randrange(3)] = 1
    low = [t for t, k in zip(params, levels) if k == 0]
    pool = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (0, 0, 0))
    g = _fermat(rng, p, params, ("x", "y", "z"), p, pool, [p ** k for k in levels])
    raise_ = _raise_subset(rng, low, proper=True)
    return _toml(p, params, levels, [("P", ["x", "y", "z"])], [g], raise_)


def _admissible(text: str) -> bool:
    # the theory assumes X normal; draws violating that are redrawn
    from .io import InputError, parse_text
    from .pipeline import x_is_normal
    try:
        X, _ = parse_text(text)
    except InputError:
        return False
    return x_is_normal(X) is True


def gen_corpus(seed: int, count: int, profile: str, p: int | None = None,
               max_draws: int = 200) -> list[CorpusInstance]:
    """Deterministic list of instances with normal X.  With p=None the prime alternates 2, 3."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}")
    rng = random.Random(f"{profile}:{seed}")
    out = []
    for i in range(count):
        pp = p if p is not None else (2, 3)[i % 2]
        for _ in range(max_draws):
            if profile == "fermat-hypersurface":
                text = _hypersurface(rng, pp)
            elif profile == "fermat-product":
                text = _product(rng, pp)
            else:
                text = _mixed(rng, pp, force_partial=(i == 0))
            if _admissible(text):
                break
        else:
            raise RuntimeError(f"no admissible draw for {profile} after {max_draws} attempts")
        out.append(CorpusInstance(f"{profile}-{seed}-{i:03d}", text, pp, profile))
    return out


def write_corpus(instances, outdir) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for inst in instances:
        path = os.path.join(outdir, inst.name + ".toml")
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(inst.text)
        os.replace(tmp, path)
        paths.append(path)
    return paths

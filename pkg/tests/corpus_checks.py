"""Per-instance property checks shared by the corpus suite and the acceptance run."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from insep.geometry import BaseChangeSpec, degree_insep, r1_test
from insep.io import parse_text
from insep.pipeline import analyze, module_checks, tower_inequality_check


@dataclass
class Outcome:
    name: str
    checked: list = field(default_factory=list)    # property letters actually asserted
    failures: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)    # letter -> reason


def check_instance(name: str, text: str) -> Outcome:
    out = Outcome(name)
    X, bc = parse_text(text)
    A = analyze(X, bc)

    def verdict(letter, ok, detail=""):
        out.checked.append(letter)
        if not ok:
            out.failures.append(f"{letter}: {detail}")

    if not A.reduction.certified:
        for k in "abcdef":
            out.skipped[k] = "reduction uncertified"
        return out
    changed = A.reduction.changed
    Z = A.Z

    # (b) degree criterion
    di = degree_insep(Z, X)
    verdict("b", changed == (di < bc.degree), f"changed={changed} degree_insep={di} deg={bc.degree}")

    dec = A.decomposition
    if dec is None:
        for k in "acdf":
            out.skipped[k] = "decomposition unavailable: " + "; ".join(A.errors.values())
    else:
        # (a) movable part vanishes exactly when the base change is reduced
        verdict("a", dec.movable.is_zero() == (not changed), f"movable={dec.to_json()['movable']} changed={changed}")
        # (c) fixed part vanishes exactly when Z is regular in codimension one
        if A.closure is not None and A.closure.status == "certified-normal" and dec.fixed_certified:
            verdict("c", dec.fixed_is_zero() == (r1_test(Z) == []), str(dec.to_json()["fixed"]))
        else:
            out.skipped["c"] = "normalisation not certified"
        # (d) module sanity on the conormal presentation
        mc = module_checks(A.conormal)
        verdict("d", mc["pairing_sound"] and mc["saturation_idempotent"], str(mc))
        # (f) canonical bundle formula
        if A.cbf is not None and A.cbf.applicable:
            verdict("f", A.cbf.passed, str(A.cbf.to_json()))
        else:
            out.skipped["f"] = "cbf not applicable"

    # (e) every intermediate T' between S and T
    K, R = bc.source, bc.raised
    ok, bad = True, []
    for k in range(len(R) + 1):
        for sub in itertools.combinations(R, k):
            res = tower_inequality_check(X, bc, BaseChangeSpec(K, K.raised(sub)))
            if not res.passed:
                ok = False
                bad.append((sub, res.to_json()))
    verdict("e", ok, str(bad))
    return out

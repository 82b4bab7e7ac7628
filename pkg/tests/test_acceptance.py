"""Acceptance run: one PASS/FAIL line per criterion.

    pytest tests/test_acceptance.py -v        (lines are printed live)
    python tests/test_acceptance.py           (same checks, no pytest)
"""

from __future__ import annotations

import glob
import json
import os
import subprocess
import sys
import tempfile
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import data_path  # noqa: E402
from corpus_checks import check_instance  # noqa: E402
from oracles import (diagonal_reduced_over_L, essential_params_oracle, hypersurface_family,  # noqa: E402
                     minimal_nilpotent, proportional, sigma, tau)
from test_nilpotent_oracle import TEMPLATE, _as_root_expr  # noqa: E402

from insep.corpus import PROFILES, gen_corpus  # noqa: E402
from insep.geometry import base_change, reduce_structure  # noqa: E402
from insep.io import parse_input, parse_text  # noqa: E402
from insep.pipeline import analyze  # noqa: E402


def _run(name, command="analyze"):
    X, bc = parse_input(data_path(name))
    t0 = time.perf_counter()
    A = analyze(X, bc, command=command)
    return A, time.perf_counter() - t0


def _exp(v, q):
    return v if q == 1 else f"{v}^{q}"


def c1():
    bad, worst = [], 0.0
    for p, m, n in [(2, 1, 1), (2, 2, 1), (3, 1, 1), (3, 2, 1), (5, 1, 1)]:
        A, dt = _run(f"fermat_tower_p{p}_m{m}_n{n}.toml")
        worst = max(worst, dt)
        d = A.decomposition.to_json()
        q = p ** (m - 1)
        ok = (d["fixed"] == [] and d["movable"] == sorted(_exp(f"x{i}", q) for i in range(n + 1))
              and d["movable_class"] == [q] and A.fibration.trivial and A.cbf.passed and dt < 60)
        if not ok:
            bad.append((p, m, n))
    return not bad, f"5 cases, slowest {worst:.1f}s" + (f", failing {bad}" if bad else "")


def c2():
    bad, worst = [], 0.0
    for p, m in [(2, 1), (2, 2), (3, 1)]:
        A, dt = _run(f"incidence_p{p}_m{m}.toml")
        worst = max(worst, dt)
        f = A.fibration.to_json()
        q = p ** m
        ok = (f["V_ideal"] == [f"s*x^{q} + t*y^{q} + z^{q}"] and f["movable_over_V_zero"]
              and f["reduced_over_W"] and f["nonreduced_over_KV_root"] and dt < 120)
        if not ok:
            bad.append((p, m))
    return not bad, f"3 cases, slowest {worst:.1f}s" + (f", failing {bad}" if bad else "")


def c3():
    bad, worst = [], 0.0
    for p, m, n in [(2, 1, 1), (2, 2, 1), (2, 1, 2), (3, 1, 1)]:
        A, dt = _run(f"product_p{p}_m{m}_n{n}.toml")
        worst = max(worst, dt)
        d = A.decomposition.to_json()
        qm, qn = p ** (m - 1), p ** (n - 1)
        ok = (d["fixed"] == [{"prime": "u", "multiplicity": qn}] and d["fixed_class"] == [0, qn]
              and d["movable"] == [_exp("x", qm), _exp("y", qm)] and d["movable_class"] == [qm, 0]
              and A.cbf.to_json()["difference"] == [p ** m - qm, p ** n - qn] and A.cbf.passed and dt < 300)
        if not ok:
            bad.append((p, m, n))
    return not bad, f"4 cases, slowest {worst:.1f}s" + (f", failing {bad}" if bad else "")


def c4():
    bad = []
    for p in (2, 3):
        A, _ = _run(f"essential_demo_p{p}.toml", "essential")
        e = A.essential
        coeffs = [1, sigma, tau ** p]
        raised = {t for t in e.L_prime.params if e.L_prime.level(t) == 1}
        ok = (raised == essential_params_oracle(coeffs, p) == {"s"}
              and e.flag_reduced == diagonal_reduced_over_L(coeffs, p) == True  # noqa: E712
              and e.flag_no_sections and e.degree_T_Tprime == p)
        if not ok:
            bad.append(f"demo p={p}")
    for p, m, n in [(2, 1, 1), (2, 2, 1), (3, 1, 1), (3, 2, 1), (5, 1, 1)]:
        A, _ = _run(f"fermat_tower_p{p}_m{m}_n{n}.toml", "essential")
        if A.essential.L_prime != A.bc.target:
            bad.append(f"fermat {p},{m},{n}")
    return not bad, "demo p=2,3 and 5 Fermat towers" + (f", failing {bad}" if bad else "")


def c5():
    t0 = time.perf_counter()
    corpus = [i for prof in PROFILES for i in gen_corpus(2024, 20, prof)]
    fails, checked = [], 0
    for inst in corpus:
        o = check_instance(inst.name, inst.text)
        fails += [f"{inst.name} {f}" for f in o.failures]
        checked += "a" in o.checked
    dt = time.perf_counter() - t0
    ok = not fails and checked >= 50 and dt < 1800 and {i.p for i in corpus} == {2, 3}
    return ok, f"{len(corpus)} instances, {checked} checked, {len(fails)} failures, {dt:.1f}s" + \
        (f": {fails[:3]}" if fails else "")


def c6():
    n = bad = 0
    for p in (2, 3):
        for f in hypersurface_family(p):
            X, bc = parse_text(TEMPLATE.format(p=p, g=str(f).replace("**", "^")))
            Z, cert = reduce_structure(base_change(X, bc))
            h = minimal_nilpotent(f, p)
            n += 1
            if not cert.certified or cert.changed != (h is not None):
                bad += 1
            elif h is not None and not proportional(_as_root_expr(Z.gens[0], Z.field), h, p):
                bad += 1
    return bad == 0, f"{n} plane curves, {bad} disagreements"


def c7():
    names = sorted(os.path.basename(f) for pat in ("fermat_tower_p*", "incidence_p*", "product_p*")
                   for f in glob.glob(data_path(pat + ".toml")))
    names += ["essential_demo_p2.toml", "essential_demo_p3.toml", "smooth_cubic.toml"]
    runs = []
    with tempfile.TemporaryDirectory() as d:
        for k, threads in enumerate(("1", "4", "1")):
            out = os.path.join(d, f"run{k}.json")
            subprocess.run([sys.executable, "-m", "insep.cli", "analyze", *map(data_path, names),
                            "--threads", threads, "--json", out], capture_output=True, check=False)
            with open(out) as fh:
                runs.append([r["hash"] for r in json.load(fh)["reports"]])
    ok = len(runs[0]) == len(names) and runs[0] == runs[1] == runs[2]
    return ok, f"{len(names)} golden inputs x 3 runs (threads 1, 4, 1)"


CRITERIA = [
    (1, "Fermat tower goldens", c1),
    (2, "fibration over the incidence variety", c2),
    (3, "product goldens", c3),
    (4, "essential part", c4),
    (5, "seeded corpus properties", c5),
    (6, "nilpotent oracle agreement", c6),
    (7, "report hash determinism", c7),
]


def _line(num, title, ok, detail, dt):
    return f"{'PASS' if ok else 'FAIL'} criterion {num}: {title} ({detail}; {dt:.1f}s)"


@pytest.mark.slow
@pytest.mark.parametrize("num,title,fn", CRITERIA, ids=[f"criterion{c[0]}" for c in CRITERIA])
def test_criterion(num, title, fn, capsys):
    t0 = time.perf_counter()
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(num, title, ok, detail, time.perf_counter() - t0))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, title, fn in CRITERIA:
        t0 = time.perf_counter()
        ok, detail = fn()
        failed += not ok
        print(_line(num, title, ok, detail, time.perf_counter() - t0), flush=True)
    sys.exit(1 if failed else 0)

"""Analysis reports: canonical JSON, a run hash that ignores timing, and a text view."""

from __future__ import annotations

import hashlib
import json

from . import __version__
from .io import describe_input
from .pipeline import Analysis

SCHEMA = 1
_VOLATILE = ("timing", "hash")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def report_hash(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in _VOLATILE}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


def build_report(A: Analysis, command: str, options: dict | None = None) -> dict:
    rep = {
        "schema": SCHEMA,
        "tool": {"name": "insep", "version": __version__},
        "command": command,
        "options": dict(options or {}),
        "input": dict(describe_input(A.X, A.bc), h0_equals_K=A.h0_equals_K),
        "stages": {},
        "uncertified": sorted(set(A.uncertified)),
        "errors": dict(sorted(A.errors.items())),
    }
    st = rep["stages"]
    if A.reduction is not None:
        st["reduce"] = {"Z": A.Z.format_gens(), "field": A.Z.field.to_json(),
                        "certificate": A.reduction.to_json(),
                        "base_change_reduced": not A.reduction.changed}
    if A.closure is not None:
        st["closure"] = dict(A.closure.to_json(), Y=A.closure.Y.format_gens(),
                             Y_field=A.closure.Y.field.to_json())
    if A.conormal is not None:
        st["conormal"] = A.conormal.to_json()
    if A.decomposition is not None:
        st["decomposition"] = A.decomposition.to_json()
    if A.cbf is not None:
        st["cbf"] = dict(A.cbf.to_json(), x_normal=A.x_normal)
    if A.essential is not None:
        st["essential"] = A.essential.to_json()
    if A.fibration is not None:
        st["fibration"] = A.fibration.to_json()
    rep["timing"] = {k: round(v, 6) for k, v in sorted(A.timing.items())}
    rep["hash"] = report_hash(rep)
    return rep


def error_report(command: str, path: str, exc: BaseException, options: dict | None = None) -> dict:
    rep = {"schema": SCHEMA, "tool": {"name": "insep", "version": __version__}, "command": command,
           "options": dict(options or {}), "input": {"path": str(path)},
           "error": {"type": type(exc).__name__, "message": str(exc)}}
    line = getattr(exc, "line", None)
    if line is not None:
        rep["error"]["line"] = line
        rep["error"]["column"] = getattr(exc, "column", None)
    rep["timing"] = {}
    rep["hash"] = report_hash(rep)
    return rep


def render_text(rep: dict) -> str:
    out = [f"insep {rep['tool']['version']} :: {rep['command']}"]
    if "error" in rep:
        out.append(f"error: {rep['error']['message']}")
        return "\n".join(out)
    inp = rep["input"]
    out.append("X: " + "; ".join(inp["generators"]))
    out.append("raise: " + (", ".join(inp["raise"]) or "(none)"))
    st = rep["stages"]
    if "reduce" in st:
        r = st["reduce"]
        msg = "base change reduced" if r["base_change_reduced"] else "base change not reduced"
        out.append(f"Z: {'; '.join(r['Z'])}  [{r['certificate']['status']}; {msg}]")
    if "closure" in st:
        c = st["closure"]
        out.append(f"Y: {'; '.join(c['Y'])}  [{c['status']}]")
    if "decomposition" in st:
        d = st["decomposition"]
        fixed = " + ".join(f"{f['multiplicity']}*({f['prime']})" for f in d["fixed"]) or "0"
        mov = ", ".join(d["movable"]) or "0"
        out.append(f"fixed part: {fixed}  class {d['fixed_class']}")
        out.append(f"movable part: <{mov}>  class {d['movable_class']}")
    if "cbf" in st:
        c = st["cbf"]
        verdict = "pass" if c["pass"] else "fail"
        if not c["applicable"]:
            verdict += " (not applicable: X is not normal)"
        out.append(f"canonical bundle formula: {c['difference']} vs {c['p_minus_1_times_c']}  {verdict}")
    if "essential" in st:
        e = st["essential"]
        out.append(f"essential part: {e['L_prime_desc']}  deg(T->T') = {e['degree_T_Tprime']}"
                   f"  flags {e['flag_reduced_over_L']}/{e['flag_no_sections']}")
    if "fibration" in st:
        f = st["fibration"]
        out.append(f"fibration: {f['status']}" + (f"  V = ({', '.join(f['V_ideal'])})" if f["V_ideal"] else ""))
    summary = []
    if "reduce" in st:
        summary.append("base change reduced" if st["reduce"]["base_change_reduced"] else "base change not reduced")
    if "decomposition" in st:
        d = st["decomposition"]
        summary.append("trivial decomposition" if not (d["fixed"] or d["movable"]) else "nontrivial decomposition")
    if summary:
        out.append("; ".join(summary))
    if rep["uncertified"]:
        out.append("uncertified: " + ", ".join(rep["uncertified"]))
    for k, v in rep["errors"].items():
        out.append(f"{k}: {v}")
    out.append(f"hash {rep['hash'][:16]}")
    return "\n".join(out)

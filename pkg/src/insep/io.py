"""Input files: TOML with [field], [ambient], [scheme] and [base_change] sections."""

from __future__ import annotations

import json
import re

import tomli

from .geometry import BaseChangeSpec, SchemeDesc
from .poly import PolyParseError, PolyRing, format_poly, parse_poly
from .tower_field import FieldError, TowerField, is_prime

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class InputError(ValueError):
    """Malformed or invalid input, with an optional source position."""

    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(msg + where)
        self.msg = msg


def _locate(text: str, needle: str) -> tuple[int, int] | tuple[None, None]:
    pos = text.find(needle)
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _require(table: dict, key: str, section: str, kind, text: str):
    if key not in table:
        raise InputError(f"[{section}] is missing '{key}'", *_locate(text, f"[{section}]"))
    val = table[key]
    if not isinstance(val, kind) or isinstance(val, bool):
        raise InputError(f"[{section}] '{key}' has the wrong type", *_locate(text, key))
    return val


def parse_text(text: str, check_ci: bool = True) -> tuple[SchemeDesc, BaseChangeSpec]:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise InputError(f"TOML syntax error: {str(exc).split(' (at')[0]}", line, col) from None
    for sec in ("field", "ambient", "scheme"):
        if sec not in doc or not isinstance(doc[sec], dict):
            raise InputError(f"missing section [{sec}]")
    fld, amb, sch = doc["field"], doc["ambient"], doc["scheme"]
    bcs = doc.get("base_change", {})

    p = _require(fld, "p", "field", int, text)
    if not is_prime(p):
        raise InputError(f"p = {p} is not prime", *_locate(text, "p ="))
    params = _require(fld, "params", "field", list, text)
    if not params or not all(isinstance(t, str) and _IDENT.match(t) for t in params):
        raise InputError("params must be a non-empty list of identifiers", *_locate(text, "params"))
    if len(set(params)) != len(params):
        raise InputError("duplicate parameter names", *_locate(text, "params"))
    levels = fld.get("levels", [0] * len(params))
    if not isinstance(levels, list) or len(levels) != len(params) or \
            not all(isinstance(k, int) and not isinstance(k, bool) for k in levels):
        raise InputError("levels must be a list of integers, one per parameter", *_locate(text, "levels"))
    if any(k < 0 for k in levels):
        raise InputError("levels must be non-negative", *_locate(text, "levels"))
    if any(k > 1 for k in levels):
        raise InputError("levels above 1 are not allowed (height > 1)", *_locate(text, "levels"))

    blocks = _require(amb, "blocks", "ambient", list, text)
    variables = _require(amb, "variables", "ambient", list, text)
    if not blocks or len(blocks) != len(variables):
        raise InputError("[ambient] needs one variable list per block", *_locate(text, "variables"))
    names = set(params)
    spec = []
    for b, vs in zip(blocks, variables):
        if not isinstance(b, str) or not _IDENT.match(b) or b == "params":
            raise InputError(f"bad block name {b!r}", *_locate(text, "blocks"))
        if not isinstance(vs, list) or len(vs) < 2 or not all(isinstance(v, str) and _IDENT.match(v) for v in vs):
            raise InputError(f"block {b} needs at least two variable names", *_locate(text, "variables"))
        for v in vs:
            if v in names:
                raise InputError(f"name {v} used twice", *_locate(text, v))
            names.add(v)
        spec.append((b, vs))

    gens = _require(sch, "generators", "scheme", list, text)
    if not gens:
        raise InputError("the generator list is empty", *_locate(text, "generators"))
    field = TowerField(p, tuple(params), tuple(levels))
    ring = PolyRing(p, spec, params)
    polys = []
    for g in gens:
        if not isinstance(g, str):
            raise InputError("generators must be strings", *_locate(text, "generators"))
        try:
            f = parse_poly(g, ring, field.level_map())
        except PolyParseError as exc:
            line, col = _locate(text, g)
            if line is not None:
                col = col + exc.column - 1
            raise InputError(f"cannot parse generator {g!r}: {exc.msg}", line, col) from None
        except (ValueError, FieldError) as exc:
            raise InputError(f"cannot parse generator {g!r}: {exc}", *_locate(text, g)) from None
        if f.is_zero():
            raise InputError(f"generator {g!r} is zero", *_locate(text, g))
        if f.multidegree() is None:
            raise InputError(f"generator {g!r} is not homogeneous in every block", *_locate(text, g))
        if f.is_constant():
            raise InputError(f"generator {g!r} is constant", *_locate(text, g))
        polys.append(f)
    X = SchemeDesc(field, ring, tuple(polys), "X")

    raise_list = bcs.get("raise", [])
    if not isinstance(raise_list, list) or not all(isinstance(t, str) for t in raise_list):
        raise InputError("[base_change] raise must be a list of parameter names", *_locate(text, "raise"))
    for t in raise_list:
        if t not in params:
            raise InputError(f"cannot raise unknown parameter {t}", *_locate(text, "raise"))
    if len(set(raise_list)) != len(raise_list):
        raise InputError("a parameter is raised twice (height > 1)", *_locate(text, "raise"))
    bc = BaseChangeSpec.raise_params(field, raise_list)
    if check_ci and not X.check_complete_intersection():
        raise InputError("the generators do not cut out a complete intersection", *_locate(text, "generators"))
    return X, bc


def parse_input(path) -> tuple[SchemeDesc, BaseChangeSpec]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_text(text)


def _q(s: str) -> str:
    return json.dumps(s)


def print_input(X: SchemeDesc, bc: BaseChangeSpec) -> str:
    """Inverse of parse_text."""
    f = X.field
    lines = ["[field]", f"p = {f.p}",
             "params = [" + ", ".join(_q(t) for t in f.params) + "]",
             "levels = [" + ", ".join(str(k) for k in f.levels) + "]", "",
             "[ambient]",
             "blocks = [" + ", ".join(_q(b) for b, _ in X.blocks) + "]",
             "variables = [" + ", ".join("[" + ", ".join(_q(v) for v in vs) + "]" for _, vs in X.blocks) + "]",
             "", "[scheme]", "generators = ["]
    for g in X.gens:
        lines.append(f"    {_q(format_poly(g, f.level_map()))},")
    lines.append("]")
    lines += ["", "[base_change]", "raise = [" + ", ".join(_q(t) for t in bc.raised) + "]", ""]
    return "\n".join(lines)


def describe_input(X: SchemeDesc, bc: BaseChangeSpec) -> dict:
    return {"field": X.field.to_json(),
            "ambient": {"blocks": [b for b, _ in X.blocks], "variables": [list(v) for _, v in X.blocks]},
            "generators": X.format_gens(), "raise": list(bc.raised),
            "target_field": bc.target.to_json()}

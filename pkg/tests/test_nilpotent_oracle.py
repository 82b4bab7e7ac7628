"""reduce_structure against a brute-force nilpotent search for plane curves."""

import pytest
import sympy as sp

from insep.geometry import base_change, reduce_structure
from insep.ideals import to_sympy
from insep.io import parse_text

from oracles import hypersurface_family, minimal_nilpotent, proportional, sigma, tau

TEMPLATE = """
[field]
p = {p}
params = ["s", "t"]
[ambient]
blocks = ["P"]
variables = [["x", "y", "z"]]
[scheme]
generators = ["{g}"]
[base_change]
raise = ["s", "t"]
"""


def _as_root_expr(f, field):
    """Generator as a sympy expression in x, y, z, sigma, tau."""
    e = to_sympy(f).as_expr()
    sub = {}
    for name, root in (("s", sigma), ("t", tau)):
        sym = sp.Symbol(name)
        sub[sym] = root if field.level(name) == 1 else root ** field.p
    e = e.subs(sub, simultaneous=True)
    return sp.expand(e.subs({sp.Symbol(v): sp.Symbol(v) for v in "xyz"}))


@pytest.mark.parametrize("p", [2, 3])
def test_reduce_structure_matches_nilpotent_oracle(p):
    fam = hypersurface_family(p)
    assert len(fam) >= 30
    nil = red = 0
    for f in fam:
        g = str(f).replace("**", "^")
        X, bc = parse_text(TEMPLATE.format(p=p, g=g))
        Z, cert = reduce_structure(base_change(X, bc))
        assert cert.certified, g
        h = minimal_nilpotent(f, p)
        if h is None:
            red += 1
            assert not cert.changed, g
        else:
            nil += 1
            assert cert.changed, g
            assert len(Z.gens) == 1
            assert proportional(_as_root_expr(Z.gens[0], Z.field), h, p), (g, Z.format_gens(), h)
    # both outcomes are exercised
    assert nil and red

"""Compare the numba and numpy kernel backends.

    python bench/benchmark_kernels.py [--repeat N] [--size N]

Times modular row reduction on random dense matrices and a full pipeline run
on a worked example, once per backend.  Both backends must agree exactly.
"""

import argparse
import statistics
import time

import numpy as np

from insep import kernels
from insep.io import parse_text
from insep.pipeline import analyze

EXAMPLE = """
[field]
p = 2
params = ["r", "s", "t"]

[ambient]
blocks = ["A", "B"]
variables = [["x", "y", "z"], ["u", "v", "w"]]

[scheme]
generators = ["s*x^4 + t*y^4 + z^4", "r*u^2 + s*v^2 + w^2"]

[base_change]
raise = ["s", "t"]
"""


def timed(fn, repeat):
    out, ts = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t0)
    return out, statistics.median(ts)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=160)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    mats = [rng.integers(0, p, size=(args.size, args.size + 7)) for p in (2, 3, 5)]
    X, bc = parse_text(EXAMPLE)

    results = {}
    for name in ("numba", "numpy"):
        kernels.set_backend(name)
        # warm-up so numba compile time is not measured
        kernels.rref_mod_p(mats[0][:4], 2)
        analyze(X, bc)
        rr, t_rref = timed(lambda: [kernels.rref_mod_p(m, p)[0] for m, p in zip(mats, (2, 3, 5))], args.repeat)
        A, t_pipe = timed(lambda: analyze(X, bc), max(1, args.repeat // 2))
        results[name] = (rr, A.Z.format_gens(), t_rref, t_pipe)
        print(f"{name:6s} rref {t_rref * 1e3:9.2f} ms   pipeline {t_pipe * 1e3:9.2f} ms")

    a, b = results["numba"], results["numpy"]
    same = all(np.array_equal(x, y) for x, y in zip(a[0], b[0])) and a[1] == b[1]
    print(f"backends agree: {same}")
    print(f"speed-up rref {b[2] / a[2]:.1f}x, pipeline {b[3] / a[3]:.1f}x")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())

"""Command line front-end.

    insep <command> <input.toml> [more inputs] [--degree-bound N] [--chart J]
          [--json out.json] [--seed S] [--threads T]
    insep gen-corpus --profile P --count N --seed S --out DIR [--p 2|3]

Exit status: 0 when every stage is certified, 2 when some stage is
uncertified, 1 on an error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile

from .corpus import PROFILES, gen_corpus, write_corpus
from .ideals import chart_list
from .io import InputError, parse_input
from .pipeline import STAGES, analyze
from .report import SCHEMA, build_report, canonical_json, error_report, render_text

log = logging.getLogger("insep")

COMMANDS = tuple(STAGES)
DEGREE_CAP = 64
EXIT_OK, EXIT_ERROR, EXIT_UNCERTIFIED = 0, 1, 2


def _bounded_int(lo, hi):
    def conv(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
        if not lo <= v <= hi:
            raise argparse.ArgumentTypeError(f"must lie in {lo}..{hi}")
        return v
    return conv


class _Parser(argparse.ArgumentParser):
    # usage errors are errors (1); 2 is reserved for uncertified runs
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="insep", description="Purely inseparable base change analysis.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=f"run the {cmd} stages")
        sp.add_argument("inputs", nargs="+", metavar="input.toml")
        sp.add_argument("--degree-bound", type=_bounded_int(1, DEGREE_CAP), default=None,
                        help=f"closure search bound (default 2 x max generator degree, cap {DEGREE_CAP})")
        sp.add_argument("--chart", type=_bounded_int(0, 10 ** 6), default=None,
                        help="index of the chart to try first")
        sp.add_argument("--json", dest="json_out", default=None, help="write the JSON report here")
        sp.add_argument("--seed", type=int, default=0, help="recorded in the report; the pipeline is deterministic")
        sp.add_argument("--threads", type=_bounded_int(1, 64), default=1)
    gp = sub.add_parser("gen-corpus", help="write a seeded corpus of input files")
    gp.add_argument("--profile", choices=PROFILES, required=True)
    gp.add_argument("--count", type=_bounded_int(1, 10000), required=True)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--p", type=int, choices=(2, 3), default=None)
    gp.add_argument("--out", required=True)
    return ap


def _write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".insep-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_one(command: str, path: str, degree_bound=None, chart=None, seed: int = 0,
            threads: int = 1) -> tuple[dict, int]:
    """Analyse a single input file.  Returns (report, exit code)."""
    opts = {"degree_bound": degree_bound, "chart": chart, "seed": seed}
    try:
        X, bc = parse_input(path)
        if chart is not None and chart >= len(chart_list(X.ring)):
            raise InputError(f"chart index {chart} out of range 0..{len(chart_list(X.ring)) - 1}")
        A = analyze(X, bc, degree_bound, command, threads=threads, chart=chart)
    except (InputError, OSError) as exc:
        return error_report(command, path, exc, opts), EXIT_ERROR
    except Exception as exc:  # stage failure: report it, never a traceback
        log.debug("stage failure", exc_info=True)
        return error_report(command, path, exc, opts), EXIT_ERROR
    rep = build_report(A, command, opts)
    return rep, (EXIT_UNCERTIFIED if rep["uncertified"] else EXIT_OK)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "gen-corpus":
        paths = write_corpus(gen_corpus(args.seed, args.count, args.profile, args.p), args.out)
        for p in paths:
            print(p)
        return EXIT_OK

    reports, codes = [], []
    for path in args.inputs:
        rep, code = run_one(args.command, path, args.degree_bound, args.chart, args.seed, args.threads)
        reports.append(rep)
        codes.append(code)
        print(render_text(rep))
        if len(args.inputs) > 1:
            print()
    if args.json_out:
        if len(reports) == 1:
            doc = reports[0]
        else:
            # deterministic merge: by input order as given on the command line
            doc = {"schema": SCHEMA, "reports": reports}
        _write_atomic(args.json_out, canonical_json(doc) + "\n")
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_UNCERTIFIED if EXIT_UNCERTIFIED in codes else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

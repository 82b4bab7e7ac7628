import json
import os
import subprocess
import sys

import pytest

from insep.cli import main, run_one
from insep.report import report_hash

from conftest import data_path


def cli(*args):
    return subprocess.run([sys.executable, "-m", "insep.cli", *args], capture_output=True, text=True)


def test_analyze_smooth_cubic(tmp_path):
    out = tmp_path / "r.json"
    r = cli("analyze", data_path("smooth_cubic.toml"), "--json", str(out))
    assert r.returncode == 0, r.stderr
    assert "base change reduced; trivial decomposition" in r.stdout
    raw = out.read_text()
    rep = json.loads(raw)
    assert rep["schema"] == 1
    assert raw.strip() == json.dumps(rep, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    assert rep["hash"] == report_hash(rep)


def test_hash_ignores_timing():
    rep, code = run_one("analyze", data_path("smooth_cubic.toml"))
    assert code == 0
    rep2 = dict(rep, timing={"reduce": 123.0})
    assert report_hash(rep2) == rep["hash"]


def test_essential_demo_exit_zero():
    r = cli("essential", data_path("essential_demo.toml"))
    assert r.returncode == 0, r.stdout + r.stderr
    assert "s^(1/2)" in r.stdout


def test_uncertified_exit_two(tmp_path):
    # a product of two regular curves that is singular along a divisor of
    # class (1,1) after the base change; the closure search cannot normalise it
    out = tmp_path / "u.json"
    r = cli("cbf", data_path("uncertified_product.toml"), "--json", str(out))
    assert r.returncode == 2, r.stdout + r.stderr
    rep = json.loads(out.read_text())
    assert rep["uncertified"] == ["closure"]
    assert rep["stages"]["closure"]["status"] == "closure-at-bound"


@pytest.mark.parametrize("args", [
    ["analyze", data_path("smooth_cubic.toml"), "--degree-bound", "65"],
    ["analyze", data_path("smooth_cubic.toml"), "--degree-bound", "0"],
    ["analyze", data_path("smooth_cubic.toml"), "--chart", "7"],
    ["analyze", "/nonexistent/input.toml"],
    ["frobnicate", data_path("smooth_cubic.toml")],
])
def test_errors_exit_one(args):
    r = cli(*args)
    assert r.returncode == 1, (r.stdout, r.stderr)


def test_validation_error_report(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(open(data_path("smooth_cubic.toml")).read().replace("x^3 + y^3", "x^3 + y^2"))
    out = tmp_path / "r.json"
    assert main(["reduce", str(bad), "--json", str(out)]) == 1
    err = json.loads(out.read_text())["error"]
    assert err["type"] == "InputError" and err["line"] == 12 and err["column"] == 6


def test_multiple_inputs_merge_in_order(tmp_path):
    out = tmp_path / "m.json"
    a, b = data_path("smooth_cubic.toml"), data_path("fermat_tower.toml")
    assert main(["reduce", b, a, "--json", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and [r["input"]["generators"][0][:4] for r in doc["reports"]] == ["s0*x", "x^3 "]


def test_hash_stable_across_runs_and_threads(tmp_path):
    hashes = set()
    for threads in ("1", "2", "1"):
        out = tmp_path / f"h{threads}.json"
        r = cli("analyze", data_path("incidence_p2_m1.toml"), "--threads", threads, "--json", str(out))
        assert r.returncode == 0, r.stdout + r.stderr
        hashes.add(json.loads(out.read_text())["hash"])
    assert len(hashes) == 1


def test_gen_corpus_cli(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    for d in (d1, d2):
        r = cli("gen-corpus", "--profile", "fermat-product", "--count", "4", "--seed", "9", "--out", str(d))
        assert r.returncode == 0, r.stderr
    names = sorted(os.listdir(d1))
    assert len(names) == 4 and names == sorted(os.listdir(d2))
    for n in names:
        assert (d1 / n).read_text() == (d2 / n).read_text()
    r = cli("gen-corpus", "--profile", "nope", "--count", "1", "--out", str(d1))
    assert r.returncode == 1

import os

import pytest

from insep.corpus import PROFILES, gen_corpus, write_corpus
from insep.io import parse_text, print_input

from corpus_checks import check_instance

PER_PROFILE = 20


@pytest.fixture(scope="module")
def corpus():
    return [inst for prof in PROFILES for inst in gen_corpus(2024, PER_PROFILE, prof)]


def test_generation_is_deterministic(tmp_path):
    for prof in PROFILES:
        a = gen_corpus(7, 6, prof)
        b = gen_corpus(7, 6, prof)
        assert [i.text for i in a] == [i.text for i in b]
    assert gen_corpus(7, 6, PROFILES[0])[0].text != gen_corpus(8, 6, PROFILES[0])[0].text
    paths = write_corpus(gen_corpus(1, 3, "mixed-level"), tmp_path)
    assert sorted(os.listdir(tmp_path)) == sorted(os.path.basename(p) for p in paths)


def test_single_instance_profile_shape():
    (inst,) = gen_corpus(1, 1, "fermat-hypersurface", p=2)
    X, bc = parse_text(inst.text)
    assert X.field.p == 2 and len(X.gens) == 1 and bc.raised
    # not every coefficient may be a square, or X itself would be non-reduced
    assert "s" in inst.text or "t" in inst.text


def test_mixed_level_first_instance_is_partial():
    inst = gen_corpus(3, 1, "mixed-level", p=3)[0]
    X, bc = parse_text(inst.text)
    low = [t for t in X.field.params if X.field.level(t) == 0]
    assert 0 < len(bc.raised) < len(low)


def test_corpus_primes_alternate(corpus):
    assert {i.p for i in corpus} == {2, 3}


def test_corpus_round_trips(corpus):
    for inst in corpus:
        X, bc = parse_text(inst.text)
        X2, bc2 = parse_text(print_input(X, bc))
        assert X2.gens == X.gens and bc2 == bc


@pytest.mark.slow
def test_corpus_properties(corpus):
    checked, failures, skips = 0, [], {}
    for inst in corpus:
        o = check_instance(inst.name, inst.text)
        failures += [f"{inst.name} {f}" for f in o.failures]
        if "a" in o.checked:
            checked += 1
        for k, why in o.skipped.items():
            skips.setdefault(k, []).append(inst.name)
    print(f"\ncorpus: {len(corpus)} instances, {checked} fully checked; skipped " +
          ", ".join(f"{k}:{len(v)}" for k, v in sorted(skips.items())))
    assert not failures, "\n".join(failures)
    assert checked >= 50

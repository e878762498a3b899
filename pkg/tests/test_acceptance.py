"""Acceptance suite: one test per criterion, each printing a PASS line.

Every check is an exact Boolean match; there are no numeric tolerances.
Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""
import itertools
import random
import time

import numpy as np
import pytest

from regcorr.algebra import dist_duality_roundtrip, duality_roundtrip
from regcorr.classify import find_certificate, is_inductive, is_sahlqvist
from regcorr.engine import Guided, run
from regcorr.fol import (FAnd, REFERENCE_CONDITIONS, eval_fo, correspondent,
                         eval_fo_family, fo_equivalent, resolve_condition,
                         standard_translation)
from regcorr.randgen import random_inductive_corpus
from regcorr.semantics import (DistFrame, Frame, Model, _dist_halves,
                               all_frames_family, enumerate_dist_frames,
                               enumerate_frames, enumerate_posets,
                               eval_quasi_family, frame_valid_family,
                               satisfies)
from regcorr.syntax import DUAL, ONE, parse, variables

CORPUS_SEED = 20260809
CORPUS_SIZE = 200


@pytest.fixture(scope="module")
def corpus():
    return random_inductive_corpus(CORPUS_SEED, CORPUS_SIZE, depth=3, nvars=3)


@pytest.fixture(scope="module")
def outputs(lemmon, corpus, sig):
    """Guided runs over the whole verification corpus (axioms + random)."""
    out = {}
    for name, ineq in lemmon.items():
        out[name] = (ineq, run(ineq, Guided(find_certificate(ineq, sig)), sig))
    for i, (ineq, cert) in enumerate(corpus):
        out[f"rand{i}"] = (ineq, run(ineq, Guided(cert), sig))
    return out


def test_criterion_1_lemmon_correspondents(lemmon, sig):
    t0 = time.perf_counter()
    expected = {
        "(2)": REFERENCE_CONDITIONS["pre-normal reflexivity"],
        "(4)": FAnd(REFERENCE_CONDITIONS["pre-normal transitivity"],
                    REFERENCE_CONDITIONS["closure under normality"]),
        "(5)": FAnd(REFERENCE_CONDITIONS["normality"],
                    REFERENCE_CONDITIONS["pre-normal euclideanness"]),
        "(1)": REFERENCE_CONDITIONS["pre-normal transitivity"],
        "(1')": REFERENCE_CONDITIONS["top"],
    }
    for name, target in expected.items():
        corr = correspondent(lemmon[name], sig)
        assert fo_equivalent(corr, target, 3), name
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"\nACCEPT 1 correspondents of (1),(1'),(2),(4),(5) match their "
          f"frame conditions on all 729 frames [{elapsed:.2f}s]: PASS")


def test_criterion_2_classification(lemmon, sig):
    checks = []
    for name in ("(2)", "(4)"):
        checks.append(is_sahlqvist(lemmon[name], {"p": ONE}, sig)[0])
    checks.append(is_sahlqvist(lemmon["(5)"], {"p": DUAL}, sig)[0])
    for name in ("(1)", "(1')"):
        checks.append(is_sahlqvist(lemmon[name], {"p": ONE, "q": DUAL}, sig)[0])
        checks.append(not is_sahlqvist(lemmon[name], {"p": ONE, "q": ONE}, sig)[0])
        checks.append(is_inductive(lemmon[name], {"p": ONE, "q": ONE},
                                   {("p", "q")}, sig)[0])
        checks.append(not is_inductive(lemmon[name], {"p": ONE, "q": ONE},
                                       frozenset(), sig)[0])
    assert all(checks), checks
    print("\nACCEPT 2 classification of the axiom corpus (exact): PASS")


def test_criterion_3_soundness_at_desk_scale(outputs, sig):
    t0 = time.perf_counter()
    fam = all_frames_family(3)
    assert len(fam) == 729
    mismatches = 0
    for name, (ineq, res) in outputs.items():
        assert res.ok, name
        inp = frame_valid_family(fam, ineq, sig)
        holds = np.ones(len(fam), dtype=bool)
        for q in res.quasis:
            holds &= eval_quasi_family(fam, q, sig)
        mismatches += int((inp != holds).sum())
    elapsed = time.perf_counter() - t0
    assert mismatches == 0
    assert elapsed < 300.0
    print(f"\nACCEPT 3 soundness of {len(outputs)} runs on all 729 frames, "
          f"0 mismatches [{elapsed:.2f}s]: PASS")


def test_criterion_4_guided_success(outputs):
    bad = [name for name, (_, res) in outputs.items()
           if not (res.ok and res.safe and all(
               not variables(q.consequent) and
               all(not variables(i) for i in q.antecedent)
               for q in res.quasis))]
    assert not bad, bad
    print(f"\nACCEPT 4 guided runs safe+successful+pure on "
          f"{len(outputs)}/{len(outputs)} inputs: PASS")


def test_criterion_5_duality():
    t0 = time.perf_counter()
    total = 0
    for n in (1, 2, 3):
        for f in enumerate_frames(n):
            assert duality_roundtrip(f) is not None, f
            total += 1
    assert total == 3 + 25 + 729
    rng = random.Random(CORPUS_SEED)
    for _ in range(200):
        normal = rng.randrange(16)
        succ = tuple(rng.randrange(16) if (normal >> w) & 1 else 0
                     for w in range(4))
        f = Frame(4, normal, succ)
        assert duality_roundtrip(f) is not None, f
    dist_total = 0
    for n in (1, 2, 3):
        for poset in enumerate_posets(n):
            if n <= 2:
                for df in enumerate_dist_frames(poset):
                    assert dist_duality_roundtrip(df) is not None, df
                    dist_total += 1
            else:
                f_parts = _dist_halves(poset, additive=True)
                g_parts = _dist_halves(poset, additive=False)
                zero = (0,) * 3
                for nf, sf in f_parts:
                    assert dist_duality_roundtrip(
                        DistFrame(poset, nf, 0, sf, zero)) is not None
                    dist_total += 1
                for ng, sg in g_parts:
                    assert dist_duality_roundtrip(
                        DistFrame(poset, 0, ng, zero, sg)) is not None
                    dist_total += 1
                for _ in range(10):
                    nf, sf = rng.choice(f_parts)
                    ng, sg = rng.choice(g_parts)
                    assert dist_duality_roundtrip(
                        DistFrame(poset, nf, ng, sf, sg)) is not None
                    dist_total += 1
    elapsed = time.perf_counter() - t0
    print(f"\nACCEPT 5 duality round-trips: 757/757 classical (+200 sampled "
          f"at n=4), {dist_total} distributive, 0 failures [{elapsed:.2f}s]: PASS")


def test_criterion_6_regularity_laws(frames3):
    law = [parse("box p /\\ box q <= box(p /\\ q)"),
           parse("box(p /\\ q) <= box p /\\ box q")]
    fam = all_frames_family(3)
    for ineq in law:
        assert frame_valid_family(fam, ineq).all()
    checked = 0
    for n in (1, 2, 3):
        for f in enumerate_frames(n):
            members = list(range(f.full + 1))
            for r in range(1, len(members) + 1):
                for family in itertools.combinations(members, r):
                    union = 0
                    joined = 0
                    for x in family:
                        union |= x
                        joined |= f.dia(x)
                    assert f.dia(union) == joined
                    checked += 1
            assert (f.dia(0) == 0) == (f.normal == f.full)
    nec = parse("top <= box top")
    fam_small = all_frames_family(2)
    valid = frame_valid_family(fam_small, nec)
    for f, v in zip(fam_small.frames, valid):
        assert v == (f.normal == f.full)
    print(f"\nACCEPT 6 regularity laws on all frames up to 3 worlds "
          f"({checked} nonempty join families): PASS")


def test_criterion_7_translation_adequacy(frames3):
    from test_fol import _random_expanded_formula
    rng = random.Random(CORPUS_SEED)
    mismatches = 0
    for _ in range(500):
        frame = rng.choice(frames3)
        phi = _random_expanded_formula(rng, rng.randint(1, 3))
        w = rng.randrange(frame.n)
        val = {v: rng.randrange(frame.full + 1) for v in variables(phi)}
        env = {"i": rng.randrange(frame.n), "m": rng.randrange(frame.n)}
        st = standard_translation(phi)
        lhs = satisfies(Model(frame, val), w, phi, env)
        rhs = eval_fo(frame, st, env={**env, "x": w}, preds=val)
        mismatches += lhs != rhs
    assert mismatches == 0
    print("\nACCEPT 7 standard translation adequacy on 500 random instances, "
          "0 mismatches: PASS")


def test_criterion_8_e5_equals_s5():
    cond = resolve_condition(
        "pre-normal reflexivity & pre-normal euclideanness & normality")
    for n in (1, 2, 3):
        fam = all_frames_family(n)
        sat = eval_fo_family(fam, cond)
        for f, s in zip(fam.frames, sat):
            total_equiv = f.normal == f.full and _is_equivalence(f)
            assert bool(s) == total_equiv, f
    print("\nACCEPT 8 E5 frame class equals {N = W, S an equivalence} "
          "on all frames up to 3 worlds (both inclusions): PASS")


def _is_equivalence(f: Frame) -> bool:
    for w in range(f.n):
        if not (f.succ[w] >> w) & 1:
            return False
        for v in range(f.n):
            if (f.succ[w] >> v) & 1:
                if not (f.succ[v] >> w) & 1:
                    return False
                if f.succ[v] & ~f.succ[w]:
                    return False
    return True

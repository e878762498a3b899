"""Command-line front end: classify, correspond, check, duality, axioms, fuzz."""
from __future__ import annotations

import argparse
import json
import random
import sys
import time
from typing import Optional

import numpy as np

from .classify import Certificate, find_certificate, is_inductive, is_sahlqvist
from .engine import Exhaustive, Guided, RunResult, run
from .fol import (FAnd, FOFormula, correspondent, eval_fo_family,
                  fo_equivalent, fo_text, resolve_condition, simplify)
from .randgen import random_inductive_corpus
from .semantics import (DistFrame, Frame, _dist_halves, all_frames_family,
                        enumerate_dist_frames, enumerate_frames,
                        enumerate_posets, eval_quasi_family, frame_count,
                        frame_valid_family)
from .algebra import dist_duality_roundtrip, duality_roundtrip
from .syntax import (DUAL, HEYTING, LATTICE, ONE, Inequality, ParseError,
                     Signature, parse, to_text)

LEMMON_AXIOMS = {
    "(1)": "box(p -> q) <= box(box p -> box q)",
    "(1')": "box(p -> q) <= (box p -> box q)",
    "(2)": "box p <= p",
    "(4)": "box p <= box box p",
    "(5)": "dia p <= box dia p",
}

LEMMON_CONDITIONS = {
    "(1)": "pre-normal transitivity",
    "(1')": "top",
    "(2)": "pre-normal reflexivity",
    "(4)": "pre-normal transitivity & closure under normality",
    "(5)": "normality & pre-normal euclideanness",
}

LEMMON_SYSTEMS = {
    "E2": (("(1')", "(2)"), "pre-normal reflexivity"),
    "E3": (("(1)", "(2)"), "pre-normal reflexivity & pre-normal transitivity"),
    "E4": (("(1')", "(2)", "(4)"),
           "pre-normal reflexivity & pre-normal transitivity & closure under normality"),
    "E5": (("(1')", "(2)", "(5)"),
           "pre-normal reflexivity & pre-normal euclideanness & normality"),
}


def _load_signature(args) -> Signature:
    base = HEYTING if getattr(args, "base", "heyting") == "heyting" else LATTICE
    if getattr(args, "sig", None):
        return Signature.from_file(args.sig, base=base)
    return Signature((), base=base)


def _parse_eps(text: Optional[str]) -> Optional[dict[str, str]]:
    if not text:
        return None
    out = {}
    for part in text.split(","):
        name, _, val = part.partition("=")
        if val not in (ONE, DUAL):
            raise SystemExit(f"bad order type entry {part!r} (want var=1 or var=d)")
        out[name.strip()] = val
    return out


def _parse_omega(text: Optional[str]) -> frozenset[tuple[str, str]]:
    if not text:
        return frozenset()
    pairs = set()
    for part in text.split(","):
        lo, sep, hi = part.partition("<")
        if not sep:
            raise SystemExit(f"bad dependency entry {part!r} (want a<b)")
        pairs.add((lo.strip(), hi.strip()))
    # close transitively so users can give just the covering pairs
    changed = True
    while changed:
        changed = False
        for a, b in list(pairs):
            for c, d in list(pairs):
                if b == c and (a, d) not in pairs:
                    pairs.add((a, d))
                    changed = True
    return frozenset(pairs)


def _read_inequality(args, sig: Signature) -> Inequality:
    text = args.inequality
    if getattr(args, "file", None):
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read().strip()
    if not text:
        raise SystemExit("no inequality given")
    obj = parse(text, sig)
    if not isinstance(obj, Inequality):
        raise SystemExit("expected an inequality of the form `formula <= formula`")
    return obj


def _emit(args, report: dict, human: str) -> None:
    if args.json:
        print(json.dumps(report, indent=2, default=str))
    else:
        print(human, end="")


def cmd_classify(args) -> int:
    sig = _load_signature(args)
    ineq = _read_inequality(args, sig)
    eps = _parse_eps(args.eps)
    report: dict = {"input": to_text(ineq)}
    lines = [f"input: {to_text(ineq)}"]
    if eps is not None:
        omega = _parse_omega(args.omega)
        sahl, v1 = is_sahlqvist(ineq, eps, sig)
        ind, v2 = is_inductive(ineq, eps, omega, sig)
        report.update({"eps": eps, "omega": sorted(omega),
                       "sahlqvist": sahl, "inductive": ind,
                       "violations": [v.to_json() for v in (v1 if not sahl else v2)]})
        lines.append(f"sahlqvist at given order type: {sahl}")
        lines.append(f"inductive at given (order type, dependency order): {ind}")
        for v in (v1 if not sahl else []) + (v2 if not ind else []):
            lines.append(f"  violation [{v.var}] {v.path}: {v.reason}")
        ok = True
    else:
        cert = find_certificate(ineq, sig)
        if cert is None:
            report["certificate"] = None
            lines.append("certificate: none found")
            ok = False
        else:
            report["certificate"] = cert.to_json()
            lines.append(f"certificate: {json.dumps(cert.to_json())}")
            ok = True
    _emit(args, report, "\n".join(lines) + "\n")
    return 0 if ok else 1


def _run_with_report(ineq: Inequality, sig: Signature) -> tuple[Optional[Certificate], RunResult]:
    cert = find_certificate(ineq, sig)
    if cert is not None:
        return cert, run(ineq, Guided(cert), sig)
    return None, run(ineq, Exhaustive(), sig)


def _sample_frames_4(count: int, seed: int) -> "FrameFamily":
    from .semantics import FrameFamily
    rng = random.Random(seed)
    frames = []
    for _ in range(count):
        normal = rng.randrange(16)
        succ = tuple(rng.randrange(16) if (normal >> w) & 1 else 0
                     for w in range(4))
        frames.append(Frame(4, normal, succ))
    return FrameFamily(frames)


def _deep_verdict(ineq: Inequality, corr: FOFormula, sig: Signature,
                  samples: int = 500, seed: int = 0) -> bool:
    fam = _sample_frames_4(samples, seed)
    inp = frame_valid_family(fam, ineq, sig)
    out = eval_fo_family(fam, corr)
    return bool((inp == out).all())


def cmd_correspond(args) -> int:
    sig = _load_signature(args)
    ineq = _read_inequality(args, sig)
    t0 = time.perf_counter()
    cert, res = _run_with_report(ineq, sig)
    report: dict = {"input": to_text(ineq),
                    "certificate": cert.to_json() if cert else None,
                    "safe": res.safe, "success": res.ok}
    lines = [f"input: {to_text(ineq)}",
             f"certificate: {json.dumps(cert.to_json()) if cert else 'none (bounded search)'}"]
    if not res.ok:
        report["remaining_variables"] = sorted(res.remaining_variables)
        lines.append(f"FAILED: variables left {sorted(res.remaining_variables)}")
        _emit(args, report, "\n".join(lines) + "\n")
        return 1
    report["pure"] = [to_text(q) for q in res.quasis]
    lines.append(f"safe run: {res.safe}")
    lines.append("pure quasi-inequalities:")
    for q in res.quasis:
        lines.append(f"  {to_text(q)}")
    try:
        corr = correspondent(ineq, sig, result=res)
    except ValueError as exc:
        # custom connectives have no single-relation frame reading: the pure
        # output is still the result, but it cannot be translated or verified
        report["correspondent"] = None
        report["note"] = str(exc)
        lines.append(f"correspondent: unavailable ({exc})")
        _emit(args, report, "\n".join(lines) + "\n")
        return 0
    report["correspondent"] = fo_text(corr)
    lines.append(f"correspondent: {fo_text(corr)}")
    verdicts: dict = {}
    for n in range(1, args.max_n + 1):
        fam = all_frames_family(n)
        inp = frame_valid_family(fam, ineq, sig)
        out = eval_fo_family(fam, corr)
        verdicts[n] = bool((inp == out).all())
    if args.deep:
        verdicts["4 (sampled)"] = _deep_verdict(ineq, corr, sig)
    report["verified"] = verdicts
    report["elapsed_s"] = round(time.perf_counter() - t0, 3)
    lines.append("verification (input valid iff correspondent holds): "
                 + ", ".join(f"n={n}: {'ok' if v else 'MISMATCH'}"
                             for n, v in verdicts.items()))
    if args.trace:
        for step in res.trace:
            print(json.dumps(step.to_json()))
    _emit(args, report, "\n".join(lines) + "\n")
    return 0 if all(verdicts.values()) else 1


def cmd_check(args) -> int:
    sig = _load_signature(args)
    ineq = _read_inequality(args, sig)
    target = resolve_condition(args.sentence)
    corr = correspondent(ineq, sig)
    ok = fo_equivalent(corr, target, args.max_n)
    report = {"input": to_text(ineq), "sentence": fo_text(target),
              "correspondent": fo_text(corr), "max_n": args.max_n,
              "equivalent": ok}
    _emit(args, report, ("equivalent" if ok else "NOT equivalent")
          + f" (all frames up to {args.max_n} worlds)\n")
    return 0 if ok else 1


def cmd_duality(args) -> int:
    rng = random.Random(args.seed)
    report: dict = {"classical": {}, "distributive": {}}
    lines = []
    ok = True
    for n in range(1, args.max_n + 1):
        fails = sum(1 for f in enumerate_frames(n) if duality_roundtrip(f) is None)
        total = frame_count(n)
        report["classical"][n] = {"total": total, "fails": fails}
        lines.append(f"classical n={n}: {total - fails}/{total} round-trips pass")
        ok = ok and fails == 0
    if args.deep:
        fails = 0
        frames = []
        for _ in range(args.samples):
            n = 4
            normal = rng.randrange(1 << n)
            succ = tuple(rng.randrange(1 << n) if (normal >> w) & 1 else 0
                         for w in range(n))
            frames.append(Frame(n, normal, succ))
        for f in frames:
            if duality_roundtrip(f) is None:
                fails += 1
        report["classical"]["4 (sampled)"] = {"total": len(frames), "fails": fails}
        lines.append(f"classical n=4 sampled: {len(frames) - fails}/{len(frames)} pass")
        ok = ok and fails == 0
    dist_total = dist_fails = 0
    for n in range(1, min(args.max_n, 3) + 1):
        for poset in enumerate_posets(n):
            if n <= 2:
                for df in enumerate_dist_frames(poset):
                    dist_total += 1
                    if dist_duality_roundtrip(df) is None:
                        dist_fails += 1
            else:
                f_parts = _dist_halves(poset, additive=True)
                g_parts = _dist_halves(poset, additive=False)
                for _ in range(args.dist_samples):
                    nf, sf = rng.choice(f_parts)
                    ng, sg = rng.choice(g_parts)
                    df = DistFrame(poset, nf, ng, sf, sg)
                    dist_total += 1
                    if dist_duality_roundtrip(df) is None:
                        dist_fails += 1
    report["distributive"] = {"total": dist_total, "fails": dist_fails}
    lines.append(f"distributive: {dist_total - dist_fails}/{dist_total} round-trips pass")
    ok = ok and dist_fails == 0
    _emit(args, report, "\n".join(lines) + "\n")
    return 0 if ok else 1


def cmd_axioms(args) -> int:
    sig = Signature((), base=HEYTING)
    report: dict = {"axioms": {}, "systems": {}}
    lines = []
    ok = True
    t0 = time.perf_counter()
    corrs: dict[str, FOFormula] = {}
    for name, text in LEMMON_AXIOMS.items():
        ineq = parse(text, sig)
        cert, res = _run_with_report(ineq, sig)
        corr = correspondent(ineq, sig, result=res)
        corrs[name] = corr
        target = resolve_condition(LEMMON_CONDITIONS[name])
        equal = fo_equivalent(corr, target, args.max_n)
        ok = ok and equal and res.ok and res.safe
        report["axioms"][name] = {
            "inequality": text,
            "certificate": cert.to_json() if cert else None,
            "safe": res.safe,
            "pure": [to_text(q) for q in res.quasis],
            "correspondent": fo_text(corr),
            "expected": LEMMON_CONDITIONS[name],
            "equivalent": equal,
        }
        if args.deep:
            deep = _deep_verdict(ineq, corr, sig)
            report["axioms"][name]["deep"] = deep
            ok = ok and deep
        lines.append(f"{name:5s} {text}")
        lines.append(f"      certificate {json.dumps(cert.to_json()) if cert else 'none'}"
                     f"  safe={res.safe}")
        lines.append(f"      condition: {LEMMON_CONDITIONS[name]}  "
                     f"[{'ok' if equal else 'MISMATCH'}]")
    for sys_name, (axs, condition) in LEMMON_SYSTEMS.items():
        combined = None
        for a in axs:
            combined = corrs[a] if combined is None else FAnd(combined, corrs[a])
        target = resolve_condition(condition)
        equal = fo_equivalent(simplify(combined), target, args.max_n)
        ok = ok and equal
        report["systems"][sys_name] = {"axioms": list(axs), "condition": condition,
                                       "equivalent": equal}
        lines.append(f"{sys_name}: {condition}  [{'ok' if equal else 'MISMATCH'}]")
    e5 = _check_e5_s5(args.max_n)
    report["e5_equals_s5"] = e5
    lines.append(f"E5 frame class = (N = W and S an equivalence): "
                 f"[{'ok' if e5 else 'MISMATCH'}]")
    ok = ok and e5
    report["elapsed_s"] = round(time.perf_counter() - t0, 3)
    lines.append(f"elapsed: {report['elapsed_s']}s")
    _emit(args, report, "\n".join(lines) + "\n")
    return 0 if ok else 1


def _check_e5_s5(max_n: int) -> bool:
    """E5's frame class must coincide with {N = W, S an equivalence}."""
    cond = resolve_condition(LEMMON_SYSTEMS["E5"][1])
    for n in range(1, max_n + 1):
        fam = all_frames_family(n)
        lhs = eval_fo_family(fam, cond)
        rhs = np.array([_is_total_equivalence(f) for f in fam.frames])
        if not (lhs == rhs).all():
            return False
    return True


def _is_total_equivalence(f: Frame) -> bool:
    if f.normal != f.full:
        return False
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


def cmd_fuzz(args) -> int:
    sig = Signature((), base=HEYTING)
    t0 = time.perf_counter()
    corpus = random_inductive_corpus(args.seed, args.count, depth=args.depth,
                                     nvars=args.vars)
    fam = all_frames_family(args.max_n)
    mismatches = unsafe = failures = 0
    for ineq, cert in corpus:
        res = run(ineq, Guided(cert), sig)
        if not res.ok:
            failures += 1
            continue
        if not res.safe:
            unsafe += 1
        inp = frame_valid_family(fam, ineq, sig)
        out = np.ones(len(fam), dtype=bool)
        for q in res.quasis:
            out &= eval_quasi_family(fam, q, sig)
        if not (inp == out).all():
            mismatches += 1
    report = {"count": len(corpus), "seed": args.seed, "max_n": args.max_n,
              "failures": failures, "unsafe": unsafe, "mismatches": mismatches,
              "elapsed_s": round(time.perf_counter() - t0, 3)}
    ok = failures == unsafe == mismatches == 0
    _emit(args, report,
          f"{len(corpus)} certified inequalities: failures={failures} "
          f"unsafe={unsafe} mismatches={mismatches} "
          f"({report['elapsed_s']}s)\n")
    return 0 if ok else 1


def main(argv: Optional[list[str]] = None) -> int:
    top = argparse.ArgumentParser(
        prog="regcorr",
        description="classify modal inequalities over regular signatures, "
                    "eliminate variables, and verify first-order frame "
                    "correspondents on finite frames with impossible worlds")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, ineq_arg=True):
        if ineq_arg:
            p.add_argument("inequality", nargs="?", help="inline inequality text")
            p.add_argument("--file", help="read the inequality from a file")
        p.add_argument("--sig", help="signature file (name arity kind coordtypes)")
        p.add_argument("--base", choices=["heyting", "lattice"], default="heyting")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("classify", help="certificate search / check at a given order type")
    common(p)
    p.add_argument("--eps", help="order type, e.g. p=1,q=d")
    p.add_argument("--omega", help="dependency order, e.g. p<q")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("correspond", help="run the full pipeline and verify")
    common(p)
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--deep", action="store_true", help="also sample frames at n=4")
    p.add_argument("--trace", action="store_true", help="emit the rule trace as JSON lines")
    p.set_defaults(func=cmd_correspond)

    p = sub.add_parser("check", help="bounded equivalence of a correspondent and a sentence")
    common(p)
    p.add_argument("sentence", help="named condition or TPTP-flavoured sentence")
    p.add_argument("--max-n", type=int, default=3)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("duality", help="frame/algebra round-trip checks")
    common(p, ineq_arg=False)
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--deep", action="store_true", help="also sample frames at n=4")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--dist-samples", type=int, default=25,
                   help="sampled distributive frames per 3-element poset")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_duality)

    p = sub.add_parser("axioms", help="the built-in epistemic axiom corpus")
    common(p, ineq_arg=False)
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--deep", action="store_true")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("fuzz", help="random certified inequalities: run + verify")
    common(p, ineq_arg=False)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--vars", type=int, default=3)
    p.add_argument("--max-n", type=int, default=3)
    p.set_defaults(func=cmd_fuzz)

    args = top.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValueError) as exc:
        if getattr(args, "json", False):
            print(json.dumps({"error": str(exc)}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

import itertools

import pytest

from conftest import all_valuations
from regcorr.classify import find_certificate
from regcorr.engine import (
    AckermannFormError, Exhaustive, Guided, LabeledIneq, RuleError, System,
    ackermann, apply_rule, first_approximation, fold_constants, preprocess,
    run, simplify_quasi,
)
from regcorr.semantics import Model, extension
from regcorr.syntax import (
    ADDITIVE, ConnectiveDecl, MULTIPLICATIVE, ONE, QuasiInequality,
    Signature, conominals, is_pure, nominals, parse, to_text, variables,
)


def system_of(*texts, sig=None):
    sig = sig or Signature()
    return System(tuple(LabeledIneq(parse(t, sig, expanded=True)) for t in texts))


def texts_of(sys):
    return [to_text(li.ineq) for li in sys.ineqs]


# --- preprocessing -----------------------------------------------------------

def test_preprocess_distributes_and_splits(sig):
    got = preprocess(parse("dia(p \\/ q) <= r"), sig)
    assert got == [parse("dia p <= r"), parse("dia q <= r")]


def test_preprocess_split_only(sig):
    got = preprocess(parse("p /\\ (q \\/ r) <= s"), sig)
    assert got == [parse("p /\\ q <= s"), parse("p /\\ r <= s")]


def test_preprocess_identity(sig):
    assert preprocess(parse("box p <= p"), sig) == [parse("box p <= p")]


def test_preprocess_keeps_residual_disjunction(sig):
    # the \/ sits below a box: no distribution may smear the other conjunct in
    got = preprocess(parse("box((p \\/ top) /\\ dia q) <= r"), sig)
    assert got == [parse("box((p \\/ top) /\\ dia q) <= r")]


def test_preprocess_monotone_elimination(sig):
    # p is negative on the left and positive on the right: replaced by bot
    got = preprocess(parse("(p -> q) <= p \\/ q"), sig)
    assert got == [parse("(bot -> q) <= bot \\/ q")]
    # one-sided occurrences are left alone
    got = preprocess(parse("p /\\ q <= q"), sig)
    assert got == [parse("p /\\ q <= q")]


def test_preprocess_preserves_certificates(sig):
    # every preprocessed piece must still be certified by the input's witness
    from regcorr.classify import is_inductive, is_sahlqvist
    from regcorr.randgen import random_inductive_corpus

    for ineq, cert in random_inductive_corpus(7, 60):
        for piece in preprocess(ineq, sig):
            eps = {v: cert.eps[v] for v in variables(piece)}
            if cert.kind == "sahlqvist":
                ok, violations = is_sahlqvist(piece, eps, sig)
            else:
                ok, violations = is_inductive(piece, eps, cert.omega, sig)
            assert ok, (ineq, piece, violations)


def test_preprocess_preserves_validity(sig, frames2):
    from regcorr.semantics import frame_valid
    cases = ["dia(p \\/ q) <= r", "p /\\ (q \\/ r) <= s",
             "box(p \\/ q) <= dia p", "(p -> q) <= p \\/ q",
             "dia dia (p \\/ (q /\\ r)) <= box p"]
    for text in cases:
        ineq = parse(text, sig)
        pieces = preprocess(ineq, sig)
        for f in frames2:
            assert frame_valid(f, ineq, sig) == \
                all(frame_valid(f, p, sig) for p in pieces), (text, f)


# --- first approximation -----------------------------------------------------

def test_first_approximation(sig):
    sys = first_approximation(parse("box p <= p"))
    assert texts_of(sys) == ["#i0 <= box p", "p <= @m0"]
    sys = first_approximation(parse("bot <= top"))
    assert texts_of(sys) == ["#i0 <= bot", "top <= @m0"]
    sys = first_approximation(parse("dia p <= box dia p"))
    assert texts_of(sys) == ["#i0 <= dia p", "box dia p <= @m0"]


# --- individual rules ---------------------------------------------------------

def test_adjunction_on_box(sig):
    sys = system_of("#i <= box p")
    out, = apply_rule(sys, "adj_mult", 0, sig)
    assert texts_of(out) == ["#i <= box top", "bdia[box] #i <= p"]
    assert out.ineqs[0].is_side_condition
    assert not out.ineqs[1].is_side_condition


def test_adjunction_on_dia(sig):
    sys = system_of("dia p <= @m")
    out, = apply_rule(sys, "adj_add", 0, sig)
    assert texts_of(out) == ["dia bot <= @m", "p <= bbox[dia] @m"]
    assert out.ineqs[0].is_side_condition


def test_approximation_on_dia(sig):
    sys = system_of("#i <= dia p")
    empty, kept = apply_rule(sys, "appr_add", 0, sig)
    assert texts_of(empty) == ["#i <= dia bot"]
    assert texts_of(kept) == ["#i <= dia #i1", "#i1 <= p"]


def test_approximation_on_box(sig):
    sys = system_of("box p <= @m")
    empty, kept = apply_rule(sys, "appr_mult", 0, sig)
    assert texts_of(empty) == ["box top <= @m"]
    assert texts_of(kept) == ["box @m1 <= @m", "p <= @m1"]


def test_residuation_arrow(sig):
    sys = system_of("bdia[box] #i <= (p -> q)")
    out, = apply_rule(sys, "res_arrow", 0, sig)
    assert texts_of(out) == ["p /\\ bdia[box] #i <= q"]


def test_arrow_approximation(sig):
    sys = system_of("(box p -> box q) <= @m")
    out, = apply_rule(sys, "appr_arrow", 0, sig)
    assert texts_of(out) == ["#i1 <= box p", "box q <= @m1", "(#i1 -> @m1) <= @m"]


def test_splitting_rules(sig):
    out, = apply_rule(system_of("#i <= p /\\ q"), "split_meet", 0, sig)
    assert texts_of(out) == ["#i <= p", "#i <= q"]
    out, = apply_rule(system_of("p \\/ q <= @m"), "split_join", 0, sig)
    assert texts_of(out) == ["p <= @m", "q <= @m"]


def test_residuation_join_and_meet(sig):
    out, = apply_rule(system_of("#i <= top \\/ p"), "res_join", 0, sig, coord=1)
    assert texts_of(out) == ["(#i - top) <= p"]
    out, = apply_rule(system_of("top /\\ p <= @m"), "res_meet", 0, sig, coord=1)
    assert texts_of(out) == ["p <= (top -> @m)"]


def test_nary_approximation_branch_count():
    ks = Signature([ConnectiveDecl("k", 2, ADDITIVE, (ONE, "d"))])
    sys = system_of("#i <= k(p, q)", sig=ks)
    branches = apply_rule(sys, "appr_add", 0, ks)
    assert len(branches) == 4
    assert texts_of(branches[0]) == ["#i <= k(bot, top)"]
    assert texts_of(branches[1]) == ["#i <= k(#i1, top)", "#i1 <= p"]
    assert texts_of(branches[2]) == ["#i <= k(bot, @m1)", "q <= @m1"]
    assert texts_of(branches[3]) == ["#i <= k(#i1, @m1)", "#i1 <= p", "q <= @m1"]


def test_rule_not_applicable(sig):
    with pytest.raises(RuleError):
        apply_rule(system_of("#i <= box p"), "split_meet", 0, sig)
    with pytest.raises(RuleError):
        apply_rule(system_of("#i <= box p"), "appr_add", 0, sig)


def test_rewriting_side_condition_clears_safety(sig):
    sys = system_of("#i <= box (p /\\ q)")
    out, = apply_rule(sys, "adj_mult", 0, sig)
    assert out.safe
    # splitting a side-condition inequality must drop the flag
    marked = System((out.ineqs[1],
                     LabeledIneq(parse("#i <= top /\\ top", sig, expanded=True),
                                 side_of=0)))
    out2, = apply_rule(marked, "split_meet", 1, sig)
    assert not out2.safe


# --- Ackermann elimination ------------------------------------------------------

def test_ackermann_right(sig):
    sys = system_of("#i <= box top", "bdia[box] #i <= p", "p <= @m")
    out = ackermann(sys, "p", "right", sig)
    assert texts_of(out) == ["#i <= box top", "bdia[box] #i <= @m"]


def test_ackermann_left(sig):
    sys = system_of("p <= @n", "#j <= box p")
    out = ackermann(sys, "p", "left", sig)
    assert texts_of(out) == ["#j <= box @n"]


def test_ackermann_empty_bounds(sig):
    out = ackermann(system_of("p <= @m"), "p", "right", sig)
    assert texts_of(out) == ["bot <= @m"]
    out = ackermann(system_of("#i <= p"), "p", "left", sig)
    assert texts_of(out) == ["#i <= top"]


def test_ackermann_joins_multiple_bounds(sig):
    sys = system_of("#i <= p", "#j <= p", "box p <= @m")
    out = ackermann(sys, "p", "right", sig)
    assert texts_of(out) == ["box (#i \\/ #j) <= @m"]


def test_ackermann_reports_blocker(sig):
    sys = system_of("#i <= p", "p <= dia p")
    with pytest.raises(AckermannFormError) as err:
        ackermann(sys, "p", "right", sig)
    assert err.value.blocking == parse("p <= dia p", sig)
    with pytest.raises(AckermannFormError):
        # lower bound mentions another variable: not a reduced shape
        ackermann(system_of("dia q <= p", "p <= @m"), "p", "right", sig)


# --- full runs -------------------------------------------------------------------

def test_run_axiom_2_output(lemmon, sig):
    res = run(lemmon["(2)"], Guided(find_certificate(lemmon["(2)"], sig)), sig)
    assert res.ok and res.safe
    assert [to_text(q) for q in res.quasis] == \
        ["#i0 <= box top => #i0 <= bdia[box] #i0"]


def test_run_axiom_5_output(lemmon, sig):
    res = run(lemmon["(5)"], Guided(find_certificate(lemmon["(5)"], sig)), sig)
    assert res.ok and res.safe
    assert [to_text(q) for q in res.quasis] == \
        ["=> dia bot <= box dia bot", "=> dia #i1 <= box dia #i1"]


def test_run_axiom_4_output(lemmon, sig):
    res = run(lemmon["(4)"], Guided(find_certificate(lemmon["(4)"], sig)), sig)
    assert [to_text(q) for q in res.quasis] == \
        ["#i0 <= box top => #i0 <= box box bdia[box] #i0"]


def test_run_axiom_1_at_natural_type_matches_hand_run(lemmon, sig):
    # force the inductive certificate with the natural order type
    from regcorr.classify import Certificate
    cert = Certificate("inductive", {"p": ONE, "q": ONE},
                       frozenset({("p", "q")}))
    res = run(lemmon["(1)"], Guided(cert), sig)
    assert res.ok and res.safe
    # the surviving conjunct of the two-variable elimination, with the
    # consequent conominal absorbed; the tautological branch is discharged
    assert [to_text(q) for q in res.quasis] == [
        "#i0 <= box top & #i1 <= box top & "
        "box (bdia[box] #i1 /\\ bdia[box] #i0) <= @m2 & (#i1 -> @m2) <= @m1"
        " => #i0 <= box @m1"
    ]


def test_run_outputs_are_pure(lemmon, sig):
    for ineq in lemmon.values():
        res = run(ineq, Guided(find_certificate(ineq, sig)), sig)
        assert res.ok and res.safe
        for q in res.quasis:
            assert is_pure(q)


def test_custom_signature_run():
    ks = Signature([ConnectiveDecl("f", 1, ADDITIVE, (ONE,)),
                    ConnectiveDecl("g", 1, MULTIPLICATIVE, (ONE,)),
                    ConnectiveDecl("k", 2, ADDITIVE, (ONE, ONE))])
    ineq = parse("k(g(p), g(p)) <= f(p)", ks)
    cert = find_certificate(ineq, ks)
    assert cert is not None and cert.kind == "sahlqvist"
    res = run(ineq, Guided(cert), ks)
    assert res.ok and res.safe
    assert len(res.quasis) == 4            # one branch per kept-coordinate subset
    for q in res.quasis:
        assert is_pure(q)


def test_guided_success_on_antitone_signature():
    # exercises the order-type-d adjunction/approximation rules and the
    # n-ary branching, which the box/dia corpus never reaches
    import random
    from regcorr.syntax import And, Bot, Conn, Inequality, Or, Top, Var, variables

    ks = Signature([ConnectiveDecl("f", 1, ADDITIVE, ("d",)),
                    ConnectiveDecl("g", 1, MULTIPLICATIVE, ("d",)),
                    ConnectiveDecl("k", 2, ADDITIVE, (ONE, "d")),
                    ConnectiveDecl("l", 2, MULTIPLICATIVE, ("d", ONE))],
                   base="lattice")

    def rand_formula(rng, depth):
        if depth == 0:
            return rng.choice([Var("p"), Var("q"), Top(), Bot()])
        c = rng.choice(["and", "or", "f", "g", "k", "l", "box", "dia", "leaf"])
        if c == "leaf":
            return rand_formula(rng, 0)
        a, b = rand_formula(rng, depth - 1), rand_formula(rng, depth - 1)
        if c == "and":
            return And(a, b)
        if c == "or":
            return Or(a, b)
        if c in ("f", "g", "box", "dia"):
            return Conn(c, (a,))
        return Conn(c, (a, b))

    rng = random.Random(5)
    done = 0
    while done < 40:
        ineq = Inequality(rand_formula(rng, 3), rand_formula(rng, 3))
        if not variables(ineq):
            continue
        cert = find_certificate(ineq, ks)
        if cert is None:
            continue
        res = run(ineq, Guided(cert), ks)
        assert res.ok and res.safe, ineq
        assert all(is_pure(q) for q in res.quasis), ineq
        done += 1


def test_exhaustive_mode_succeeds_on_simple_inputs(lemmon, sig):
    res = run(lemmon["(2)"], Exhaustive(), sig)
    assert res.ok
    for q in res.quasis:
        assert is_pure(q)


def test_exhaustive_mode_fails_on_mckinsey(sig):
    res = run(parse("box dia p <= dia box p"), Exhaustive(max_depth=6), sig)
    assert not res.ok
    assert res.remaining_variables == {"p"}
    assert res.stuck


def test_fresh_names_are_deterministic(lemmon, sig):
    a = run(lemmon["(5)"], Guided(find_certificate(lemmon["(5)"], sig)), sig)
    b = run(lemmon["(5)"], Guided(find_certificate(lemmon["(5)"], sig)), sig)
    assert [to_text(q) for q in a.quasis] == [to_text(q) for q in b.quasis]


# --- output assembly ----------------------------------------------------------

def test_fold_constants(sig):
    assert fold_constants(parse("(top -> q) /\\ top", sig, expanded=True)) == \
        parse("q")
    assert fold_constants(parse("(bot -> q) /\\ p", sig, expanded=True)) == \
        parse("p")
    assert fold_constants(parse("(p - bot) \\/ bot", sig, expanded=True)) == \
        parse("p")


def test_tautology_pruning(sig):
    q = QuasiInequality(
        (parse("#i0 <= box top", sig, expanded=True),
         parse("box top <= @m0", sig, expanded=True)),
        parse("#i0 <= @m0", sig, expanded=True))
    assert simplify_quasi(q) is None


def test_consequent_absorption(sig):
    q = QuasiInequality(
        (parse("#i0 <= box top", sig, expanded=True),
         parse("bdia[box] #i0 <= @m0", sig, expanded=True)),
        parse("#i0 <= @m0", sig, expanded=True))
    assert to_text(simplify_quasi(q)) == "#i0 <= box top => #i0 <= bdia[box] #i0"


# --- local equivalence of every traced rule application --------------------------

def _system_holds(frame, sys):
    """Algebraic reading of one (possibly impure) system under all valuations:
    conjunction of inequalities implies #i0 <= @m0."""
    names = sorted({v for li in sys.ineqs for v in variables(li.ineq)})
    atoms = sorted({a for li in sys.ineqs for a in nominals(li.ineq)} | {"i0"}) \
        + sorted({a for li in sys.ineqs for a in conominals(li.ineq)} | {"m0"})
    for val in all_valuations(frame.n, names):
        model = Model(frame, val)
        for combo in itertools.product(range(frame.n), repeat=len(atoms)):
            env = dict(zip(atoms, combo))
            def holds(ineq):
                lhs = extension(model, ineq.lhs, env)
                rhs = extension(model, ineq.rhs, env)
                return lhs & ~rhs == 0
            if all(holds(li.ineq) for li in sys.ineqs):
                i0, m0 = 1 << env["i0"], frame.full ^ (1 << env["m0"])
                if i0 & ~m0:
                    return False
    return True


def test_rule_local_equivalence_on_traces(lemmon, sig, frames2):
    from regcorr.semantics import Frame
    spots3 = [Frame(3, 0b011, (0b110, 0b001, 0)),     # mixed normal/impossible
              Frame(3, 0b111, (0b010, 0b100, 0b001)),  # total, cyclic
              Frame(3, 0b101, (0b111, 0, 0b101))]
    for ineq in lemmon.values():
        res = run(ineq, Guided(find_certificate(ineq, sig)), sig)
        for step in res.trace:
            for frame in frames2[:12] + spots3:
                before = _system_holds(frame, step.before)
                after = all(_system_holds(frame, s) for s in step.after)
                assert before == after, (to_text(ineq), step.rule, frame)

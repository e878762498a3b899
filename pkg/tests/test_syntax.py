import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_valuations
from regcorr.semantics import Model, enumerate_frames, extension
from regcorr.syntax import (
    ADDITIVE, And, Bot, Conn, ConnectiveDecl, Conominal, DUAL, Imp,
    Inequality, Minus, MULTIPLICATIVE, Nominal, ONE, Or, ParseError, Polarity,
    QuasiInequality, Signature, SignatureError, Top, Var, critical_branches,
    is_pure, parse, polarity, signed_tree, substitute, to_json, to_text,
    variables,
)

KSIG = Signature([ConnectiveDecl("k", 2, ADDITIVE, (DUAL, ONE)),
                  ConnectiveDecl("l", 1, MULTIPLICATIVE, (ONE,))])


# --- parsing ---------------------------------------------------------------

def test_parse_har_implication():
    assert parse("box p -> p") == Imp(Conn("box", (Var("p"),)), Var("p"))


def test_parse_nary_inequality():
    got = parse("k(p, q) <= l(q)", KSIG)
    assert got == Inequality(Conn("k", (Var("p"), Var("q"))),
                             Conn("l", (Var("q"),)))


def test_parse_expanded_tokens():
    got = parse("#i <= bbox[dia] @m", KSIG, expanded=True)
    assert got.lhs == Nominal("i")
    assert got.rhs.conn == "dia"
    assert got.rhs.arg == Conominal("m")


def test_expanded_tokens_rejected_in_base_mode():
    with pytest.raises(ParseError):
        parse("#i <= p")
    with pytest.raises(ParseError):
        parse("p - q <= p", Signature(), expanded=False)


def test_imp_needs_heyting_base():
    lattice = Signature((), base="lattice")
    with pytest.raises(ParseError):
        parse("box p -> p", lattice)
    assert parse("box p -> p", lattice, expanded=True)  # fine in expanded mode


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse("box p <= unknown(p)")
    assert "unknown" in str(err.value)
    with pytest.raises(ParseError):
        parse("k(p) <= p", KSIG)          # arity mismatch
    with pytest.raises(ParseError):
        parse("box p <= )")


def test_signature_file_round_trip(tmp_path):
    path = tmp_path / "sig.txt"
    path.write_text("# comment\nbase lattice\nk 2 additive d1\n")
    sig = Signature.from_file(str(path))
    assert sig.base == "lattice"
    assert sig.decl("k").coord_types == (DUAL, ONE)
    with pytest.raises(SignatureError):
        Signature([ConnectiveDecl("box", 1, ADDITIVE, (ONE,))])
    with pytest.raises(SignatureError):
        ConnectiveDecl("m", 2, ADDITIVE, (ONE,))


# --- printer round trip ----------------------------------------------------

def formulas(expanded=False, depth=3):
    leaves = [st.just(Top()), st.just(Bot()),
              st.sampled_from([Var("p"), Var("q"), Var("r")])]
    if expanded:
        leaves += [st.sampled_from([Nominal("i"), Nominal("j")]),
                   st.sampled_from([Conominal("m"), Conominal("n")])]

    def extend(children):
        opts = [
            st.tuples(children, children).map(lambda t: And(*t)),
            st.tuples(children, children).map(lambda t: Or(*t)),
            st.tuples(children, children).map(lambda t: Imp(*t)),
            children.map(lambda c: Conn("box", (c,))),
            children.map(lambda c: Conn("dia", (c,))),
            st.tuples(children, children).map(lambda t: Conn("k", t)),
            children.map(lambda c: Conn("l", (c,))),
        ]
        if expanded:
            opts.append(st.tuples(children, children).map(lambda t: Minus(*t)))
        return st.one_of(opts)

    return st.recursive(st.one_of(leaves), extend, max_leaves=8)


@given(formulas())
@settings(max_examples=150, deadline=None)
def test_print_parse_round_trip(phi):
    assert parse(to_text(phi), KSIG) == phi


@given(formulas(expanded=True), formulas(expanded=True))
@settings(max_examples=100, deadline=None)
def test_inequality_round_trip(a, b):
    ineq = Inequality(a, b)
    assert parse(to_text(ineq), KSIG, expanded=True) == ineq


def test_quasi_round_trip():
    q = QuasiInequality((parse("#i <= box top", expanded=True),),
                        parse("#i <= bdia[box] #i", expanded=True))
    assert parse(to_text(q), expanded=True) == q
    empty = QuasiInequality((), parse("dia bot <= box dia bot"))
    assert parse(to_text(empty), expanded=True) == empty


# --- polarity and signed trees ----------------------------------------------

def test_polarity_examples():
    assert polarity(parse("box p"), "p") == Polarity.POSITIVE
    assert polarity(Imp(Var("p"), Var("q")), "p") == Polarity.NEGATIVE
    assert polarity(Conn("k", (Var("p"), Var("p"))), "p", KSIG) == Polarity.BOTH
    assert polarity(parse("box q"), "p") == Polarity.NONE


def test_signed_tree_examples():
    t = signed_tree(parse("box p"), +1)
    assert t.sign == 1 and t.children[0].sign == 1

    t = signed_tree(Imp(parse("box p"), Var("q")), -1)
    assert t.sign == -1
    assert t.children[0].sign == 1            # flipped through ->
    assert t.children[0].children[0].sign == 1
    assert t.children[1].sign == -1

    t = signed_tree(Conn("k", (Var("p"), Var("q"))), +1, KSIG)
    assert [c.sign for c in t.children] == [-1, 1]


def test_sign_involution():
    phi = parse("box(p -> q) <= box(box p -> box q)").lhs
    pos = signed_tree(phi, +1)
    neg = signed_tree(phi, -1)

    def mirrored(a, b):
        return a.sign == -b.sign and a.formula == b.formula and \
            all(mirrored(x, y) for x, y in zip(a.children, b.children))

    assert mirrored(pos, neg)


def test_critical_branches():
    eps = {"p": ONE}
    t = signed_tree(parse("box p"), +1)
    branches = critical_branches(t, eps)
    assert len(branches) == 1
    assert branches[0].var == "p"
    assert [n.formula for n, _ in branches[0].spine] == [parse("box p")]

    assert critical_branches(t, {"p": DUAL}) == []

    t = signed_tree(parse("box(p -> q)"), -1)
    eps = {"p": ONE, "q": DUAL}
    got = [(b.var, b.leaf.sign) for b in critical_branches(t, eps)]
    assert got == [("p", 1), ("q", -1)]


def test_critical_branches_missing_eps():
    t = signed_tree(parse("box p"), +1)
    with pytest.raises(ValueError):
        critical_branches(t, {})


def test_substitute():
    assert substitute(parse("box p"), {"p": Top()}) == parse("box top")
    got = substitute(And(Var("p"), Var("q")), {"p": parse("dia q")})
    assert got == And(parse("dia q"), Var("q"))
    assert substitute(Var("p"), {"p": Or(Var("p"), Var("q"))}) == parse("p \\/ q")


def test_purity_and_collectors():
    q = parse("#i <= box top", expanded=True)
    assert is_pure(q)
    assert variables(parse("k(p, q) <= l(q)", KSIG)) == {"p", "q"}


def test_json_tags():
    data = to_json(parse("box p <= p \\/ top"))
    assert data["kind"] == "ineq"
    assert data["lhs"] == {"kind": "conn", "name": "box",
                           "args": [{"kind": "var", "name": "p"}]}
    assert data["rhs"]["kind"] == "or"


# --- polarity against the semantic order (enumeration oracle) ---------------

def _monotone_in(phi, var, frames):
    """Brute-force check that the extension is set-inclusion monotone in var."""
    others = sorted(variables(phi) - {var})
    for frame in frames:
        for val in all_valuations(frame.n, others):
            exts = []
            for x in range(frame.full + 1):
                exts.append((x, extension(Model(frame, {**val, var: x}), phi)))
            for x, ex in exts:
                for y, ey in exts:
                    if x | y == y and ex | ey != ey:
                        return False
    return True


@given(formulas(depth=2))
@settings(max_examples=40, deadline=None)
def test_polarity_soundness_against_enumeration(phi):
    # the signed-tree polarity must under-approximate semantic monotonicity
    frames = list(enumerate_frames(1)) + list(enumerate_frames(2))
    for var in sorted(variables(phi)):
        try:
            pol = polarity(phi, var, KSIG)
        except Exception:
            return
        from regcorr.semantics import UnsupportedConnectiveError
        try:
            mono = _monotone_in(phi, var, frames)
        except UnsupportedConnectiveError:
            return  # k/l have no frame reading; nothing to compare
        if pol == Polarity.POSITIVE:
            assert mono
        if pol == Polarity.NONE:
            assert mono
        if not mono:
            assert pol in (Polarity.NEGATIVE, Polarity.BOTH)

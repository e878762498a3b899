"""Standard translation into first-order logic over frames, and bounded
semantic equivalence checking.

The target language has one binary relation R, a unary predicate N for
normal worlds, one unary predicate per proposition variable, and equality.
Pure quasi-inequalities translate into the predicate-free sublanguage and,
after universal closure, express frame conditions directly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .classify import find_certificate
from .engine import Exhaustive, Guided, RunResult, run
from .semantics import Frame, FrameFamily, all_frames_family
from .syntax import (
    And, BlackBox, BlackDia, Bot, Conn, Conominal, DEFAULT_SIG, Formula, Imp,
    Inequality, Minus, Nominal, Or, QuasiInequality, Signature, Top, Var,
)


class FOFormula:
    __slots__ = ()

    def __str__(self) -> str:
        return fo_text(self)


@dataclass(frozen=True)
class FOTrue(FOFormula):
    pass


@dataclass(frozen=True)
class FOFalse(FOFormula):
    pass


@dataclass(frozen=True)
class NPred(FOFormula):
    term: str


@dataclass(frozen=True)
class PPred(FOFormula):
    var: str
    term: str


@dataclass(frozen=True)
class REdge(FOFormula):
    src: str
    dst: str


@dataclass(frozen=True)
class EqAtom(FOFormula):
    left: str
    right: str


@dataclass(frozen=True)
class FNot(FOFormula):
    arg: FOFormula


@dataclass(frozen=True)
class FAnd(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOr(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FImp(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class Forall(FOFormula):
    var: str
    body: FOFormula


@dataclass(frozen=True)
class Exists(FOFormula):
    var: str
    body: FOFormula


def _fo_children(phi: FOFormula) -> tuple[FOFormula, ...]:
    match phi:
        case FNot(a):
            return (a,)
        case FAnd(a, b) | FOr(a, b) | FImp(a, b):
            return (a, b)
        case Forall(_, a) | Exists(_, a):
            return (a,)
        case _:
            return ()


def _fo_terms(phi: FOFormula) -> tuple[str, ...]:
    match phi:
        case NPred(t):
            return (t,)
        case PPred(_, t):
            return (t,)
        case REdge(a, b) | EqAtom(a, b):
            return (a, b)
        case _:
            return ()


def fo_free_vars(phi: FOFormula) -> set[str]:
    match phi:
        case Forall(v, a) | Exists(v, a):
            return fo_free_vars(a) - {v}
        case _:
            out = set(_fo_terms(phi))
            for c in _fo_children(phi):
                out |= fo_free_vars(c)
            return out


def fo_predicates(phi: FOFormula) -> set[str]:
    out = set()
    if isinstance(phi, PPred):
        out.add(phi.var)
    for c in _fo_children(phi):
        out |= fo_predicates(c)
    return out


def fo_subst(phi: FOFormula, var: str, term: str) -> FOFormula:
    def sub(t: str) -> str:
        return term if t == var else t
    match phi:
        case NPred(t):
            return NPred(sub(t))
        case PPred(p, t):
            return PPred(p, sub(t))
        case REdge(a, b):
            return REdge(sub(a), sub(b))
        case EqAtom(a, b):
            return EqAtom(sub(a), sub(b))
        case FNot(a):
            return FNot(fo_subst(a, var, term))
        case FAnd(a, b):
            return FAnd(fo_subst(a, var, term), fo_subst(b, var, term))
        case FOr(a, b):
            return FOr(fo_subst(a, var, term), fo_subst(b, var, term))
        case FImp(a, b):
            return FImp(fo_subst(a, var, term), fo_subst(b, var, term))
        case Forall(v, a):
            return phi if v == var else Forall(v, fo_subst(a, var, term))
        case Exists(v, a):
            return phi if v == var else Exists(v, fo_subst(a, var, term))
    return phi


# ---------------------------------------------------------------------------
# Standard translation
# ---------------------------------------------------------------------------

class _Fresh:
    def __init__(self):
        self.counter = 0

    def var(self) -> str:
        name = f"y{self.counter}"
        self.counter += 1
        return name


def _st(phi: Formula, x: str, fresh: _Fresh) -> FOFormula:
    match phi:
        case Top():
            return EqAtom(x, x)
        case Bot():
            return FNot(EqAtom(x, x))
        case Var(name):
            return PPred(name, x)
        case Nominal(name):
            return EqAtom(name, x)
        case Conominal(name):
            return FNot(EqAtom(x, name))
        case And(a, b):
            return FAnd(_st(a, x, fresh), _st(b, x, fresh))
        case Or(a, b):
            return FOr(_st(a, x, fresh), _st(b, x, fresh))
        case Imp(a, b):
            return FImp(_st(a, x, fresh), _st(b, x, fresh))
        case Minus(a, b):
            return FAnd(_st(a, x, fresh), FNot(_st(b, x, fresh)))
        case Conn("box", (a,)):
            y = fresh.var()
            return FAnd(NPred(x), Forall(y, FImp(REdge(x, y), _st(a, y, fresh))))
        case Conn("dia", (a,)):
            y = fresh.var()
            return FOr(FNot(NPred(x)), Exists(y, FAnd(REdge(x, y), _st(a, y, fresh))))
        case BlackDia(_, a):
            y = fresh.var()
            return Exists(y, FAnd(REdge(y, x), _st(a, y, fresh)))
        case BlackBox(_, a):
            y = fresh.var()
            return Forall(y, FImp(REdge(y, x), _st(a, y, fresh)))
        case Conn(name, _):
            raise ValueError(f"no standard translation for connective {name!r}")
    raise ValueError(f"no standard translation for {phi!r}")


def standard_translation(obj, x: str = "x") -> FOFormula:
    """Translate a formula or inequality at world `x`.

    A quasi-inequality is translated as an implication between *globally*
    quantified inequalities (each under its own world variable): that is the
    reading under which an inequality premise means "holds everywhere", and
    it matches the engine's algebraic semantics.  Sharing one world variable
    across the premises would assert a strictly different, pointwise
    condition.
    """
    fresh = _Fresh()
    if isinstance(obj, Formula):
        return _st(obj, x, fresh)
    if isinstance(obj, Inequality):
        return FImp(_st(obj.lhs, x, fresh), _st(obj.rhs, x, fresh))
    if isinstance(obj, QuasiInequality):
        def closed_ineq(i: Inequality) -> FOFormula:
            y = fresh.var()
            return Forall(y, FImp(_st(i.lhs, y, fresh), _st(i.rhs, y, fresh)))

        cons = closed_ineq(obj.consequent)
        if not obj.antecedent:
            return cons
        return FImp(_conjoin([closed_ineq(i) for i in obj.antecedent]), cons)
    raise TypeError(f"cannot translate {obj!r}")


def _first_use_atoms(obj) -> list[str]:
    """Nominal/conominal names in first-use order across the object."""
    seen: list[str] = []

    def walk_formula(phi: Formula):
        if isinstance(phi, (Nominal, Conominal)):
            if phi.name not in seen:
                seen.append(phi.name)
        from .syntax import children
        for k in children(phi):
            walk_formula(k)

    def walk_ineq(i: Inequality):
        walk_formula(i.lhs)
        walk_formula(i.rhs)

    if isinstance(obj, Formula):
        walk_formula(obj)
    elif isinstance(obj, Inequality):
        walk_ineq(obj)
    elif isinstance(obj, QuasiInequality):
        for i in obj.antecedent:
            walk_ineq(i)
        walk_ineq(obj.consequent)
    return seen


def closed_translation(quasi: QuasiInequality) -> FOFormula:
    """Universal closure over the atom individuals, in first-use order; the
    world variables are already bound per inequality."""
    body = standard_translation(quasi)
    for name in reversed(_first_use_atoms(quasi)):
        body = Forall(name, body)
    return body


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

class UnboundSymbolError(KeyError):
    pass


def eval_fo(frame: Frame, phi: FOFormula, env: Mapping[str, int] | None = None,
            preds: Mapping[str, int] | None = None) -> bool:
    """Plain Tarskian evaluation; `env` binds free individual variables to
    worlds, `preds` binds proposition predicates to subsets (bitmasks)."""
    env = dict(env or {})
    preds = preds or {}

    def ev(node: FOFormula, e: dict[str, int]) -> bool:
        match node:
            case FOTrue():
                return True
            case FOFalse():
                return False
            case NPred(t):
                return bool((frame.normal >> _look(t, e)) & 1)
            case PPred(p, t):
                try:
                    mask = preds[p]
                except KeyError:
                    raise UnboundSymbolError(f"unbound predicate {p!r}") from None
                return bool((mask >> _look(t, e)) & 1)
            case REdge(a, b):
                return bool((frame.succ[_look(a, e)] >> _look(b, e)) & 1)
            case EqAtom(a, b):
                return _look(a, e) == _look(b, e)
            case FNot(a):
                return not ev(a, e)
            case FAnd(a, b):
                return ev(a, e) and ev(b, e)
            case FOr(a, b):
                return ev(a, e) or ev(b, e)
            case FImp(a, b):
                return (not ev(a, e)) or ev(b, e)
            case Forall(v, a):
                return all(ev(a, {**e, v: w}) for w in range(frame.n))
            case Exists(v, a):
                return any(ev(a, {**e, v: w}) for w in range(frame.n))
        raise TypeError(f"cannot evaluate {node!r}")

    def _look(t: str, e: dict[str, int]) -> int:
        try:
            return e[t]
        except KeyError:
            raise UnboundSymbolError(f"unbound individual {t!r}") from None

    return ev(phi, env)


def eval_fo_family(family: FrameFamily, sentence: FOFormula) -> np.ndarray:
    """Vectorized evaluation of a closed predicate-free sentence over a frame
    family; returns a boolean (F,) array."""
    if fo_free_vars(sentence):
        raise ValueError("family evaluation needs a sentence (no free variables)")
    if fo_predicates(sentence):
        raise ValueError("family evaluation is for predicate-free sentences")
    nf = len(family)
    n = family.n
    rel = family.rel_bool
    norm = family.normal_bool
    fidx = np.arange(nf)

    def axis_index(axes: dict[str, int], t: str, depth: int) -> np.ndarray:
        shape = [1] * (depth + 1)
        shape[1 + axes[t]] = n
        return np.arange(n).reshape(shape)

    def rec(node: FOFormula, axes: dict[str, int], depth: int) -> np.ndarray:
        match node:
            case FOTrue():
                return np.ones((nf,) + (1,) * depth, dtype=bool)
            case FOFalse():
                return np.zeros((nf,) + (1,) * depth, dtype=bool)
            case NPred(t):
                return norm[fidx.reshape((nf,) + (1,) * depth),
                            axis_index(axes, t, depth)]
            case REdge(a, b):
                return rel[fidx.reshape((nf,) + (1,) * depth),
                           axis_index(axes, a, depth), axis_index(axes, b, depth)]
            case EqAtom(a, b):
                return axis_index(axes, a, depth) == axis_index(axes, b, depth)
            case FNot(a):
                return ~rec(a, axes, depth)
            case FAnd(a, b):
                return rec(a, axes, depth) & rec(b, axes, depth)
            case FOr(a, b):
                return rec(a, axes, depth) | rec(b, axes, depth)
            case FImp(a, b):
                return ~rec(a, axes, depth) | rec(b, axes, depth)
            case Forall(v, a):
                body = rec(a, {**axes, v: depth}, depth + 1)
                return body.all(axis=1 + depth) if body.ndim > 1 + depth \
                    else body
            case Exists(v, a):
                body = rec(a, {**axes, v: depth}, depth + 1)
                return body.any(axis=1 + depth) if body.ndim > 1 + depth \
                    else body
        raise TypeError(f"cannot evaluate {node!r}")

    out = rec(sentence, {}, 0)
    return out.reshape(nf).astype(bool)


def fo_equivalent(f1: FOFormula, f2: FOFormula, max_n: int = 3) -> bool:
    """Agreement on every frame with at most max_n worlds (bounded check)."""
    for phi in (f1, f2):
        if fo_predicates(phi):
            raise ValueError("equivalence check needs predicate-free sentences")
        if fo_free_vars(phi):
            raise ValueError("equivalence check needs sentences")
    for n in range(1, max_n + 1):
        family = all_frames_family(n)
        if not (eval_fo_family(family, f1) == eval_fo_family(family, f2)).all():
            return False
    return True


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def _conjuncts(phi: FOFormula) -> list[FOFormula]:
    if isinstance(phi, FAnd):
        return _conjuncts(phi.left) + _conjuncts(phi.right)
    return [phi]


def _conjoin(parts: list[FOFormula]) -> FOFormula:
    if not parts:
        return FOTrue()
    out = parts[0]
    for p in parts[1:]:
        out = FAnd(out, p)
    return out


def _bound_names(phi: FOFormula) -> set[str]:
    out = set()
    if isinstance(phi, (Forall, Exists)):
        out.add(phi.var)
    for c in _fo_children(phi):
        out |= _bound_names(c)
    return out


def _eq_binding(atom: FOFormula, var: str) -> Optional[str]:
    match atom:
        case EqAtom(a, b) if a == var and b != var:
            return b
        case EqAtom(a, b) if b == var and a != var:
            return a
    return None


def _simplify_node(phi: FOFormula) -> FOFormula:
    match phi:
        case EqAtom(a, b) if a == b:
            return FOTrue()
        case FNot(FOTrue()):
            return FOFalse()
        case FNot(FOFalse()):
            return FOTrue()
        case FNot(FNot(a)):
            return a
        case FAnd(FOTrue(), a) | FAnd(a, FOTrue()):
            return a
        case FAnd(FOFalse(), _) | FAnd(_, FOFalse()):
            return FOFalse()
        case FOr(FOFalse(), a) | FOr(a, FOFalse()):
            return a
        case FOr(FOTrue(), _) | FOr(_, FOTrue()):
            return FOTrue()
        case FImp(FOTrue(), a):
            return a
        case FImp(_, FOTrue()) | FImp(FOFalse(), _):
            return FOTrue()
        case FImp(a, FOFalse()):
            return FNot(a)
        # (A -> B) -> (A -> C)  ~>  (A /\ B) -> C
        case FImp(FImp(a, b), FImp(a2, c)) if a == a2:
            return FImp(FAnd(a, b), c)
        # A -> (B -> C)  ~>  (A /\ B) -> C
        case FImp(a, FImp(b, c)):
            return FImp(FAnd(a, b), c)
        case Forall(v, body):
            if v not in fo_free_vars(body):
                return body
            match body:
                case FImp(ant, cons):
                    parts = _conjuncts(ant)
                    for i, atom in enumerate(parts):
                        t = _eq_binding(atom, v)
                        if t is not None and t not in _bound_names(body):
                            rest = parts[:i] + parts[i + 1:]
                            new = cons if not rest else FImp(_conjoin(rest), cons)
                            return fo_subst(new, v, t)
            return phi
        case Exists(v, body):
            if v not in fo_free_vars(body):
                return body
            parts = _conjuncts(body)
            for i, atom in enumerate(parts):
                t = _eq_binding(atom, v)
                if t is not None and t not in _bound_names(body):
                    rest = parts[:i] + parts[i + 1:]
                    return fo_subst(_conjoin(rest), v, t)
            return phi
    return phi


def simplify(phi: FOFormula) -> FOFormula:
    """Equality elimination under quantifiers, implication fusion, double
    negation, and constant folding; logically equivalence-preserving."""
    for _ in range(1000):
        new = _simplify_pass(phi)
        if new == phi:
            return phi
        phi = new
    return phi


def _simplify_pass(phi: FOFormula) -> FOFormula:
    kids = _fo_children(phi)
    if kids:
        new_kids = tuple(_simplify_pass(k) for k in kids)
        match phi:
            case FNot():
                phi = FNot(new_kids[0])
            case FAnd():
                phi = FAnd(*new_kids)
            case FOr():
                phi = FOr(*new_kids)
            case FImp():
                phi = FImp(*new_kids)
            case Forall(v, _):
                phi = Forall(v, new_kids[0])
            case Exists(v, _):
                phi = Exists(v, new_kids[0])
    return _simplify_node(phi)


# ---------------------------------------------------------------------------
# Correspondents
# ---------------------------------------------------------------------------

class CorrespondentError(ValueError):
    pass


def eliminate(ineq: Inequality, sig: Signature = DEFAULT_SIG) -> RunResult:
    """Run the engine with a found certificate, falling back to the bounded
    exhaustive probe."""
    cert = find_certificate(ineq, sig)
    if cert is not None:
        return run(ineq, Guided(cert), sig)
    return run(ineq, Exhaustive(), sig)


def correspondent(ineq: Inequality, sig: Signature = DEFAULT_SIG,
                  result: RunResult | None = None, simplify_out: bool = True
                  ) -> FOFormula:
    """First-order frame correspondent: the conjunction of the universally
    closed translations of the engine's pure output."""
    res = result if result is not None else eliminate(ineq, sig)
    if not res.ok:
        raise CorrespondentError(
            f"variable elimination failed; remaining variables {sorted(res.remaining_variables)}")
    parts = [closed_translation(q) for q in res.quasis]
    out = _conjoin(parts) if parts else FOTrue()
    return simplify(out) if simplify_out else out


# ---------------------------------------------------------------------------
# Reference frame conditions
# ---------------------------------------------------------------------------

REFERENCE_CONDITIONS: dict[str, FOFormula] = {
    "normality": Forall("x", NPred("x")),
    "closure under normality": Forall("x", Forall("y", FImp(
        FAnd(NPred("x"), REdge("x", "y")), NPred("y")))),
    "pre-normal reflexivity": Forall("x", FImp(NPred("x"), REdge("x", "x"))),
    "pre-normal transitivity": Forall("x", Forall("y", Forall("z", FImp(
        FAnd(FAnd(FAnd(NPred("x"), NPred("y")), REdge("x", "y")), REdge("y", "z")),
        REdge("x", "z"))))),
    "pre-normal euclideanness": Forall("x", Forall("y", Forall("z", FImp(
        FAnd(FAnd(FAnd(NPred("x"), NPred("y")), REdge("x", "y")), REdge("x", "z")),
        REdge("y", "z"))))),
    "top": FOTrue(),
}


# ---------------------------------------------------------------------------
# Text form (TPTP-flavoured) and parsing
# ---------------------------------------------------------------------------

def fo_text(phi: FOFormula) -> str:
    match phi:
        case FOTrue():
            return "$true"
        case FOFalse():
            return "$false"
        case NPred(t):
            return f"N({t})"
        case PPred(p, t):
            return f"P_{p}({t})"
        case REdge(a, b):
            return f"R({a},{b})"
        case EqAtom(a, b):
            return f"{a} = {b}"
        case FNot(EqAtom(a, b)):
            return f"{a} != {b}"
        case FNot(a):
            return f"~{_fo_paren(a)}"
        case FAnd(a, b):
            return f"{_fo_paren(a)} & {_fo_paren(b)}"
        case FOr(a, b):
            return f"{_fo_paren(a)} | {_fo_paren(b)}"
        case FImp(a, b):
            return f"{_fo_paren(a)} => {_fo_paren(b)}"
        case Forall(v, a):
            return f"![{v}]: {_fo_paren(a)}"
        case Exists(v, a):
            return f"?[{v}]: {_fo_paren(a)}"
    raise TypeError(f"cannot print {phi!r}")


def _fo_paren(phi: FOFormula) -> str:
    if isinstance(phi, (NPred, PPred, REdge, EqAtom, FOTrue, FOFalse, FNot)):
        return fo_text(phi)
    return f"({fo_text(phi)})"


_FO_TOKEN = re.compile(
    r"\s*(?:(?P<forall>!\[)|(?P<exists>\?\[)|(?P<rbr>\])|(?P<colon>:)"
    r"|(?P<imp>=>)|(?P<neq>!=)|(?P<eq>=)|(?P<and>&)|(?P<or>\|)|(?P<not>~)"
    r"|(?P<lp>\()|(?P<rp>\))|(?P<comma>,)"
    r"|(?P<true>\$true)|(?P<false>\$false)|(?P<name>[A-Za-z_][A-Za-z0-9_']*))")


def parse_fo(text: str) -> FOFormula:
    """Parse the TPTP-flavoured syntax emitted by fo_text."""
    toks = []
    pos = 0
    while pos < len(text):
        m = _FO_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ValueError(f"bad first-order syntax near {text[pos:pos+10]!r}")
            break
        toks.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()
    toks.append(("eof", ""))
    it = {"i": 0}

    def peek():
        return toks[it["i"]]

    def advance():
        t = toks[it["i"]]
        it["i"] += 1
        return t

    def expect(kind):
        t = advance()
        if t[0] != kind:
            raise ValueError(f"expected {kind}, found {t[1]!r}")
        return t

    def sentence() -> FOFormula:
        kind, _ = peek()
        if kind in ("forall", "exists"):
            advance()
            names = [expect("name")[1]]
            while peek()[0] == "comma":
                advance()
                names.append(expect("name")[1])
            expect("rbr")
            expect("colon")
            body = sentence()
            for nm in reversed(names):
                body = Forall(nm, body) if kind == "forall" else Exists(nm, body)
            return body
        return impform()

    def impform() -> FOFormula:
        lhs = orform()
        if peek()[0] == "imp":
            advance()
            return FImp(lhs, impform())
        return lhs

    def orform() -> FOFormula:
        f = andform()
        while peek()[0] == "or":
            advance()
            f = FOr(f, andform())
        return f

    def andform() -> FOFormula:
        f = unary()
        while peek()[0] == "and":
            advance()
            f = FAnd(f, unary())
        return f

    def unary() -> FOFormula:
        kind, val = peek()
        if kind in ("forall", "exists"):
            return sentence()
        if kind == "not":
            advance()
            return FNot(unary())
        if kind == "lp":
            advance()
            f = sentence()
            expect("rp")
            return f
        if kind == "true":
            advance()
            return FOTrue()
        if kind == "false":
            advance()
            return FOFalse()
        if kind == "name":
            advance()
            if val == "N" and peek()[0] == "lp":
                advance()
                t = expect("name")[1]
                expect("rp")
                return NPred(t)
            if val == "R" and peek()[0] == "lp":
                advance()
                a = expect("name")[1]
                expect("comma")
                b = expect("name")[1]
                expect("rp")
                return REdge(a, b)
            if val.startswith("P_") and peek()[0] == "lp":
                advance()
                t = expect("name")[1]
                expect("rp")
                return PPred(val[2:], t)
            if peek()[0] == "eq":
                advance()
                return EqAtom(val, expect("name")[1])
            if peek()[0] == "neq":
                advance()
                return FNot(EqAtom(val, expect("name")[1]))
            raise ValueError(f"lone term {val!r}")
        raise ValueError(f"unexpected token {val!r}")

    out = sentence()
    expect("eof")
    return out


def resolve_condition(text: str) -> FOFormula:
    """Accept a named reference condition, an `&`-combination of names, or a
    sentence in the TPTP-flavoured syntax."""
    key = text.strip().lower()
    if key in REFERENCE_CONDITIONS:
        return REFERENCE_CONDITIONS[key]
    if all(p.strip().lower() in REFERENCE_CONDITIONS for p in text.split("&")):
        return _conjoin([REFERENCE_CONDITIONS[p.strip().lower()]
                         for p in text.split("&")])
    return parse_fo(text)

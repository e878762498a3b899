"""Formula and inequality ASTs over configurable regular modal signatures.

A signature declares named connectives, each either additive (join-friendly)
or multiplicative (meet-friendly), with a per-coordinate order type: "1" for
a monotone coordinate, "d" for an antitone one.  `box` and `dia` are always
present as the unary multiplicative/additive defaults.  The expanded language
adds nominals (`#i`), conominals (`@m`), a co-implication `-`, and the four
adjoint connectives `bbox[f]`, `bdia[g]`, `bleft[f]`, `bright[g]`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"
ONE = "1"
DUAL = "d"
LATTICE = "lattice"   # plain bounded-distributive-lattice base, -> not primitive
HEYTING = "heyting"   # intuitionistic base, -> primitive

_RESERVED = {"top", "bot", "bbox", "bdia", "bleft", "bright"}
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


class SignatureError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


@dataclass(frozen=True)
class ConnectiveDecl:
    name: str
    arity: int
    kind: str
    coord_types: tuple[str, ...]

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise SignatureError(f"bad connective name {self.name!r}")
        if self.arity < 0:
            raise SignatureError(f"{self.name}: negative arity")
        if self.kind not in (ADDITIVE, MULTIPLICATIVE):
            raise SignatureError(f"{self.name}: kind must be additive or multiplicative")
        if len(self.coord_types) != self.arity:
            raise SignatureError(f"{self.name}: coordinate types do not match arity")
        if any(c not in (ONE, DUAL) for c in self.coord_types):
            raise SignatureError(f"{self.name}: coordinate types must be '1' or 'd'")


BOX = ConnectiveDecl("box", 1, MULTIPLICATIVE, (ONE,))
DIA = ConnectiveDecl("dia", 1, ADDITIVE, (ONE,))


class Signature:
    """Declared connectives plus the propositional base (lattice or heyting)."""

    def __init__(self, extra: Iterable[ConnectiveDecl] = (), base: str = HEYTING):
        if base not in (LATTICE, HEYTING):
            raise SignatureError(f"unknown base {base!r}")
        self.base = base
        self._decls: dict[str, ConnectiveDecl] = {"box": BOX, "dia": DIA}
        for d in extra:
            if d.name in _RESERVED or d.name in ("box", "dia"):
                raise SignatureError(f"connective name {d.name!r} is reserved")
            if d.name in self._decls:
                raise SignatureError(f"duplicate connective {d.name!r}")
            self._decls[d.name] = d

    def decl(self, name: str) -> ConnectiveDecl:
        try:
            return self._decls[name]
        except KeyError:
            raise SignatureError(f"unknown connective {name!r}") from None

    def has(self, name: str) -> bool:
        return name in self._decls

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._decls)

    @classmethod
    def from_lines(cls, lines: Iterable[str], base: str = HEYTING) -> "Signature":
        """Line format: `name arity kind coordtypes`, e.g. `k 2 additive d1`.

        A line `base lattice|heyting` selects the propositional base.
        Blank lines and `#` comments are skipped.
        """
        decls = []
        for raw in lines:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "base":
                if len(parts) != 2 or parts[1] not in (LATTICE, HEYTING):
                    raise SignatureError(f"bad base line {line!r}")
                base = parts[1]
                continue
            if len(parts) != 4:
                raise SignatureError(f"bad signature line {line!r}")
            name, arity_s, kind, coords = parts
            try:
                arity = int(arity_s)
            except ValueError:
                raise SignatureError(f"bad arity in {line!r}") from None
            decls.append(ConnectiveDecl(name, arity, kind, tuple(coords)))
        return cls(decls, base=base)

    @classmethod
    def from_file(cls, path: str, base: str = HEYTING) -> "Signature":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh, base=base)


DEFAULT_SIG = Signature()


# ---------------------------------------------------------------------------
# Formula AST
# ---------------------------------------------------------------------------

class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Nominal(Formula):
    name: str


@dataclass(frozen=True)
class Conominal(Formula):
    name: str


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Minus(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Conn(Formula):
    name: str
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class BlackBox(Formula):
    """Upper adjoint of (the join-preserving core of) an additive connective."""
    conn: str
    arg: Formula


@dataclass(frozen=True)
class BlackDia(Formula):
    """Lower adjoint of (the meet-preserving core of) a multiplicative connective."""
    conn: str
    arg: Formula


@dataclass(frozen=True)
class BlackLeft(Formula):
    """Galois adjoint of an antitone additive connective."""
    conn: str
    arg: Formula


@dataclass(frozen=True)
class BlackRight(Formula):
    """Galois adjoint of an antitone multiplicative connective."""
    conn: str
    arg: Formula


@dataclass(frozen=True)
class Inequality:
    lhs: Formula
    rhs: Formula

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class QuasiInequality:
    antecedent: tuple[Inequality, ...]
    consequent: Inequality

    def __str__(self) -> str:
        return to_text(self)


def children(phi: Formula) -> tuple[Formula, ...]:
    match phi:
        case And(a, b) | Or(a, b) | Imp(a, b) | Minus(a, b):
            return (a, b)
        case Conn(_, args):
            return args
        case BlackBox(_, a) | BlackDia(_, a) | BlackLeft(_, a) | BlackRight(_, a):
            return (a,)
        case _:
            return ()


def with_children(phi: Formula, new: tuple[Formula, ...]) -> Formula:
    match phi:
        case And():
            return And(*new)
        case Or():
            return Or(*new)
        case Imp():
            return Imp(*new)
        case Minus():
            return Minus(*new)
        case Conn(name, _):
            return Conn(name, new)
        case BlackBox(c, _):
            return BlackBox(c, new[0])
        case BlackDia(c, _):
            return BlackDia(c, new[0])
        case BlackLeft(c, _):
            return BlackLeft(c, new[0])
        case BlackRight(c, _):
            return BlackRight(c, new[0])
        case _:
            if new:
                raise ValueError("leaf node takes no children")
            return phi


def coord_signs(phi: Formula, sig: Signature) -> tuple[int, ...]:
    """Sign multiplier per child: +1 keeps polarity, -1 flips it.

    `->` is antitone in its first coordinate, `-` in its second; declared
    connectives follow their coordinate order types.
    """
    match phi:
        case And() | Or():
            return (1, 1)
        case Imp():
            return (-1, 1)
        case Minus():
            return (1, -1)
        case Conn(name, _):
            return tuple(1 if c == ONE else -1 for c in sig.decl(name).coord_types)
        case BlackBox() | BlackDia():
            return (1,)
        case BlackLeft() | BlackRight():
            return (-1,)
        case _:
            return ()


# ---------------------------------------------------------------------------
# Signed generation trees
# ---------------------------------------------------------------------------

class Polarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOTH = "both"
    NONE = "none"


@dataclass(frozen=True)
class SignedNode:
    sign: int               # +1 or -1
    formula: Formula
    children: tuple["SignedNode", ...]

    @property
    def is_leaf(self) -> bool:
        return not self.children


def signed_tree(phi: Formula, sign: int, sig: Signature = DEFAULT_SIG) -> SignedNode:
    kids = children(phi)
    signs = coord_signs(phi, sig)
    return SignedNode(sign, phi, tuple(
        signed_tree(k, sign * s, sig) for k, s in zip(kids, signs)))


def _signed_leaves(node: SignedNode) -> Iterator[SignedNode]:
    if node.is_leaf:
        yield node
    else:
        for c in node.children:
            yield from _signed_leaves(c)


def polarity(phi: Formula, var: str, sig: Signature = DEFAULT_SIG) -> Polarity:
    signs = {leaf.sign
             for leaf in _signed_leaves(signed_tree(phi, +1, sig))
             if isinstance(leaf.formula, Var) and leaf.formula.name == var}
    if not signs:
        return Polarity.NONE
    if signs == {1}:
        return Polarity.POSITIVE
    if signs == {-1}:
        return Polarity.NEGATIVE
    return Polarity.BOTH


class OrderTypeError(ValueError):
    pass


def is_critical(sign: int, var: str, eps: Mapping[str, str]) -> bool:
    try:
        e = eps[var]
    except KeyError:
        raise OrderTypeError(f"variable {var!r} missing from order type") from None
    return (sign > 0 and e == ONE) or (sign < 0 and e == DUAL)


@dataclass(frozen=True)
class Branch:
    """A leaf-to-root path: the leaf plus (ancestor, child-index) pairs,
    innermost ancestor first."""
    var: str
    leaf: SignedNode
    spine: tuple[tuple[SignedNode, int], ...]


def critical_branches(tree: SignedNode, eps: Mapping[str, str]) -> list[Branch]:
    """All branches ending in a leaf `+p` with eps[p]=1 or `-p` with eps[p]=d,
    in left-to-right leaf order."""
    out: list[Branch] = []

    def walk(node: SignedNode, above: list[tuple[SignedNode, int]]):
        if node.is_leaf:
            if isinstance(node.formula, Var) and is_critical(node.sign, node.formula.name, eps):
                out.append(Branch(node.formula.name, node, tuple(reversed(above))))
            return
        for i, c in enumerate(node.children):
            above.append((node, i))
            walk(c, above)
            above.pop()

    walk(tree, [])
    return out


def substitute(phi: Formula, binding: Mapping[str, Formula]) -> Formula:
    if isinstance(phi, Var) and phi.name in binding:
        return binding[phi.name]
    kids = children(phi)
    if not kids:
        return phi
    new = tuple(substitute(k, binding) for k in kids)
    return phi if new == kids else with_children(phi, new)


# ---------------------------------------------------------------------------
# Collectors
# ---------------------------------------------------------------------------

def _walk(phi: Formula) -> Iterator[Formula]:
    yield phi
    for k in children(phi):
        yield from _walk(k)


def _formulas_of(obj) -> Iterator[Formula]:
    if isinstance(obj, Formula):
        yield obj
    elif isinstance(obj, Inequality):
        yield obj.lhs
        yield obj.rhs
    elif isinstance(obj, QuasiInequality):
        for i in obj.antecedent:
            yield i.lhs
            yield i.rhs
        yield obj.consequent.lhs
        yield obj.consequent.rhs
    else:
        raise TypeError(f"not a syntax object: {obj!r}")


def variables(obj) -> set[str]:
    return {n.name for f in _formulas_of(obj) for n in _walk(f) if isinstance(n, Var)}


def nominals(obj) -> set[str]:
    return {n.name for f in _formulas_of(obj) for n in _walk(f) if isinstance(n, Nominal)}


def conominals(obj) -> set[str]:
    return {n.name for f in _formulas_of(obj) for n in _walk(f) if isinstance(n, Conominal)}


def is_pure(obj) -> bool:
    """No proposition variable occurs anywhere."""
    return not variables(obj)


def occurs(obj, var: str) -> bool:
    return any(isinstance(n, Var) and n.name == var for f in _formulas_of(obj) for n in _walk(f))


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

# precedence contexts: 0 = arrow level, 1 = \/ level, 2 = /\ level, 3 = prefix arg
def _fmt(phi: Formula, ctx: int) -> str:
    match phi:
        case Top():
            return "top"
        case Bot():
            return "bot"
        case Var(name):
            return name
        case Nominal(name):
            return "#" + name
        case Conominal(name):
            return "@" + name
        case Imp(a, b):
            return f"({_fmt(a, 1)} -> {_fmt(b, 0)})"
        case Minus(a, b):
            return f"({_fmt(a, 1)} - {_fmt(b, 1)})"
        case Or(a, b):
            s = f"{_fmt(a, 1)} \\/ {_fmt(b, 2)}"
            return f"({s})" if ctx > 1 else s
        case And(a, b):
            s = f"{_fmt(a, 2)} /\\ {_fmt(b, 3)}"
            return f"({s})" if ctx > 2 else s
        case Conn(name, args) if name in ("box", "dia") and len(args) == 1:
            return f"{name} {_fmt(args[0], 3)}"
        case Conn(name, args):
            return f"{name}({', '.join(_fmt(a, 0) for a in args)})"
        case BlackBox(c, a):
            return f"bbox[{c}] {_fmt(a, 3)}"
        case BlackDia(c, a):
            return f"bdia[{c}] {_fmt(a, 3)}"
        case BlackLeft(c, a):
            return f"bleft[{c}] {_fmt(a, 3)}"
        case BlackRight(c, a):
            return f"bright[{c}] {_fmt(a, 3)}"
    raise TypeError(f"cannot print {phi!r}")


def to_text(obj) -> str:
    if isinstance(obj, Formula):
        return _fmt(obj, 0)
    if isinstance(obj, Inequality):
        return f"{_fmt(obj.lhs, 0)} <= {_fmt(obj.rhs, 0)}"
    if isinstance(obj, QuasiInequality):
        ant = " & ".join(to_text(i) for i in obj.antecedent)
        return f"{ant} => {to_text(obj.consequent)}" if ant else f"=> {to_text(obj.consequent)}"
    raise TypeError(f"cannot print {obj!r}")


def to_json(obj):
    match obj:
        case Top():
            return {"kind": "top"}
        case Bot():
            return {"kind": "bot"}
        case Var(name):
            return {"kind": "var", "name": name}
        case Nominal(name):
            return {"kind": "nominal", "name": name}
        case Conominal(name):
            return {"kind": "conominal", "name": name}
        case And(a, b):
            return {"kind": "and", "args": [to_json(a), to_json(b)]}
        case Or(a, b):
            return {"kind": "or", "args": [to_json(a), to_json(b)]}
        case Imp(a, b):
            return {"kind": "imp", "args": [to_json(a), to_json(b)]}
        case Minus(a, b):
            return {"kind": "minus", "args": [to_json(a), to_json(b)]}
        case Conn(name, args):
            return {"kind": "conn", "name": name, "args": [to_json(a) for a in args]}
        case BlackBox(c, a):
            return {"kind": "bbox", "conn": c, "arg": to_json(a)}
        case BlackDia(c, a):
            return {"kind": "bdia", "conn": c, "arg": to_json(a)}
        case BlackLeft(c, a):
            return {"kind": "bleft", "conn": c, "arg": to_json(a)}
        case BlackRight(c, a):
            return {"kind": "bright", "conn": c, "arg": to_json(a)}
        case Inequality(lhs, rhs):
            return {"kind": "ineq", "lhs": to_json(lhs), "rhs": to_json(rhs)}
        case QuasiInequality(ant, cons):
            return {"kind": "quasi", "antecedent": [to_json(i) for i in ant],
                    "consequent": to_json(cons)}
    raise TypeError(f"cannot serialize {obj!r}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<le><=)|(?P<darr>=>)|(?P<arr>->)|(?P<and>/\\)|(?P<or>\\/)"
    r"|(?P<amp>&)|(?P<minus>-)|(?P<lpar>\()|(?P<rpar>\))|(?P<lbr>\[)|(?P<rbr>\])"
    r"|(?P<comma>,)|(?P<hash>\#)|(?P<at>@)|(?P<name>[A-Za-z_][A-Za-z0-9_']*))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}", pos)
            break
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


_BLACK = {"bbox": (BlackBox, ADDITIVE), "bdia": (BlackDia, MULTIPLICATIVE),
          "bleft": (BlackLeft, ADDITIVE), "bright": (BlackRight, MULTIPLICATIVE)}


class _Parser:
    def __init__(self, text: str, sig: Signature, expanded: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = sig
        self.expanded = expanded

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str):
        t = self.next()
        if t[0] != kind:
            raise ParseError(f"expected {kind!r}, found {t[1] or 'end of input'!r}", t[2])
        return t

    def fail(self, msg: str):
        raise ParseError(msg, self.peek()[2])

    def _expanded_only(self, what: str):
        if not self.expanded:
            self.fail(f"{what} is only allowed in the expanded language")

    def form(self) -> Formula:
        lhs = self.or_form()
        kind, _, _ = self.peek()
        if kind == "arr":
            if not (self.expanded or self.sig.base == HEYTING):
                self.fail("'->' requires the heyting base or the expanded language")
            self.next()
            return Imp(lhs, self.form())
        if kind == "minus":
            self._expanded_only("'-'")
            self.next()
            return Minus(lhs, self.form())
        return lhs

    def or_form(self) -> Formula:
        f = self.and_form()
        while self.peek()[0] == "or":
            self.next()
            f = Or(f, self.and_form())
        return f

    def and_form(self) -> Formula:
        f = self.prefix()
        while self.peek()[0] == "and":
            self.next()
            f = And(f, self.prefix())
        return f

    def prefix(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "name" and val in _BLACK:
            self._expanded_only(f"{val!r}")
            cls, need_kind = _BLACK[val]
            self.next()
            self.expect("lbr")
            cname = self.expect("name")[1]
            self.expect("rbr")
            decl = self.sig.decl(cname)
            if decl.kind != need_kind or decl.arity != 1:
                raise ParseError(
                    f"{val}[{cname}] needs a unary {need_kind} connective", pos)
            return cls(cname, self.prefix())
        if kind == "name" and self.sig.has(val) and self.toks[self.i + 1][0] != "lpar":
            decl = self.sig.decl(val)
            if decl.arity != 1:
                raise ParseError(f"connective {val!r} needs {decl.arity} arguments", pos)
            self.next()
            return Conn(val, (self.prefix(),))
        return self.primary()

    def primary(self) -> Formula:
        kind, val, pos = self.next()
        if kind == "name":
            if val == "top":
                return Top()
            if val == "bot":
                return Bot()
            if self.peek()[0] == "lpar" and self.sig.has(val):
                self.next()
                args = []
                if self.peek()[0] != "rpar":
                    args.append(self.form())
                    while self.peek()[0] == "comma":
                        self.next()
                        args.append(self.form())
                self.expect("rpar")
                decl = self.sig.decl(val)
                if len(args) != decl.arity:
                    raise ParseError(
                        f"connective {val!r} expects {decl.arity} arguments, got {len(args)}", pos)
                return Conn(val, tuple(args))
            if self.peek()[0] == "lpar":
                raise ParseError(f"unknown connective {val!r}", pos)
            if self.sig.has(val):
                raise ParseError(f"connective {val!r} needs arguments", pos)
            return Var(val)
        if kind == "hash":
            self._expanded_only("nominal")
            return Nominal(self.expect("name")[1])
        if kind == "at":
            self._expanded_only("conominal")
            return Conominal(self.expect("name")[1])
        if kind == "lpar":
            f = self.form()
            self.expect("rpar")
            return f
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)

    def inequality(self) -> Inequality:
        lhs = self.form()
        self.expect("le")
        return Inequality(lhs, self.form())

    def quasi(self) -> QuasiInequality:
        ant: list[Inequality] = []
        if self.peek()[0] == "darr":
            self.next()
        else:
            ant.append(self.inequality())
            while self.peek()[0] == "amp":
                self.next()
                ant.append(self.inequality())
            self.expect("darr")
        return QuasiInequality(tuple(ant), self.inequality())


def parse(text: str, sig: Signature = DEFAULT_SIG, expanded: bool = False):
    """Parse a formula, inequality, or quasi-inequality (chosen by content)."""
    p = _Parser(text, sig, expanded)
    kinds = [t[0] for t in p.toks]
    if "darr" in kinds:
        res = p.quasi()
    elif "le" in kinds:
        res = p.inequality()
    else:
        res = p.form()
    p.expect("eof")
    return res


def parse_formula(text: str, sig: Signature = DEFAULT_SIG, expanded: bool = False) -> Formula:
    res = parse(text, sig, expanded)
    if not isinstance(res, Formula):
        raise ParseError("expected a formula", 0)
    return res


def parse_inequality(text: str, sig: Signature = DEFAULT_SIG, expanded: bool = False) -> Inequality:
    res = parse(text, sig, expanded)
    if not isinstance(res, Inequality):
        raise ParseError("expected an inequality", 0)
    return res

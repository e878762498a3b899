"""Variable-elimination engine computing pure quasi-inequalities.

The pipeline: preprocess an inequality (distribute, split, drop monotone
variables), replace each piece phi <= psi by the system {#i0 <= phi,
psi <= @m0}, then rewrite with splitting, approximation, adjunction and
residuation until every occurrence of a proposition variable either sits in
a `pure <= p` / `p <= pure` atom or has receiving polarity, and eliminate
the variable by the corresponding substitution.  Approximation rules fan a
system out into branches; each surviving branch contributes one pure
quasi-inequality `antecedent => #i0 <= @m0`.

A run is *safe* when the variable-free inequalities created by adjunction
steps are never rewritten again except by an elimination substitution; the
guided strategy keeps runs safe by construction and the flag is tracked
defensively anyway.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .classify import Certificate, is_inductive, is_pusher, is_sahlqvist
from .syntax import (
    ADDITIVE, And, BlackBox, BlackDia, BlackLeft, BlackRight, Bot, Conn,
    Conominal, DEFAULT_SIG, Formula, HEYTING, Imp, Inequality, Minus,
    MULTIPLICATIVE, Nominal, ONE, Or, Polarity, QuasiInequality, Signature,
    SignedNode, Top, Var, children, coord_signs, is_critical, is_pure,
    occurs, polarity, signed_tree, substitute, variables, with_children,
)


class RuleError(ValueError):
    pass


class FreshnessError(RuleError):
    pass


class AckermannFormError(RuleError):
    def __init__(self, message: str, blocking: Optional[Inequality] = None):
        super().__init__(message)
        self.blocking = blocking


class StrategyError(RuleError):
    pass


@dataclass(frozen=True)
class LabeledIneq:
    ineq: Inequality
    side_of: Optional[int] = None     # id of the adjunction step that created it

    @property
    def is_side_condition(self) -> bool:
        return self.side_of is not None


@dataclass(frozen=True)
class System:
    ineqs: tuple[LabeledIneq, ...]
    nom_counter: int = 1
    conom_counter: int = 1
    safe: bool = True
    step_counter: int = 0

    def inequalities(self) -> tuple[Inequality, ...]:
        return tuple(li.ineq for li in self.ineqs)

    def all_pure(self) -> bool:
        return all(is_pure(li.ineq) for li in self.ineqs)

    def to_json(self) -> dict:
        return {"inequalities": [str(li.ineq) for li in self.ineqs],
                "side_conditions": [i for i, li in enumerate(self.ineqs)
                                    if li.is_side_condition],
                "safe": self.safe}


# a meta-disjunction of systems, as produced by the approximation rules;
# each member ends up contributing one output conjunct
BranchSet = list[System]


# strategies ----------------------------------------------------------------

@dataclass(frozen=True)
class Guided:
    certificate: Certificate


@dataclass(frozen=True)
class Exhaustive:
    max_depth: int = 10
    budget: int = 20000


@dataclass
class TraceStep:
    rule: str
    target: int
    before: System
    after: tuple[System, ...]

    def to_json(self) -> dict:
        return {"rule": self.rule, "target": self.target,
                "before": self.before.to_json(),
                "after": [s.to_json() for s in self.after]}


@dataclass
class RunResult:
    ok: bool
    quasis: list[QuasiInequality] = field(default_factory=list)
    safe: bool = True
    trace: list[TraceStep] = field(default_factory=list)
    stuck: list[System] = field(default_factory=list)

    @property
    def remaining_variables(self) -> set[str]:
        out: set[str] = set()
        for s in self.stuck:
            for li in s.ineqs:
                out |= variables(li.ineq)
        return out


# ---------------------------------------------------------------------------
# Stage 1: preprocessing
# ---------------------------------------------------------------------------

def _push_down(phi: Formula, sign: int, sig: Signature,
               transparent: bool = True) -> Formula:
    """Exhaustively distribute join-friendly parents over +Or children, and
    meet-friendly ones over -And children, in the signed tree of `phi`.
    Additive parents rebuild as Or, multiplicative ones as And.

    Distribution only fires while `transparent` holds, i.e. while every
    ancestor is a pusher: then the surfaced node reaches the root and is
    split away.  A lattice node stuck below an adjunction-type node or an
    arrow is left in place for the residuation rules (its side subtrees are
    what the dependency order constrains)."""
    kids = children(phi)
    if not kids:
        return phi
    signs = coord_signs(phi, sig)
    below = transparent and is_pusher(sign, phi, sig)
    kids = tuple(_push_down(k, sign * s, sig, below) for k, s in zip(kids, signs))
    phi = with_children(phi, kids)
    if not below:
        return phi

    wrap: Optional[type] = None
    if isinstance(phi, And) and sign > 0:
        wrap = Or
    elif isinstance(phi, Or) and sign < 0:
        wrap = And
    elif isinstance(phi, Conn):
        decl = sig.decl(phi.name)
        if decl.kind == ADDITIVE and sign > 0:
            wrap = Or
        elif decl.kind == MULTIPLICATIVE and sign < 0:
            wrap = And
    if wrap is None:
        return phi

    for i, (k, s) in enumerate(zip(kids, signs)):
        target = Or if sign * s > 0 else And
        if isinstance(k, target):
            left = with_children(phi, kids[:i] + (k.left,) + kids[i + 1:])
            right = with_children(phi, kids[:i] + (k.right,) + kids[i + 1:])
            return _push_down(wrap(left, right), sign, sig, transparent)
    return phi


def _split_root(ineq: Inequality) -> list[Inequality]:
    match ineq.rhs:
        case And(a, b):
            return [x for i in (Inequality(ineq.lhs, a), Inequality(ineq.lhs, b))
                    for x in _split_root(i)]
    match ineq.lhs:
        case Or(a, b):
            return [x for i in (Inequality(a, ineq.rhs), Inequality(b, ineq.rhs))
                    for x in _split_root(i)]
    return [ineq]


def _eliminate_monotone(ineq: Inequality, sig: Signature) -> Inequality:
    """Drop variables occurring on both sides with receiving polarities only:
    negative left / positive right gets bot, the dual gets top."""
    changed = True
    while changed:
        changed = False
        for v in sorted(variables(ineq)):
            pl = polarity(ineq.lhs, v, sig)
            pr = polarity(ineq.rhs, v, sig)
            if Polarity.NONE in (pl, pr):
                continue
            if pl == Polarity.NEGATIVE and pr == Polarity.POSITIVE:
                val: Formula = Bot()
            elif pl == Polarity.POSITIVE and pr == Polarity.NEGATIVE:
                val = Top()
            else:
                continue
            ineq = Inequality(substitute(ineq.lhs, {v: val}),
                              substitute(ineq.rhs, {v: val}))
            changed = True
            break
    return ineq


def preprocess(ineq: Inequality, sig: Signature = DEFAULT_SIG) -> list[Inequality]:
    """Distribution, splitting and monotone variable elimination, to fixpoint."""
    work = [ineq]
    out: list[Inequality] = []
    for _ in range(10000):
        if not work:
            return out
        cur = work.pop(0)
        pushed = Inequality(_push_down(cur.lhs, +1, sig), _push_down(cur.rhs, -1, sig))
        parts = _split_root(pushed)
        if len(parts) > 1 or pushed != cur:
            work = parts + work
            continue
        reduced = _eliminate_monotone(pushed, sig)
        if reduced != pushed:
            work.insert(0, reduced)
            continue
        out.append(reduced)
    raise RuleError("preprocessing did not terminate")


# ---------------------------------------------------------------------------
# Fresh atoms and first approximation
# ---------------------------------------------------------------------------

def _fresh_nominal(sys: System) -> tuple[Nominal, System]:
    name = f"i{sys.nom_counter}"
    nxt = replace(sys, nom_counter=sys.nom_counter + 1)
    if any(occurs_atom(li.ineq, name, nominal=True) for li in sys.ineqs):
        raise FreshnessError(f"nominal {name} already occurs")
    return Nominal(name), nxt


def _fresh_conominal(sys: System) -> tuple[Conominal, System]:
    name = f"m{sys.conom_counter}"
    nxt = replace(sys, conom_counter=sys.conom_counter + 1)
    if any(occurs_atom(li.ineq, name, nominal=False) for li in sys.ineqs):
        raise FreshnessError(f"conominal {name} already occurs")
    return Conominal(name), nxt


def occurs_atom(obj, name: str, nominal: bool) -> bool:
    from .syntax import conominals, nominals
    return name in (nominals(obj) if nominal else conominals(obj))


def first_approximation(ineq: Inequality) -> System:
    """Replace phi <= psi by the initial system {#i0 <= phi, psi <= @m0}."""
    return System((LabeledIneq(Inequality(Nominal("i0"), ineq.lhs)),
                   LabeledIneq(Inequality(ineq.rhs, Conominal("m0")))))


# ---------------------------------------------------------------------------
# Stage 2 rules
# ---------------------------------------------------------------------------

RULES = (
    "split_meet",     # x <= a /\ b        ~> x <= a ; x <= b
    "split_join",     # a \/ b <= x        ~> a <= x ; b <= x
    "res_meet",       # a /\ b <= x        ~> b <= (a -> x)     [coord = kept side]
    "res_join",       # x <= a \/ b        ~> (x - a) <= b
    "res_arrow",      # x <= (a -> b)      ~> a /\ x <= b       (heyting, upward)
    "adj_add",        # f(a) <= x          ~> f(bot) <= x ; a <= bbox[f] x
    "adj_mult",       # x <= g(a)          ~> x <= g(top) ; bdia[g] x <= a
    "appr_add",       # #i <= f(...)       ~> branch per constant/atom split
    "appr_mult",      # l(...) <= @m       ~> dito
    "appr_arrow",     # (a -> b) <= @m     ~> #j <= a ; b <= @n ; (#j -> @n) <= @m
)


def _replace_at(sys: System, index: int, new: Sequence[LabeledIneq]) -> System:
    ineqs = sys.ineqs[:index] + tuple(new) + sys.ineqs[index + 1:]
    return replace(sys, ineqs=ineqs)


def _touch(sys: System, index: int) -> System:
    """Rewriting a side condition with a structural rule clears safety."""
    if sys.ineqs[index].is_side_condition:
        return replace(sys, safe=False)
    return sys


def apply_rule(sys: System, rule: str, index: int, sig: Signature = DEFAULT_SIG,
               coord: int = 0) -> BranchSet:
    """Apply one rule to the inequality at `index`; approximation rules
    return one system per meta-disjunct, all others a single successor."""
    if not 0 <= index < len(sys.ineqs):
        raise RuleError(f"no inequality at index {index}")
    target = sys.ineqs[index].ineq
    sys = _touch(sys, index)
    step = sys.step_counter
    sys = replace(sys, step_counter=step + 1)

    def one(new: Sequence[Inequality]) -> list[System]:
        return [_replace_at(sys, index, [LabeledIneq(i) for i in new])]

    match rule:
        case "split_meet":
            match target.rhs:
                case And(a, b):
                    return one([Inequality(target.lhs, a), Inequality(target.lhs, b)])
            raise RuleError("split_meet needs a /\\ on the right")
        case "split_join":
            match target.lhs:
                case Or(a, b):
                    return one([Inequality(a, target.rhs), Inequality(b, target.rhs)])
            raise RuleError("split_join needs a \\/ on the left")
        case "res_meet":
            # coord = index of the conjunct that stays; the other switches sides
            match target.lhs:
                case And(a, b):
                    kept, moved = (b, a) if coord == 1 else (a, b)
                    return one([Inequality(kept, Imp(moved, target.rhs))])
            raise RuleError("res_meet needs a /\\ on the left")
        case "res_join":
            match target.rhs:
                case Or(a, b):
                    kept, moved = (b, a) if coord == 1 else (a, b)
                    return one([Inequality(Minus(target.lhs, moved), kept)])
            raise RuleError("res_join needs a \\/ on the right")
        case "res_arrow":
            if sig.base != HEYTING:
                raise RuleError("res_arrow is only available on the heyting base")
            match target.rhs:
                case Imp(a, b):
                    return one([Inequality(And(a, target.lhs), b)])
            raise RuleError("res_arrow needs an -> on the right")
        case "adj_add":
            match target.lhs:
                case Conn(name, (a,)) if sig.decl(name).kind == ADDITIVE:
                    decl = sig.decl(name)
                    if decl.coord_types[0] == ONE:
                        side = Inequality(Conn(name, (Bot(),)), target.rhs)
                        rest = Inequality(a, BlackBox(name, target.rhs))
                    else:
                        side = Inequality(Conn(name, (Top(),)), target.rhs)
                        rest = Inequality(BlackLeft(name, target.rhs), a)
                    return [_replace_at(sys, index,
                                        [LabeledIneq(side, side_of=step), LabeledIneq(rest)])]
            raise RuleError("adj_add needs a unary additive connective on the left")
        case "adj_mult":
            match target.rhs:
                case Conn(name, (a,)) if sig.decl(name).kind == MULTIPLICATIVE:
                    decl = sig.decl(name)
                    if decl.coord_types[0] == ONE:
                        side = Inequality(target.lhs, Conn(name, (Top(),)))
                        rest = Inequality(BlackDia(name, target.lhs), a)
                    else:
                        side = Inequality(target.lhs, Conn(name, (Bot(),)))
                        rest = Inequality(a, BlackRight(name, target.lhs))
                    return [_replace_at(sys, index,
                                        [LabeledIneq(side, side_of=step), LabeledIneq(rest)])]
            raise RuleError("adj_mult needs a unary multiplicative connective on the right")
        case "appr_add":
            match (target.lhs, target.rhs):
                case (Nominal(), Conn(name, args)) if sig.decl(name).kind == ADDITIVE:
                    return _approximate(sys, index, target, name, args, sig,
                                        additive=True)
            raise RuleError("appr_add needs #i <= f(...)")
        case "appr_mult":
            match (target.lhs, target.rhs):
                case (Conn(name, args), Conominal()) if sig.decl(name).kind == MULTIPLICATIVE:
                    return _approximate(sys, index, target, name, args, sig,
                                        additive=False)
            raise RuleError("appr_mult needs l(...) <= @m")
        case "appr_arrow":
            if sig.base != HEYTING:
                raise RuleError("appr_arrow is only available on the heyting base")
            match (target.lhs, target.rhs):
                case (Imp(a, b), Conominal()):
                    j, sys2 = _fresh_nominal(sys)
                    nn, sys3 = _fresh_conominal(sys2)
                    return [_replace_at(sys3, index, [
                        LabeledIneq(Inequality(j, a)),
                        LabeledIneq(Inequality(b, nn)),
                        LabeledIneq(Inequality(Imp(j, nn), target.rhs))])]
            raise RuleError("appr_arrow needs (a -> b) <= @m")
    raise RuleError(f"unknown rule {rule!r}")


def _approximate(sys: System, index: int, target: Inequality, name: str,
                 args: tuple[Formula, ...], sig: Signature,
                 additive: bool) -> BranchSet:
    """One branch per subset of coordinates kept; kept coordinates get a
    fresh atom plus a continuation inequality, dropped ones a constant."""
    decl = sig.decl(name)
    branches: list[System] = []
    for keep_mask in range(1 << decl.arity):
        cur = sys
        new_args: list[Formula] = []
        extras: list[LabeledIneq] = []
        for i, arg in enumerate(args):
            monotone = decl.coord_types[i] == ONE
            if not (keep_mask >> i) & 1:
                if additive:
                    new_args.append(Bot() if monotone else Top())
                else:
                    new_args.append(Top() if monotone else Bot())
                continue
            if monotone == additive:
                atom, cur = _fresh_nominal(cur)
                extras.append(LabeledIneq(Inequality(atom, arg)))
            else:
                atom, cur = _fresh_conominal(cur)
                extras.append(LabeledIneq(Inequality(arg, atom)))
            new_args.append(atom)
        if additive:
            head = Inequality(target.lhs, Conn(name, tuple(new_args)))
        else:
            head = Inequality(Conn(name, tuple(new_args)), target.rhs)
        branches.append(_replace_at(cur, index, [LabeledIneq(head)] + extras))
    return branches


# ---------------------------------------------------------------------------
# Ackermann elimination
# ---------------------------------------------------------------------------

RIGHT = "right"
LEFT = "left"


def ackermann(sys: System, var: str, side: str, sig: Signature = DEFAULT_SIG) -> System:
    """Eliminate `var` by the right (join of lower bounds) or left (meet of
    upper bounds) substitution.  The system must already be in the reduced
    shape; the blocking inequality is reported otherwise."""
    if side not in (RIGHT, LEFT):
        raise ValueError("side must be 'right' or 'left'")
    bounds: list[Formula] = []
    keep: list[LabeledIneq] = []
    receivers: list[int] = []
    for li in sys.ineqs:
        ineq = li.ineq
        if side == RIGHT and isinstance(ineq.rhs, Var) and ineq.rhs.name == var:
            if not is_pure(ineq.lhs):
                raise AckermannFormError(
                    f"lower bound for {var} is not pure: {ineq}", ineq)
            bounds.append(ineq.lhs)
            continue
        if side == LEFT and isinstance(ineq.lhs, Var) and ineq.lhs.name == var:
            if not is_pure(ineq.rhs):
                raise AckermannFormError(
                    f"upper bound for {var} is not pure: {ineq}", ineq)
            bounds.append(ineq.rhs)
            continue
        if occurs(ineq, var):
            pl = polarity(ineq.lhs, var, sig)
            pr = polarity(ineq.rhs, var, sig)
            good_l = (Polarity.POSITIVE, Polarity.NONE) if side == RIGHT \
                else (Polarity.NEGATIVE, Polarity.NONE)
            good_r = (Polarity.NEGATIVE, Polarity.NONE) if side == RIGHT \
                else (Polarity.POSITIVE, Polarity.NONE)
            if pl not in good_l or pr not in good_r:
                raise AckermannFormError(
                    f"inequality blocks {side} elimination of {var}: {ineq}", ineq)
            receivers.append(len(keep))
        keep.append(li)
    if bounds:
        value = bounds[0]
        for b in bounds[1:]:
            value = Or(value, b) if side == RIGHT else And(value, b)
    else:
        value = Bot() if side == RIGHT else Top()
    binding = {var: value}
    new = []
    for i, li in enumerate(keep):
        if i in receivers:
            new.append(LabeledIneq(Inequality(substitute(li.ineq.lhs, binding),
                                              substitute(li.ineq.rhs, binding)),
                                   li.side_of))
        else:
            new.append(li)
    return replace(sys, ineqs=tuple(new))


# ---------------------------------------------------------------------------
# Guided strategy
# ---------------------------------------------------------------------------

def _strata(omega: frozenset[tuple[str, str]], vs: set[str]) -> list[set[str]]:
    pairs = {(a, b) for a, b in omega if a in vs and b in vs}
    remaining = set(vs)
    layers = []
    while remaining:
        minimal = {v for v in remaining
                   if not any(b == v and a in remaining for a, b in pairs)}
        if not minimal:
            raise StrategyError("dependency order is cyclic")
        layers.append(minimal)
        remaining -= minimal
    return layers


@dataclass(frozen=True)
class _Target:
    index: int
    rule: str
    coord: int = 0


def _sides(ineq: Inequality) -> tuple[bool, bool]:
    return is_pure(ineq.lhs), is_pure(ineq.rhs)


def _find_target(sys: System, stratum: set[str], eps: Mapping[str, str],
                 sig: Signature) -> Optional[_Target]:
    for idx, li in enumerate(sys.ineqs):
        ineq = li.ineq
        lp, rp = _sides(ineq)
        if lp and rp:
            continue
        if not lp and not rp:
            raise StrategyError(f"both sides impure: {ineq}")
        tree = signed_tree(ineq.rhs, +1, sig) if lp else signed_tree(ineq.lhs, -1, sig)
        crit = _critical_child_coords(tree, stratum, eps)
        if crit is None:
            continue
        t = _dispatch(ineq, tree, crit, lp, sig, idx)
        if t is not None:
            return t
    return None


def _critical_child_coords(tree: SignedNode, stratum: set[str],
                           eps: Mapping[str, str]) -> Optional[set[int]]:
    """Child coordinates through which a critical occurrence of a stratum
    variable is reachable; None when the tree carries none at all."""
    def has_crit(node: SignedNode) -> bool:
        if node.is_leaf:
            return (isinstance(node.formula, Var) and node.formula.name in stratum
                    and is_critical(node.sign, node.formula.name, eps))
        return any(has_crit(c) for c in node.children)

    if not has_crit(tree):
        return None
    return {i for i, c in enumerate(tree.children) if has_crit(c)}


def _dispatch(ineq: Inequality, tree: SignedNode, crit: set[int], lhs_pure: bool,
              sig: Signature, idx: int) -> Optional[_Target]:
    phi = tree.formula
    if isinstance(phi, Var):
        return None          # already an elimination atom
    if lhs_pure:
        # tree is +rhs
        match phi:
            case And():
                return _Target(idx, "split_meet")
            case Or():
                kept = _lone_side(crit, ineq, phi)
                return _Target(idx, "res_join", coord=kept)
            case Imp():
                if crit != {1}:
                    raise StrategyError(
                        "critical branch through the antecedent of a positive ->")
                _require_pure(phi.left, ineq)
                return _Target(idx, "res_arrow")
            case Conn(name, _):
                decl = sig.decl(name)
                if decl.kind == ADDITIVE:
                    if not isinstance(ineq.lhs, Nominal):
                        raise StrategyError(f"approximation needs a nominal: {ineq}")
                    return _Target(idx, "appr_add")
                if decl.arity == 1:
                    return _Target(idx, "adj_mult")
                raise StrategyError(
                    f"critical branch through a positive n-ary multiplicative {name}")
    else:
        # tree is -lhs
        match phi:
            case Or():
                return _Target(idx, "split_join")
            case And():
                kept = _lone_side(crit, ineq, phi)
                return _Target(idx, "res_meet", coord=kept)
            case Imp():
                if not isinstance(ineq.rhs, Conominal):
                    raise StrategyError(f"approximation needs a conominal: {ineq}")
                return _Target(idx, "appr_arrow")
            case Conn(name, _):
                decl = sig.decl(name)
                if decl.kind == MULTIPLICATIVE:
                    if not isinstance(ineq.rhs, Conominal):
                        raise StrategyError(f"approximation needs a conominal: {ineq}")
                    return _Target(idx, "appr_mult")
                if decl.arity == 1:
                    return _Target(idx, "adj_add")
                raise StrategyError(
                    f"critical branch through a negative n-ary additive {name}")
    raise StrategyError(f"no rule for critical occurrence in {ineq}")


def _lone_side(crit: set[int], ineq: Inequality, phi: Formula) -> int:
    """Index of the unique coordinate carrying the critical branch; the
    other coordinate must already be pure (it is about to switch sides)."""
    if len(crit) != 1:
        raise StrategyError(
            f"critical occurrences on both sides of a residual node: {ineq}")
    kept = next(iter(crit))
    _require_pure(children(phi)[1 - kept], ineq)
    return kept


def _require_pure(side: Formula, ineq: Inequality):
    if not is_pure(side):
        raise StrategyError(f"switching term {side} is not pure in {ineq}")


def _reduce_stratum(sys: System, stratum: set[str], eps: Mapping[str, str],
                    sig: Signature, trace: list[TraceStep]) -> list[System]:
    for _ in range(10000):
        target = _find_target(sys, stratum, eps, sig)
        if target is None:
            break
        branches = apply_rule(sys, target.rule, target.index, sig, target.coord)
        trace.append(TraceStep(target.rule, target.index, sys, tuple(branches)))
        if len(branches) == 1:
            sys = branches[0]
            continue
        out: list[System] = []
        for b in branches:
            out.extend(_reduce_stratum(b, stratum, eps, sig, trace))
        return out
    else:
        raise StrategyError("stratum reduction did not terminate")
    for v in sorted(stratum & variables_of_system(sys)):
        side = RIGHT if eps[v] == ONE else LEFT
        before = sys
        sys = ackermann(sys, v, side, sig)
        trace.append(TraceStep(f"ackermann_{side}", -1, before, (sys,)))
    return [sys]


def variables_of_system(sys: System) -> set[str]:
    out: set[str] = set()
    for li in sys.ineqs:
        out |= variables(li.ineq)
    return out


def _run_guided(ineq: Inequality, cert: Certificate, sig: Signature,
                simplify: bool) -> RunResult:
    ok, _ = (is_sahlqvist(ineq, cert.eps, sig) if cert.kind == "sahlqvist"
             else is_inductive(ineq, cert.eps, cert.omega, sig))
    if not ok:
        raise StrategyError("certificate does not match the inequality")
    trace: list[TraceStep] = []
    quasis: list[QuasiInequality] = []
    safe = True
    for piece in preprocess(ineq, sig):
        sys0 = first_approximation(piece)
        systems = [sys0]
        for stratum in _strata(cert.omega, variables(piece)):
            nxt: list[System] = []
            for s in systems:
                nxt.extend(_reduce_stratum(s, stratum, cert.eps, sig, trace))
            systems = nxt
        for s in systems:
            if not s.all_pure():
                raise StrategyError(f"impure final system: {s.inequalities()}")
            safe = safe and s.safe
            quasis.append(_assemble(s))
    if simplify:
        quasis = [q2 for q in quasis if (q2 := simplify_quasi(q)) is not None]
    return RunResult(True, quasis, safe, trace)


# ---------------------------------------------------------------------------
# Exhaustive (bounded search) strategy
# ---------------------------------------------------------------------------

def _candidate_moves(sys: System, sig: Signature) -> list[_Target]:
    moves: list[_Target] = []
    for idx, li in enumerate(sys.ineqs):
        ineq = li.ineq
        if is_pure(ineq):
            continue
        if isinstance(ineq.rhs, And):
            moves.append(_Target(idx, "split_meet"))
        if isinstance(ineq.lhs, Or):
            moves.append(_Target(idx, "split_join"))
        match ineq.lhs:
            case Conn(name, args) if sig.decl(name).kind == ADDITIVE and len(args) == 1:
                moves.append(_Target(idx, "adj_add"))
            case And(a, b):
                if is_pure(a):
                    moves.append(_Target(idx, "res_meet", coord=1))
                if is_pure(b):
                    moves.append(_Target(idx, "res_meet", coord=0))
            case Imp() if isinstance(ineq.rhs, Conominal) and sig.base == HEYTING:
                moves.append(_Target(idx, "appr_arrow"))
        match ineq.lhs:
            case Conn(name, _) if sig.decl(name).kind == MULTIPLICATIVE \
                    and isinstance(ineq.rhs, Conominal):
                moves.append(_Target(idx, "appr_mult"))
        match ineq.rhs:
            case Conn(name, args) if sig.decl(name).kind == MULTIPLICATIVE and len(args) == 1:
                moves.append(_Target(idx, "adj_mult"))
            case Or(a, b):
                if is_pure(a):
                    moves.append(_Target(idx, "res_join", coord=1))
                if is_pure(b):
                    moves.append(_Target(idx, "res_join", coord=0))
            case Imp(a, _) if sig.base == HEYTING:
                if is_pure(a):
                    moves.append(_Target(idx, "res_arrow"))
        match ineq.rhs:
            case Conn(name, _) if sig.decl(name).kind == ADDITIVE \
                    and isinstance(ineq.lhs, Nominal):
                moves.append(_Target(idx, "appr_add"))
    return moves


class _Budget:
    def __init__(self, count: int):
        self.left = count

    def spend(self) -> bool:
        self.left -= 1
        return self.left >= 0


def _search(sys: System, sig: Signature, depth: int, budget: _Budget
            ) -> Optional[list[System]]:
    if sys.all_pure():
        return [sys]
    if depth == 0 or not budget.spend():
        return None
    for v in sorted(variables_of_system(sys)):
        for side in (RIGHT, LEFT):
            try:
                nxt = ackermann(sys, v, side, sig)
            except AckermannFormError:
                continue
            res = _search(nxt, sig, depth - 1, budget)
            if res is not None:
                return res
    for mv in _candidate_moves(sys, sig):
        try:
            branches = apply_rule(sys, mv.rule, mv.index, sig, mv.coord)
        except RuleError:
            continue
        collected: list[System] = []
        for b in branches:
            res = _search(b, sig, depth - 1, budget)
            if res is None:
                collected = []
                break
            collected.extend(res)
        if collected:
            return collected
    return None


def _run_exhaustive(ineq: Inequality, strat: Exhaustive, sig: Signature,
                    simplify: bool) -> RunResult:
    quasis: list[QuasiInequality] = []
    stuck: list[System] = []
    safe = True
    for piece in preprocess(ineq, sig):
        sys0 = first_approximation(piece)
        finals = None
        for depth in range(1, strat.max_depth + 1):
            finals = _search(sys0, sig, depth, _Budget(strat.budget))
            if finals is not None:
                break
        if finals is None:
            stuck.append(sys0)
            continue
        for s in finals:
            safe = safe and s.safe
            quasis.append(_assemble(s))
    if stuck:
        return RunResult(False, [], safe, [], stuck)
    if simplify:
        quasis = [q2 for q in quasis if (q2 := simplify_quasi(q)) is not None]
    return RunResult(True, quasis, safe, [])


def run(ineq: Inequality, strategy: Guided | Exhaustive,
        sig: Signature = DEFAULT_SIG, simplify: bool = True) -> RunResult:
    """Execute the calculus; Guided follows a certificate and always succeeds
    safely on inductive input, Exhaustive is a bounded probe that may fail."""
    if isinstance(strategy, Guided):
        return _run_guided(ineq, strategy.certificate, sig, simplify)
    return _run_exhaustive(ineq, strategy, sig, simplify)


# ---------------------------------------------------------------------------
# Output assembly
# ---------------------------------------------------------------------------

def fold_constants(phi: Formula) -> Formula:
    kids = children(phi)
    if kids:
        phi = with_children(phi, tuple(fold_constants(k) for k in kids))
    match phi:
        case And(Top(), x) | And(x, Top()):
            return x
        case And(Bot(), _) | And(_, Bot()):
            return Bot()
        case Or(Bot(), x) | Or(x, Bot()):
            return x
        case Or(Top(), _) | Or(_, Top()):
            return Top()
        case Imp(Bot(), _) | Imp(_, Top()):
            return Top()
        case Imp(Top(), x):
            return x
        case Minus(x, Bot()):
            return x
        case Minus(Bot(), _) | Minus(_, Top()):
            return Bot()
    return phi


def _assemble(sys: System) -> QuasiInequality:
    return QuasiInequality(sys.inequalities(),
                           Inequality(Nominal("i0"), Conominal("m0")))


def _count_sub(obj, pred) -> int:
    from .syntax import _formulas_of, _walk
    return sum(1 for f in _formulas_of(obj) for n in _walk(f) if pred(n))


def simplify_quasi(quasi: QuasiInequality) -> Optional[QuasiInequality]:
    """Fold constants, absorb the consequent's fresh atoms when they occur
    exactly once in the antecedent, and drop tautological conjuncts
    (returns None for those)."""
    ant = [Inequality(fold_constants(i.lhs), fold_constants(i.rhs))
           for i in quasi.antecedent]
    cons = quasi.consequent

    # absorb @m0:  (.. & t <= @m0) => x <= @m0   ~>   .. => x <= t
    if isinstance(cons.rhs, Conominal):
        m = cons.rhs.name
        hits = [i for i, iq in enumerate(ant)
                if isinstance(iq.rhs, Conominal) and iq.rhs.name == m]
        total = _count_sub(QuasiInequality(tuple(ant), cons),
                           lambda nd: isinstance(nd, Conominal) and nd.name == m)
        if len(hits) == 1 and total == 2:
            t = ant[hits[0]].lhs
            ant = ant[:hits[0]] + ant[hits[0] + 1:]
            cons = Inequality(cons.lhs, t)
    # absorb #i0:  (#i0 <= u & ..) => #i0 <= t   ~>   .. => u <= t
    if isinstance(cons.lhs, Nominal):
        i0 = cons.lhs.name
        hits = [i for i, iq in enumerate(ant)
                if isinstance(iq.lhs, Nominal) and iq.lhs.name == i0]
        total = _count_sub(QuasiInequality(tuple(ant), cons),
                           lambda nd: isinstance(nd, Nominal) and nd.name == i0)
        if len(hits) == 1 and total == 2:
            u = ant[hits[0]].rhs
            ant = ant[:hits[0]] + ant[hits[0] + 1:]
            cons = Inequality(u, cons.rhs)

    if cons.lhs == cons.rhs:
        return None
    if cons in ant:
        return None
    for iq in ant:
        if iq.lhs == cons.lhs:
            if any(j.lhs == iq.rhs and j.rhs == cons.rhs for j in ant):
                return None
    return QuasiInequality(tuple(ant), cons)

"""Node classification and recognition of Sahlqvist / inductive inequalities.

Each signed node gets a set of admissible classes:

  SAC -- syntactically additive coordinate-wise; these are the "outer"
         (skeleton) nodes handled by approximation and splitting.
  SMP -- syntactically (product-)multiplicative; "inner" nodes handled by
         adjunction, where minimal valuations are computed.
  SRR -- syntactically right-residual binary nodes; inner nodes whose side
         subtree must already be solved, which is what the dependency order
         tracks.

A critical branch, read from the leaf, must be an inner segment followed by
an outer segment.  For the Sahlqvist class the inner segment may only use
SMP nodes; for the inductive class SRR nodes are also allowed, subject to
the side conditions checked below.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from .syntax import (
    ADDITIVE, DUAL, ONE, And, Conn, DEFAULT_SIG, Formula, Imp, Inequality,
    Or, Branch, Signature, SignedNode, Var, critical_branches, is_critical,
    signed_tree, variables,
)


class NodeClass(Enum):
    SAC = "sac"
    SMP = "smp"
    SRR = "srr"


def admissible(sign: int, phi: Formula, sig: Signature = DEFAULT_SIG) -> frozenset[NodeClass]:
    """Admissible classes of a connective node with the given sign."""
    pos = sign > 0
    match phi:
        case And():
            return frozenset({NodeClass.SAC, NodeClass.SMP} if pos
                             else {NodeClass.SAC, NodeClass.SRR})
        case Or():
            return frozenset({NodeClass.SAC, NodeClass.SRR} if pos
                             else {NodeClass.SAC, NodeClass.SMP})
        case Imp():
            return frozenset({NodeClass.SRR} if pos else {NodeClass.SAC})
        case Conn(name, _):
            decl = sig.decl(name)
            if decl.kind == ADDITIVE:
                if pos:
                    return frozenset({NodeClass.SAC})
                return frozenset({NodeClass.SMP}) if decl.arity == 1 else frozenset()
            if pos:
                return frozenset({NodeClass.SMP}) if decl.arity == 1 else frozenset()
            return frozenset({NodeClass.SAC})
        case _:
            return frozenset()


def is_eps_uniform(tree: SignedNode, eps: Mapping[str, str]) -> bool:
    """True iff every variable leaf of the signed tree is critical for eps.

    Constant leaves (and nominals/conominals) are ignored: they impose no
    valuation and never block a side subtree.
    """
    def walk(node: SignedNode) -> bool:
        if node.is_leaf:
            if isinstance(node.formula, Var):
                return is_critical(node.sign, node.formula.name, eps)
            return True
        return all(walk(c) for c in node.children)

    return walk(tree)


def dual_eps(eps: Mapping[str, str]) -> dict[str, str]:
    return {v: (DUAL if e == ONE else ONE) for v, e in eps.items()}


@dataclass(frozen=True)
class Violation:
    var: str
    path: str
    reason: str

    def to_json(self) -> dict:
        return {"var": self.var, "path": self.path, "reason": self.reason}


@dataclass(frozen=True)
class Certificate:
    kind: str                                # "sahlqvist" | "inductive"
    eps: dict[str, str] = field(default_factory=dict)
    omega: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        if self.kind == "sahlqvist" and self.omega:
            raise ValueError("a Sahlqvist certificate carries an empty dependency order")
        _check_strict_order(self.omega)

    def to_json(self) -> dict:
        return {"kind": self.kind, "eps": dict(sorted(self.eps.items())),
                "omega": sorted(self.omega)}


def _check_strict_order(omega: frozenset[tuple[str, str]]):
    for a, b in omega:
        if a == b:
            raise ValueError(f"dependency order is not irreflexive: {a} < {a}")
        for c, d in omega:
            if b == c and (a, d) not in omega:
                raise ValueError(f"dependency order is not transitive: missing {a} < {d}")


def _node_label(node: SignedNode) -> str:
    sign = "+" if node.sign > 0 else "-"
    match node.formula:
        case And():
            core = "/\\"
        case Or():
            core = "\\/"
        case Imp():
            core = "->"
        case Conn(name, _):
            core = name
        case f:
            core = str(f)
    return sign + core


def _path_str(branch: Branch) -> str:
    leaf = ("+" if branch.leaf.sign > 0 else "-") + branch.var
    return " ".join([leaf] + [_node_label(n) for n, _ in branch.spine])


def is_pusher(sign: int, phi: Formula, sig: Signature = DEFAULT_SIG) -> bool:
    """Nodes that distribute over a lattice node below them (so the latter
    can be surfaced to the root and split away) and that keep the exposed
    pure side an atom during runs: every SAC node except a signed `->`."""
    if isinstance(phi, Imp):
        return False
    return NodeClass.SAC in admissible(sign, phi, sig)


def _branch_check(branch: Branch, sig: Signature, eps: Mapping[str, str],
                  excellent_only: bool) -> tuple[Optional[Violation], set[tuple[str, str]]]:
    """Check one critical branch; return (violation | None, forced constraints).

    The walk goes root to leaf and mirrors the run: `atomic` records whether
    the exposed pure side is still a nominal/conominal (so approximation
    steps may fire), `transparent` whether everything above is a pusher
    (so a `\\/` or `/\\` residual candidate will instead be distributed to
    the root and split during preprocessing).  Surviving residual nodes
    demand an anti-critical side whose variables sit strictly below the
    branch variable in the dependency order.
    """
    edp = dual_eps(eps)
    constraints: set[tuple[str, str]] = set()
    atomic = True
    transparent = True

    def fail(reason: str):
        return (Violation(branch.var, _path_str(branch), reason), set())

    def side_conditions(node: SignedNode, child_idx: int) -> Optional[Violation]:
        side = node.children[1 - child_idx]
        if not is_eps_uniform(side, edp):
            return Violation(branch.var, _path_str(branch),
                             f"side subtree {side.formula} of {_node_label(node)} "
                             "carries a critical occurrence")
        for v in variables(side.formula):
            constraints.add((v, branch.var))
        return None

    for node, child_idx in reversed(branch.spine):
        phi = node.formula
        residual_lattice = (isinstance(phi, Or) and node.sign > 0) \
            or (isinstance(phi, And) and node.sign < 0)
        if residual_lattice and transparent:
            continue                      # distributed to the root and split away
        if isinstance(phi, (And, Or)) and not residual_lattice:
            continue                      # splitting, in any state (+/\ and -\/)
        if isinstance(phi, Imp):
            if node.sign < 0:
                if not atomic:
                    return fail("an inner '->' node follows an adjunction step")
                transparent = False
                continue
            if excellent_only:
                return fail(f"inner node {_node_label(node)} is not SMP")
            if child_idx != 1:
                return fail("a critical branch may only pass through the second "
                            "coordinate of a positive '->'")
            bad = side_conditions(node, child_idx)
            if bad is not None:
                return (bad, set())
            atomic = False
            transparent = False
            continue
        if residual_lattice:              # survives preprocessing
            if excellent_only:
                return fail(f"inner node {_node_label(node)} is not SMP")
            bad = side_conditions(node, child_idx)
            if bad is not None:
                return (bad, set())
            atomic = False
            transparent = False
            continue
        cls = admissible(node.sign, phi, sig)
        if NodeClass.SAC in cls:          # approximation node (+f, +k, -g, -l)
            if not atomic:
                return fail(f"outer node {_node_label(node)} follows an "
                            "adjunction or residuation step")
            continue
        if NodeClass.SMP in cls:          # adjunction node (+g, -f, unary)
            atomic = False
            transparent = False
            continue
        return fail(f"node {_node_label(node)} admits no rule on a critical branch")
    return (None, constraints)


def _tree_pairs(ineq: Inequality, sig: Signature) -> list[SignedNode]:
    return [signed_tree(ineq.lhs, +1, sig), signed_tree(ineq.rhs, -1, sig)]


def is_sahlqvist(ineq: Inequality, eps: Mapping[str, str],
                 sig: Signature = DEFAULT_SIG) -> tuple[bool, list[Violation]]:
    """Both signed trees of the inequality must have every critical branch
    made of SMP inner nodes followed by SAC outer nodes."""
    violations = []
    for tree in _tree_pairs(ineq, sig):
        for br in critical_branches(tree, eps):
            bad, _ = _branch_check(br, sig, eps, excellent_only=True)
            if bad is not None:
                violations.append(bad)
    return (not violations, violations)


def is_inductive(ineq: Inequality, eps: Mapping[str, str],
                 omega: frozenset[tuple[str, str]] | set[tuple[str, str]] = frozenset(),
                 sig: Signature = DEFAULT_SIG) -> tuple[bool, list[Violation]]:
    """Critical branches may also pass through SRR inner nodes, provided the
    side subtree is anti-critical throughout and its variables sit strictly
    below the branch variable in the dependency order."""
    omega = frozenset(omega)
    _check_strict_order(omega)
    violations = []
    for tree in _tree_pairs(ineq, sig):
        for br in critical_branches(tree, eps):
            bad, constraints = _branch_check(br, sig, eps, excellent_only=False)
            if bad is not None:
                violations.append(bad)
                continue
            for pair in sorted(constraints):
                if pair not in omega:
                    violations.append(Violation(
                        br.var, _path_str(br),
                        f"side variable {pair[0]} is not below {pair[1]} "
                        "in the dependency order"))
    return (not violations, violations)


def _transitive_closure(pairs: set[tuple[str, str]]) -> Optional[frozenset[tuple[str, str]]]:
    """Closure of the forced constraints; None when it is cyclic."""
    closure = set(pairs)
    changed = True
    while changed:
        changed = False
        for a, b in list(closure):
            for c, d in list(closure):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
    if any(a == b for a, b in closure):
        return None
    return frozenset(closure)


MAX_CERTIFICATE_VARS = 16


def find_certificate(ineq: Inequality, sig: Signature = DEFAULT_SIG) -> Optional[Certificate]:
    """Search for a witnessing order type (and dependency order).

    Sahlqvist certificates take precedence over inductive ones; within each
    kind, order types are tried in lexicographic order over the sorted
    variables with 1 < d.  The dependency order is not searched: it is the
    transitive closure of the constraints each side subtree forces, rejected
    when cyclic.
    """
    vs = sorted(variables(ineq))
    if len(vs) > MAX_CERTIFICATE_VARS:
        raise ValueError(f"too many variables for certificate search ({len(vs)})")
    candidates = [dict(zip(vs, combo))
                  for combo in itertools.product((ONE, DUAL), repeat=len(vs))]
    for eps in candidates:
        ok, _ = is_sahlqvist(ineq, eps, sig)
        if ok:
            return Certificate("sahlqvist", eps)
    for eps in candidates:
        forced: set[tuple[str, str]] = set()
        ok = True
        for tree in _tree_pairs(ineq, sig):
            for br in critical_branches(tree, eps):
                bad, constraints = _branch_check(br, sig, eps, excellent_only=False)
                if bad is not None:
                    ok = False
                    break
                forced |= constraints
            if not ok:
                break
        if not ok:
            continue
        omega = _transitive_closure(forced)
        if omega is None:
            continue
        cert = Certificate("inductive", eps, omega)
        confirmed, _ = is_inductive(ineq, eps, omega, sig)
        if confirmed:
            return cert
    return None

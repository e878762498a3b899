"""Finite perfect regular algebras and the discrete duality with frames.

Classical algebras live on a powerset carrier (subsets of n atoms as
bitmasks, operation tables stored extensionally); distributive ones on the
up-set lattice of a finite poset.  Additivity/multiplicativity is checked
pairwise, which implies the complete versions on a finite carrier.  Bottom
and top need not be preserved: that gap is exactly what separates regular
operators from normal ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .semantics import BudgetError, DistFrame, Frame, Poset, _bits
from .syntax import (
    ADDITIVE, And, Bot, Conn, ConnectiveDecl, DEFAULT_SIG, Formula, Imp,
    Inequality, Minus, ONE, Or, Signature, Top, Var, variables,
)


@dataclass(frozen=True)
class Iso:
    """A witnessing bijection (on worlds, atoms, or carrier elements)."""
    mapping: tuple[int, ...]

    def to_json(self) -> dict:
        return {"mapping": list(self.mapping)}


class InvalidAlgebraError(ValueError):
    pass


@dataclass
class FiniteAlgebra:
    """Powerset algebra on `atoms` atoms; ops maps names to flat tables.

    A table for an m-ary operation has (2^atoms)^m entries indexed by
    sum(arg_i << (atoms * i)).
    """
    atoms: int
    ops: dict[str, np.ndarray]
    decls: dict[str, ConnectiveDecl]

    @property
    def carrier_size(self) -> int:
        return 1 << self.atoms

    @property
    def full(self) -> int:
        return (1 << self.atoms) - 1

    def apply(self, name: str, *args: int) -> int:
        idx = 0
        for i, a in enumerate(args):
            idx |= a << (self.atoms * i)
        return int(self.ops[name][idx])

    def to_json(self) -> dict:
        return {"atoms": self.atoms, "carrier": self.carrier_size,
                "ops": {k: [int(x) for x in v] for k, v in self.ops.items()}}


def complex_algebra(frame: Frame, sig: Signature = DEFAULT_SIG) -> FiniteAlgebra:
    """Powerset algebra of a frame with the dia/box tables it induces."""
    size = 1 << frame.n
    dia = np.fromiter((frame.dia(x) for x in range(size)), dtype=np.int64, count=size)
    box = np.fromiter((frame.box(x) for x in range(size)), dtype=np.int64, count=size)
    return FiniteAlgebra(frame.n, {"dia": dia, "box": box},
                         {"dia": sig.decl("dia"), "box": sig.decl("box")})


def validate_regular(alg: FiniteAlgebra) -> list[str]:
    """Coordinate-wise additivity/multiplicativity over all nonempty pairs.

    Join/meet preservation is required modulo the coordinate order type;
    preservation of bottom/top is deliberately NOT required.
    """
    problems = []
    size = alg.carrier_size
    for name, table in alg.ops.items():
        decl = alg.decls[name]
        if len(table) != size ** decl.arity:
            problems.append(f"{name}: table has wrong size")
            continue
        for coord in range(decl.arity):
            ct = decl.coord_types[coord]
            for rest in itertools.product(range(size), repeat=decl.arity - 1):
                def at(v: int) -> int:
                    args = list(rest[:coord]) + [v] + list(rest[coord:])
                    return alg.apply(name, *args)
                for x in range(size):
                    for y in range(x, size):
                        inner = (x | y) if (decl.kind == ADDITIVE) == (ct == ONE) else (x & y)
                        got = at(inner)
                        want = (at(x) | at(y)) if decl.kind == ADDITIVE else (at(x) & at(y))
                        if got != want:
                            problems.append(
                                f"{name}: coordinate {coord} fails at ({x},{y}) "
                                f"with context {rest}")
                            break
                    else:
                        continue
                    break
    return problems


def atom_structure(alg: FiniteAlgebra) -> Frame:
    """Frame on the atoms: w is normal iff its atom avoids dia(bot), and
    w S v iff the atom of w sits below dia(atom of v)."""
    problems = validate_regular(alg)
    if problems:
        raise InvalidAlgebraError("; ".join(problems))
    if "dia" not in alg.ops:
        raise InvalidAlgebraError("atom structure needs the additive op 'dia'")
    dia = alg.ops["dia"]
    n = alg.atoms
    normal = alg.full & ~int(dia[0])
    succ = [0] * n
    for w in _bits(normal):
        for v in range(n):
            if (int(dia[1 << v]) >> w) & 1:
                succ[w] |= 1 << v
    return Frame(n, normal, tuple(succ))


MAX_ISO_WORLDS = 4


def duality_roundtrip(frame: Frame) -> Optional[Iso]:
    """Search the witnessing world bijection between F and (F^+)_+."""
    if frame.n > MAX_ISO_WORLDS:
        raise BudgetError(f"isomorphism search capped at {MAX_ISO_WORLDS} worlds")
    other = atom_structure(complex_algebra(frame))
    return frame_iso(frame, other)


def frame_iso(a: Frame, b: Frame) -> Optional[Iso]:
    if a.n != b.n:
        return None
    for perm in itertools.permutations(range(a.n)):
        if all(((a.normal >> w) & 1) == ((b.normal >> perm[w]) & 1) for w in range(a.n)):
            if all(((a.succ[w] >> v) & 1) == ((b.succ[perm[w]] >> perm[v]) & 1)
                   for w in range(a.n) for v in range(a.n)):
                return Iso(perm)
    return None


def algebra_roundtrip(alg: FiniteAlgebra) -> Optional[Iso]:
    """Search an atom bijection making (A_+)^+ isomorphic to A."""
    other = complex_algebra(atom_structure(alg))
    if other.atoms != alg.atoms:
        return None
    names = sorted(alg.ops)
    if sorted(other.ops) != names:
        return None
    size = alg.carrier_size
    for perm in itertools.permutations(range(alg.atoms)):
        def carry(x: int) -> int:
            out = 0
            for w in _bits(x):
                out |= 1 << perm[w]
            return out
        if all(carry(alg.apply(nm, x)) == other.apply(nm, carry(x))
               for nm in names for x in range(size)):
            return Iso(perm)
    return None


MAX_ALGEBRA_BITS = 24


def algebra_valid(alg: FiniteAlgebra, ineq: Inequality,
                  sig: Signature = DEFAULT_SIG) -> bool:
    """h(lhs) <= h(rhs) for every assignment into the carrier."""
    vs = sorted(variables(ineq))
    if alg.atoms * len(vs) > MAX_ALGEBRA_BITS:
        raise BudgetError("assignment enumeration over the carrier is too large")
    total = 1 << (alg.atoms * len(vs))
    assigns = np.arange(total, dtype=np.int64)
    env = {v: (assigns >> (alg.atoms * i)) & alg.full for i, v in enumerate(vs)}
    lhs = _alg_eval(alg, ineq.lhs, env, total)
    rhs = _alg_eval(alg, ineq.rhs, env, total)
    return bool(((lhs & ~rhs) == 0).all())


def _alg_eval(alg: FiniteAlgebra, phi: Formula, env: Mapping[str, np.ndarray],
              total: int) -> np.ndarray:
    match phi:
        case Top():
            return np.full(total, alg.full, dtype=np.int64)
        case Bot():
            return np.zeros(total, dtype=np.int64)
        case Var(name):
            return env[name]
        case And(a, b):
            return _alg_eval(alg, a, env, total) & _alg_eval(alg, b, env, total)
        case Or(a, b):
            return _alg_eval(alg, a, env, total) | _alg_eval(alg, b, env, total)
        case Imp(a, b):
            return (alg.full ^ _alg_eval(alg, a, env, total)) | _alg_eval(alg, b, env, total)
        case Minus(a, b):
            return _alg_eval(alg, a, env, total) & (alg.full ^ _alg_eval(alg, b, env, total))
        case Conn(name, args):
            idx = np.zeros(total, dtype=np.int64)
            for i, a in enumerate(args):
                idx |= _alg_eval(alg, a, env, total) << (alg.atoms * i)
            return alg.ops[name][idx]
    raise TypeError(f"cannot evaluate {phi!r} in an algebra")


# ---------------------------------------------------------------------------
# Distributive variant: up-set algebras over finite posets
# ---------------------------------------------------------------------------

@dataclass
class UpsetAlgebra:
    """All up-sets of a poset with unary f (additive) and g (multiplicative)
    tables, indexed by position in the sorted carrier list."""
    poset: Poset
    carrier: tuple[int, ...]
    f_table: tuple[int, ...]
    g_table: tuple[int, ...]

    def index(self, x: int) -> int:
        return self.carrier.index(x)

    def f(self, x: int) -> int:
        return self.carrier[self.f_table[self.index(x)]]

    def g(self, x: int) -> int:
        return self.carrier[self.g_table[self.index(x)]]

    def join_irreducibles(self) -> list[int]:
        out = []
        for x in self.carrier:
            if x == 0:
                continue
            below = 0
            for y in self.carrier:
                if y != x and (y & ~x) == 0:
                    below |= y
            if below != x:
                out.append(x)
        return out


def dist_complex_algebra(df: DistFrame) -> UpsetAlgebra:
    carrier = tuple(df.poset.upsets())
    index = {x: i for i, x in enumerate(carrier)}
    f_table = tuple(index[df.f_op(x)] for x in carrier)
    g_table = tuple(index[df.g_op(x)] for x in carrier)
    return UpsetAlgebra(df.poset, carrier, f_table, g_table)


def _kappa(alg: UpsetAlgebra, x: int) -> int:
    """Largest element avoiding the join-irreducible x (a co-irreducible)."""
    out = 0
    for a in alg.carrier:
        if x & ~a:
            out |= a
    return out


def dist_atom_structure(alg: UpsetAlgebra) -> DistFrame:
    """Distributive frame on join-irreducibles ordered by reverse inclusion."""
    js = sorted(alg.join_irreducibles())
    n = len(js)
    # frame order: x below y  iff  y <= x in the lattice (reverse inclusion)
    up = []
    for x in js:
        mask = 0
        for j, y in enumerate(js):
            if y & ~x == 0:
                mask |= 1 << j
        up.append(mask)
    poset = Poset(n, tuple(up))
    f_bot = alg.f(0)
    g_top = alg.g(alg.poset.full)
    nf = 0
    ng = 0
    sf = [0] * n
    sg = [0] * n
    kappas = [_kappa(alg, x) for x in js]
    for i, x in enumerate(js):
        if x & ~f_bot:
            nf |= 1 << i
            for j, y in enumerate(js):
                if x & ~alg.f(y) == 0:
                    sf[i] |= 1 << j
        if x & ~g_top == 0:
            ng |= 1 << i
            for j, y in enumerate(js):
                if alg.g(kappas[j]) & ~kappas[i] == 0:
                    sg[i] |= 1 << j
    return DistFrame(poset, nf, ng, tuple(sf), tuple(sg))


def dist_frame_iso(a: DistFrame, b: DistFrame) -> Optional[Iso]:
    if a.n != b.n:
        return None
    for perm in itertools.permutations(range(a.n)):
        def ok() -> bool:
            for w in range(a.n):
                if ((a.nf >> w) & 1) != ((b.nf >> perm[w]) & 1):
                    return False
                if ((a.ng >> w) & 1) != ((b.ng >> perm[w]) & 1):
                    return False
                for v in range(a.n):
                    if a.poset.le(w, v) != b.poset.le(perm[w], perm[v]):
                        return False
                    if ((a.sf[w] >> v) & 1) != ((b.sf[perm[w]] >> perm[v]) & 1):
                        return False
                    if ((a.sg[w] >> v) & 1) != ((b.sg[perm[w]] >> perm[v]) & 1):
                        return False
            return True
        if ok():
            return Iso(perm)
    return None


def dist_duality_roundtrip(df: DistFrame) -> Optional[Iso]:
    if df.n > MAX_ISO_WORLDS:
        raise BudgetError(f"isomorphism search capped at {MAX_ISO_WORLDS} worlds")
    other = dist_atom_structure(dist_complex_algebra(df))
    return dist_frame_iso(df, other)


def dist_algebra_roundtrip(alg: UpsetAlgebra) -> Optional[Iso]:
    """Isomorphism (A_+)^+ = A via a bijection of join-irreducibles."""
    other = dist_complex_algebra(dist_atom_structure(alg))
    js = sorted(alg.join_irreducibles())
    n2 = other.poset.n
    if len(js) != n2:
        return None
    # candidate: join-irreducible x of A  ->  the up-set of frame-worlds below x
    def image(x: int, perm: tuple[int, ...]) -> int:
        out = 0
        for i, y in enumerate(js):
            if y & ~x == 0:
                out |= 1 << perm[i]
        return out
    for perm in itertools.permutations(range(n2)):
        good = True
        for x in alg.carrier:
            ix = image(x, perm)
            if ix not in other.carrier:
                good = False
                break
            if image(alg.f(x), perm) != other.f(ix) or image(alg.g(x), perm) != other.g(ix):
                good = False
                break
        if good:
            return Iso(perm)
    return None

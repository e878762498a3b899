"""Kripke frames with impossible worlds: model checking and enumeration.

A frame is (W, S, N) with W = {0..n-1}, N the set of normal worlds and
S a relation whose sources are all normal.  At an impossible world every
box-formula is false and every dia-formula is true.  Subsets of W are
bitmasks throughout; whole-family checks run on the compiled backend.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping

import numpy as np

from . import backend
from .backend import (
    OP_AND, OP_BBOX, OP_BDIA, OP_BIMP, OP_BOT, OP_BOX, OP_DIA, OP_GRID,
    OP_IMP, OP_LEQ, OP_MINUS, OP_OR, OP_TOP,
)
from .syntax import (
    And, BlackBox, BlackDia, BlackLeft, BlackRight, Bot, Conn, Conominal,
    DEFAULT_SIG, Formula, Imp, Inequality, Minus, Nominal, Or,
    QuasiInequality, Signature, Top, Var, conominals, is_pure, nominals,
    variables,
)


class BudgetError(ValueError):
    pass


class UnboundAtomError(KeyError):
    pass


class UnsupportedConnectiveError(ValueError):
    pass


def _bits(mask: int) -> Iterator[int]:
    w = 0
    while mask:
        if mask & 1:
            yield w
        mask >>= 1
        w += 1


@dataclass(frozen=True)
class Frame:
    n: int
    normal: int               # bitmask of N
    succ: tuple[int, ...]     # succ[w] = bitmask of S-successors of w

    def __post_init__(self):
        full = (1 << self.n) - 1
        if self.n < 1:
            raise ValueError("a frame needs at least one world")
        if self.normal & ~full:
            raise ValueError("normal-world mask out of range")
        if len(self.succ) != self.n:
            raise ValueError("successor table must have one row per world")
        for w, s in enumerate(self.succ):
            if s & ~full:
                raise ValueError(f"successor mask of world {w} out of range")
            if s and not (self.normal >> w) & 1:
                raise ValueError(f"world {w} is impossible but has successors")

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    # complex-algebra operations on subsets
    def dia(self, x: int) -> int:
        out = self.full ^ self.normal
        for w in range(self.n):
            if self.succ[w] & x:
                out |= 1 << w
        return out

    def box(self, x: int) -> int:
        out = 0
        for w in _bits(self.normal):
            if self.succ[w] & ~x == 0:
                out |= 1 << w
        return out

    def bdia(self, x: int) -> int:
        """Forward image S[x]; reading of the lower adjoint of box."""
        out = 0
        for w in _bits(x):
            out |= self.succ[w]
        return out

    def bbox(self, x: int) -> int:
        """{v : every S-predecessor of v lies in x}; adjoint reading for dia."""
        return self.full ^ self.bdia(self.full ^ x)

    def to_json(self) -> dict:
        return {"n": self.n, "N": sorted(_bits(self.normal)),
                "S": [[u, v] for u in range(self.n) for v in _bits(self.succ[u])]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Frame":
        n = int(data["n"])
        normal = 0
        for w in data["N"]:
            normal |= 1 << int(w)
        succ = [0] * n
        for u, v in data["S"]:
            succ[int(u)] |= 1 << int(v)
        return cls(n, normal, tuple(succ))

    def to_text(self) -> str:
        lines = [str(self.n), " ".join(str(w) for w in _bits(self.normal))]
        for u in range(self.n):
            for v in _bits(self.succ[u]):
                lines.append(f"{u} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Frame":
        lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
        n = int(lines[0])
        normal = 0
        if len(lines) > 1 and lines[1]:
            for tok in lines[1].split():
                normal |= 1 << int(tok)
        succ = [0] * n
        for ln in lines[2:]:
            u, v = (int(t) for t in ln.split())
            succ[u] |= 1 << v
        return cls(n, normal, tuple(succ))


@dataclass(frozen=True)
class Model:
    frame: Frame
    valuation: Mapping[str, int]

    def __post_init__(self):
        for p, x in self.valuation.items():
            if x & ~self.frame.full:
                raise ValueError(f"valuation of {p!r} out of range")


def extension(model: Model, phi: Formula, env: Mapping[str, int] | None = None) -> int:
    """Truth set of a formula as a bitmask; env maps nominal/conominal names
    to worlds."""
    f = model.frame
    env = env or {}

    def ext(node: Formula) -> int:
        match node:
            case Top():
                return f.full
            case Bot():
                return 0
            case Var(name):
                try:
                    return model.valuation[name]
                except KeyError:
                    raise UnboundAtomError(f"unbound proposition variable {name!r}") from None
            case Nominal(name):
                try:
                    return 1 << env[name]
                except KeyError:
                    raise UnboundAtomError(f"unbound nominal {name!r}") from None
            case Conominal(name):
                try:
                    return f.full ^ (1 << env[name])
                except KeyError:
                    raise UnboundAtomError(f"unbound conominal {name!r}") from None
            case And(a, b):
                return ext(a) & ext(b)
            case Or(a, b):
                return ext(a) | ext(b)
            case Imp(a, b):
                return (f.full ^ ext(a)) | ext(b)
            case Minus(a, b):
                return ext(a) & (f.full ^ ext(b))
            case Conn("dia", (a,)):
                return f.dia(ext(a))
            case Conn("box", (a,)):
                return f.box(ext(a))
            case BlackDia(_, a):
                return f.bdia(ext(a))
            case BlackBox(_, a):
                return f.bbox(ext(a))
            case BlackLeft() | BlackRight():
                raise UnsupportedConnectiveError(
                    "antitone adjoints have no relational reading on these frames")
            case Conn(name, _):
                raise UnsupportedConnectiveError(
                    f"connective {name!r} has no interpretation on a single-relation frame")
        raise TypeError(f"cannot evaluate {node!r}")

    return ext(phi)


def satisfies(model: Model, w: int, phi: Formula,
              env: Mapping[str, int] | None = None) -> bool:
    """Reference recursive evaluator (the compiled path is tested against it)."""
    return bool((extension(model, phi, env) >> w) & 1)


# ---------------------------------------------------------------------------
# Frame enumeration
# ---------------------------------------------------------------------------

def enumerate_frames(n: int) -> Iterator[Frame]:
    """All labeled frames on n worlds: every N, every S with normal sources."""
    if n < 1:
        raise ValueError("n must be at least 1")
    full = (1 << n) - 1
    for normal in range(full + 1):
        ws = list(_bits(normal))
        for combo in itertools.product(range(full + 1), repeat=len(ws)):
            succ = [0] * n
            for w, s in zip(ws, combo):
                succ[w] = s
            yield Frame(n, normal, tuple(succ))


def frame_count(n: int) -> int:
    return sum(_comb(n, k) * (1 << (n * k)) for k in range(n + 1))


def _comb(n: int, k: int) -> int:
    import math
    return math.comb(n, k)


class FrameFamily:
    """A batch of same-size frames packed for the compiled evaluator."""

    def __init__(self, frames: list[Frame]):
        if not frames:
            raise ValueError("empty family")
        n = frames[0].n
        if any(f.n != n for f in frames):
            raise ValueError("family members must have the same size")
        self.n = n
        self.frames = frames
        self.normal = np.array([f.normal for f in frames], dtype=np.int64)
        self.succ = np.array([f.succ for f in frames], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def tables(self) -> np.ndarray:
        """(F, 4, 2^n) lookup tables for dia, box, bdia, bbox."""
        n, full = self.n, self.full
        nf = len(self.frames)
        tabs = np.zeros((nf, 4, full + 1), dtype=np.int64)
        nc = self.normal ^ full
        for x in range(full + 1):
            dia = nc.copy()
            box = np.zeros(nf, dtype=np.int64)
            bdia = np.zeros(nf, dtype=np.int64)
            for w in range(n):
                dia |= ((self.succ[:, w] & x) != 0).astype(np.int64) << w
                norm_w = (self.normal >> w) & 1
                box |= (norm_w & ((self.succ[:, w] & (full ^ x)) == 0)).astype(np.int64) << w
                if (x >> w) & 1:
                    bdia |= self.succ[:, w]
            tabs[:, 0, x] = dia
            tabs[:, 1, x] = box
            tabs[:, 2, x] = bdia
        for x in range(full + 1):
            tabs[:, 3, x] = full ^ tabs[:, 2, full ^ x]
        return tabs

    @cached_property
    def rel_bool(self) -> np.ndarray:
        """(F, n, n) boolean S matrix, for first-order evaluation."""
        out = np.zeros((len(self.frames), self.n, self.n), dtype=bool)
        for v in range(self.n):
            out[:, :, v] = (self.succ >> v) & 1
        return out

    @cached_property
    def normal_bool(self) -> np.ndarray:
        out = np.zeros((len(self.frames), self.n), dtype=bool)
        for w in range(self.n):
            out[:, w] = (self.normal >> w) & 1
        return out


_FAMILY_CACHE: dict[int, FrameFamily] = {}


def all_frames_family(n: int) -> FrameFamily:
    if n not in _FAMILY_CACHE:
        _FAMILY_CACHE[n] = FrameFamily(list(enumerate_frames(n)))
    return _FAMILY_CACHE[n]


# ---------------------------------------------------------------------------
# Program compilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Program:
    codes: np.ndarray
    args: np.ndarray
    vars: tuple[str, ...]
    noms: tuple[str, ...]
    conoms: tuple[str, ...]


def compile_program(obj, sig: Signature = DEFAULT_SIG) -> Program:
    vs = tuple(sorted(variables(obj)))
    ns = tuple(sorted(nominals(obj)))
    cs = tuple(sorted(conominals(obj)))
    slot = {name: i for i, name in enumerate(vs + ns + cs)}
    codes: list[int] = []
    args: list[int] = []

    def emit(op: int, arg: int = 0):
        codes.append(op)
        args.append(arg)

    def formula(node: Formula):
        match node:
            case Top():
                emit(OP_TOP)
            case Bot():
                emit(OP_BOT)
            case Var(name) | Nominal(name) | Conominal(name):
                emit(OP_GRID, slot[name])
            case And(a, b):
                formula(a), formula(b), emit(OP_AND)
            case Or(a, b):
                formula(a), formula(b), emit(OP_OR)
            case Imp(a, b):
                formula(a), formula(b), emit(OP_IMP)
            case Minus(a, b):
                formula(a), formula(b), emit(OP_MINUS)
            case Conn("dia", (a,)):
                formula(a), emit(OP_DIA)
            case Conn("box", (a,)):
                formula(a), emit(OP_BOX)
            case BlackDia(_, a):
                formula(a), emit(OP_BDIA)
            case BlackBox(_, a):
                formula(a), emit(OP_BBOX)
            case BlackLeft() | BlackRight():
                raise UnsupportedConnectiveError(
                    "antitone adjoints have no relational reading on these frames")
            case Conn(name, _):
                raise UnsupportedConnectiveError(
                    f"connective {name!r} has no interpretation on a single-relation frame")
            case _:
                raise TypeError(f"cannot compile {node!r}")

    def ineq(i: Inequality):
        formula(i.lhs)
        formula(i.rhs)
        emit(OP_LEQ)

    if isinstance(obj, Formula):
        formula(obj)
    elif isinstance(obj, Inequality):
        ineq(obj)
    elif isinstance(obj, QuasiInequality):
        if obj.antecedent:
            ineq(obj.antecedent[0])
            for i in obj.antecedent[1:]:
                ineq(i)
                emit(OP_AND)
            ineq(obj.consequent)
            emit(OP_BIMP)
        else:
            ineq(obj.consequent)
    else:
        raise TypeError(f"cannot compile {obj!r}")
    depth = max_depth = 0
    for op in codes:
        depth += 1 if op in (OP_TOP, OP_BOT, OP_GRID) else \
            (-1 if op in (OP_AND, OP_OR, OP_IMP, OP_MINUS, OP_LEQ, OP_BIMP) else 0)
        max_depth = max(max_depth, depth)
    if max_depth > 60:        # the kernel evaluates on a fixed 64-slot stack
        raise BudgetError("formula too deep for the evaluation kernel")
    return Program(np.array(codes, dtype=np.int64), np.array(args, dtype=np.int64),
                   vs, ns, cs)


def _var_grids(n: int, k: int) -> np.ndarray:
    """(k, 2^(n*k)) grid: column a gives each variable's subset."""
    total = 1 << (n * k)
    assigns = np.arange(total, dtype=np.int64)
    return np.stack([(assigns >> (n * i)) & ((1 << n) - 1) for i in range(k)]) \
        if k else np.zeros((0, 1), dtype=np.int64)


def _atom_grids(n: int, a: int, b: int) -> np.ndarray:
    """(a+b, n^(a+b)) grid: nominals as singletons, conominals as co-singletons."""
    k = a + b
    if k == 0:
        return np.zeros((0, 1), dtype=np.int64)
    total = n ** k
    assigns = np.arange(total, dtype=np.int64)
    full = (1 << n) - 1
    rows = []
    for i in range(k):
        digit = (assigns // (n ** i)) % n
        mask = np.int64(1) << digit
        rows.append(mask if i < a else full ^ mask)
    return np.stack(rows)


def _run_family(program: Program, family: FrameFamily, grids: np.ndarray) -> np.ndarray:
    out = backend.eval_program(program.codes, program.args, family.tables,
                               np.ascontiguousarray(grids), family.full)
    return out


MAX_VALUATION_BITS = 24


def _ineq_grids(family: FrameFamily, program: Program) -> np.ndarray:
    n = family.n
    k = len(program.vars)
    if n * k > MAX_VALUATION_BITS:
        raise BudgetError(f"{k} variables on {n} worlds exceeds the enumeration budget")
    if program.noms or program.conoms:
        raise ValueError("base-language check cannot carry nominals or conominals")
    return _var_grids(n, k)


def frame_valid(frame: Frame, ineq: Inequality, sig: Signature = DEFAULT_SIG) -> bool:
    """True iff the inequality holds under every valuation."""
    return bool(frame_valid_family(FrameFamily([frame]), ineq, sig)[0])


def frame_valid_family(family: FrameFamily, ineq: Inequality,
                       sig: Signature = DEFAULT_SIG) -> np.ndarray:
    program = compile_program(ineq, sig)
    out = _run_family(program, family, _ineq_grids(family, program))
    return out.all(axis=1)


MAX_ATOM_ASSIGNMENTS = 1 << 22


def eval_quasi(frame: Frame, quasi: QuasiInequality, sig: Signature = DEFAULT_SIG) -> bool:
    """Truth of a pure quasi-inequality: nominals range over singletons,
    conominals over co-singletons."""
    return bool(eval_quasi_family(FrameFamily([frame]), quasi, sig)[0])


def eval_quasi_family(family: FrameFamily, quasi: QuasiInequality,
                      sig: Signature = DEFAULT_SIG) -> np.ndarray:
    if not is_pure(quasi):
        raise ValueError("quasi-inequality is not pure")
    program = compile_program(quasi, sig)
    a, b = len(program.noms), len(program.conoms)
    if family.n ** (a + b) > MAX_ATOM_ASSIGNMENTS:
        raise BudgetError(f"{a + b} atoms on {family.n} worlds exceeds the budget")
    out = _run_family(program, family, _atom_grids(family.n, a, b))
    return out.all(axis=1)


def eval_quasi_reference(frame: Frame, quasi: QuasiInequality) -> bool:
    """Independent slow evaluator used as an oracle in the tests."""
    names = sorted(nominals(quasi)) + sorted(conominals(quasi))
    model = Model(frame, {})
    for combo in itertools.product(range(frame.n), repeat=len(names)):
        env = dict(zip(names, combo))

        def holds(i: Inequality) -> bool:
            return extension(model, i.lhs, env) & ~extension(model, i.rhs, env) == 0

        if all(holds(i) for i in quasi.antecedent) and not holds(quasi.consequent):
            return False
    return True


# ---------------------------------------------------------------------------
# Distributive frames (posets with f- and g-relations)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Poset:
    n: int
    up: tuple[int, ...]       # up[w] = bitmask of {v : w <= v}

    def __post_init__(self):
        for w in range(self.n):
            if not (self.up[w] >> w) & 1:
                raise ValueError("order must be reflexive")
        for w in range(self.n):
            for v in _bits(self.up[w]):
                if v != w and (self.up[v] >> w) & 1:
                    raise ValueError("order must be antisymmetric")
                if self.up[v] & ~self.up[w]:
                    raise ValueError("order must be transitive")

    def le(self, w: int, v: int) -> bool:
        return bool((self.up[w] >> v) & 1)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def down(self, w: int) -> int:
        return sum(1 << v for v in range(self.n) if self.le(v, w))

    def is_upset(self, x: int) -> bool:
        return all(self.up[w] & ~x == 0 for w in _bits(x))

    def is_downset(self, x: int) -> bool:
        return self.is_upset(self.full ^ x)

    def upsets(self) -> list[int]:
        return [x for x in range(self.full + 1) if self.is_upset(x)]


def enumerate_posets(n: int) -> Iterator[Poset]:
    """All labeled partial orders on n elements (brute force, small n)."""
    pairs = [(w, v) for w in range(n) for v in range(n) if w != v]
    for combo in itertools.product((0, 1), repeat=len(pairs)):
        up = [1 << w for w in range(n)]
        for (w, v), bit in zip(pairs, combo):
            if bit:
                up[w] |= 1 << v
        try:
            yield Poset(n, tuple(up))
        except ValueError:
            continue


@dataclass(frozen=True)
class DistFrame:
    """Poset frame with separate additive and multiplicative relations.

    nf is a down-set of f-normal worlds, ng an up-set of g-normal worlds;
    sf and sg must absorb the order on both sides in the usual way.
    """
    poset: Poset
    nf: int
    ng: int
    sf: tuple[int, ...]
    sg: tuple[int, ...]

    def __post_init__(self):
        p = self.poset
        if not p.is_downset(self.nf):
            raise ValueError("f-normal worlds must form a down-set")
        if not p.is_upset(self.ng):
            raise ValueError("g-normal worlds must form an up-set")
        for w in range(p.n):
            if self.sf[w] and not (self.nf >> w) & 1:
                raise ValueError(f"f-relation has impossible source {w}")
            if self.sg[w] and not (self.ng >> w) & 1:
                raise ValueError(f"g-relation has impossible source {w}")
        for u in range(p.n):
            for w in range(p.n):
                for v in range(p.n):
                    for z in range(p.n):
                        if ((self.nf >> u) & 1 and (self.nf >> w) & 1 and p.le(w, u)
                                and (self.sf[w] >> v) & 1 and p.le(z, v)
                                and not (self.sf[u] >> z) & 1):
                            raise ValueError("f-relation is not order-compatible")
                        if ((self.ng >> u) & 1 and (self.ng >> w) & 1 and p.le(u, w)
                                and (self.sg[w] >> v) & 1 and p.le(v, z)
                                and not (self.sg[u] >> z) & 1):
                            raise ValueError("g-relation is not order-compatible")

    @property
    def n(self) -> int:
        return self.poset.n

    @property
    def full(self) -> int:
        return self.poset.full

    def f_op(self, x: int) -> int:
        out = self.full ^ self.nf
        for w in range(self.n):
            if self.sf[w] & x:
                out |= 1 << w
        return out

    def g_op(self, x: int) -> int:
        out = 0
        for w in _bits(self.ng):
            if self.sg[w] & ~x == 0:
                out |= 1 << w
        return out


def enumerate_dist_frames(poset: Poset) -> Iterator[DistFrame]:
    """All distributive frames over one poset (exhaustive; use on n <= 2)."""
    for nf, sf in _dist_halves(poset, additive=True):
        for ng, sg in _dist_halves(poset, additive=False):
            yield DistFrame(poset, nf, ng, sf, sg)


def _dist_halves(poset: Poset, additive: bool) -> list[tuple[int, tuple[int, ...]]]:
    n = poset.n
    out = []
    masks = [m for m in range(poset.full + 1)
             if (poset.is_downset(m) if additive else poset.is_upset(m))]
    for nmask in masks:
        rows_choices = []
        for w in range(n):
            if (nmask >> w) & 1:
                rows_choices.append(range(poset.full + 1))
            else:
                rows_choices.append((0,))
        for rows in itertools.product(*rows_choices):
            try:
                if additive:
                    DistFrame(poset, nmask, 0, tuple(rows), (0,) * n)
                else:
                    DistFrame(poset, 0, nmask, (0,) * n, tuple(rows))
            except ValueError:
                continue
            out.append((nmask, tuple(rows)))
    return out


def dist_extension(df: DistFrame, phi: Formula, valuation: Mapping[str, int]) -> int:
    for p, x in valuation.items():
        if not df.poset.is_upset(x):
            raise ValueError(f"valuation of {p!r} is not an up-set")

    def ext(node: Formula) -> int:
        match node:
            case Top():
                return df.full
            case Bot():
                return 0
            case Var(name):
                try:
                    return valuation[name]
                except KeyError:
                    raise UnboundAtomError(f"unbound proposition variable {name!r}") from None
            case And(a, b):
                return ext(a) & ext(b)
            case Or(a, b):
                return ext(a) | ext(b)
            case Conn("dia", (a,)):
                return df.f_op(ext(a))
            case Conn("box", (a,)):
                return df.g_op(ext(a))
            case _:
                raise UnsupportedConnectiveError(
                    f"no distributive reading for {node!r}")

    return ext(phi)


def dist_satisfies(df: DistFrame, w: int, phi: Formula,
                   valuation: Mapping[str, int]) -> bool:
    return bool((dist_extension(df, phi, valuation) >> w) & 1)


def dist_frame_valid(df: DistFrame, ineq: Inequality) -> bool:
    ups = df.poset.upsets()
    vs = sorted(variables(ineq))
    if len(ups) ** len(vs) > 1 << 20:
        raise BudgetError("too many up-set valuations")
    for combo in itertools.product(ups, repeat=len(vs)):
        val = dict(zip(vs, combo))
        if dist_extension(df, ineq.lhs, val) & ~dist_extension(df, ineq.rhs, val):
            return False
    return True

"""Bitmask evaluation backend: numba kernels with a pure-numpy fallback.

Formulas and (quasi-)inequalities are compiled to small stack programs over
subset bitmasks.  The hot path evaluates one program over a whole family of
frames times a grid of assignments at once; set REGCORR_NO_NUMBA=1 to force
the numpy path (the benchmark under benchmarks/ compares the two).
"""
from __future__ import annotations

import os

import numpy as np

OP_TOP = 0
OP_BOT = 1
OP_GRID = 2     # push grids[arg] (a variable / nominal / conominal column)
OP_AND = 5
OP_OR = 6
OP_IMP = 7
OP_MINUS = 8
OP_DIA = 9      # table ops: arg unused, table index is op - OP_DIA
OP_BOX = 10
OP_BDIA = 11
OP_BBOX = 12
OP_LEQ = 13     # pop y, x; push 1 if x <= y else 0
OP_BIMP = 15    # boolean implication on 0/1 values

_TABLE_OPS = (OP_DIA, OP_BOX, OP_BDIA, OP_BBOX)


def numba_enabled() -> bool:
    if os.environ.get("REGCORR_NO_NUMBA", "").lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def eval_program_numpy(codes: np.ndarray, args: np.ndarray, tabs: np.ndarray,
                       grids: np.ndarray, full: int) -> np.ndarray:
    """Vectorized over frames x assignments; returns an int64 (F, A) array."""
    nframes = tabs.shape[0]
    nassign = grids.shape[1] if grids.size else 1
    shape = (nframes, nassign)
    stack: list[np.ndarray] = []
    for code, arg in zip(codes, args):
        if code == OP_TOP:
            stack.append(np.full(shape, full, dtype=np.int64))
        elif code == OP_BOT:
            stack.append(np.zeros(shape, dtype=np.int64))
        elif code == OP_GRID:
            stack.append(np.broadcast_to(grids[arg][None, :], shape).copy())
        elif code == OP_AND:
            y = stack.pop()
            stack[-1] = stack[-1] & y
        elif code == OP_OR:
            y = stack.pop()
            stack[-1] = stack[-1] | y
        elif code == OP_IMP:
            y = stack.pop()
            stack[-1] = (full ^ stack[-1]) | y
        elif code == OP_MINUS:
            y = stack.pop()
            stack[-1] = stack[-1] & (full ^ y)
        elif code in _TABLE_OPS:
            t = tabs[:, code - OP_DIA, :]
            stack[-1] = np.take_along_axis(t, stack[-1], axis=1)
        elif code == OP_LEQ:
            y = stack.pop()
            stack[-1] = ((stack[-1] & (full ^ y)) == 0).astype(np.int64)
        elif code == OP_BIMP:
            y = stack.pop()
            stack[-1] = (1 - stack[-1]) | y
        else:
            raise ValueError(f"bad opcode {code}")
    if len(stack) != 1:
        raise ValueError("program left a non-singleton stack")
    return stack[0]


_nb_kernel = None


def _get_numba_kernel():
    global _nb_kernel
    if _nb_kernel is None:
        from numba import njit

        @njit(cache=True)
        def kernel(codes, args, tabs, grids, full, out):  # pragma: no cover - jitted
            nframes = out.shape[0]
            nassign = out.shape[1]
            nprog = codes.shape[0]
            stack = np.empty(64, np.int64)
            for f in range(nframes):
                for a in range(nassign):
                    sp = 0
                    for pc in range(nprog):
                        op = codes[pc]
                        if op == 0:
                            stack[sp] = full
                            sp += 1
                        elif op == 1:
                            stack[sp] = 0
                            sp += 1
                        elif op == 2:
                            stack[sp] = grids[args[pc], a]
                            sp += 1
                        elif op == 5:
                            sp -= 1
                            stack[sp - 1] = stack[sp - 1] & stack[sp]
                        elif op == 6:
                            sp -= 1
                            stack[sp - 1] = stack[sp - 1] | stack[sp]
                        elif op == 7:
                            sp -= 1
                            stack[sp - 1] = (full ^ stack[sp - 1]) | stack[sp]
                        elif op == 8:
                            sp -= 1
                            stack[sp - 1] = stack[sp - 1] & (full ^ stack[sp])
                        elif op >= 9 and op <= 12:
                            stack[sp - 1] = tabs[f, op - 9, stack[sp - 1]]
                        elif op == 13:
                            sp -= 1
                            if stack[sp - 1] & (full ^ stack[sp]) == 0:
                                stack[sp - 1] = 1
                            else:
                                stack[sp - 1] = 0
                        elif op == 15:
                            sp -= 1
                            stack[sp - 1] = (1 - stack[sp - 1]) | stack[sp]
                    out[f, a] = stack[0]
            return out

        _nb_kernel = kernel
    return _nb_kernel


def eval_program_numba(codes, args, tabs, grids, full):
    nassign = grids.shape[1] if grids.size else 1
    out = np.empty((tabs.shape[0], nassign), dtype=np.int64)
    grids2 = grids if grids.size else np.zeros((1, 1), dtype=np.int64)
    _get_numba_kernel()(codes, args, tabs, grids2, full, out)
    return out


def eval_program(codes, args, tabs, grids, full):
    if numba_enabled():
        return eval_program_numba(codes, args, tabs, grids, full)
    return eval_program_numpy(codes, args, tabs, grids, full)

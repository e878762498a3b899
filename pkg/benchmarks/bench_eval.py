"""Benchmark: numba kernel vs pure-numpy fallback on the hot evaluation path.

The hot path is one compiled program evaluated over all frames of a given
size times a grid of assignments.  Run with:

    python3 benchmarks/bench_eval.py
"""
import time

import numpy as np

from regcorr import backend
from regcorr.semantics import (all_frames_family, compile_program, _atom_grids,
                               _var_grids)
from regcorr.syntax import parse

CASES = {
    "inequality, 3 vars": (
        parse("box(p -> q) <= box(box p -> box q) /\\ dia r"), "vars"),
    "pure quasi, 4 atoms": (
        parse("#i1 <= box top & box @m2 <= @m1 & (#i1 -> @m2) <= @m1"
              " => box (bdia[box] #i1 -> @m2) <= box @m1", expanded=True), "atoms"),
}


def grids_for(program, n, kind):
    if kind == "vars":
        return _var_grids(n, len(program.vars))
    return _atom_grids(n, len(program.noms), len(program.conoms))


def timed(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = 3
    fam = all_frames_family(n)
    tabs = fam.tables
    print(f"frames: {len(fam)} at n={n}")
    print(f"numba importable: {backend.numba_enabled() or 'forced off'}")
    for name, (obj, kind) in CASES.items():
        program = compile_program(obj)
        grids = np.ascontiguousarray(grids_for(program, n, kind))
        args = (program.codes, program.args, tabs, grids, fam.full)
        cells = len(fam) * (grids.shape[1] if grids.size else 1)
        t_np, out_np = timed(backend.eval_program_numpy, *args)
        line = f"{name:24s} cells={cells:9d}  numpy {t_np * 1e3:8.2f} ms"
        if backend.numba_enabled():
            backend.eval_program_numba(*args)       # compile outside the timer
            t_nb, out_nb = timed(backend.eval_program_numba, *args)
            assert (out_np == out_nb).all(), "backends disagree"
            line += f"  numba {t_nb * 1e3:8.2f} ms  speedup {t_np / t_nb:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()

"""Seeded random inequality generation for the property suites."""
from __future__ import annotations

import random
from typing import Optional

from .classify import Certificate, find_certificate
from .syntax import (
    And, Bot, Conn, DEFAULT_SIG, Formula, HEYTING, Imp, Inequality, Or,
    Signature, Top, Var, variables,
)

_VARS = ("p", "q", "r")


def random_formula(rng: random.Random, depth: int, nvars: int = 3,
                   sig: Signature = DEFAULT_SIG, expanded_ok: bool = False) -> Formula:
    """A random base-language formula of the given maximum depth."""
    leaves = ["var"] * 4 + ["top", "bot"]
    if depth == 0:
        choice = rng.choice(leaves)
    else:
        nodes = ["and", "or", "box", "dia", "var"]
        if sig.base == HEYTING:
            nodes.append("imp")
        choice = rng.choice(nodes + ["var", "top", "bot"] if depth == 1 else nodes)
    match choice:
        case "var":
            return Var(rng.choice(_VARS[:nvars]))
        case "top":
            return Top()
        case "bot":
            return Bot()
        case "and":
            return And(random_formula(rng, depth - 1, nvars, sig),
                       random_formula(rng, depth - 1, nvars, sig))
        case "or":
            return Or(random_formula(rng, depth - 1, nvars, sig),
                      random_formula(rng, depth - 1, nvars, sig))
        case "imp":
            return Imp(random_formula(rng, depth - 1, nvars, sig),
                       random_formula(rng, depth - 1, nvars, sig))
        case "box":
            return Conn("box", (random_formula(rng, depth - 1, nvars, sig),))
        case "dia":
            return Conn("dia", (random_formula(rng, depth - 1, nvars, sig),))
    raise AssertionError


def random_inequality(rng: random.Random, depth: int = 3, nvars: int = 3,
                      sig: Signature = DEFAULT_SIG) -> Inequality:
    return Inequality(random_formula(rng, depth, nvars, sig),
                      random_formula(rng, depth, nvars, sig))


def random_inductive_corpus(seed: int, count: int, depth: int = 3, nvars: int = 3,
                            sig: Signature = DEFAULT_SIG,
                            max_tries: int = 100000
                            ) -> list[tuple[Inequality, Certificate]]:
    """`count` certified inequalities with at least one variable, reproducible
    from the seed."""
    rng = random.Random(seed)
    out: list[tuple[Inequality, Certificate]] = []
    for _ in range(max_tries):
        if len(out) >= count:
            return out
        ineq = random_inequality(rng, depth, nvars, sig)
        if not variables(ineq):
            continue
        cert: Optional[Certificate] = find_certificate(ineq, sig)
        if cert is not None:
            out.append((ineq, cert))
    raise RuntimeError("could not assemble the corpus within the retry budget")
